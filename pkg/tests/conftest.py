import re

import numpy as np
import pytest

from lindbladlab.bathcorr import BathSpec
from lindbladlab.lindblad import LindbladModel, LindbladTerm
from lindbladlab.linops import projector


def rand_complex(rng, shape):
    return (rng.normal(size=shape) + 1j * rng.normal(size=shape)) / np.sqrt(2)


def rand_hermitian(rng, d, scale=1.0):
    a = rand_complex(rng, (d, d))
    return scale * 0.5 * (a + a.conj().T)


def rand_pure(rng, d):
    psi = rand_complex(rng, d)
    return projector(psi / np.linalg.norm(psi))


def rand_mixed(rng, d, rank=None):
    a = rand_complex(rng, (d, rank or d))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def rand_bath(rng, m_max=3, n_max_max=3, w_scale=2.0):
    m = int(rng.integers(1, m_max + 1))
    n_max = int(rng.integers(1, n_max_max + 1))
    w = rng.uniform(-w_scale, w_scale, m)
    g = rand_complex(rng, m) * 0.7
    return BathSpec(tuple(w), tuple(g), n_max)


def rand_lindblad(rng, d_max=5, terms_max=3):
    d = int(rng.integers(2, d_max + 1))
    terms = [LindbladTerm(rand_complex(rng, (d, d)), float(rng.uniform(0, 1)))
             for _ in range(int(rng.integers(1, terms_max + 1)))]
    return LindbladModel(rand_hermitian(rng, d), terms)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = {}


@pytest.fixture
def acceptance():
    """Record one verdict line per criterion; the lines are printed at the end of the run."""

    def record(key, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] {key}: {detail}"
        ACCEPTANCE_LINES[key] = line
        print(line)
        return passed

    return record


def _criterion_order(key):
    m = re.search(r"(\d+)(\w*)", key)
    return (int(m.group(1)), m.group(2)) if m else (10**6, key)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES, key=_criterion_order):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])
