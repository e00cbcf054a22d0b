import math

import numpy as np
import pytest
import scipy.integrate
from hypothesis import given, settings, strategies as st

from lindbladlab.bathcorr import (
    BathSpec,
    SpectralDensity,
    b_op,
    b_op_t,
    b_op_t_coeffs,
    discretize,
    f_discrete,
    f_discrete_many,
    f_discrete_uniform,
    f_oracle,
    g_discrete,
    g_oracle,
    lorentzian_pv_exact,
    markov_rates,
    pv_inverse_omega,
    spectral_eval,
)
from lindbladlab.fock import destroy

from conftest import rand_bath


def cauchy_pv(j, lo, hi, cut=50.0):
    """PV of int J/w via QUADPACK's Cauchy weight, tails added separately."""
    f = lambda w: spectral_eval(j, w)  # noqa: E731
    a, b = max(lo, -cut), min(hi, cut)
    val, _ = scipy.integrate.quad(f, a, b, weight="cauchy", wvar=0.0,
                                  epsabs=1e-13, epsrel=1e-12, limit=500)
    if hi > b:
        val += scipy.integrate.quad(lambda w: f(w) / w, b, hi, epsabs=1e-13, limit=500)[0]
    if lo < a:
        val += scipy.integrate.quad(lambda w: f(w) / w, lo, a, epsabs=1e-13, limit=500)[0]
    return val


def test_b_op_time_coefficients():
    bath = BathSpec((2.0,), (1.0,), 1)
    assert np.isclose(b_op_t_coeffs(bath, math.pi)[0], 1.0)
    cplx = BathSpec((0.5, -1.2), (0.3 + 0.4j, -0.7j), 2)
    assert np.allclose(b_op_t_coeffs(cplx, 0.0), np.conj(cplx.g))
    assert np.allclose(b_op_t(cplx, 0.0), b_op(cplx))
    empty = BathSpec((), (), 1)
    assert b_op(empty).shape == (1, 1) and not b_op(empty).any()
    assert np.array_equal(b_op(BathSpec((1.0,), (0.5j,), 1)), -0.5j * destroy(1))


def test_f_discrete_examples():
    assert np.isclose(f_discrete(BathSpec((0.0,), (1.0,), 1), 2.7), 2.7)
    assert abs(f_discrete(BathSpec((2.0,), (1.0,), 1), math.pi)) < 1e-15
    assert f_discrete(BathSpec((0.3,), (1.0,), 1), 0.0) == 0
    rng = np.random.default_rng(5)
    for _ in range(5):
        bath = rand_bath(rng)
        assert g_discrete(bath, float(rng.uniform(0, 10))) == 0


def test_f_discrete_small_frequency_continuity():
    t = 3.0
    for w in (1e-12, 1e-9, 1e-7, 1e-5):
        exact = np.exp(-0.5j * w * t) * 2 * np.sin(0.5 * w * t) / w
        near = f_discrete(BathSpec((w,), (1.0,), 1), t)
        assert abs(near - exact) < 1e-12 * t


def test_f_vectorized_paths_agree(rng):
    bath = rand_bath(rng)
    times = np.linspace(0, 5, 41)
    ref = np.array([f_discrete(bath, t) for t in times])
    assert np.allclose(f_discrete_many(bath, times), ref, rtol=0, atol=1e-13)
    assert np.allclose(f_discrete_uniform(bath, times[1], times.size), ref, rtol=0, atol=1e-13)


def test_oracles_two_mode_example():
    bath = BathSpec((0.8, -1.3), (0.6, 0.4 - 0.2j), 1)
    assert abs(f_oracle(bath, 1.0, 200) - f_discrete(bath, 1.0)) <= 1e-8
    assert abs(g_oracle(bath, 1.0, 200)) <= 1e-12
    assert f_oracle(bath, 0.0) == 0 and g_oracle(bath, 0.0) == 0


def test_oracle_sees_non_vacuum_state():
    # one quantum in the mode makes the anti-normal-ordered correlator nonzero
    bath = BathSpec((0.0,), (1.0,), 2)
    rho = np.zeros((3, 3), dtype=complex)
    rho[1, 1] = 1.0
    assert np.isclose(g_oracle(bath, 2.0, rho_b=rho), 2.0)
    assert np.isclose(f_oracle(bath, 2.0, rho_b=rho), 4.0)


def test_spectral_eval_examples(tmp_path):
    lor = SpectralDensity.lorentzian(1.0, 1.0, 0.0)
    assert spectral_eval(lor, 0.0) == 1.0
    assert spectral_eval(lor, 1.0) == 0.5
    tab = SpectralDensity.from_table([(0, 0.3), (1, 0.5)])
    assert np.isclose(spectral_eval(tab, 0.5), 0.4)
    with pytest.raises(ValueError):
        spectral_eval(tab, 1.5)
    path = tmp_path / "j.csv"
    path.write_text("omega,J\n0,0.3\n1,0.5\n")
    assert SpectralDensity.read_csv(path) == tab
    with pytest.raises(ValueError):
        SpectralDensity.from_table([(0, 0.3), (1, -0.5)])


def test_discretize_examples():
    flat = SpectralDensity.from_table([(0, 0.7), (1, 0.7)])
    one = discretize(flat, 1, 0.0, 1.0)
    assert one.m == 1 and np.isclose(abs(one.g[0]) ** 2, 0.7)
    lor = discretize(SpectralDensity.lorentzian(1, 1, 0), 100, -20, 20)
    # full-line weight pi minus the two tails beyond |w| = 20
    ref = scipy.integrate.quad(SpectralDensity.lorentzian(1, 1, 0), -20, 20)[0]
    assert np.isclose(ref, math.pi - 2 * math.atan(1 / 20))
    assert abs(lor.total_weight() - ref) / ref < 0.01
    assert np.allclose(lor.w, -20 + 0.4 * (np.arange(100) + 0.5))
    zero = discretize(SpectralDensity.from_table([(-1, 0), (1, 0)]), 5, -1, 1)
    assert not np.any(zero.g)


def test_discretize_weight_converges_quadratically():
    lor = SpectralDensity.lorentzian(1, 1, 0)
    ref = scipy.integrate.quad(lor, -5, 5)[0]
    errs = [abs(discretize(lor, m, -5, 5).total_weight() - ref) for m in (20, 40, 80)]
    assert 3.5 < errs[0] / errs[1] < 4.5 and 3.5 < errs[1] / errs[2] < 4.5


def test_markov_rates_examples():
    r = markov_rates(SpectralDensity.lorentzian(1, 1, 0))
    assert abs(r.gamma - 2 * math.pi) <= 1e-10 and abs(r.epsilon) <= 1e-8
    assert np.isclose(r.f_markov, math.pi)
    zero = markov_rates(SpectralDensity.from_table([(-2, 0), (3, 0)]))
    assert zero.gamma == 0 and zero.epsilon == 0
    half = markov_rates(SpectralDensity.lorentzian(1, 1, 0), half_line=True)
    assert np.isclose(half.gamma, math.pi)
    with pytest.raises(ValueError):
        markov_rates(SpectralDensity.from_table([(1, 1), (2, 1)]))


def test_offset_lorentzian_epsilon_against_oracles():
    j = SpectralDensity.lorentzian(1, 1, 5)
    r = markov_rates(j, pv_exclusion=0.1, pv_levels=6)
    assert abs(r.epsilon - (-2 * cauchy_pv(j, -math.inf, math.inf))) <= 1e-4
    assert abs(r.epsilon + 2 * lorentzian_pv_exact(j)) <= 1e-8
    # an independent ladder ten times finer lands on the same value
    fine, _ = pv_inverse_omega(j, 0.01, 8)
    assert abs(r.epsilon + 2 * fine) <= 1e-4


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
def test_table_pv_matches_cauchy_quadrature():
    pts = [(-3, 0.0), (-1, 0.4), (0, 1.0), (0.5, 0.8), (2, 0.3), (4, 0.0)]
    j = SpectralDensity.from_table(pts)
    pv, ladder = pv_inverse_omega(j, 0.2, 6)
    assert abs(pv - cauchy_pv(j, -3, 4)) < 1e-7
    assert [d for d, _ in ladder] == [0.2 / 2**i for i in range(6)]


def test_pv_endpoint_handling():
    with pytest.raises(ValueError, match="diverges"):
        pv_inverse_omega(SpectralDensity.from_table([(0, 1), (1, 1)]), 0.1, 4)
    vanishing = SpectralDensity.from_table([(0, 0), (1, 1), (2, 0)])
    pv, _ = pv_inverse_omega(vanishing, 0.1, 4)
    expected = scipy.integrate.quad(lambda w: vanishing(w) / w, 0, 2, points=[1])[0]
    assert np.isclose(pv, expected)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_f_discrete_is_sum_of_single_modes(seed):
    rng = np.random.default_rng(seed)
    bath = rand_bath(rng)
    t = float(rng.uniform(0, 10))
    parts = sum(f_discrete(BathSpec((w,), (g,), 1), t) for w, g in zip(bath.w, bath.g))
    assert np.isclose(f_discrete(bath, t), parts, atol=1e-14)
    # d/dt F = sum |g|^2 exp(-i w t) has |.| <= total weight
    assert abs(f_discrete(bath, t)) <= bath.total_weight() * t + 1e-14
