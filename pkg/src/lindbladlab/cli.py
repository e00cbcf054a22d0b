"""Command-line entry point.

    lindbladlab run <config> [--out-dir DIR] [--override key=value ...] [--figures]
    lindbladlab compare <config> [...]
    lindbladlab rates <config>

Exit codes: 0 success, 2 config parse/validation failure, 3 pipeline
precondition failure, 4 tolerance breach.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import report as rpt
from .scenario import (
    ConfigError,
    PreconditionError,
    ToleranceBreach,
    apply_overrides,
    compute_rates,
    load_config,
    parse_rates_options,
    parse_scenario,
    parse_spectral,
    run_all,
    spectral_to_json,
)

log = logging.getLogger("lindbladlab")

EXIT_OK, EXIT_PARSE, EXIT_PRECONDITION, EXIT_BREACH = 0, 2, 3, 4


def _out_dir(args, cfg) -> Path:
    if args.out_dir:
        return Path(args.out_dir)
    out = cfg.get("output", {}) if isinstance(cfg.get("output"), dict) else {}
    base = Path(cfg.get("_base_dir", "."))
    return base / out.get("dir", "out")


def _prefix(cfg) -> str:
    out = cfg.get("output", {}) if isinstance(cfg.get("output"), dict) else {}
    return str(out.get("prefix", "scenario"))


def _check_breaches(results: dict) -> None:
    for name, traj in results.items():
        summary = traj.meta.get("cptp", {})
        if summary.get("failed"):
            raise ToleranceBreach(name, summary.get("breach_node"), summary)


def _execute(args, *, compare: bool) -> int:
    cfg = apply_overrides(load_config(args.config), args.override)
    sc = parse_scenario(cfg)
    if compare and len(sc.pipelines) < 2:
        raise ConfigError("pipelines", "compare needs at least two pipelines")
    results = run_all(sc)
    _check_breaches(results)
    rep = rpt.build_report(sc, results, with_distances=compare or len(sc.pipelines) > 1)

    out = _out_dir(args, cfg)
    out.mkdir(parents=True, exist_ok=True)
    prefix = _prefix(cfg)
    outputs = {}
    for name, traj in results.items():
        outputs[name] = str(rpt.write_trajectory_csv(traj, out / f"{prefix}_{name}.csv"))
    if compare:
        dists = rpt.pairwise_distances(sc.pipelines, results)
        path = out / f"{prefix}_distances.csv"
        path.write_text(rpt.distances_csv(sc.times, dists))
        outputs["distances"] = str(path)
        rep_path = out / f"{prefix}_compare.json"
    else:
        rep_path = out / f"{prefix}_report.json"
    if args.figures:
        from . import plotting

        outputs["fig_populations"] = str(
            plotting.plot_populations(results, out / f"{prefix}_populations.png"))
        if compare:
            outputs["fig_distances"] = str(
                plotting.plot_distances(sc.times, dists, out / f"{prefix}_distances.png"))
        if "fit" in rep:
            traj = results[rep["fit"]["pipeline"]]
            i = rep["fit"]["element"][0]
            outputs["fig_fit"] = str(plotting.plot_fit(
                traj.times, traj.states[:, i, i].real, rep["fit"], out / f"{prefix}_fit.png"))
    rep["outputs"] = outputs
    rpt.dump_json(rep, rep_path)
    print(f"report: {rep_path}")
    if "distances" in rep:
        for key, d in rep["distances"].items():
            print(f"  max distance {key}: {d['max']:.6g}")
    if "fit" in rep:
        print(f"  fitted rate ({rep['fit']['pipeline']}): {rep['fit']['rate']:.8g}")
    return EXIT_OK


def _rates(args) -> int:
    cfg = apply_overrides(load_config(args.config), args.override)
    base = Path(cfg.get("_base_dir", "."))
    if "spectral" in cfg:
        spec, where = cfg["spectral"], "spectral"
    elif isinstance(cfg.get("bath"), dict) and "spectral" in cfg["bath"]:
        spec, where = cfg["bath"]["spectral"], "bath.spectral"
    else:
        raise ConfigError("spectral", "config has no spectral density")
    j = parse_spectral(spec, where, base)
    opts = parse_rates_options(cfg)
    try:
        rates = compute_rates(j, opts)
    except ValueError as exc:
        print(f"error: rates: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    lo, hi = rates.domain
    print(f"gamma   = {rates.gamma:.17g}")
    print(f"epsilon = {rates.epsilon:.17g}")
    print(f"domain  = [{lo}, {hi}]")
    print(f"pv_exclusion = {opts['pv_exclusion']:g}, pv_levels = {opts['pv_levels']}, "
          f"half_line = {opts['half_line']}")
    for delta, val in rates.ladder:
        print(f"  exclusion {delta:.6g}: truncated integral {val:.17g}")
    if args.json:
        payload = {"spectral": spectral_to_json(j), "rates": opts, "gamma": rates.gamma,
                   "epsilon": rates.epsilon, "ladder": rates.ladder}
        print(json.dumps(payload))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lindbladlab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "run the requested pipelines"),
                        ("compare", "run pipelines and compare them pairwise"),
                        ("rates", "Markov-limit gamma and epsilon of a spectral density")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config")
        sp.add_argument("--out-dir", default=None)
        sp.add_argument("--seed", type=int, default=None,
                        help="reserved; every pipeline is deterministic")
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
        if name == "rates":
            sp.add_argument("--json", action="store_true", help="also print a JSON line")
        else:
            sp.add_argument("--figures", action="store_true",
                            help="render PNG figures next to the CSV files")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "rates":
            return _rates(args)
        return _execute(args, compare=args.command == "compare")
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except PreconditionError as exc:
        print(f"error: precondition: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ToleranceBreach as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BREACH


if __name__ == "__main__":
    sys.exit(main())
