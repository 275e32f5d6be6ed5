"""Command-line entry point: ``lints-lab {example1,example2,compare,verify,all}``.

Settings resolve as built-in defaults < ``--config`` JSON file < explicit flags.
All randomness derives from ``--seed`` through :func:`split_seed`.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
import zlib
from datetime import datetime, timezone

import numpy as np

from . import __version__
from . import experiments as ex
from . import theory as th
from .errors import LintsLabError
from .io import boxplot_table, replication_table, report_table, write_csv, write_summary

log = logging.getLogger("lints_lab")

DESK_LIMIT = 1024
SEED_DERIVATION = (
    "replication r uses numpy PCG64 seeded with split_seed(seed, r); "
    "split_seed(base, i) = splitmix64 finalizer of base + (i + 1) * 0x9E3779B97F4A7C15 mod 2^64; "
    "verify checks use split_seed(seed, crc32(check_name))"
)

DEFAULTS = {
    "example1": {"dims": [2, 4, 8, 16, 32, 64], "reps": 50, "sigma": 1.0, "tau": 0.0, "literal": False},
    "example2": {"mode": None, "dims": [16, 64, 256, 1024], "mus": [round(0.1 * i, 1) for i in range(11)],
                 "d": 200, "mu": 0.1, "reps": 50},
    "compare": {"d": 50, "arms": 100, "horizon": 1000, "reps": 20, "policies": list(ex.POLICIES)},
    "verify": {"suite": "all"},
}
COMMON = {"seed": 0, "threads": None, "out": "out"}
SUITES = ("all", "bias", "decomp", "tails", "optimism", "example2")


def _int_list(s: str) -> list[int]:
    try:
        vals = [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}")
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("list must be non-empty with positive entries")
    return vals


def _float_list(s: str) -> list[float]:
    try:
        vals = [float(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}")
    if not vals or min(vals) < 0:
        raise argparse.ArgumentTypeError("list must be non-empty with non-negative entries")
    return vals


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _seed(s: str) -> int:
    v = int(s, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _policies(s: str) -> list[str]:
    vals = [x.strip() for x in s.split(",") if x.strip()]
    bad = [v for v in vals if v not in ex.POLICIES]
    if bad or not vals:
        raise argparse.ArgumentTypeError(f"unknown policies {bad}; choose from {','.join(ex.POLICIES)}")
    return vals


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lints-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, help="base seed (unsigned 64-bit)")
    common.add_argument("--threads", type=_positive_int, help="worker cap (default: all cores)")
    common.add_argument("--out", help="output directory (default: out)")
    common.add_argument("--config", help="JSON file of flag values; explicit flags win")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("example1", parents=[common], help="failure time under noise reduction")
    p.add_argument("--dims", type=_int_list, help="block counts d, e.g. 2,4,8")
    p.add_argument("--reps", type=_positive_int)
    p.add_argument("--sigma", type=float, help="true prior standard deviation")
    p.add_argument("--tau", type=float, help="true noise standard deviation")
    p.add_argument("--literal", action="store_true", default=None,
                   help="report the indicator 1{<mean, 1> > 0} instead of 1/p")

    p = sub.add_parser("example2", parents=[common], help="failure time under a mean-shifted prior")
    p.add_argument("--mode", choices=["vary-d", "vary-mu"],
                   help="default: vary-mu when --mus is given, else vary-d")
    p.add_argument("--dims", type=_int_list, help="grid of d for vary-d")
    p.add_argument("--mus", type=_float_list, help="grid of mu for vary-mu")
    p.add_argument("--d", type=_positive_int, help="fixed d for vary-mu")
    p.add_argument("--mu", type=float, help="fixed mu for vary-d")
    p.add_argument("--reps", type=_positive_int)

    p = sub.add_parser("compare", parents=[common], help="TS-Bayes vs TS-Freq vs TS-Improved")
    p.add_argument("--d", type=_positive_int)
    p.add_argument("--arms", type=_positive_int, help="arms per round")
    p.add_argument("--horizon", type=_positive_int)
    p.add_argument("--reps", type=_positive_int)
    p.add_argument("--policies", type=_policies, help="subset of bayes,freq,improved")

    p = sub.add_parser("verify", parents=[common], help="Monte-Carlo checks of the lemmas")
    p.add_argument("--suite", choices=SUITES)

    sub.add_parser("all", parents=[common], help="every experiment plus the full verify suite")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, the optional JSON config, and explicit flags (in rising priority)."""
    flags = dict(COMMON)
    flags.update(DEFAULTS.get(args.command, {}))
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
        unknown = set(cfg) - set(flags)
        if unknown:
            raise LintsLabError(f"unknown config keys for {args.command}: {sorted(unknown)}")
        flags.update(cfg)
    for k in flags:
        v = getattr(args, k, None)
        if v is not None:
            flags[k] = v
    if args.command == "example2" and flags["mode"] is None:
        flags["mode"] = "vary-mu" if getattr(args, "mus", None) is not None else "vary-d"
    return flags


def _warn_scale(values, what):
    if any(v > DESK_LIMIT for v in values):
        log.warning("%s above %d exceeds desk scale; expect long runtimes and large memory use",
                    what, DESK_LIMIT)


def _boxplot_results(stats: dict, key: str) -> list[dict]:
    return [{"name": f"{key}={k}", "pass": True, "estimate": s.median, "target": None,
             "boxplot": s} for k, s in stats.items()]


def cmd_example1(f: dict, out: str) -> list[dict]:
    _warn_scale(f["dims"], "block count d")
    vals = ex.example1_values(f["dims"], f["reps"], f["seed"], f["sigma"], f["tau"], f["literal"],
                              f["threads"])
    stats = {int(rv.key): ex.boxplot_stats(rv.p if f["literal"] else rv.values) for rv in vals}
    write_csv(replication_table(vals, "dim"), os.path.join(out, "example1.csv"))
    write_csv(boxplot_table(stats, "dim"), os.path.join(out, "example1_boxplot.csv"))
    return _boxplot_results(stats, "d")


def cmd_example2(f: dict, out: str) -> list[dict]:
    if f["mode"] == "vary-d":
        grid, key = f["dims"], "dim"
        _warn_scale(grid, "d")
    else:
        grid, key = f["mus"], "mu"
        _warn_scale([f["d"]], "d")
    vals = ex.example2_values(f["mode"], grid, f["reps"], f["seed"], f["d"], f["mu"], f["threads"])
    stats = {rv.key: ex.boxplot_stats(rv.values) for rv in vals}
    write_csv(replication_table(vals, key), os.path.join(out, "example2.csv"))
    write_csv(boxplot_table(stats, key), os.path.join(out, "example2_boxplot.csv"))
    return _boxplot_results(stats, key)


def cmd_compare(f: dict, out: str) -> list[dict]:
    _warn_scale([f["d"]], "d")
    cfg = ex.ExperimentConfig(d=f["d"], arms=f["arms"], horizon=f["horizon"], reps=f["reps"],
                              policies=f["policies"], base_seed=f["seed"], threads=f["threads"])
    table = ex.run_policy_compare(cfg)
    write_csv(table, os.path.join(out, "compare.csv"))
    final = table.final_cum_regret()
    exceed = table.psi_exceed_frac.sum(axis=1)
    return [{"name": f"cum_regret_{p}", "pass": True, "estimate": final[p], "target": None,
             "psi_exceed_sum": float(exceed[i])} for i, p in enumerate(table.policies)]


def _check_rng(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(ex.split_seed(seed, zlib.crc32(name.encode())))


def verification_jobs(suite: str) -> list[tuple[str, callable]]:
    """(name, fn(rng) -> report) pairs for a suite, in a fixed order."""
    jobs = []
    want = (lambda s: suite in ("all", s))
    if want("bias"):
        jobs.append(("selection_beta", lambda rng: th.check_beta(10 ** 7, rng)))
        for s, t in [(1.0, 0.0), (0.0, 1.0), (2.0, 1.0)]:
            jobs.append((f"block_bias_{s}_{t}", lambda rng, s=s, t=t: th.check_block_bias(s, t, 10 ** 6, rng)))
            jobs.append((f"bias_mgf_{s}_{t}", lambda rng, s=s, t=t: th.check_bias_mgf(s, t, 10 ** 6, rng)))
    if want("decomp") or suite == "bias":
        for g in th.G_SHAPES:
            jobs.append((f"decomp_{g}", lambda rng, g=g: th.mc_bias_decomposition([1.0, 2.0], g, 10 ** 6, rng)))
    if want("tails"):
        for d, p in [(16, 0.1), (64, 0.01)]:
            jobs.append((f"cube_{d}_{p}", lambda rng, d=d, p=p: th.mc_cube_tail(d, p, 10 ** 6, rng)))
        for d in (16, 36):
            jobs.append((f"quad_identity_{d}", lambda rng, d=d: th.mc_quad_lower_tail(np.eye(d), 10 ** 6, rng, "_identity")))
            jobs.append((f"quad_random_{d}", lambda rng, d=d: th.mc_quad_lower_tail(random_psd(d, rng), 10 ** 6, rng, "_random")))
    if want("optimism"):
        for d in (5, 20):
            jobs.append((f"optimism_{d}", lambda rng, d=d: th.mc_optimism_rate(d, th.TheoryParams(), 10 ** 4, rng)))
    if want("example2"):
        jobs.append(("ex2_round1", lambda rng: th.check_example2_round1(16, 10 ** 5, rng)))
        jobs.append(("ex2_marginals", lambda rng: th.check_example2_marginals(-0.7, 16)))
        for r1 in (0.0, -1.0):
            jobs.append((f"ex2_continue_{r1}", lambda rng, r1=r1: th.check_example2_continue(r1, 16, 10 ** 5, rng)))
    return jobs


def random_psd(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((d, 2 * d))
    return g @ g.T / (2 * d)


def cmd_verify(f: dict, out: str) -> list[dict]:
    reports = []
    for name, job in verification_jobs(f["suite"]):
        rep = job(_check_rng(f["seed"], name))
        log.info(rep.line())
        print(rep.line())
        reports.append(rep)
    write_csv(report_table(reports), os.path.join(out, "verify.csv"))
    return [{"name": r.name, "pass": bool(r.passed), "estimate": r.estimate, "target": r.target,
             "stderr": r.stderr, "n": r.n} for r in reports]


def cmd_all(f: dict, out: str) -> list[dict]:
    results = []
    for name, fn in [("example1", cmd_example1), ("example2", cmd_example2), ("compare", cmd_compare)]:
        sub = dict(f, **DEFAULTS[name])
        if name == "example2":
            sub["mode"] = "vary-d"
            results += fn(sub, os.path.join(out, "example2_vary_d"))
            sub["mode"] = "vary-mu"
            results += fn(sub, os.path.join(out, "example2_vary_mu"))
        else:
            results += fn(sub, os.path.join(out, name))
    results += cmd_verify(dict(f, suite="all"), os.path.join(out, "verify"))
    return results


NOTES = {
    "example2": "vary-mu holds d at a reduced desk-scale value (default 200) to bound runtime",
    "compare": "theta* and the per-round arm sets are shared across policies within a replication",
}

COMMANDS = {"example1": cmd_example1, "example2": cmd_example2, "compare": cmd_compare,
            "verify": cmd_verify, "all": cmd_all}


def dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        flags = resolve(args)
    except (LintsLabError, OSError, json.JSONDecodeError) as exc:
        print(f"lints-lab: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2

    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    try:
        results = COMMANDS[args.command](flags, flags["out"])
    except LintsLabError as exc:
        print(f"lints-lab: {exc}", file=sys.stderr)
        return 2
    summary = {
        "command": args.command,
        "flags": flags,
        "seed": flags["seed"],
        "started_at": started.isoformat(),
        "duration_s": time.perf_counter() - t0,
        "version": __version__,
        "seed_derivation": SEED_DERIVATION,
        "notes": [NOTES[k] for k in NOTES if args.command in (k, "all")],
        "results": results,
    }
    write_summary(summary, os.path.join(flags["out"], "summary.json"))
    failed = [r["name"] for r in results if r.get("pass") is False]
    if failed:
        print(f"lints-lab: {len(failed)} check(s) failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(dispatch())
