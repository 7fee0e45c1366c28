"""Command line entry point: ``activemc {gen,run,sweep,oracle,verify}``.

Exit status is 0 when every requested check passed, 1 when one failed and
2 for configuration errors. The default seed comes from ``ACTIVEMC_SEED``
(0 when unset). Any flag can also be given in a ``--config`` file of
``key = value`` lines; flags on the command line win.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import combinatorics, verify
from .experiments import (ALGORITHMS, CLASSES, SWEEP_ALGS, ConfigError, RunConfig, format_csv,
                          parse_axis, parse_bool, parse_noise, run_trials, summarize, sweep)
from .generators import FIXTURE_NAMES, gen_coherent_lowrank, generic_profiles, named_fixture
from .linalg import Tolerance, numeric_rank
from .matrixio import write_matrix_csv
from .oracle import NoiseModel
from .sparsity import coherence, column_space, matrix_profiles, row_space

SEED_ENV = "ACTIVEMC_SEED"
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be an integer, got {raw!r}")


def read_config(path) -> Dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment, blank lines are ignored."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{n}: expected key = value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, allow_nan=False, default=_default)


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, (frozenset, set)):
        return sorted(o)
    raise TypeError(f"not serializable: {type(o).__name__}")


def _emit(lines: List[str], out: Optional[str]) -> None:
    text = "".join(line + "\n" for line in lines)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# parser

RUN_KEYS = ("alg", "m", "n", "r", "coherent_cols", "coherent_rows", "fixture", "matrix", "cost", "noise",
            "trials", "seed", "eps", "delta", "d", "T", "psi_u", "psi_v", "psibar", "mu", "xi", "adaptive",
            "base_const", "angle_const", "exact", "atol", "full_scale")


def _add_problem_flags(p, with_alg=True):
    if with_alg:
        p.add_argument("--alg", choices=ALGORITHMS)
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--r", "--rank", dest="r", type=int, help="rank of generated matrices (and the rank given to ERR)")
    p.add_argument("--coherent-cols", type=int, help="standard vectors placed in the column space")
    p.add_argument("--coherent-rows", type=int, help="standard vectors placed in the row space")
    p.add_argument("--fixture", choices=FIXTURE_NAMES)
    p.add_argument("--matrix", help="ground truth CSV")
    p.add_argument("--cost", help="per-entry cost CSV")
    p.add_argument("--noise", help="none, sparse:a or bounded:eps")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--eps", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--d", type=int, help="probe size override")
    p.add_argument("--T", type=int, help="ERRE delay")
    p.add_argument("--psi-u", type=float)
    p.add_argument("--psi-v", type=float)
    p.add_argument("--psibar", type=int)
    p.add_argument("--mu", type=float)
    p.add_argument("--xi", type=int, help="number of noisy columns (EEREI)")
    p.add_argument("--adaptive", choices=("on", "off"))
    p.add_argument("--base-const", type=float)
    p.add_argument("--angle-const", type=float)
    p.add_argument("--exact", action="store_const", const=True, default=None,
                   help="rational arithmetic for small integer matrices")
    p.add_argument("--atol", type=float)
    p.add_argument("--full-scale", action="store_const", const=True, default=None,
                   help="lift the desk-scale size limits")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--config", help="key = value file; command line flags override it")
    p.add_argument("--out", help="write output to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="activemc", description="Adaptive low-rank matrix completion experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a ground-truth matrix and its profile")
    g.add_argument("--m", type=int, default=50)
    g.add_argument("--n", type=int, default=100)
    g.add_argument("--r", "--rank", dest="r", type=int, default=5)
    g.add_argument("--coherent-cols", type=int, default=0)
    g.add_argument("--coherent-rows", type=int, default=0)
    g.add_argument("--fixture", choices=FIXTURE_NAMES)
    g.add_argument("--noise", default="none")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True, help="matrix CSV; the profile goes to <out>.json")
    g.add_argument("--full-scale", action="store_true")

    r = sub.add_parser("run", help="run an algorithm over seeded trials, JSON lines")
    _add_problem_flags(r)
    r.add_argument("--min-success", type=float, help="fail unless the success rate reaches this")
    r.add_argument("--check-bound", action="store_true", help="fail if a successful trial exceeds its bound")

    s = sub.add_parser("sweep", help="sweep r or n, CSV table")
    _add_problem_flags(s, with_alg=False)
    s.add_argument("--axis", choices=("r", "n"))
    s.add_argument("--values", help='e.g. "1..8" or "100,200"')
    s.add_argument("--algs", help="comma separated, default " + ",".join(SWEEP_ALGS))
    s.add_argument("--classes", help="comma separated subset of " + ",".join(CLASSES))
    s.add_argument("--check-monotone", action="store_true",
                   help="fail unless mean observations are nondecreasing along the axis")

    o = sub.add_parser("oracle", help="closed forms, JSON")
    osub = o.add_subparsers(dest="which", required=True)
    f1 = osub.add_parser("first-one")
    f1.add_argument("--m", type=int, required=True)
    f1.add_argument("--k", type=int, required=True)
    f1.add_argument("--trials", type=int, help="also run the Monte Carlo simulation")
    f1.add_argument("--seed", type=int)
    tl = osub.add_parser("tail")
    tl.add_argument("--m", type=int, required=True)
    tl.add_argument("--k", type=int, required=True)
    tl.add_argument("--a", type=int, required=True)
    ta = osub.add_parser("tau")
    ta.add_argument("--k", type=int, required=True)
    ta.add_argument("--m", type=int, required=True)
    ta.add_argument("--r", type=int, required=True)
    ta.add_argument("--N", type=int, required=True)
    bd = osub.add_parser("bounds")
    bd.add_argument("--m", type=int, required=True)
    bd.add_argument("--n", type=int, required=True)
    bd.add_argument("--r", type=int, required=True)
    bd.add_argument("--psi-u", type=float, required=True)
    bd.add_argument("--psi-v", type=float, required=True)
    bd.add_argument("--eps", type=float, required=True)
    bd.add_argument("--T", type=int)
    bd.add_argument("--xi", type=int)
    bd.add_argument("--mu", type=float)
    bd.add_argument("--delta", type=float, default=0.05)
    bd.add_argument("--theta", type=float, default=0.0)

    v = sub.add_parser("verify", help="run a property suite, JSON verdict")
    v.add_argument("suite", choices=tuple(verify.SUITES))
    v.add_argument("--seed", type=int)
    v.add_argument("--instances", type=int, help="instances (or trials for first-one)")
    return parser


def _merged_config(args, keys) -> Dict[str, object]:
    values: Dict[str, object] = {}
    if getattr(args, "config", None):
        values.update(read_config(args.config))
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            values[k] = v
    if "adaptive" in values and isinstance(values["adaptive"], str):
        try:
            values["adaptive"] = parse_bool(values["adaptive"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if "seed" not in values:
        values["seed"] = default_seed()
    return values


def _workers(args, values) -> int:
    w = args.workers if args.workers is not None else values.pop("workers", 1)
    try:
        w = int(w)
    except ValueError as exc:
        raise ConfigError(f"bad workers value {w!r}") from exc
    if w < 1:
        raise ConfigError("workers must be at least 1")
    return w


# ---------------------------------------------------------------------------
# commands

def cmd_gen(args) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    if args.fixture:
        a = named_fixture(args.fixture).matrix
        m, n = a.shape
        tol = Tolerance.for_matrix(a)
        r = numeric_rank(a, tol)
        pu, pv = matrix_profiles(a, tol)
        profile = {"column_space": pu.as_dict(), "row_space": pv.as_dict()}
    else:
        m, n, r = args.m, args.n, args.r
        if min(m, n) < 1 or not 0 <= r <= min(m, n):
            raise ConfigError("need m, n >= 1 and 0 <= r <= min(m, n)")
        if args.coherent_cols + args.coherent_rows > r:
            raise ConfigError("more coherent directions than the rank")
        if not args.full_scale and (m > 200 or n > 500):
            raise ConfigError("size exceeds the desk-scale limit; pass --full-scale")
        a = gen_coherent_lowrank(m, n, r, args.coherent_cols, args.coherent_rows, seed)
        pu, pv = generic_profiles(m, n, r, args.coherent_cols, args.coherent_rows)
        profile = {"column_space": pu.as_dict(), "row_space": pv.as_dict()}
        if r:
            profile["column_space"]["mu"] = coherence(column_space(a))
            profile["row_space"]["mu"] = coherence(row_space(a))
    try:
        kind, level = parse_noise(args.noise)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    noise = {"none": NoiseModel.clean(), "sparse": NoiseModel.sparse_columns(int(level), seed=seed + 1),
             "bounded": NoiseModel.bounded(level, seed=seed + 1)}[kind]
    if kind == "sparse" and level > n:
        raise ConfigError("more noisy columns than columns")
    _, observed, sigma = noise.apply(a)
    write_matrix_csv(args.out, observed)
    side = {"m": m, "n": n, "r": r, "seed": seed, "fixture": args.fixture, "noise": args.noise,
            "noisy_columns": sorted(sigma), "coherent_cols": args.coherent_cols,
            "coherent_rows": args.coherent_rows, "profile": profile}
    Path(str(args.out) + ".json").write_text(_dumps(side) + "\n")
    return EXIT_OK


def cmd_run(args) -> int:
    values = _merged_config(args, RUN_KEYS)
    workers = _workers(args, values)
    min_success = values.pop("min_success", None) if args.min_success is None else args.min_success
    check_bound = args.check_bound or parse_bool(values.pop("check_bound", False))
    values.pop("min_success", None)
    values.pop("check_bound", None)
    cfg = RunConfig.from_mapping(values)
    cfg.validate()
    records = run_trials(cfg, workers)
    summary = summarize(records, None if min_success is None else float(min_success), check_bound)
    summary["alg"] = cfg.alg
    summary["seed"] = cfg.seed
    _emit([_dumps(r) for r in records] + [_dumps(summary)], args.out)
    return EXIT_OK if summary["passed"] else EXIT_FAIL


def _split(text, default):
    if text is None:
        return list(default)
    return [t.strip() for t in str(text).split(",") if t.strip()]


def cmd_sweep(args) -> int:
    values = _merged_config(args, RUN_KEYS + ("axis", "values", "algs", "classes"))
    workers = _workers(args, values)
    axis = values.pop("axis", "r")
    try:
        axis_values = parse_axis(str(values.pop("values", "")))
    except ValueError as exc:
        raise ConfigError(f"bad axis values: {exc}") from exc
    algs = _split(values.pop("algs", None), SWEEP_ALGS)
    classes = _split(values.pop("classes", None), ("ii",))
    check = args.check_monotone or parse_bool(values.pop("check_monotone", False))
    values.pop("check_monotone", None)
    values.pop("alg", None)
    cfg = RunConfig.from_mapping(values)
    for v in axis_values:
        cfg.replace(**{axis: v}, alg=algs[0] if algs else "err").validate()
    rows = sweep(cfg, axis, axis_values, algs, classes, workers)
    text = format_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if check and not monotone_ok(rows):
        return EXIT_FAIL
    return EXIT_OK


def monotone_ok(rows) -> bool:
    """Mean observations nondecreasing along the axis for every (alg, class)."""
    series: Dict[tuple, list] = {}
    for row in rows:
        series.setdefault((row["alg"], row["class"]), []).append((row["axis"], row["mean_obs"]))
    for pts in series.values():
        ys = [y for _, y in sorted(pts)]
        if any(b < a for a, b in zip(ys, ys[1:])):
            return False
    return True


def cmd_oracle(args) -> int:
    c = combinatorics
    w = args.which
    try:
        if w == "first-one":
            val = c.expected_first_one_position(args.m, args.k)
            out = {"m": args.m, "k": args.k, "expected": str(val), "value": float(val)}
            if args.trials:
                seed = args.seed if args.seed is not None else default_seed()
                st = c.monte_carlo_detection(args.m, args.k, args.trials, seed)
                out["monte_carlo"] = {"mean": st.mean, "trials": args.trials,
                                      "tail": {str(a): f for a, f in st.tail.items()}}
        elif w == "tail":
            val = c.first_one_tail(args.m, args.k, args.a)
            out = {"m": args.m, "k": args.k, "a": args.a, "exact": str(val), "value": float(val)}
        elif w == "tau":
            pmf = c.tau_pmf_exact(args.k, args.m, args.r, args.N)
            disp = c.tau_displayed_form(args.k, args.m, args.r, args.N)
            out = {"k": args.k, "m": args.m, "r": args.r, "N": args.N, "pmf": float(pmf), "pmf_exact": str(pmf),
                   "displayed_form": float(disp), "ratio": float(c.tau_ratio(args.k, args.m, args.r, args.N))}
        else:
            a = args
            out = {"err": c.err_bound(a.m, a.n, a.r, a.psi_u, a.psi_v, a.eps).as_dict(),
                   "erei_d": c.erei_d(a.m, a.r, a.psi_u, a.psi_v, a.eps)}
            if a.T is not None:
                out["erre"] = c.erre_bound(a.m, a.n, a.r, a.psi_u, a.psi_v, a.eps, a.T).as_dict()
            if a.xi is not None:
                out["eerei"] = c.eerei_bound(a.m, a.n, a.r, a.psi_u, a.psi_v, a.eps, a.xi).as_dict()
                out["eerei_d"] = c.eerei_d(a.m, a.r, a.psi_u, a.psi_v, a.eps, a.xi)
            if a.mu is not None:
                out["lrebn_d"] = c.lrebn_d(a.mu, a.r, a.delta, a.theta, a.m)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    sys.stdout.write(_dumps(out) + "\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    seed = args.seed if args.seed is not None else default_seed()
    fn = verify.SUITES[args.suite]
    kw = {"seed": seed} if args.suite != "tau" else {}
    if args.instances is not None:
        key = {"restricted-dependence": "instances", "first-one": "trials", "two-opt": "instances",
               "coherence": "subspaces", "tau": "n_max"}[args.suite]
        kw[key] = args.instances
    verdict = fn(**kw)
    sys.stdout.write(_dumps(verdict) + "\n")
    return EXIT_OK if verdict["passed"] else EXIT_FAIL


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "sweep": cmd_sweep, "oracle": cmd_oracle, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        sys.stderr.write(f"activemc: config error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
