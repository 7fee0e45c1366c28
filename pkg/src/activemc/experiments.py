"""Seeded trial harness behind the command line.

A run is described by a flat :class:`RunConfig`. Trial ``t`` of a run with
seed ``s`` draws its matrix, oracle and noise seeds from
``SeedSequence(s).spawn(trials)[t]``, so results do not depend on how trials
are spread over worker processes.
"""
from __future__ import annotations

import dataclasses
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from . import algorithms as alg
from . import combinatorics, hetcost, noisy
from .generators import FIXTURE_NAMES, gen_coherent_lowrank, generic_profiles, named_fixture
from .linalg import Tolerance, numeric_rank
from .matrixio import read_costs_csv, read_matrix_csv
from .oracle import CostModel, NoiseModel, ObservationOracle
from .sparsity import coherence, column_space, matrix_profiles

ALGORITHMS = ("ks2013", "ercs", "err", "erre", "erei", "erhc", "eerei", "lrebn")
CLASSES = ("ii", "ic", "ci", "cc")
DESK_LIMITS = {"m": 200, "n": 500, "trials": 500}


class ConfigError(ValueError):
    """Inconsistent or out-of-range run parameters."""


@dataclass
class RunConfig:
    alg: str = "err"
    m: int = 50
    n: int = 100
    r: int = 5
    coherent_cols: int = 0
    coherent_rows: int = 0
    fixture: Optional[str] = None
    matrix: Optional[str] = None
    cost: Optional[str] = None
    noise: str = "none"
    trials: int = 10
    seed: int = 0
    eps: float = 0.1
    delta: float = 0.05
    d: Optional[int] = None
    T: Optional[int] = None
    psi_u: Optional[float] = None
    psi_v: Optional[float] = None
    psibar: Optional[int] = None
    mu: Optional[float] = None
    xi: int = 0
    adaptive: bool = True
    base_const: float = noisy.DESK_BASE_CONST
    angle_const: float = 8.0
    exact: bool = False
    atol: float = 1e-8
    full_scale: bool = False

    @classmethod
    def from_mapping(cls, values: Dict) -> "RunConfig":
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kw = {}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key == "rank":
                key = "r"
            if key not in fields:
                raise ConfigError(f"unknown parameter {key!r}")
            kw[key] = raw
        cfg = cls(**kw)
        cfg._coerce()
        return cfg

    def _coerce(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None or not isinstance(v, str):
                continue
            default = f.default
            try:
                if f.name in ("d", "T", "psibar", "xi", "m", "n", "r", "coherent_cols", "coherent_rows",
                              "trials", "seed"):
                    setattr(self, f.name, int(v))
                elif f.name in ("psi_u", "psi_v", "mu", "eps", "delta", "base_const", "angle_const", "atol"):
                    setattr(self, f.name, float(v))
                elif isinstance(default, bool):
                    setattr(self, f.name, parse_bool(v))
            except ValueError as exc:
                raise ConfigError(f"bad value for {f.name}: {v!r}") from exc

    def validate(self) -> None:
        """Raise :class:`ConfigError` before any sampling happens."""
        if self.alg not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.alg!r}; choose from {', '.join(ALGORITHMS)}")
        if self.fixture is not None and self.fixture not in FIXTURE_NAMES:
            raise ConfigError(f"unknown fixture {self.fixture!r}")
        if self.fixture is None and self.matrix is None:
            if min(self.m, self.n) < 1:
                raise ConfigError("m and n must be positive")
            if not 0 <= self.r <= min(self.m, self.n):
                raise ConfigError(f"rank {self.r} not in [0, min(m, n)]")
            if self.coherent_cols + self.coherent_rows > self.r:
                raise ConfigError("more coherent directions than the rank")
            if not self.full_scale:
                for key in ("m", "n"):
                    if getattr(self, key) > DESK_LIMITS[key]:
                        raise ConfigError(f"{key}={getattr(self, key)} exceeds the desk-scale limit "
                                          f"{DESK_LIMITS[key]}; pass --full-scale to allow it")
        if self.trials < 0:
            raise ConfigError("trials must be non-negative")
        if not self.full_scale and self.trials > DESK_LIMITS["trials"]:
            raise ConfigError(f"trials={self.trials} exceeds {DESK_LIMITS['trials']}; pass --full-scale")
        if self.d is not None:
            m = self.shape()[0]
            if not 1 <= self.d <= m:
                raise ConfigError(f"d={self.d} must lie in [1, m={m}]")
        if self.T is not None and self.T < 1:
            raise ConfigError("T must be at least 1")
        if self.alg != "lrebn" and not 0 < self.eps < 1:
            raise ConfigError("eps must lie in (0, 1)")
        if self.alg == "lrebn":
            if not 0 <= self.eps < 0.25:
                raise ConfigError("lrebn needs eps in [0, 1/4)")
            if not 0 < self.delta <= 0.1:
                raise ConfigError("lrebn needs delta in (0, 0.1]")
        try:
            parse_noise(self.noise)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.xi < 0 or self.xi > self.shape()[1]:
            raise ConfigError("xi must lie in [0, n]")

    def shape(self):
        if self.fixture is not None:
            return named_fixture(self.fixture).matrix.shape
        if self.matrix is not None:
            try:
                return read_matrix_csv(self.matrix).shape
            except (OSError, ValueError) as exc:
                raise ConfigError(f"cannot read matrix {self.matrix!r}: {exc}") from exc
        return self.m, self.n

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)


def parse_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def parse_noise(spec: str):
    """``"none"``, ``"sparse:a"`` or ``"bounded:eps"`` -> ``(kind, value)``."""
    s = (spec or "none").strip().lower()
    if s in ("none", "clean"):
        return "none", 0
    kind, _, val = s.partition(":")
    if kind == "sparse":
        a = int(val)
        if a < 0:
            raise ValueError("sparse noise count must be non-negative")
        return "sparse", a
    if kind == "bounded":
        e = float(val)
        if e < 0:
            raise ValueError("bounded noise level must be non-negative")
        return "bounded", e
    raise ValueError(f"unknown noise spec {spec!r}; use none, sparse:a or bounded:eps")


def parse_axis(text: str) -> List[int]:
    """``"1..8"``, ``"1,2,4"`` or ``""`` -> list of integers."""
    text = (text or "").strip()
    if not text:
        return []
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def trial_seeds(seed: int, trials: int) -> List[tuple]:
    """Per-trial ``(matrix, oracle, noise)`` integer seeds."""
    out = []
    for child in np.random.SeedSequence(seed).spawn(trials):
        out.append(tuple(int(c.generate_state(1)[0]) for c in child.spawn(3)))
    return out


def ks2013_d(mu0: float, r: int, eps: float, m: int) -> int:
    """``ceil(mu0 r^1.5 ln(r/eps))`` clamped to ``[1, m]``; the order constant is taken as one."""
    if r == 0:
        return 1
    return int(min(m, max(1, math.ceil(mu0 * r ** 1.5 * math.log(r / eps)))))


def _truth(cfg: RunConfig, mseed):
    if cfg.fixture is not None:
        fx = named_fixture(cfg.fixture)
        return fx.matrix, fx.costs
    if cfg.matrix is not None:
        return read_matrix_csv(cfg.matrix), None
    return gen_coherent_lowrank(cfg.m, cfg.n, cfg.r, cfg.coherent_cols, cfg.coherent_rows, mseed), None


def _profiles(cfg: RunConfig, truth, tol):
    if cfg.fixture is None and cfg.matrix is None:
        return generic_profiles(cfg.m, cfg.n, cfg.r, cfg.coherent_cols, cfg.coherent_rows)
    return matrix_profiles(truth, tol)


def run_trial(cfg: RunConfig, index: int, seeds: Optional[tuple] = None) -> dict:
    """Run trial ``index`` and return its JSON-ready record."""
    mseed, oseed, nseed = seeds if seeds is not None else trial_seeds(cfg.seed, index + 1)[index]
    start = time.perf_counter()
    truth, fixture_costs = _truth(cfg, mseed)
    m, n = truth.shape
    tol = Tolerance.for_matrix(truth) if cfg.exact else Tolerance()
    kind, level = parse_noise(cfg.noise)
    if cfg.alg == "eerei" and kind == "none":
        kind, level = "sparse", cfg.xi
    if cfg.alg == "lrebn" and kind == "none":
        kind, level = "bounded", cfg.eps
    noise = {"none": NoiseModel.clean(), "sparse": NoiseModel.sparse_columns(int(level), seed=nseed),
             "bounded": NoiseModel.bounded(level, seed=nseed)}[kind]
    cost = None
    if cfg.cost is not None:
        table = read_costs_csv(cfg.cost, (m, n))
        cost = CostModel.per_column(table[0]) if table.shape[0] == 1 and m > 1 else CostModel.per_entry(table)
    elif fixture_costs is not None:
        cost = CostModel.per_entry(fixture_costs)
    oracle = ObservationOracle(truth, cost=cost, noise=noise, seed=oseed)
    clean, _, sigma = oracle.harness_view()
    generated = cfg.fixture is None and cfg.matrix is None
    rank = cfg.r if generated else numeric_rank(clean, tol)
    need_profiles = cfg.alg in ("ercs", "err", "erre", "erei", "erhc", "eerei") or (
        cfg.alg == "ks2013" and cfg.d is None)
    prof_u = prof_v = None
    if need_profiles and rank > 0:
        prof_u, prof_v = _profiles(cfg, clean, tol)
    psi_u = cfg.psi_u if cfg.psi_u is not None else (prof_u.psi if prof_u else None)
    psi_v = cfg.psi_v if cfg.psi_v is not None else (prof_v.psi if prof_v else None)
    extra = {}
    eval_cols = None
    a = cfg.alg
    if a == "ks2013":
        if cfg.d is not None:
            d = cfg.d
        else:
            mu0 = cfg.mu if cfg.mu is not None else (coherence(column_space(clean, Tolerance())) if rank else 1.0)
            d = ks2013_d(mu0, rank, cfg.eps, m)
        res = alg.run_ks2013(oracle, alg.Ks2013Params(d=d, tol=tol))
        extra["d"] = d
    elif a == "ercs":
        d = cfg.d if cfg.d is not None else (prof_u.psibar + 1 if prof_u else 1)
        res = alg.run_ercs(oracle, alg.ErcsParams(d=d, tol=tol))
        extra["d"] = d
    elif a == "err":
        res = alg.run_err(oracle, alg.ErrParams(r=rank, eps=cfg.eps, psi_u=psi_u, psi_v=psi_v, tol=tol))
    elif a == "erre":
        T = cfg.T if cfg.T is not None else max(1, math.ceil(math.log(1.0 / cfg.eps)))
        res = alg.run_erre(oracle, alg.ErreParams(T=T, eps=cfg.eps, psi_u=psi_u, psi_v=psi_v, r=rank, tol=tol))
        extra["T"] = T
    elif a == "erei":
        res = alg.run_erei(oracle, alg.EreiParams(r=max(rank, 1), psi_u=psi_u or 1, psi_v=psi_v or 1,
                                                  eps=cfg.eps, tol=tol, d=cfg.d))
        extra["d"] = res.details["d"]
    elif a == "erhc":
        psibar = cfg.psibar if cfg.psibar is not None else (prof_u.psibar if prof_u else 0)
        res = hetcost.run_erhc(oracle, psibar, tol=tol)
        extra["plan_rows"] = list(res.details["plan"].rows)
        extra["plan_columns"] = list(res.details["plan"].columns)
    elif a == "eerei":
        found, res = noisy.run_eerei(oracle, noisy.EereiParams(
            r=max(rank, 1), psi_u=psi_u or 1, psi_v=psi_v or 1, xi=max(cfg.xi, len(sigma)),
            eps=cfg.eps, tol=tol, d=cfg.d))
        eval_cols = [j for j in range(n) if j not in sigma]
        extra["detected"] = sorted(found)
        extra["injected"] = sorted(sigma)
        extra["sigma_ok"] = found == sigma
    else:  # lrebn
        mu = cfg.mu if cfg.mu is not None else coherence(column_space(clean, Tolerance()))
        res = noisy.run_lrebn(oracle, noisy.LrebnParams(
            mu=mu, r=max(rank, 1), eps=cfg.eps, delta=cfg.delta, adaptive=cfg.adaptive,
            base_const=cfg.base_const, angle_const=cfg.angle_const, tol=tol))
        col_err = np.linalg.norm(res.recovered - clean, axis=0)
        extra["max_column_error"] = float(col_err.max()) if col_err.size else 0.0
        ratios = noisy.lrebn_error_ratios(res, clean, cfg.eps)
        extra["max_error_ratio"] = float(ratios.max()) if ratios.size else 0.0
        extra["mu"] = mu
    if a == "lrebn":
        res.max_abs_error = float(np.abs(res.recovered - clean).max())
        res.success = bool(res.rank_estimate <= max(rank, 1))
    else:
        res.evaluate(clean, cfg.atol, columns=eval_cols)
        if a == "eerei":
            res.success = bool(res.success and extra["sigma_ok"])
    rec = {"trial": index, "alg": a, "m": m, "n": n, "r": rank}
    rec.update({k: _jsonable(v) for k, v in res.summary().items()})
    rec.update({k: _jsonable(v) for k, v in extra.items()})
    rec["timing"] = {"wall_time": time.perf_counter() - start}
    return rec


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def _trial_job(args):
    cfg, index, seeds = args
    return run_trial(cfg, index, seeds)


def run_trials(cfg: RunConfig, workers: int = 1) -> List[dict]:
    """All trials of a run, in trial order."""
    cfg.validate()
    jobs = [(cfg, t, s) for t, s in enumerate(trial_seeds(cfg.seed, cfg.trials))]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_trial_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [_trial_job(j) for j in jobs]


def summarize(records: Sequence[dict], min_success: Optional[float] = None,
              check_bound: bool = False) -> dict:
    """Aggregate trial records; ``passed`` applies the requested assertions."""
    obs = np.array([r["observations"] for r in records], dtype=float)
    cost = np.array([r["cost"] for r in records], dtype=float)
    succ = [bool(r["success"]) for r in records]
    bounds = [r["bound"] for r in records if r.get("bound") is not None]
    within = [r["bound_ok"] for r in records if r.get("bound_ok") is not None and r["success"]]
    rate = float(np.mean(succ)) if succ else float("nan")
    out = {
        "summary": True,
        "trials": len(records),
        "success_rate": _jsonable(rate),
        "mean_obs": _jsonable(float(obs.mean()) if obs.size else float("nan")),
        "std_obs": _jsonable(float(obs.std()) if obs.size else float("nan")),
        "mean_cost": _jsonable(float(cost.mean()) if cost.size else float("nan")),
        "bound": _jsonable(float(np.mean(bounds))) if bounds else None,
        "bound_ok": all(within) if within else None,
    }
    checks = {}
    if min_success is not None:
        checks["success_rate"] = bool(records) and rate >= min_success
    if check_bound:
        checks["bound"] = bool(within) and all(within)
    out["checks"] = checks
    out["passed"] = all(checks.values())
    return out


# ---------------------------------------------------------------------------
# sweeps

SWEEP_COLUMNS = ("axis", "alg", "class", "mean_obs", "std_obs", "success_rate", "mean_cost", "bound", "bound_ok")
SWEEP_ALGS = ("ks2013", "ercs", "err", "erre", "erei")


def class_directions(cls: str):
    """``"ic"`` -> ``(0, 1)``: number of coherent directions in the column and row spaces."""
    if cls not in CLASSES:
        raise ConfigError(f"unknown coherence class {cls!r}; choose from {', '.join(CLASSES)}")
    return int(cls[0] == "c"), int(cls[1] == "c")


def sweep(base: RunConfig, axis: str, values: Iterable[int], algs: Sequence[str] = SWEEP_ALGS,
          classes: Sequence[str] = ("ii",), workers: int = 1) -> List[dict]:
    """One row per (axis value, algorithm, class).

    All algorithms in a cell see the same matrices: the seed of a cell depends
    on the base seed, the axis value and the class, not on the algorithm.
    Cells whose class needs more coherent directions than the rank are skipped.
    """
    if axis not in ("r", "n"):
        raise ConfigError("sweep axis must be 'r' or 'n'")
    for a in algs:
        if a not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {a!r}")
    dirs = {c: class_directions(c) for c in classes}
    rows = []
    for v in values:
        for ci, cls in enumerate(classes):
            cc, cr = dirs[cls]
            cfg = base.replace(**{axis: int(v)}, coherent_cols=cc, coherent_rows=cr,
                               seed=int(np.random.SeedSequence([base.seed, int(v), ci]).generate_state(1)[0]))
            if cc + cr > cfg.r:
                continue
            for a in algs:
                recs = run_trials(cfg.replace(alg=a), workers)
                s = summarize(recs)
                rows.append({"axis": int(v), "alg": a, "class": cls, "mean_obs": s["mean_obs"],
                             "std_obs": s["std_obs"], "success_rate": s["success_rate"],
                             "mean_cost": s["mean_cost"], "bound": s["bound"], "bound_ok": s["bound_ok"]})
    return rows


def format_csv(rows: Sequence[dict]) -> str:
    """Fixed column order; floats printed with repr so reruns are byte-identical."""
    lines = [",".join(SWEEP_COLUMNS)]
    for row in rows:
        cells = []
        for c in SWEEP_COLUMNS:
            v = row.get(c)
            cells.append("" if v is None else (repr(float(v)) if isinstance(v, float) else str(v)))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
