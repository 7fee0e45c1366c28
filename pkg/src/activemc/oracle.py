"""Metered access to a hidden matrix.

Every completion routine reads entries only through :class:`ObservationOracle`.
The oracle caches what it has revealed, so asking twice for the same entry is
free, and it keeps a running tally of distinct entries and their cost.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from .linalg import PartialMatrix


class ColumnExhausted(LookupError):
    """Raised by :meth:`ObservationOracle.draw_unobserved_uniform` on a fully observed column."""


@dataclass(frozen=True)
class CostModel:
    """Price of revealing each entry.

    Use :meth:`uniform`, :meth:`per_column` or :meth:`per_entry` to build one.
    """

    kind: str = "uniform"
    values: Optional[np.ndarray] = None

    @classmethod
    def uniform(cls) -> "CostModel":
        return cls("uniform", None)

    @classmethod
    def per_column(cls, costs) -> "CostModel":
        c = np.asarray(costs, dtype=float).reshape(-1)
        if np.any(c < 0):
            raise ValueError("costs must be non-negative")
        return cls("per_column", c)

    @classmethod
    def per_entry(cls, costs) -> "CostModel":
        c = np.atleast_2d(np.asarray(costs, dtype=float))
        if np.any(c < 0):
            raise ValueError("costs must be non-negative")
        return cls("per_entry", c)

    def table(self, shape) -> np.ndarray:
        """The full ``m x n`` table of entry costs."""
        m, n = shape
        if self.kind == "uniform":
            return np.ones((m, n))
        if self.kind == "per_column":
            if self.values.shape != (n,):
                raise ValueError(f"expected {n} column costs, got {self.values.shape[0]}")
            return np.tile(self.values, (m, 1))
        if self.kind == "per_entry":
            if self.values.shape != (m, n):
                raise ValueError(f"cost table shape {self.values.shape} does not match {(m, n)}")
            return self.values.copy()
        raise ValueError(f"unknown cost model {self.kind!r}")


@dataclass(frozen=True)
class NoiseModel:
    """How the observed matrix differs from the clean one.

    ``clean``: observations equal the ground truth.
    ``sparse_columns``: ``count`` columns (or the explicit ``columns``) are
    replaced by standard normal vectors.
    ``bounded``: columns are normalized to unit norm and each is perturbed by
    a random vector of norm at most ``eps``.
    """

    kind: str = "clean"
    count: int = 0
    columns: Optional[tuple] = None
    eps: float = 0.0
    seed: Optional[int] = None

    @classmethod
    def clean(cls) -> "NoiseModel":
        return cls("clean")

    @classmethod
    def sparse_columns(cls, count: int = 0, seed=None, columns: Optional[Sequence[int]] = None) -> "NoiseModel":
        cols = tuple(sorted(int(c) for c in columns)) if columns is not None else None
        return cls("sparse_columns", count=len(cols) if cols is not None else int(count),
                   columns=cols, seed=seed)

    @classmethod
    def bounded(cls, eps: float, seed=None) -> "NoiseModel":
        if eps < 0:
            raise ValueError("eps must be non-negative")
        return cls("bounded", eps=float(eps), seed=seed)

    def apply(self, matrix):
        """Return ``(clean, observed, noisy_columns)`` for a ground-truth matrix."""
        from . import generators
        a = np.asarray(matrix, dtype=float)
        if self.kind == "clean":
            return a.copy(), a.copy(), frozenset()
        if self.kind == "sparse_columns":
            if self.columns is not None:
                rng = np.random.default_rng(self.seed)
                out = a.copy()
                for j in self.columns:
                    out[:, j] = rng.standard_normal(a.shape[0])
                return a.copy(), out, frozenset(self.columns)
            out, sigma = generators.inject_sparse_noise_columns(a, self.count, self.seed)
            return a.copy(), out, frozenset(sigma)
        if self.kind == "bounded":
            clean = generators.normalize_columns(a)
            return clean, generators.inject_bounded_noise(a, self.eps, self.seed), frozenset()
        raise ValueError(f"unknown noise model {self.kind!r}")


@dataclass
class OracleStats:
    """Running tally of what has been revealed."""

    count: int = 0
    cost: float = 0.0
    phase_counts: Dict[str, int] = field(default_factory=dict)
    full_columns: int = 0
    full_rows: int = 0

    def as_dict(self) -> dict:
        return {"count": self.count, "cost": self.cost, "phase_counts": dict(self.phase_counts),
                "full_columns": self.full_columns, "full_rows": self.full_rows}


class ObservationOracle:
    """Metered gateway to a hidden ``m x n`` matrix.

    Parameters
    ----------
    truth : array_like
        Ground-truth matrix.
    cost : CostModel, optional
        Defaults to one unit per entry.
    noise : NoiseModel, optional
        Defaults to clean observations.
    seed : int or numpy.random.SeedSequence, optional
        Seed of the run's random generator :attr:`rng`.
    """

    def __init__(self, truth, cost: Optional[CostModel] = None, noise: Optional[NoiseModel] = None,
                 seed=None):
        self.cost_model = cost or CostModel.uniform()
        self.noise_model = noise or NoiseModel.clean()
        clean, view, noisy = self.noise_model.apply(truth)
        self._clean = clean
        self._view = view
        self._noisy_columns = noisy
        self.shape = view.shape
        self._costs = self.cost_model.table(self.shape)
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.known = PartialMatrix(self.shape)
        self._count = 0
        self._cost = 0.0
        self._phase = "main"
        self._phase_counts: Dict[str, int] = {}

    @property
    def m(self) -> int:
        return self.shape[0]

    @property
    def n(self) -> int:
        return self.shape[1]

    def set_phase(self, name: str) -> None:
        """Attribute subsequent new observations to ``name``."""
        self._phase = str(name)

    def _check(self, i, j):
        if not (0 <= i < self.shape[0] and 0 <= j < self.shape[1]):
            raise IndexError(f"entry ({i}, {j}) out of range for shape {self.shape}")

    def _record(self, rows, cols):
        if rows.size > 1:
            lin = np.unique(rows * self.shape[1] + cols)
            rows, cols = lin // self.shape[1], lin % self.shape[1]
        fresh = ~self.known._mask[rows, cols]
        if np.any(fresh):
            r, c = rows[fresh], cols[fresh]
            self.known._values[r, c] = self._view[r, c]
            self.known._mask[r, c] = True
            k = int(fresh.sum())
            self._count += k
            self._cost += float(self._costs[r, c].sum())
            self._phase_counts[self._phase] = self._phase_counts.get(self._phase, 0) + k

    def observe(self, i: int, j: int) -> float:
        i, j = int(i), int(j)
        self._check(i, j)
        self._record(np.array([i]), np.array([j]))
        return float(self.known._values[i, j])

    def observe_entries(self, rows, j: int) -> np.ndarray:
        """Observe rows ``rows`` of column ``j``."""
        rows = np.asarray(rows, dtype=int).reshape(-1)
        if rows.size and (rows.min() < 0 or rows.max() >= self.m) or not 0 <= j < self.n:
            raise IndexError("entries out of range")
        self._record(rows, np.full(rows.shape, int(j)))
        return self.known._values[rows, j].copy()

    def observe_column(self, j: int) -> np.ndarray:
        return self.observe_entries(np.arange(self.m), j)

    def observe_row(self, i: int) -> np.ndarray:
        i = int(i)
        if not 0 <= i < self.m:
            raise IndexError(f"row {i} out of range")
        cols = np.arange(self.n)
        self._record(np.full(cols.shape, i), cols)
        return self.known._values[i, :].copy()

    def observe_block(self, rows, cols) -> np.ndarray:
        rows = np.asarray(rows, dtype=int)
        cols = np.asarray(cols, dtype=int)
        rr, cc = np.meshgrid(rows, cols, indexing="ij")
        if rr.size:
            self._check(int(rr.min()), int(cc.min()))
            self._check(int(rr.max()), int(cc.max()))
        self._record(rr.reshape(-1), cc.reshape(-1))
        return self.known._values[np.ix_(rows, cols)].copy()

    def draw_unobserved_uniform(self, j: int, rng=None) -> int:
        """A uniformly random row whose entry in column ``j`` is still hidden.

        The entry itself is not observed by this call.

        Raises
        ------
        ColumnExhausted
            If column ``j`` is fully observed.
        """
        rng = self.rng if rng is None else rng
        rows = self.known.unobserved_rows(j)
        if rows.size == 0:
            raise ColumnExhausted(f"column {j} is fully observed")
        return int(rows[rng.integers(rows.size)])

    def is_column_full(self, j: int) -> bool:
        return bool(self.known._mask[:, j].all())

    @property
    def mask(self) -> np.ndarray:
        return self.known.mask

    @property
    def stats(self) -> OracleStats:
        mask = self.known._mask
        return OracleStats(count=self._count, cost=self._cost, phase_counts=dict(self._phase_counts),
                           full_columns=int(mask.all(axis=0).sum()), full_rows=int(mask.all(axis=1).sum()))

    def harness_view(self):
        """Ground truth for test harnesses only: ``(clean, observed, noisy_columns)``.

        Completion routines must never call this.
        """
        return self._clean.copy(), self._view.copy(), self._noisy_columns
