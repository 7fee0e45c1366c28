"""Plain CSV readers and writers for matrices, masks and cost tables."""
from __future__ import annotations

import numpy as np


def read_matrix_csv(path) -> np.ndarray:
    """Read a numeric CSV with one matrix row per line and no header."""
    a = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{path}: matrix contains non-finite values")
    return a


def write_matrix_csv(path, matrix) -> None:
    np.savetxt(path, np.atleast_2d(np.asarray(matrix, dtype=float)), delimiter=",", fmt="%.17g")


def read_mask_csv(path) -> np.ndarray:
    a = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    if not np.all((a == 0) | (a == 1)):
        raise ValueError(f"{path}: mask entries must be 0 or 1")
    return a.astype(bool)


def write_mask_csv(path, mask) -> None:
    np.savetxt(path, np.atleast_2d(np.asarray(mask)).astype(int), delimiter=",", fmt="%d")


def read_costs_csv(path, shape=None) -> np.ndarray:
    """Read a cost table: a single row (per-column costs) or a full ``m x n`` table."""
    a = read_matrix_csv(path)
    if np.any(a < 0):
        raise ValueError(f"{path}: costs must be non-negative")
    if shape is not None and a.shape != tuple(shape) and not (a.shape[0] == 1 and a.shape[1] == shape[1]):
        raise ValueError(f"{path}: cost table shape {a.shape} does not fit matrix shape {tuple(shape)}")
    return a
