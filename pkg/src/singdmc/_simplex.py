"""Grids and local search on the probability simplex."""
from __future__ import annotations

from math import comb
from typing import Callable

import numpy as np

from .errors import DimensionTooLarge

MAX_DIM = 6


def grid_size(dim: int, resolution: int) -> int:
    return comb(resolution + dim - 1, dim - 1)


def integer_compositions(total: int, parts: int) -> np.ndarray:
    """Rows are all nonnegative integer vectors of length ``parts`` summing to ``total``."""
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    blocks = []
    for head in range(total, -1, -1):
        tail = integer_compositions(total - head, parts - 1)
        blocks.append(np.hstack([np.full((tail.shape[0], 1), head, dtype=np.int64), tail]))
    return np.vstack(blocks)


def simplex_grid(dim: int, resolution: int) -> np.ndarray:
    """All points of the simplex whose coordinates are multiples of ``1/resolution``."""
    if dim > MAX_DIM:
        raise DimensionTooLarge(f"simplex search supports |X| <= {MAX_DIM}, got {dim}")
    return integer_compositions(resolution, dim) / resolution


def tangent_basis(dim: int) -> np.ndarray:
    """Orthonormal basis (rows) of the hyperplane ``sum(v) = 0``."""
    a = np.eye(dim) - 1.0 / dim
    u, s, _ = np.linalg.svd(a)
    return u[:, :dim - 1].T


def ball_net(center: np.ndarray, radius: float, per_axis: int) -> np.ndarray:
    """Regular net of simplex points within L2 distance ``radius`` of ``center``."""
    dim = center.size
    basis = tangent_basis(dim)
    ticks = np.linspace(-radius, radius, per_axis)
    mesh = np.stack(np.meshgrid(*([ticks] * (dim - 1)), indexing="ij"), -1).reshape(-1, dim - 1)
    mesh = mesh[np.linalg.norm(mesh, axis=1) <= radius * (1 + 1e-12)]
    pts = center + mesh @ basis
    pts = pts[np.all(pts >= 0, axis=1)]
    return pts / pts.sum(axis=1, keepdims=True)


def pattern_ascent(f: Callable[[np.ndarray], float], p0: np.ndarray, step: float,
                   min_step: float = 1e-10,
                   feasible: Callable[[np.ndarray], bool] | None = None,
                   max_evals: int = 200_000) -> tuple[np.ndarray, float]:
    """Coordinate-pair mass-transfer ascent on the simplex with step halving."""
    p = np.array(p0, dtype=np.float64)
    best = f(p)
    dim = p.size
    evals = 0
    while step >= min_step and evals < max_evals:
        improved = False
        for i in range(dim):
            for j in range(dim):
                if i == j:
                    continue
                move = min(step, p[j])
                if move <= 0:
                    continue
                cand = p.copy()
                cand[i] += move
                cand[j] -= move
                if feasible is not None and not feasible(cand):
                    continue
                val = f(cand)
                evals += 1
                if val > best:
                    p, best, improved = cand, val, True
        if not improved:
            step *= 0.5
    return p, best
