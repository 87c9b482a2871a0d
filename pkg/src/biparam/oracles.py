"""Brute-force reference implementations used as test oracles.

Nothing here touches prefix sums, cube iterators or the factored operator: each
routine enumerates rectangles (or kernel pairs) directly.  They are slow by
design and meant for grids of roughly 16x16 cells or fewer.
"""

from __future__ import annotations

import itertools

import numpy as np

from .grid import GridFn, ProductGrid


def block_cubes(cells: int, dim: int) -> list[np.ndarray]:
    """Flat cell indices of every grid-aligned cube of a ``cells**dim`` block."""
    out = []
    for k in range(1, cells + 1):
        for start in itertools.product(range(cells - k + 1), repeat=dim):
            members = []
            for offs in itertools.product(range(k), repeat=dim):
                idx = 0
                for s, o in zip(start, offs):
                    idx = idx * cells + (s + o)
                members.append(idx)
            out.append(np.array(sorted(members)))
    return out


def _rects(grid: ProductGrid):
    xs = block_cubes(grid.g1.cells, grid.n1)
    ys = block_cubes(grid.g2.cells, grid.n2)
    for cx in xs:
        for cy in ys:
            yield cx, cy


def ap_constant(weights: np.ndarray, grid: ProductGrid, p: float) -> float:
    best = -np.inf
    for cx, cy in _rects(grid):
        sub = weights[np.ix_(cx, cy)]
        val = np.mean(sub) * np.mean(sub ** (-1.0 / (p - 1.0))) ** (p - 1.0)
        best = max(best, val)
    return float(best)


def a1_constant(weights: np.ndarray, grid: ProductGrid) -> float:
    best = -np.inf
    for cx, cy in _rects(grid):
        sub = weights[np.ix_(cx, cy)]
        best = max(best, np.mean(sub) / np.min(sub))
    return float(best)


def slice_ap_constant(weights: np.ndarray, grid: ProductGrid, p: float, axis: str) -> float:
    w = weights if axis == "y" else weights.T
    ag = grid.g2 if axis == "y" else grid.g1
    best = -np.inf
    for row in w:
        for c in block_cubes(ag.cells, ag.dim):
            sub = row[c]
            if p == 1:
                val = np.mean(sub) / np.min(sub)
            else:
                val = np.mean(sub) * np.mean(sub ** (-1.0 / (p - 1.0))) ** (p - 1.0)
            best = max(best, val)
    return float(best)


def strong_maximal(values: np.ndarray, grid: ProductGrid) -> np.ndarray:
    out = np.zeros(values.shape)
    a = np.abs(values)
    for cx, cy in _rects(grid):
        avg = np.mean(a[np.ix_(cx, cy)])
        sub = out[np.ix_(cx, cy)]
        out[np.ix_(cx, cy)] = np.maximum(sub, avg)
    return out


def slice_maximal(values: np.ndarray, grid: ProductGrid, axis: str) -> np.ndarray:
    a = np.abs(values if axis == "y" else values.T)
    ag = grid.g2 if axis == "y" else grid.g1
    out = np.zeros(a.shape)
    for r in range(a.shape[0]):
        for c in block_cubes(ag.cells, ag.dim):
            out[r, c] = np.maximum(out[r, c], np.mean(a[r, c]))
    return out if axis == "y" else out.T


def _pair_kernel(ag, self_weight: float) -> np.ndarray:
    """Kernel quadrature weights built entry by entry."""
    pts = ag.midpoints
    n = len(pts)
    k = np.empty((n, n))
    for t in range(n):
        for s in range(n):
            if ag.dim == 1:
                k[t, s] = ag.h
            elif t == s:
                k[t, s] = self_weight
            else:
                k[t, s] = ag.h**2 / np.sqrt(np.sum((pts[t] - pts[s]) ** 2))
    return k


def biparam_T(values: np.ndarray, grid: ProductGrid, self_weight1: float = 0.0, self_weight2: float = 0.0):
    """Unfactored double sum ``sum_{s1,s2} K1[t1,s1] K2[t2,s2] g[s1,s2]``."""
    k1 = _pair_kernel(grid.g1, self_weight1)
    k2 = _pair_kernel(grid.g2, self_weight2)
    p1, p2 = values.shape
    out = np.empty(values.shape)
    for t1 in range(p1):
        for t2 in range(p2):
            out[t1, t2] = np.sum(np.outer(k1[t1], k2[t2]) * values)
    return out


def weak_norm_scan(g: GridFn, r: float, w: GridFn | None = None, n_scan: int = 4000) -> float:
    """Dense threshold scan of ``t * w({|g| > t})**(1/r)``.

    Thresholds are a uniform sweep plus points just below every sample
    magnitude, where the sup of a step distribution is approached.
    """
    mags = np.abs(g.values).ravel()
    mass = np.full(mags.shape, g.grid.cell_measure)
    if w is not None:
        mass = mass * w.values.ravel()
    top = mags.max()
    if top == 0:
        return 0.0
    ts = np.concatenate([np.linspace(0, top, n_scan), mags * (1 - 1e-13)])
    best = 0.0
    for t in ts:
        best = max(best, t * np.sum(mass[mags > t]) ** (1.0 / r))
    return float(best)
