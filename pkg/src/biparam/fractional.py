"""Order-1 Riesz potentials along one block, and the biparametric operator T.

``T = I1_x o I1_y`` where ``I1`` in a ``d``-dimensional block has kernel
``|u|**(1-d)``.  For ``d = 1`` the kernel is identically one, so ``I1`` is the
plain slice integral.  For ``d = 2`` the kernel ``1/|u|`` is singular; off the
diagonal we use the midpoint rule and the self-cell weight comes from
:func:`self_cell_weight`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidArgument
from .grid import AxisGrid, GridFn
from .maximal import hl_maximal_slice

MAX_DEPTH = 8
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(4)
# Integral of 1/|u| over the unit square [0,1]^2 with the singularity at a corner.
_CORNER_UNIT = 2.0 * np.log1p(np.sqrt(2.0))


@dataclass(frozen=True)
class KernelQuadRule:
    self_cell_depth: int = 6
    block_dim: int = 2

    def __post_init__(self):
        if not 0 <= self.self_cell_depth <= MAX_DEPTH:
            raise InvalidArgument(f"self_cell_depth must be in [0, {MAX_DEPTH}], got {self.self_cell_depth}")
        if self.block_dim not in (1, 2):
            raise InvalidArgument(f"block_dim must be 1 or 2, got {self.block_dim}")


def _gauss_square(x0: float, y0: float, s: float) -> float:
    nodes = (_GL_NODES + 1.0) * 0.5 * s
    xx, yy = np.meshgrid(x0 + nodes, y0 + nodes, indexing="ij")
    return float(np.sum(np.outer(_GL_WEIGHTS, _GL_WEIGHTS) * (0.5 * s) ** 2 / np.hypot(xx, yy)))


def self_cell_weight(h: float, depth: int) -> float:
    """Integral of ``1/|u|`` over a square cell of side ``h`` centred at the target.

    The cell splits into four quadrants with the target at a corner.  Each
    quadrant is subdivided 4-way ``depth`` times: the three subsquares away from
    the target get a 4x4 Gauss-Legendre rule, and the innermost corner square
    is closed with its exact value ``2 s log(1 + sqrt 2)``.
    """
    if not 0 <= depth <= MAX_DEPTH:
        raise InvalidArgument(f"depth must be in [0, {MAX_DEPTH}], got {depth}")
    s = 0.5 * h
    total = 0.0
    for _ in range(depth):
        t = 0.5 * s
        total += _gauss_square(t, 0.0, t) + _gauss_square(0.0, t, t) + _gauss_square(t, t, t)
        s = t
    total += _CORNER_UNIT * s
    return 4.0 * total


@lru_cache(maxsize=32)
def _kernel(dim: int, cells: int, h: float, depth: int) -> np.ndarray:
    centers = (np.arange(cells) + 0.5) * h
    mesh = np.meshgrid(*([centers] * dim), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    dist = np.sqrt(np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1))
    np.fill_diagonal(dist, 1.0)
    k = h**2 / dist
    np.fill_diagonal(k, self_cell_weight(h, depth))
    k.setflags(write=False)
    return k


def kernel_matrix(ag: AxisGrid, rule: KernelQuadRule | None = None) -> np.ndarray:
    """Quadrature matrix ``K`` with ``(I1 g)(t) ~ sum_s K[t, s] g(s)`` on one block."""
    if ag.dim == 1:
        return np.full((ag.size, ag.size), ag.h)
    depth = (rule or KernelQuadRule()).self_cell_depth
    return _kernel(ag.dim, ag.cells, ag.h, depth)


@lru_cache(maxsize=32)
def _vertex_kernel(dim: int, cells: int, h: float) -> np.ndarray:
    ticks = np.arange(cells + 1) * h
    centers = (np.arange(cells) + 0.5) * h
    vm = np.meshgrid(*([ticks] * dim), indexing="ij")
    cm = np.meshgrid(*([centers] * dim), indexing="ij")
    vp = np.stack([m.ravel() for m in vm], axis=-1)
    cp = np.stack([m.ravel() for m in cm], axis=-1)
    dist = np.sqrt(np.sum((vp[:, None, :] - cp[None, :, :]) ** 2, axis=-1))
    touching = dist < 0.75 * h
    k = h**2 / dist
    k[touching] = _CORNER_UNIT * h
    k.setflags(write=False)
    return k


def vertex_kernel(ag: AxisGrid) -> np.ndarray:
    """Quadrature of ``I1`` evaluated at cell corners, shape ``(vertices, cells)``.

    Cells touching the target corner get the exact value ``2 h log(1 + sqrt 2)``.
    """
    n_v = (ag.cells + 1) ** ag.dim
    if ag.dim == 1:
        return np.full((n_v, ag.size), ag.h)
    return _vertex_kernel(ag.dim, ag.cells, ag.h)


def riesz_block(values: np.ndarray, ag: AxisGrid, axis: int, rule: KernelQuadRule | None = None) -> np.ndarray:
    """Apply the block Riesz potential along ``axis`` of a raw array."""
    if ag.dim == 1:
        s = np.sum(values, axis=axis, keepdims=True) * ag.h
        return np.broadcast_to(s, values.shape).copy()
    k = kernel_matrix(ag, rule)
    return np.moveaxis(np.tensordot(k, np.moveaxis(values, axis, 0), axes=(1, 0)), 0, axis)


def _rule_for(ag: AxisGrid, rule: KernelQuadRule | None) -> KernelQuadRule | None:
    if rule is not None and ag.dim == 2 and rule.block_dim != 2:
        raise InvalidArgument(f"rule built for block_dim {rule.block_dim} used on a 2-D block")
    return rule


def riesz_slice(g: GridFn, axis: str, rule: KernelQuadRule | None = None) -> GridFn:
    """``I1`` in the ``axis`` block applied to each slice of ``g`` restricted to R."""
    ag = g.grid.axis_grid(axis)
    return g.like(riesz_block(g.values, ag, 0 if axis == "x" else 1, _rule_for(ag, rule)))


def biparam_T(g: GridFn, rule1: KernelQuadRule | None = None, rule2: KernelQuadRule | None = None) -> GridFn:
    """Multiparametric fractional operator in factored form ``I1_x(I1_y g)``."""
    return riesz_slice(riesz_slice(g, "y", rule2), "x", rule1)


def check_maxfrac_domination(g: GridFn, axis: str, rule: KernelQuadRule | None = None) -> float:
    """Smallest ``C`` with ``I1(g) <= C * side * M(g)`` at every midpoint of the slices.

    Midpoints where ``M(g)`` vanishes carry ``g = 0`` on the whole slice and are
    skipped.
    """
    if np.any(g.values < 0):
        raise InvalidArgument("maximal/fractional domination is stated for g >= 0")
    ag = g.grid.axis_grid(axis)
    frac = riesz_slice(g, axis, rule).values
    mx = hl_maximal_slice(g, axis).values
    live = mx > 0
    if not live.any():
        return 0.0
    return float(np.max(frac[live] / (ag.cube.side * mx[live])))
