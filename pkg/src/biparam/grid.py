"""Cubes, product rectangles, midpoint grids and grid functions.

A rectangle ``R = I1 x I2`` is the product of an ``n1``-dimensional cube and an
``n2``-dimensional cube (``n1, n2`` in {1, 2}).  Each cube is split into
``N**d`` congruent cells and every sampled quantity lives at the cell
midpoints.  Grid functions are stored as 2-D arrays of shape ``(P1, P2)`` where
``Pi = Ni**ni``; a 2-D block is flattened row-major.

Besides sampling and quadrature, :class:`AxisGrid` owns the "grid-aligned cube"
machinery that every sup over the rectangle basis is built on: cube sums via
prefix sums, cube minima, and the max over all cubes containing a cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterator

import numpy as np

from .errors import InvalidArgument, SamplingError

SUPPORTED_DIMS = (1, 2)


@dataclass(frozen=True)
class Cube:
    dim: int
    lower: tuple[float, ...]
    side: float

    def __post_init__(self):
        if self.dim not in SUPPORTED_DIMS:
            raise InvalidArgument(f"cube dimension must be 1 or 2, got {self.dim}")
        if not self.side > 0:
            raise InvalidArgument(f"cube side must be positive, got {self.side}")
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        if len(lower) != self.dim:
            raise InvalidArgument(f"lower corner {lower} does not have length {self.dim}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "side", float(self.side))

    @property
    def measure(self) -> float:
        return self.side**self.dim

    def scaled(self, s: float) -> "Cube":
        return Cube(self.dim, tuple(s * v for v in self.lower), s * self.side)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "lower": list(self.lower), "side": self.side}

    @classmethod
    def from_dict(cls, d: dict) -> "Cube":
        return cls(int(d["dim"]), tuple(d["lower"]), float(d["side"]))


def unit_cube(dim: int, side: float = 1.0) -> Cube:
    return Cube(dim, (0.0,) * dim, side)


@dataclass(frozen=True)
class Rect:
    i1: Cube
    i2: Cube

    @property
    def n1(self) -> int:
        return self.i1.dim

    @property
    def n2(self) -> int:
        return self.i2.dim

    @property
    def measure(self) -> float:
        return self.i1.measure * self.i2.measure

    @property
    def geometry(self) -> float:
        """ell(I1) * ell(I2)."""
        return self.i1.side * self.i2.side

    def to_dict(self) -> dict:
        return {"i1": self.i1.to_dict(), "i2": self.i2.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "Rect":
        return cls(Cube.from_dict(d["i1"]), Cube.from_dict(d["i2"]))


def unit_rect(n1: int = 1, n2: int = 1, side1: float = 1.0, side2: float = 1.0) -> Rect:
    return Rect(unit_cube(n1, side1), unit_cube(n2, side2))


def _sliding_max(a: np.ndarray, k: int, axis: int) -> np.ndarray:
    """Max over windows of length ``k`` along ``axis``; output shrinks by k-1."""
    if k == 1:
        return a
    win = np.lib.stride_tricks.sliding_window_view(a, k, axis=axis)
    return win.max(axis=-1)


@dataclass(frozen=True, eq=False)
class AxisGrid:
    """Midpoint grid of one cube block with ``cells`` cells per side."""

    cube: Cube
    cells: int

    def __post_init__(self):
        if int(self.cells) != self.cells or self.cells < 1:
            raise InvalidArgument(f"cells per side must be a positive integer, got {self.cells}")
        object.__setattr__(self, "cells", int(self.cells))

    @property
    def dim(self) -> int:
        return self.cube.dim

    @property
    def h(self) -> float:
        return self.cube.side / self.cells

    @property
    def size(self) -> int:
        return self.cells**self.dim

    @property
    def cell_measure(self) -> float:
        return self.h**self.dim

    @property
    def block_shape(self) -> tuple[int, ...]:
        return (self.cells,) * self.dim

    @cached_property
    def centers_1d(self) -> np.ndarray:
        return (np.arange(self.cells) + 0.5) * self.h

    @cached_property
    def midpoints(self) -> np.ndarray:
        """Cell centres, shape ``(size, dim)``, row-major over the block."""
        axes = [lo + self.centers_1d for lo in self.cube.lower]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @cached_property
    def vertices(self) -> np.ndarray:
        """Cell corners, shape ``((cells+1)**dim, dim)``, row-major."""
        ticks = np.arange(self.cells + 1) * self.h
        mesh = np.meshgrid(*[lo + ticks for lo in self.cube.lower], indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    # -- grid-aligned cubes ---------------------------------------------------
    # Cubes are enumerated by side k = 1..N (in cells), then by start position in
    # row-major order.  Every method below uses this canonical ordering.

    @cached_property
    def cube_sizes(self) -> np.ndarray:
        n = self.cells
        return np.concatenate([np.full((n - k + 1) ** self.dim, k) for k in range(1, n + 1)])

    @cached_property
    def cube_starts(self) -> np.ndarray:
        n = self.cells
        out = []
        for k in range(1, n + 1):
            m = n - k + 1
            grids = np.meshgrid(*([np.arange(m)] * self.dim), indexing="ij")
            out.append(np.stack([g.ravel() for g in grids], axis=-1))
        return np.concatenate(out)

    @property
    def n_cubes(self) -> int:
        return len(self.cube_sizes)

    @cached_property
    def cube_counts(self) -> np.ndarray:
        """Number of cells in each grid-aligned cube."""
        return self.cube_sizes.astype(float) ** self.dim

    def _to_block(self, arr: np.ndarray, axis: int) -> tuple[np.ndarray, tuple]:
        a = np.moveaxis(np.asarray(arr, dtype=float), axis, 0)
        rest = a.shape[1:]
        if a.shape[0] != self.size:
            raise InvalidArgument(f"axis {axis} has length {a.shape[0]}, expected {self.size}")
        return a.reshape(self.block_shape + rest), rest

    @staticmethod
    def _from_block(b: np.ndarray, dim: int, axis: int) -> np.ndarray:
        lead = int(np.prod(b.shape[:dim]))
        return np.moveaxis(b.reshape((lead,) + b.shape[dim:]), 0, axis)

    def iter_cube_sums(self, arr: np.ndarray, axis: int = 0) -> Iterator[tuple[int, np.ndarray]]:
        """Yield ``(k, sums)`` where ``sums`` holds the sums over all side-``k`` cubes.

        Computed from a zero-padded summed-area table, so each cube sum costs
        ``2**dim`` lookups.
        """
        b, rest = self._to_block(arr, axis)
        s = b
        for ax in range(self.dim):
            s = np.cumsum(s, axis=ax)
        pad = [(1, 0)] * self.dim + [(0, 0)] * len(rest)
        s = np.pad(s, pad)
        n = self.cells
        for k in range(1, n + 1):
            if self.dim == 1:
                sums = s[k:] - s[: n + 1 - k]
            else:
                m = n + 1 - k
                sums = s[k:, k:] - s[:m, k:] - s[k:, :m] + s[:m, :m]
            yield k, self._from_block(sums, self.dim, axis)

    def cube_sums(self, arr: np.ndarray, axis: int = 0) -> np.ndarray:
        return np.concatenate([s for _, s in self.iter_cube_sums(arr, axis)], axis=axis)

    def cube_avgs(self, arr: np.ndarray, axis: int = 0) -> np.ndarray:
        sums = self.cube_sums(arr, axis)
        shape = [1] * sums.ndim
        shape[axis] = -1
        return sums / self.cube_counts.reshape(shape)

    def iter_cube_mins(self, arr: np.ndarray, axis: int = 0) -> Iterator[tuple[int, np.ndarray]]:
        """Yield ``(k, mins)`` for side-``k`` cubes, built incrementally from side k-1."""
        m, _ = self._to_block(arr, axis)
        for k in range(1, self.cells + 1):
            if k > 1:
                if self.dim == 1:
                    m = np.minimum(m[:-1], m[1:])
                else:
                    m = np.minimum(np.minimum(m[:-1, :-1], m[1:, :-1]), np.minimum(m[:-1, 1:], m[1:, 1:]))
            yield k, self._from_block(m, self.dim, axis)

    def cube_mins(self, arr: np.ndarray, axis: int = 0) -> np.ndarray:
        return np.concatenate([s for _, s in self.iter_cube_mins(arr, axis)], axis=axis)

    def containing_max(self, vals: np.ndarray, axis: int = 0) -> np.ndarray:
        """Map per-cube values to per-cell values: max over the cubes containing each cell."""
        v = np.moveaxis(np.asarray(vals, dtype=float), axis, 0)
        if v.shape[0] != self.n_cubes:
            raise InvalidArgument(f"expected {self.n_cubes} cube values, got {v.shape[0]}")
        rest = v.shape[1:]
        n = self.cells
        if self.dim == 1:
            # dense[a, n - b] = value of the interval [a, b); cell p lies in it iff
            # a <= p < b, i.e. a <= p and n - b <= n - 1 - p.
            dense = np.full((n, n) + rest, -np.inf)
            a = self.cube_starts[:, 0]
            dense[a, n - a - self.cube_sizes] = v
            np.maximum.accumulate(dense, axis=1, out=dense)
            best = np.maximum.accumulate(dense[:, ::-1], axis=0)
            out = best[np.arange(n), np.arange(n)]
        else:
            out = np.full((n, n) + rest, -np.inf)
            offset = 0
            for k in range(1, n + 1):
                m = n - k + 1
                block = v[offset : offset + m * m].reshape((m, m) + rest)
                offset += m * m
                pad = [(k - 1, k - 1), (k - 1, k - 1)] + [(0, 0)] * len(rest)
                block = np.pad(block, pad, constant_values=-np.inf)
                block = _sliding_max(_sliding_max(block, k, 0), k, 1)
                np.maximum(out, block, out=out)
        return self._from_block(out, self.dim, axis)

    def cube_cells(self, c: int) -> np.ndarray:
        """Flat cell indices of cube number ``c``."""
        k = int(self.cube_sizes[c])
        start = self.cube_starts[c]
        ranges = [np.arange(s, s + k) for s in start]
        mesh = np.meshgrid(*ranges, indexing="ij")
        return np.ravel_multi_index([m.ravel() for m in mesh], self.block_shape)

    def describe_cube(self, c: int) -> dict:
        k = int(self.cube_sizes[c])
        start = [int(s) for s in self.cube_starts[c]]
        return {"start": start, "stop": [s + k for s in start]}


@dataclass(frozen=True, eq=False)
class ProductGrid:
    rect: Rect
    g1: AxisGrid
    g2: AxisGrid

    @property
    def cell_measure(self) -> float:
        return self.g1.cell_measure * self.g2.cell_measure

    @property
    def shape(self) -> tuple[int, int]:
        return (self.g1.size, self.g2.size)

    @property
    def cells(self) -> tuple[int, int]:
        return (self.g1.cells, self.g2.cells)

    @property
    def n1(self) -> int:
        return self.rect.n1

    @property
    def n2(self) -> int:
        return self.rect.n2

    def axis_grid(self, axis: str) -> AxisGrid:
        return {"x": self.g1, "y": self.g2}[_check_axis(axis)]

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """Broadcastable midpoint arrays ``x`` of shape (P1,1,n1) and ``y`` of shape (1,P2,n2)."""
        return self.g1.midpoints[:, None, :], self.g2.midpoints[None, :, :]

    def same_as(self, other: "ProductGrid") -> bool:
        return self is other or (self.rect == other.rect and self.cells == other.cells)

    def metadata(self) -> dict:
        return {"n1": self.n1, "n2": self.n2, "N1": self.g1.cells, "N2": self.g2.cells}

    def to_dict(self) -> dict:
        return {"rect": self.rect.to_dict(), "cells": list(self.cells)}

    @classmethod
    def from_dict(cls, d: dict) -> "ProductGrid":
        return build_product_grid(Rect.from_dict(d["rect"]), *d["cells"])


def _check_axis(axis: str) -> str:
    if axis not in ("x", "y"):
        raise InvalidArgument(f"axis must be 'x' or 'y', got {axis!r}")
    return axis


def build_product_grid(rect: Rect, n1_cells: int, n2_cells: int) -> ProductGrid:
    for n in (n1_cells, n2_cells):
        if int(n) != n or n < 2:
            raise InvalidArgument(f"cell counts must be integers >= 2, got {n}")
    return ProductGrid(rect, AxisGrid(rect.i1, n1_cells), AxisGrid(rect.i2, n2_cells))


@dataclass(frozen=True, eq=False)
class GridFn:
    grid: ProductGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            try:
                v = np.broadcast_to(v, self.grid.shape).copy()
            except ValueError:
                raise InvalidArgument(f"values have shape {v.shape}, grid expects {self.grid.shape}") from None
        if not np.all(np.isfinite(v)):
            bad = tuple(int(i) for i in np.argwhere(~np.isfinite(v))[0])
            raise SamplingError(f"non-finite grid value at index {bad}", bad)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def like(self, values) -> "GridFn":
        return GridFn(self.grid, values)

    def abs(self) -> "GridFn":
        return GridFn(self.grid, np.abs(self.values))

    def to_dict(self) -> dict:
        return {**self.grid.to_dict(), "values": self.values.ravel().tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "GridFn":
        grid = ProductGrid.from_dict(d)
        return cls(grid, np.asarray(d["values"], dtype=float).reshape(grid.shape))


def constant(grid: ProductGrid, c: float) -> GridFn:
    return GridFn(grid, np.full(grid.shape, float(c)))


def sample(f, grid: ProductGrid) -> GridFn:
    """Evaluate ``f`` at every midpoint of ``grid``.

    ``f`` is either an object with an ``evaluate(x, y)`` method (test functions,
    weights) or a plain callable ``f(x, y)``; it receives ``x`` of shape
    ``(P1, 1, n1)`` and ``y`` of shape ``(1, P2, n2)`` and must return something
    broadcastable to ``(P1, P2)``.
    """
    fn: Callable = f.evaluate if hasattr(f, "evaluate") else f
    x, y = grid.points()
    with np.errstate(all="ignore"):
        vals = np.broadcast_to(np.asarray(fn(x, y), dtype=float), grid.shape).copy()
    bad = ~np.isfinite(vals)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise SamplingError(f"function is not finite at grid index {idx}", idx)
    return GridFn(grid, vals)


def _check_same(g: GridFn, w: GridFn | None) -> None:
    if w is not None and not g.grid.same_as(w.grid):
        raise InvalidArgument("grid functions live on different grids")


def integrate(g: GridFn, w: GridFn | None = None) -> float:
    """Midpoint-rule integral of ``g * w`` over the rectangle."""
    _check_same(g, w)
    vals = g.values if w is None else g.values * w.values
    return float(np.sum(vals) * g.grid.cell_measure)


def lp_norm(g: GridFn, p: float, w: GridFn | None = None) -> float:
    if not p >= 1:
        raise InvalidArgument(f"p must be >= 1, got {p}")
    return integrate(g.like(np.abs(g.values) ** p), w) ** (1.0 / p)


def weak_lp_norm(g: GridFn, r: float, w: GridFn | None = None) -> float:
    """Weak L^{r,inf} quasi-norm ``sup_t t * w({|g| > t})**(1/r)``.

    On a grid the sup is attained as ``t`` increases to a sample magnitude
    ``v``, where it equals ``v * w({|g| >= v})**(1/r)``.
    """
    if not r > 0:
        raise InvalidArgument(f"r must be positive, got {r}")
    _check_same(g, w)
    mags = np.abs(g.values).ravel()
    mass = np.full(mags.shape, g.grid.cell_measure) if w is None else w.values.ravel() * g.grid.cell_measure
    order = np.argsort(-mags, kind="stable")
    # Within a tie group the partial mass is below the group's full mass, so the
    # running max over all prefixes equals the max over complete level sets.
    level_mass = np.cumsum(mass[order])
    return float(np.max(mags[order] * level_mass ** (1.0 / r)))
