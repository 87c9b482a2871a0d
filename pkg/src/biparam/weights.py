"""Weights and their Muckenhoupt constants over the rectangle basis.

All sups range over grid-aligned sub-rectangles ``Q1 x Q2`` of the sampled
rectangle, where ``Qi`` is a grid-aligned cube of the i-th block (an interval
for a 1-D block, a square for a 2-D block).  Averages use the sampled midpoint
values, so constants and operators see exactly the same discrete weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import EvaluationError, InvalidArgument
from .grid import GridFn, ProductGrid, sample


@dataclass(frozen=True, eq=False)
class WeightSpec:
    """Positive weight: ``scale * |x - c1|**a * |y - c2|**b`` or raw grid samples."""

    kind: str
    a: float = 0.0
    b: float = 0.0
    c1: tuple[float, ...] | None = None
    c2: tuple[float, ...] | None = None
    scale: float = 1.0
    samples: GridFn | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("power", "sampled"):
            raise InvalidArgument(f"unknown weight kind {self.kind!r}")
        if self.kind == "sampled":
            if self.samples is None:
                raise InvalidArgument("sampled weight needs grid samples")
            if not np.all(self.samples.values > 0):
                raise InvalidArgument("sampled weight must be positive everywhere")
        elif not self.scale > 0:
            raise InvalidArgument(f"weight scale must be positive, got {self.scale}")

    @property
    def is_constant(self) -> bool:
        if self.kind == "power":
            return self.a == 0 and self.b == 0
        v = self.samples.values
        return bool(np.all(v == v.flat[0]))

    def evaluate(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        if self.kind == "sampled":
            raise EvaluationError("sampled weights can only be read on their own grid")
        out = np.full(np.broadcast_shapes(x.shape[:-1], y.shape[:-1]), self.scale)
        for pts, expo, centre in ((x, self.a, self.c1), (y, self.b, self.c2)):
            if expo == 0:
                continue
            c = np.zeros(pts.shape[-1]) if centre is None else np.asarray(centre, dtype=float)
            r = np.sqrt(np.sum((pts - c) ** 2, axis=-1))
            if expo < 0 and np.any(r == 0):
                raise EvaluationError(f"power weight with exponent {expo} evaluated at its centre")
            out = out * r**expo
        return out

    def on(self, grid: ProductGrid) -> GridFn:
        if self.kind == "sampled":
            if not self.samples.grid.same_as(grid):
                raise InvalidArgument("sampled weight lives on a different grid")
            return self.samples
        return sample(self, grid)

    def scaled(self, lam: float) -> "WeightSpec":
        if self.kind == "power":
            return WeightSpec("power", self.a, self.b, self.c1, self.c2, self.scale * lam)
        return sampled_weight(self.samples.like(self.samples.values * lam))

    def params(self) -> dict:
        if self.kind == "sampled":
            return {"kind": "sampled"}
        d = {"kind": "power", "a": self.a, "b": self.b, "scale": self.scale}
        if self.c1 is not None:
            d["c1"] = list(self.c1)
        if self.c2 is not None:
            d["c2"] = list(self.c2)
        return d

    def to_dict(self) -> dict:
        d = self.params()
        if self.kind == "sampled":
            d["samples"] = self.samples.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "WeightSpec":
        if d.get("kind", "power") == "sampled":
            return sampled_weight(GridFn.from_dict(d["samples"]))
        return power_weight(
            d.get("a", 0.0), d.get("b", 0.0), d.get("c1"), d.get("c2"), scale=d.get("scale", 1.0)
        )


def power_weight(a: float, b: float, c1=None, c2=None, scale: float = 1.0) -> WeightSpec:
    c1 = None if c1 is None else tuple(float(v) for v in np.atleast_1d(c1))
    c2 = None if c2 is None else tuple(float(v) for v in np.atleast_1d(c2))
    return WeightSpec("power", float(a), float(b), c1, c2, float(scale))


def sampled_weight(g: GridFn) -> WeightSpec:
    return WeightSpec("sampled", samples=g)


def unit_weight() -> WeightSpec:
    return power_weight(0.0, 0.0)


def admissible_power(a: float, block_dim: int, p: float) -> bool:
    """``|x|**a`` is in A_p(R^d) iff ``-d < a < d(p-1)``; A_1 needs ``-d < a <= 0``."""
    if p < 1:
        raise InvalidArgument(f"p must be >= 1, got {p}")
    if p == 1:
        return -block_dim < a <= 0
    return -block_dim < a < block_dim * (p - 1)


def weight_admissible(w: WeightSpec, n1: int, n2: int, p: float) -> bool:
    if w.kind == "sampled":
        return True
    return admissible_power(w.a, n1, p) and admissible_power(w.b, n2, p)


def conjugate(p: float) -> float:
    if not p > 1:
        raise InvalidArgument(f"conjugate exponent needs p > 1, got {p}")
    return p / (p - 1.0)


@dataclass
class ApReport:
    constant: float
    p: float
    family: str
    argmax: dict
    localized: bool = True

    def to_dict(self) -> dict:
        return {"constant": self.constant, "p": self.p, "family": self.family, "argmax": self.argmax}


def _values(w, grid: ProductGrid) -> np.ndarray:
    if isinstance(w, GridFn):
        if not w.grid.same_as(grid):
            raise InvalidArgument("weight lives on a different grid")
        v = w.values
    else:
        v = w.on(grid).values
    if not np.all(v > 0):
        raise InvalidArgument("weight must be positive on the grid")
    return v


def _rect_blocks(grid: ProductGrid, field_: np.ndarray, reducer: str) -> Iterator[tuple[int, np.ndarray]]:
    """Reduce ``field_`` over every grid-aligned rectangle, chunked by x-cube side.

    Yields ``(offset, block)``: ``block[r, c]`` belongs to x-cube ``offset + r``
    and y-cube ``c``.  ``reducer`` is ``"sum"`` or ``"min"``.
    """
    g1, g2 = grid.g1, grid.g2
    if reducer == "sum":
        inner = g2.cube_sums(field_, axis=1)
        outer = g1.iter_cube_sums(inner, axis=0)
    else:
        inner = g2.cube_mins(field_, axis=1)
        outer = g1.iter_cube_mins(inner, axis=0)
    offset = 0
    for _, block in outer:
        yield offset, block
        offset += block.shape[0]


def _argmax_dict(grid: ProductGrid, ci: int, cj: int) -> dict:
    x = grid.g1.describe_cube(ci)
    y = grid.g2.describe_cube(cj)
    unwrap = lambda v: v[0] if len(v) == 1 else v  # noqa: E731
    return {"i0": unwrap(x["start"]), "i1": unwrap(x["stop"]), "j0": unwrap(y["start"]), "j1": unwrap(y["stop"])}


def _track(best, offset, vals):
    r, c = np.unravel_index(int(np.argmax(vals)), vals.shape)
    v = float(vals[r, c])
    if best is None or v > best[0]:
        return (v, offset + int(r), int(c))
    return best


def ap_constant_rect(w, grid: ProductGrid, p: float) -> ApReport:
    """[w]_{A_p} over grid-aligned rectangles, via prefix sums of ``w`` and ``w**(1-p')``."""
    if not p > 1:
        raise InvalidArgument(f"ap_constant_rect needs p > 1 (use a1_constant_rect), got {p}")
    W = _values(w, grid)
    S = W ** (-1.0 / (p - 1.0))
    counts2 = grid.g2.cube_counts[None, :]
    best = None
    for (off, sw), (_, ss) in zip(_rect_blocks(grid, W, "sum"), _rect_blocks(grid, S, "sum")):
        k1 = grid.g1.cube_sizes[off]
        n = counts2 * float(k1) ** grid.n1
        best = _track(best, off, (sw / n) * (ss / n) ** (p - 1.0))
    return ApReport(best[0], p, "rectangles", _argmax_dict(grid, best[1], best[2]))


def a1_constant_rect(w, grid: ProductGrid) -> ApReport:
    """Max over grid-aligned rectangles of ``avg(w) / min(w)``."""
    W = _values(w, grid)
    counts2 = grid.g2.cube_counts[None, :]
    best = None
    for (off, sw), (_, mn) in zip(_rect_blocks(grid, W, "sum"), _rect_blocks(grid, W, "min")):
        k1 = grid.g1.cube_sizes[off]
        n = counts2 * float(k1) ** grid.n1
        best = _track(best, off, (sw / n) / mn)
    return ApReport(best[0], 1.0, "rectangles", _argmax_dict(grid, best[1], best[2]))


def ap_constant_slices(w, grid: ProductGrid, p: float, axis: str) -> float:
    """Largest one-block A_p constant among the slices of ``w``.

    ``axis`` names the active block: ``"y"`` treats each ``w^x = w(x, .)`` as a
    weight on the y-cube (sup over grid-aligned y-cubes and all frozen x), and
    ``"x"`` does the same for ``w^y``.
    """
    if p < 1:
        raise InvalidArgument(f"p must be >= 1, got {p}")
    W = _values(w, grid)
    ag = grid.axis_grid(axis)
    ax = 0 if axis == "x" else 1
    shape = (-1, 1) if ax == 0 else (1, -1)
    counts = ag.cube_counts.reshape(shape)
    avg_w = ag.cube_sums(W, axis=ax) / counts
    if p == 1:
        vals = avg_w / ag.cube_mins(W, axis=ax)
    else:
        avg_s = ag.cube_sums(W ** (-1.0 / (p - 1.0)), axis=ax) / counts
        vals = avg_w * avg_s ** (p - 1.0)
    return float(vals.max())


def dual_weight_constant(w, grid: ProductGrid, p: float) -> float:
    """[w**(1-p')]_{A_{p'}} on the grid rectangle family."""
    if not p > 1:
        raise InvalidArgument(f"p must be > 1, got {p}")
    q = conjugate(p)
    sigma = GridFn(grid, _values(w, grid) ** (1.0 - q))
    return ap_constant_rect(sigma, grid, q).constant
