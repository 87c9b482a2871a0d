"""Slice, strong and dual maximal operators on product grids.

Every sup ranges over grid-aligned rectangles (or cubes, for slice operators)
contained in the sampled rectangle ``R``.  For functions supported in ``R`` this
is the same as the sup over all rectangles meeting ``R``: intersecting a
rectangle with ``R`` never lowers the average.  All maximal functions are
uncentred.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .grid import GridFn, ProductGrid, lp_norm, weak_lp_norm
from .weights import WeightSpec, ap_constant_rect, conjugate

OPS = ("strong", "dual", "slice_x", "slice_y", "iterated")


def _weight_field(w, grid: ProductGrid) -> GridFn:
    wf = w if isinstance(w, GridFn) else w.on(grid)
    if not wf.grid.same_as(grid):
        raise InvalidArgument("weight lives on a different grid")
    return wf


def hl_maximal_slice(g: GridFn, axis: str) -> GridFn:
    """Hardy-Littlewood maximal function in one block, the other coordinate frozen."""
    ag = g.grid.axis_grid(axis)
    ax = 0 if axis == "x" else 1
    avgs = ag.cube_avgs(np.abs(g.values), axis=ax)
    return g.like(ag.containing_max(avgs, axis=ax))


def strong_maximal(g: GridFn) -> GridFn:
    """Strong maximal function over the rectangle basis.

    Rectangle averages come from summed-area tables and are processed one
    x-cube side at a time, which keeps memory at ``O(C1 * P2)``.
    """
    grid = g.grid
    g1, g2 = grid.g1, grid.g2
    y_sums = g2.cube_sums(np.abs(g.values), axis=1)
    counts2 = g2.cube_counts[None, :]
    parts = []
    for k1, block in g1.iter_cube_sums(y_sums, axis=0):
        avg = block / (counts2 * float(k1) ** grid.n1)
        parts.append(g2.containing_max(avg, axis=1))
    return g.like(g1.containing_max(np.concatenate(parts, axis=0), axis=0))


def dual_maximal(g: GridFn, w) -> GridFn:
    """``M'(g) = M(g w) / w``."""
    wf = _weight_field(w, g.grid)
    if not np.all(wf.values > 0):
        raise InvalidArgument("dual maximal operator needs a positive weight")
    return g.like(strong_maximal(g.like(g.values * wf.values)).values / wf.values)


def apply_op(op: str, g: GridFn, w=None) -> GridFn:
    if op == "strong":
        return strong_maximal(g)
    if op == "dual":
        return dual_maximal(g, w)
    if op == "slice_x":
        return hl_maximal_slice(g, "x")
    if op == "slice_y":
        return hl_maximal_slice(g, "y")
    if op == "iterated":
        return hl_maximal_slice(hl_maximal_slice(g, "x"), "y")
    raise InvalidArgument(f"unknown operator {op!r}; expected one of {OPS}")


@dataclass
class TestFamily:
    """Deterministic set of nonnegative probe functions for norm estimation.

    Members: single-cell indicators on a coarse lattice (corners and centre of
    each block), indicators of rectangles anchored at the lower corner whose
    sides are the fractions ``2**-j`` (``j = 0..levels``) of the block sides, the
    same rectangles multiplied by the dual weight ``w**(1-p')`` (the extremal
    shape for weighted maximal bounds), and ``n_random`` seeded uniform random
    functions.  Fractional sides keep the family comparable across resolutions.
    """

    __test__ = False  # not a pytest class

    cell_cap: int = 4
    rect_cap: int = 9
    n_random: int = 2
    seed: int = 0
    dual_weighted: bool = True
    levels: int = 5

    def members(self, grid: ProductGrid, op: str = "strong", p: float = 2.0, w=None) -> list[tuple[str, GridFn]]:
        out = []
        cells = [(i, j) for i in _probe_cells(grid.g1) for j in _probe_cells(grid.g2)]
        for i, j in _spread(cells, self.cell_cap):
            v = np.zeros(grid.shape)
            v[i, j] = 1.0
            out.append((f"cell[{i},{j}]", GridFn(grid, v)))
        rects = [(a, b) for a in range(self.levels + 1) for b in range(self.levels + 1)]
        sigma = None
        if self.dual_weighted and w is not None and op != "dual" and p > 1:
            sigma = _weight_field(w, grid).values ** (1.0 - conjugate(p))
        seen = set()
        for a, b in _spread(rects, self.rect_cap):
            k1, k2 = _fraction_cells(grid.g1.cells, a), _fraction_cells(grid.g2.cells, b)
            if (k1, k2) in seen:
                continue
            seen.add((k1, k2))
            v = np.outer(_corner_indicator(grid.g1, k1), _corner_indicator(grid.g2, k2))
            out.append((f"rect[2^-{a},2^-{b}]", GridFn(grid, v)))
            if sigma is not None:
                out.append((f"sigma_rect[2^-{a},2^-{b}]", GridFn(grid, v * sigma)))
        rng = np.random.default_rng(self.seed)
        for k in range(self.n_random):
            out.append((f"random[{self.seed}:{k}]", GridFn(grid, rng.random(grid.shape))))
        return out

    def to_dict(self) -> dict:
        return {
            "cell_cap": self.cell_cap,
            "rect_cap": self.rect_cap,
            "n_random": self.n_random,
            "seed": self.seed,
            "dual_weighted": self.dual_weighted,
            "levels": self.levels,
        }


def _probe_cells(ag) -> list[int]:
    n = ag.cells
    picks = sorted({0, n // 2, n - 1})
    return [int(np.ravel_multi_index((c,) * ag.dim, ag.block_shape)) for c in picks]


def _fraction_cells(n: int, j: int) -> int:
    return max(1, int(round(n / 2**j)))


def _spread(items: list, cap: int) -> list:
    if cap <= 0:
        return []
    if len(items) <= cap:
        return items
    idx = np.unique(np.round(np.linspace(0, len(items) - 1, cap)).astype(int))
    return [items[i] for i in idx]


def _corner_indicator(ag, k: int) -> np.ndarray:
    block = np.zeros(ag.block_shape)
    block[tuple(slice(0, k) for _ in range(ag.dim))] = 1.0
    return block.ravel()


@dataclass
class OpNormEstimate:
    value: float
    p: float
    weight_constant: float
    witness: str
    op: str = "strong"
    weak: bool = False
    ratios: dict = field(default_factory=dict, repr=False)
    localized: bool = True
    lower_bound: bool = True

    def to_dict(self) -> dict:
        return {
            "op": self.op,
            "value": self.value,
            "p": self.p,
            "weight_constant": self.weight_constant,
            "witness": self.witness,
            "weak": self.weak,
            "localized": self.localized,
            "lower_bound": self.lower_bound,
        }


def estimate_op_norm(
    op: str,
    p: float,
    w,
    grid: ProductGrid,
    family: TestFamily | list | None = None,
    weak: bool = False,
) -> OpNormEstimate:
    """Largest ``||op g||_{L^p(w)} / ||g||_{L^p(w)}`` over a probe family.

    This is a lower bound on the localized operator norm.  With ``weak=True``
    the numerator is the weak ``L^{p,inf}(w)`` quasi-norm.
    """
    if not p > 1:
        raise InvalidArgument(f"operator norms are estimated for p > 1, got {p}")
    if op not in OPS:
        raise InvalidArgument(f"unknown operator {op!r}; expected one of {OPS}")
    wf = _weight_field(w if w is not None else WeightSpec("power"), grid)
    if family is None:
        family = TestFamily()
    members = family.members(grid, op, p, wf) if isinstance(family, TestFamily) else list(family)
    if not members:
        raise InvalidArgument("operator-norm probe family is empty")
    ratios = {}
    for name, g in members:
        den = lp_norm(g, p, wf)
        if den == 0:
            continue
        mg = apply_op(op, g, wf)
        num = weak_lp_norm(mg, p, wf) if weak else lp_norm(mg, p, wf)
        ratios[name] = num / den
    if not ratios:
        raise InvalidArgument("every probe function has zero norm")
    witness = max(ratios, key=lambda k: ratios[k])
    wc = ap_constant_rect(wf, grid, p).constant
    return OpNormEstimate(ratios[witness], p, wc, witness, op, weak, ratios)
