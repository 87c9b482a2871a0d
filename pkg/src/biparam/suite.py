"""Fixture suite: 3 test functions x 3 weights x p in {1.5, 2, 3} on the unit square.

Used for calibration of the default ceilings and for refinement-stability runs.
The dual maximal norm is estimated once per ``(weight, p)`` and shared across
test functions.
"""

from __future__ import annotations

from .extrapolation import check_thm31
from .grid import build_product_grid, unit_rect
from .maximal import TestFamily, estimate_op_norm
from .oscillation import TestFn
from .verify import check_poincare11_A1, check_pointwise_L12, check_strong_pp, check_weak_pp
from .weights import ap_constant_rect, conjugate, power_weight, weight_admissible

FUNCTIONS = (
    TestFn("bilinear", {"c0": 0.5, "cx": 1.0, "cy": -2.0, "cxy": 1.0}),
    TestFn("separable-trig", {"k1": 1.0, "k2": 2.0}),
    TestFn("random-bump-sum", {"n_bumps": 4, "width": 0.3}, seed=3),
)
# Centres sit just outside R so the sampled fields are smooth on R.
WEIGHTS = (
    power_weight(0.0, 0.0),
    power_weight(-0.6, -0.6, c1=-0.05, c2=-0.05),
    power_weight(0.4, 0.3, c1=-0.05, c2=-0.05),
)
P_VALUES = (1.5, 2.0, 3.0)
# Probes no finer than 1/8 of a side, so the norm estimate is comparable across N.
FAMILY = TestFamily(cell_cap=0, rect_cap=16, n_random=0, levels=3)


def report_key(rep) -> str:
    w = rep.weight
    f = rep.test_fn["family"] if rep.test_fn else "-"
    p = "-" if rep.p is None else f"{rep.p:g}"
    return f"{rep.inequality_id}|{f}|a={w.get('a', 0):g},b={w.get('b', 0):g}|p={p}"


def run(cells: int, family: TestFamily = FAMILY) -> list:
    """Every report of the suite at ``cells`` per side, in a fixed order."""
    grid = build_product_grid(unit_rect(), cells, cells)
    out = [check_pointwise_L12(f, grid) for f in FUNCTIONS]
    for w in WEIGHTS:
        if weight_admissible(w, 1, 1, 1.0):
            out += [check_poincare11_A1(f, w, grid) for f in FUNCTIONS]
    for w in WEIGHTS:
        wf = w.on(grid)
        for p in P_VALUES:
            wc = ap_constant_rect(wf, grid, p).constant
            opnorm = estimate_op_norm("dual", conjugate(p), wf, grid, family).value
            for f in FUNCTIONS:
                out.append(check_weak_pp(f, w, p, grid, wc=wc))
                out.append(check_strong_pp(f, w, p, grid, "T15", wc=wc))
                out.append(check_strong_pp(f, w, p, grid, "T16", wc=wc))
                out.append(check_thm31(f, w, p, grid, opnorm=opnorm))
    return out


def run_auxiliary(cells: int = 24) -> list:
    """Slice-kernel, maximal/fractional and maximal-norm reports on a (1, 2) rectangle."""
    from .maximal import TestFamily as _TF
    from .verify import check_buckley, check_maxfrac_L21, check_slice_kernel_A1
    from .grid import sample

    grid = build_product_grid(unit_rect(1, 2), cells, cells)
    out = []
    for w in WEIGHTS:
        if weight_admissible(w, 1, 2, 1.0):
            out.append(check_slice_kernel_A1(w, grid, "y"))
    for f in FUNCTIONS:
        g = sample(f, grid).abs()
        out += [check_maxfrac_L21(g, "x"), check_maxfrac_L21(g, "y")]
    flat = build_product_grid(unit_rect(), 2 * cells, 2 * cells)
    for w in WEIGHTS:
        for p in P_VALUES:
            out.append(check_buckley(p, w, flat, "slice_x", False, _TF()))
            out.append(check_buckley(p, w, flat, "slice_x", True, _TF()))
    return out
