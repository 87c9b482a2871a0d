"""Both sides of each Poincare-type inequality, assembled into reports.

Every check is one-sided.  A report stores ``lhs``, the norm factor
``rhs_core``, the geometry factor ``ell(I1) ell(I2)``, a weight constant and the
exponent it enters with, and

    ratio = lhs / (geometry * weight_constant**theory_exponent * rhs_core).

The implied constants of the inequalities are not known, so ``passed`` means
``ratio <= ceiling``: either a bound derived for the discrete setting or a
committed calibration value.  Conjecture probes record evidence and never fail.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import InvalidArgument
from .fractional import biparam_T, check_maxfrac_domination, kernel_matrix, vertex_kernel
from .grid import AxisGrid, GridFn, ProductGrid, integrate, lp_norm, sample, weak_lp_norm
from .maximal import TestFamily, estimate_op_norm
from .oscillation import TestFn, mixed_grad_field, oscillation
from .weights import (
    WeightSpec,
    a1_constant_rect,
    ap_constant_rect,
    unit_weight,
    weight_admissible,
)

INEQUALITIES = (
    "pointwise_L12",
    "poincare11",
    "poincare11_A1",
    "weak_pp",
    "strong_pp_T15",
    "strong_pp_T16",
    "thm31",
    "conjecture_probe",
    "classical_1d",
    "slice_kernel_A1",
    "maxfrac_L21",
    "buckley",
    "rdf_p1",
    "rdf_p2",
    "rdf_p3",
)
PROBES = frozenset({"conjecture_probe"})

# Integral of 1/|u| over a square of side L centred at the origin is L * 4 log(1 + sqrt 2).
SQUARE_KERNEL = 4.0 * math.log1p(math.sqrt(2.0))
ZERO_TOL = 1e-12

CSV_FIELDS = (
    "inequality_id",
    "n1",
    "n2",
    "N1",
    "N2",
    "p",
    "weight_kind",
    "weight_params",
    "weight_constant",
    "lhs",
    "rhs_core",
    "geometry",
    "theory_exponent",
    "ratio",
    "pass",
)


@dataclass
class VerifyReport:
    inequality_id: str
    lhs: float
    rhs_core: float
    geometry_factor: float
    weight_constant: float
    theory_exponent: float
    ratio: float
    grid: dict
    passed: bool
    ceiling: float
    p: float | None = None
    weight: dict = field(default_factory=lambda: {"kind": "power", "a": 0.0, "b": 0.0, "scale": 1.0})
    test_fn: dict | None = None
    extra: dict = field(default_factory=dict)

    @property
    def probe(self) -> bool:
        return self.inequality_id in PROBES

    @property
    def gating(self) -> bool:
        return not self.probe

    def row(self) -> dict:
        params = {k: v for k, v in self.weight.items() if k != "kind"}
        return {
            "inequality_id": self.inequality_id,
            "n1": self.grid.get("n1"),
            "n2": self.grid.get("n2"),
            "N1": self.grid.get("N1"),
            "N2": self.grid.get("N2"),
            "p": "" if self.p is None else self.p,
            "weight_kind": self.weight.get("kind", ""),
            "weight_params": json.dumps(params, sort_keys=True),
            "weight_constant": self.weight_constant,
            "lhs": self.lhs,
            "rhs_core": self.rhs_core,
            "geometry": self.geometry_factor,
            "theory_exponent": self.theory_exponent,
            "ratio": self.ratio,
            "pass": self.passed,
        }

    def to_dict(self) -> dict:
        d = self.row()
        d["weight_params"] = {k: v for k, v in self.weight.items() if k != "kind"}
        d.update({"ceiling": self.ceiling, "probe": self.probe, "test_fn": self.test_fn, "extra": self.extra})
        return d


def theory_exponent(inequality_id: str, p: float | None = None) -> float:
    if inequality_id == "weak_pp":
        return 1.0 / p + 1.0 / (p - 1.0)
    if inequality_id == "strong_pp_T15":
        return 2.0 / (p - 1.0)
    if inequality_id == "strong_pp_T16":
        return min(4.0, 2.0 / (p - 1.0))
    if inequality_id == "conjecture_probe":
        return 1.0 / (p - 1.0) + 1.0 / p
    if inequality_id in ("poincare11_A1", "thm31"):
        return 2.0
    if inequality_id == "buckley":
        return 1.0 / (p - 1.0)
    return 0.0


def discretization_tolerance(grid: ProductGrid) -> float:
    """Second-order slack for comparing midpoint quadratures: 0.05 at 64 cells per side."""
    rel = max(grid.g1.h / grid.g1.cube.side, grid.g2.h / grid.g2.cube.side)
    return 204.8 * rel * rel


def _kernel_bound(dim: int) -> float:
    """``sup_t int_I |t - s|**(1-d) ds / ell(I)`` bounded by the square of side 2 ell around t."""
    return 1.0 if dim == 1 else 2.0 * SQUARE_KERNEL


@lru_cache(maxsize=1)
def calibration() -> dict:
    """Committed calibration run (ratios at N = 64 and the ceilings derived from them)."""
    text = resources.files("biparam").joinpath("data/calibration_n64.json").read_text()
    return json.loads(text)


def default_ceiling(inequality_id: str, grid: ProductGrid | None = None) -> float:
    if inequality_id in PROBES:
        return math.inf
    tol = 0.0 if grid is None else discretization_tolerance(grid)
    if inequality_id == "pointwise_L12":
        return 1.0 + tol
    if inequality_id == "poincare11" and grid is not None:
        return _kernel_bound(grid.n1) * _kernel_bound(grid.n2) * (1.0 + tol)
    if inequality_id == "rdf_p2":
        return 2.0
    if inequality_id == "rdf_p1":
        return 0.0
    ceilings = calibration().get("ceilings", {})
    if inequality_id in ceilings:
        return float(ceilings[inequality_id])
    return math.inf


def _ratio(lhs: float, denom: float, zero_scale: float) -> float:
    if denom > 0:
        return lhs / denom
    return 0.0 if lhs <= ZERO_TOL * max(zero_scale, 1.0) else math.inf


def _report(iid, lhs, rhs_core, geometry, wc, expo, grid, ceiling, zero_scale=1.0, **kw) -> VerifyReport:
    if ceiling is None:
        ceiling = default_ceiling(iid, grid if isinstance(grid, ProductGrid) else None)
    denom = geometry * wc**expo * rhs_core
    ratio = _ratio(lhs, denom, zero_scale)
    meta = grid.metadata() if isinstance(grid, ProductGrid) else dict(grid)
    passed = True if iid in PROBES else bool(math.isfinite(ratio) and ratio <= ceiling)
    return VerifyReport(
        iid, float(lhs), float(rhs_core), float(geometry), float(wc), float(expo), float(ratio), meta, passed,
        float(ceiling), **kw,
    )


@dataclass
class _Sides:
    values: GridFn
    osc: GridFn
    grad: GridFn
    scale: float


def _sides(f: TestFn, grid: ProductGrid, mode: str = "exact") -> _Sides:
    values = sample(f, grid)
    return _Sides(values, oscillation(values), mixed_grad_field(f, grid, mode), float(np.max(np.abs(values.values))))


def _weight(w, grid) -> tuple[GridFn, dict]:
    if w is None:
        w = unit_weight()
    if isinstance(w, GridFn):
        return w, {"kind": "sampled"}
    return w.on(grid), w.params()


def _vertex_oscillation(f: TestFn, grid: ProductGrid, values: GridFn) -> np.ndarray:
    """``f - pi_R f`` at cell corners, with the block averages taken by the midpoint rule."""
    xm, ym = grid.points()
    xv = grid.g1.vertices[:, None, :]
    yv = grid.g2.vertices[None, :, :]
    corner = f.evaluate(xv, yv)
    along_x = np.mean(f.evaluate(xm, yv), axis=0, keepdims=True)
    along_y = np.mean(f.evaluate(xv, ym), axis=1, keepdims=True)
    return corner - along_x - along_y + np.mean(values.values)


def check_pointwise_L12(f: TestFn, grid: ProductGrid, rules=None, ceiling=None, mode="exact") -> VerifyReport:
    """``|f - pi_R f| <= T(|grad_x grad_y f| chi_R)`` at every midpoint and cell corner.

    lhs is the largest quotient over points where the right side exceeds 1e-14.
    """
    rule1, rule2 = rules if rules is not None else (None, None)
    s = _sides(f, grid, mode)
    num = [np.abs(s.osc.values), np.abs(_vertex_oscillation(f, grid, s.values))]
    den = [
        biparam_T(s.grad, rule1, rule2).values,
        vertex_kernel(grid.g1) @ s.grad.values @ vertex_kernel(grid.g2).T,
    ]
    lhs, dead_num = 0.0, 0.0
    for a, b in zip(num, den):
        live = b > 1e-14
        if live.any():
            lhs = max(lhs, float(np.max(a[live] / b[live])))
        if (~live).any():
            dead_num = max(dead_num, float(np.max(a[~live])))
    extra = {"tol_disc": discretization_tolerance(grid)}
    rep = _report("pointwise_L12", lhs, 1.0, 1.0, 1.0, 0.0, grid, ceiling, test_fn=f.to_dict(), extra=extra)
    if dead_num > ZERO_TOL * max(s.scale, 1.0):
        rep.passed = False
        rep.ratio = math.inf
        rep.extra["unbounded_at_zero_density"] = dead_num
    return rep


def check_poincare11(f: TestFn, grid: ProductGrid, ceiling=None, mode="exact") -> VerifyReport:
    s = _sides(f, grid, mode)
    lhs = integrate(s.osc.abs())
    rhs = integrate(s.grad)
    return _report(
        "poincare11", lhs, rhs, grid.rect.geometry, 1.0, 0.0, grid, ceiling, s.scale * grid.rect.measure,
        test_fn=f.to_dict(),
    )


def check_poincare11_A1(f: TestFn, w, grid: ProductGrid, ceiling=None, mode="exact") -> VerifyReport:
    s = _sides(f, grid, mode)
    wf, wp = _weight(w, grid)
    lhs = integrate(s.osc.abs(), wf)
    rhs = integrate(s.grad, wf)
    wc = a1_constant_rect(wf, grid).constant
    return _report(
        "poincare11_A1", lhs, rhs, grid.rect.geometry, wc, 2.0, grid, ceiling, s.scale * integrate(wf),
        p=1.0, weight=wp, test_fn=f.to_dict(),
    )


def _pp(iid, f, w, p, grid, ceiling, weak=False, mode="exact", wc=None) -> VerifyReport:
    if not p > 1:
        raise InvalidArgument(f"p must be > 1, got {p}")
    s = _sides(f, grid, mode)
    wf, wp = _weight(w, grid)
    lhs = weak_lp_norm(s.osc, p, wf) if weak else lp_norm(s.osc, p, wf)
    rhs = lp_norm(s.grad, p, wf)
    if wc is None:
        wc = ap_constant_rect(wf, grid, p).constant
    zero = s.scale * integrate(wf) ** (1.0 / p)
    return _report(
        iid, lhs, rhs, grid.rect.geometry, wc, theory_exponent(iid, p), grid, ceiling, zero,
        p=p, weight=wp, test_fn=f.to_dict(),
    )


def check_weak_pp(f: TestFn, w, p: float, grid: ProductGrid, ceiling=None, mode="exact", wc=None) -> VerifyReport:
    return _pp("weak_pp", f, w, p, grid, ceiling, weak=True, mode=mode, wc=wc)


def check_strong_pp(
    f: TestFn, w, p: float, grid: ProductGrid, variant: str = "T16", ceiling=None, mode="exact", wc=None
) -> VerifyReport:
    if variant not in ("T15", "T16"):
        raise InvalidArgument(f"variant must be T15 or T16, got {variant!r}")
    return _pp(f"strong_pp_{variant}", f, w, p, grid, ceiling, mode=mode, wc=wc)


def probe_conjecture(f: TestFn, w, p: float, grid: ProductGrid, mode="exact", wc=None) -> VerifyReport:
    """Strong (p,p) ratio against the conjectured exponent; recorded, never gating."""
    rep = _pp("conjecture_probe", f, w, p, grid, math.inf, mode=mode, wc=wc)
    rep.extra["observed"] = True
    return rep


@dataclass(frozen=True)
class CubeFn:
    """Test function on a single cube: ``linear`` (``c . x``), ``quadratic`` (``|x - c|**2``) or ``trig``."""

    family: str
    params: dict = field(default_factory=dict)

    def evaluate(self, pts: np.ndarray) -> np.ndarray:
        p = self.params
        if self.family == "constant":
            return np.full(pts.shape[0], float(p.get("c", 1.0)))
        if self.family == "linear":
            return pts @ np.broadcast_to(np.asarray(p.get("c", 1.0), dtype=float), pts.shape[-1:])
        if self.family == "quadratic":
            c = np.broadcast_to(np.asarray(p.get("c", 0.0), dtype=float), pts.shape[-1:])
            return np.sum((pts - c) ** 2, axis=-1)
        if self.family == "trig":
            return np.prod(np.sin(np.pi * p.get("k", 1.0) * pts), axis=-1)
        raise InvalidArgument(f"unknown cube-function family {self.family!r}")

    def grad_norm(self, pts: np.ndarray) -> np.ndarray:
        p = self.params
        if self.family == "constant":
            return np.zeros(pts.shape[0])
        if self.family == "linear":
            c = np.broadcast_to(np.asarray(p.get("c", 1.0), dtype=float), pts.shape[-1:])
            return np.full(pts.shape[0], float(np.linalg.norm(c)))
        if self.family == "quadratic":
            c = np.broadcast_to(np.asarray(p.get("c", 0.0), dtype=float), pts.shape[-1:])
            return 2.0 * np.linalg.norm(pts - c, axis=-1)
        k = p.get("k", 1.0)
        s = np.sin(np.pi * k * pts)
        c = np.pi * k * np.cos(np.pi * k * pts)
        comps = []
        for i in range(pts.shape[-1]):
            term = c[:, i]
            for j in range(pts.shape[-1]):
                if j != i:
                    term = term * s[:, j]
            comps.append(term)
        return np.linalg.norm(np.stack(comps, axis=-1), axis=-1)

    def to_dict(self) -> dict:
        return {"family": self.family, "params": self.params}


def check_classical_1d(f1d: CubeFn, grid1d: AxisGrid, rule=None, ceiling=None) -> VerifyReport:
    """One-parameter calibration: averaged (1,1) Poincare on a cube, pointwise bound in ``extra``."""
    pts = grid1d.midpoints
    vals = f1d.evaluate(pts)
    grad = f1d.grad_norm(pts)
    osc = np.abs(vals - np.mean(vals))
    cell = grid1d.cell_measure
    lhs = float(np.sum(osc) * cell)
    rhs = float(np.sum(grad) * cell)
    frac = kernel_matrix(grid1d, rule) @ grad
    live = frac > 1e-14
    pointwise = float(np.max(osc[live] / frac[live])) if live.any() else 0.0
    meta = {"n1": grid1d.dim, "n2": 0, "N1": grid1d.cells, "N2": 0}
    rel = 1.0 / grid1d.cells
    if ceiling is None:
        ceiling = _kernel_bound(grid1d.dim) * (1.0 + 204.8 * rel * rel)
    zero = float(np.max(np.abs(vals))) * grid1d.cube.measure
    rep = _report("classical_1d", lhs, rhs, grid1d.cube.side, 1.0, 0.0, meta, ceiling, zero, test_fn=f1d.to_dict())
    rep.extra["pointwise_ratio"] = pointwise
    if pointwise > 1.0 + 204.8 * rel * rel:
        rep.passed = False
    return rep


def check_slice_kernel_A1(w, grid: ProductGrid, axis: str = "y", rule=None, ceiling=None) -> VerifyReport:
    """``int_I w(., s) |s - t|**(1-d) ds <= C ell(I) [w]_{A1} w(., t)``; lhs is the max of the left/right quotient."""
    from .fractional import riesz_slice

    wf, wp = _weight(w, grid)
    ag = grid.axis_grid(axis)
    wc = a1_constant_rect(wf, grid).constant
    quot = riesz_slice(wf, axis, rule).values / (ag.cube.side * wc * wf.values)
    rep = _report("slice_kernel_A1", float(quot.max()), 1.0, 1.0, 1.0, 0.0, grid, ceiling, p=1.0, weight=wp)
    rep.extra.update({"axis": axis, "a1_constant": wc})
    return rep


def check_maxfrac_L21(g: GridFn, axis: str, rule=None, ceiling=None) -> VerifyReport:
    c = check_maxfrac_domination(g, axis, rule)
    return _report("maxfrac_L21", c, 1.0, 1.0, 1.0, 0.0, g.grid, ceiling, extra={"axis": axis})


def check_buckley(
    p: float, w, grid: ProductGrid, op: str = "slice_x", weak: bool = False, family=None, ceiling=None
) -> VerifyReport:
    """Weighted maximal-operator norm estimate against ``[w]_{A_p}**(1/p or 1/(p-1))``."""
    wf, wp = _weight(w, grid)
    est = estimate_op_norm(op, p, wf, grid, family, weak=weak)
    expo = 1.0 / p if weak else 1.0 / (p - 1.0)
    rep = _report("buckley", est.value, 1.0, 1.0, est.weight_constant, expo, grid, ceiling, p=p, weight=wp)
    rep.extra.update(est.to_dict())
    return rep


# -- weight sweeps -------------------------------------------------------------


@dataclass
class SweepConfig:
    inequality: str
    grid: ProductGrid
    p: float
    weights: list
    test_fn: TestFn | None = None
    variant: str = "strong"
    op: str = "slice_x"
    family: TestFamily | None = None
    slope_tolerance: float = 0.2
    name: str = "sweep"


@dataclass
class SweepResult:
    name: str
    inequality: str
    p: float
    theory_exponent: float
    rows: list
    fitted_slope: float | None
    residuals: list
    degenerate: bool
    slope_tolerance: float
    skipped: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        if self.degenerate or self.inequality in PROBES:
            return True
        return self.fitted_slope <= self.theory_exponent + self.slope_tolerance

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "inequality": self.inequality,
            "p": self.p,
            "theory_exponent": self.theory_exponent,
            "fitted_slope": self.fitted_slope,
            "slope_tolerance": self.slope_tolerance,
            "degenerate": self.degenerate,
            "pass": self.passed,
            "rows": self.rows,
            "residuals": self.residuals,
            "skipped": self.skipped,
        }


def _sweep_exponent(cfg: SweepConfig) -> float:
    if cfg.inequality == "buckley":
        return 1.0 / cfg.p if cfg.variant == "weak" else 1.0 / (cfg.p - 1.0)
    return theory_exponent(cfg.inequality, cfg.p)


def _sweep_row(cfg: SweepConfig, w: WeightSpec) -> VerifyReport:
    if cfg.inequality == "buckley":
        return check_buckley(cfg.p, w, cfg.grid, cfg.op, cfg.variant == "weak", cfg.family)
    if cfg.inequality == "weak_pp":
        return check_weak_pp(cfg.test_fn, w, cfg.p, cfg.grid)
    if cfg.inequality in ("strong_pp_T15", "strong_pp_T16"):
        return check_strong_pp(cfg.test_fn, w, cfg.p, cfg.grid, cfg.inequality[-3:])
    if cfg.inequality == "conjecture_probe":
        return probe_conjecture(cfg.test_fn, w, cfg.p, cfg.grid)
    if cfg.inequality == "poincare11_A1":
        return check_poincare11_A1(cfg.test_fn, w, cfg.grid)
    raise InvalidArgument(f"inequality {cfg.inequality!r} cannot be swept over weights")


def sweep_weights(cfg: SweepConfig) -> SweepResult:
    """Fit the log-log slope of ``lhs / (geometry * rhs_core)`` against the weight constant.

    For Buckley sweeps the fitted quantity is the operator-norm estimate.
    Inadmissible weights are skipped with a warning record.
    """
    p_adm = 1.0 if cfg.inequality == "poincare11_A1" else cfg.p
    rows, skipped = [], []
    for w in cfg.weights:
        if not weight_admissible(w, cfg.grid.n1, cfg.grid.n2, p_adm):
            msg = f"weight {w.params()} is not admissible for p={p_adm}"
            warnings.warn(msg, stacklevel=2)
            skipped.append({"weight": w.params(), "reason": msg})
            continue
        rep = _sweep_row(cfg, w)
        core = rep.lhs if cfg.inequality == "buckley" else rep.lhs / (rep.geometry_factor * rep.rhs_core)
        rows.append({"weight": w.params(), "weight_constant": rep.weight_constant, "value": core, "ratio": rep.ratio})
    if len(rows) < 3:
        raise InvalidArgument(f"sweep {cfg.name!r} needs at least 3 admissible weights, got {len(rows)}")
    xs = np.log([r["weight_constant"] for r in rows])
    ys = np.log([r["value"] for r in rows])
    degenerate = bool(np.ptp(xs) < 1e-9)
    if degenerate:
        slope, residuals = None, []
    else:
        slope, icept = np.polyfit(xs, ys, 1)
        slope = float(slope)
        residuals = [float(v) for v in ys - (slope * xs + icept)]
    return SweepResult(
        cfg.name, cfg.inequality, cfg.p, _sweep_exponent(cfg), rows, slope, residuals, degenerate,
        cfg.slope_tolerance, skipped,
    )
