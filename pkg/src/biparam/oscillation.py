"""Block averages, the non-standard oscillation pi_R and mixed-gradient fields.

``pi_R(f) = f_{I1}^y + f_{I2}^x - f_R`` reproduces every function of the form
``a(x) + b(y)``; ``f - pi_R(f)`` is what the biparametric Poincare
inequalities control by the mixed derivatives ``d^2 f / dx_i dy_j``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .grid import GridFn, ProductGrid, integrate, sample

FAMILIES = ("separable-trig", "bilinear", "polynomial", "random-bump-sum")


@dataclass(frozen=True, eq=False)
class TestFn:
    """Analytic C^2 test function with exact evaluators for ``f`` and ``|grad_x grad_y f|``.

    Evaluators follow the :func:`biparam.grid.sample` convention: ``x`` has shape
    ``(..., n1)`` and ``y`` shape ``(..., n2)``, broadcast against each other.
    ``scale = (s1, s2)`` composes with the dilation ``(x, y) -> (x/s1, y/s2)``.

    Family parameters:

    * ``separable-trig``: ``amp * prod sin(pi k1 x_i) * prod sin(pi k2 y_j)``
    * ``bilinear``: ``c0 + cx sum(x) + cy sum(y) + cxy sum(x) sum(y)``
    * ``polynomial``: ``sum c * (sum_i x_i**a) * (sum_j y_j**b)`` over ``terms = [[c, a, b], ...]``
    * ``random-bump-sum``: ``n_bumps`` product Gaussians of width ``width``, centres
      and amplitudes drawn from ``seed`` (centres in the unit cube of each block)
    """

    __test__ = False  # not a pytest class

    family: str
    params: dict = field(default_factory=dict)
    seed: int | None = None
    scale: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidArgument(f"unknown test-function family {self.family!r}")

    def _bumps(self, n1: int, n2: int):
        rng = np.random.default_rng(0 if self.seed is None else self.seed)
        n = int(self.params.get("n_bumps", 4))
        amps = rng.uniform(-1.0, 1.0, n)
        xi = rng.uniform(0.0, 1.0, (n, n1))
        eta = rng.uniform(0.0, 1.0, (n, n2))
        return amps, xi, eta, float(self.params.get("width", 0.3))

    def evaluate(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        s1, s2 = self.scale
        return self._f(np.asarray(x, dtype=float) / s1, np.asarray(y, dtype=float) / s2)

    def mixed_grad(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Frobenius norm of the ``n1 x n2`` matrix of mixed second derivatives."""
        s1, s2 = self.scale
        return self._mixed(np.asarray(x, dtype=float) / s1, np.asarray(y, dtype=float) / s2) / abs(s1 * s2)

    def _f(self, x, y):
        p = self.params
        if self.family == "separable-trig":
            k1, k2 = p.get("k1", 1.0), p.get("k2", 1.0)
            u = np.prod(np.sin(np.pi * k1 * x), axis=-1)
            v = np.prod(np.sin(np.pi * k2 * y), axis=-1)
            return p.get("amp", 1.0) * u * v
        if self.family == "bilinear":
            sx, sy = np.sum(x, axis=-1), np.sum(y, axis=-1)
            return p.get("c0", 0.0) + p.get("cx", 0.0) * sx + p.get("cy", 0.0) * sy + p.get("cxy", 1.0) * sx * sy
        if self.family == "polynomial":
            out = 0.0
            for c, a, b in p.get("terms", [[1.0, 2, 2]]):
                out = out + c * np.sum(x**a, axis=-1) * np.sum(y**b, axis=-1)
            return out
        amps, xi, eta, s = self._bumps(x.shape[-1], y.shape[-1])
        out = 0.0
        for a, cx, cy in zip(amps, xi, eta):
            u = np.exp(-np.sum((x - cx) ** 2, axis=-1) / (2 * s * s))
            v = np.exp(-np.sum((y - cy) ** 2, axis=-1) / (2 * s * s))
            out = out + a * u * v
        return out

    def _mixed(self, x, y):
        p = self.params
        n1, n2 = x.shape[-1], y.shape[-1]
        if self.family == "separable-trig":
            k1, k2 = p.get("k1", 1.0), p.get("k2", 1.0)
            gu = _grad_sin_product(x, k1)
            gv = _grad_sin_product(y, k2)
            return abs(p.get("amp", 1.0)) * np.linalg.norm(gu, axis=-1) * np.linalg.norm(gv, axis=-1)
        if self.family == "bilinear":
            shape = np.broadcast_shapes(x.shape[:-1], y.shape[:-1])
            return np.full(shape, abs(p.get("cxy", 1.0)) * np.sqrt(n1 * n2))
        if self.family == "polynomial":
            hess = 0.0
            for c, a, b in p.get("terms", [[1.0, 2, 2]]):
                if a == 0 or b == 0:
                    continue
                gx = a * x ** (a - 1)
                gy = b * y ** (b - 1)
                hess = hess + c * gx[..., :, None] * gy[..., None, :]
            if np.isscalar(hess):
                return np.zeros(np.broadcast_shapes(x.shape[:-1], y.shape[:-1]))
            return np.sqrt(np.sum(hess**2, axis=(-2, -1)))
        amps, xi, eta, s = self._bumps(n1, n2)
        hess = 0.0
        for a, cx, cy in zip(amps, xi, eta):
            u = np.exp(-np.sum((x - cx) ** 2, axis=-1) / (2 * s * s))
            v = np.exp(-np.sum((y - cy) ** 2, axis=-1) / (2 * s * s))
            gx = -(x - cx) / (s * s) * u[..., None]
            gy = -(y - cy) / (s * s) * v[..., None]
            hess = hess + a * gx[..., :, None] * gy[..., None, :]
        return np.sqrt(np.sum(hess**2, axis=(-2, -1)))

    def rescaled(self, s1: float, s2: float) -> "TestFn":
        return TestFn(self.family, self.params, self.seed, (self.scale[0] * s1, self.scale[1] * s2))

    def to_dict(self) -> dict:
        d = {"family": self.family, "params": self.params, "seed": self.seed}
        if self.scale != (1.0, 1.0):
            d["scale"] = list(self.scale)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TestFn":
        return cls(d["family"], dict(d.get("params", {})), d.get("seed"), tuple(d.get("scale", (1.0, 1.0))))

    @property
    def is_one_block(self) -> bool:
        """True when the mixed derivatives vanish identically by construction."""
        if self.family == "polynomial":
            return all(a == 0 or b == 0 for _, a, b in self.params.get("terms", [[1.0, 2, 2]]))
        if self.family == "bilinear":
            return self.params.get("cxy", 1.0) == 0
        return self.params.get("amp", 1.0) == 0 if self.family == "separable-trig" else False


def _grad_sin_product(x, k):
    s = np.sin(np.pi * k * x)
    c = np.pi * k * np.cos(np.pi * k * x)
    d = x.shape[-1]
    comps = []
    for i in range(d):
        term = c[..., i]
        for j in range(d):
            if j != i:
                term = term * s[..., j]
        comps.append(term)
    return np.stack(comps, axis=-1)


def one_block(kind: str) -> TestFn:
    """Polynomial members with vanishing mixed derivatives: ``u(x)``, ``v(y)`` or ``u(x)+v(y)``."""
    terms = {"x": [[1.0, 3, 0], [-0.5, 1, 0]], "y": [[2.0, 0, 2], [0.3, 0, 5]]}
    if kind == "xy":
        return TestFn("polynomial", {"terms": terms["x"] + terms["y"]})
    return TestFn("polynomial", {"terms": terms[kind]})


def avg_x(g: GridFn) -> GridFn:
    """``f_{I1}^y``: average over the x-block, constant in x."""
    return g.like(np.broadcast_to(np.mean(g.values, axis=0, keepdims=True), g.grid.shape))


def avg_y(g: GridFn) -> GridFn:
    """``f_{I2}^x``: average over the y-block, constant in y."""
    return g.like(np.broadcast_to(np.mean(g.values, axis=1, keepdims=True), g.grid.shape))


def avg_full(g: GridFn) -> float:
    return integrate(g) / g.grid.rect.measure


def pi_R(g: GridFn) -> GridFn:
    return g.like(avg_x(g).values + avg_y(g).values - avg_full(g))


def oscillation(g: GridFn) -> GridFn:
    """``g - pi_R(g)``."""
    return g.like(g.values - pi_R(g).values)


_EDGE = np.array([-11.0, 18.0, -9.0, 2.0]) / 6.0


def _diff(a: np.ndarray, h: float, axis: int) -> np.ndarray:
    """First derivative: central inside, 4-point one-sided at both ends."""
    a = np.moveaxis(a, axis, 0)
    out = np.empty_like(a)
    out[1:-1] = (a[2:] - a[:-2]) / (2.0 * h)
    out[0] = np.tensordot(_EDGE, a[:4], axes=1) / h
    out[-1] = -np.tensordot(_EDGE, a[-1:-5:-1], axes=1) / h
    return np.moveaxis(out, 0, axis)


def mixed_grad_field(f, grid: ProductGrid, mode: str = "exact") -> GridFn:
    """``|grad_x grad_y f|`` sampled on ``grid``.

    ``exact`` samples the analytic magnitude.  ``finite-difference`` applies
    central differences inside and third-order one-sided differences on the
    boundary layers (so the boundary never dominates the max error) in each ``x_i`` and ``y_j`` to the samples of ``f``; ``f`` may then also be a
    :class:`GridFn`.
    """
    if mode == "exact":
        if not isinstance(f, TestFn):
            raise InvalidArgument("exact mixed gradients need an analytic TestFn")
        return sample(f.mixed_grad, grid)
    if mode != "finite-difference":
        raise InvalidArgument(f"unknown mode {mode!r}")
    if min(grid.cells) < 4:
        raise InvalidArgument("finite-difference mixed gradients need at least 4 cells per axis")
    vals = f.values if isinstance(f, GridFn) else sample(f, grid).values
    g1, g2 = grid.g1, grid.g2
    block = vals.reshape(g1.block_shape + g2.block_shape)
    total = np.zeros(block.shape)
    for j in range(g2.dim):
        dy = _diff(block, g2.h, g1.dim + j)
        for i in range(g1.dim):
            total += _diff(dy, g1.h, i) ** 2
    return GridFn(grid, np.sqrt(total).reshape(grid.shape))
