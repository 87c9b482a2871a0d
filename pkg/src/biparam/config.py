"""Experiment configuration: JSON schema validation, semantic checks, object construction."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import InvalidArgument
from .grid import Cube, ProductGrid, Rect, build_product_grid
from .maximal import TestFamily
from .oscillation import TestFn
from .verify import CubeFn
from .weights import WeightSpec, admissible_power

SCHEMA_VERSION = 1
P_INEQUALITIES = ("weak_pp", "strong_pp_T15", "strong_pp_T16", "thm31", "conjecture_probe", "buckley", "rdf")
A1_INEQUALITIES = ("poincare11_A1", "slice_kernel_A1")


class ConfigError(Exception):
    """Invalid configuration; ``line`` points into the source text when known."""

    def __init__(self, message: str, line: int | None = None, source: str = "<config>"):
        self.message = message
        self.line = line
        self.source = source
        super().__init__(self.diagnostic())

    def diagnostic(self) -> str:
        where = self.source if self.line is None else f"{self.source}:{self.line}"
        return f"{where}: {self.message}"


@lru_cache(maxsize=1)
def schema() -> dict:
    return json.loads(resources.files("biparam").joinpath("configs/schema.json").read_text())


def bundled(name: str) -> Path:
    """Path of a config shipped with the package, e.g. ``bundled("smoke.json")``."""
    return Path(str(resources.files("biparam").joinpath("configs", name)))


def _ws(text: str, pos: int) -> int:
    while pos < len(text) and text[pos] in " \t\r\n":
        pos += 1
    return pos


def locate(text: str, path) -> int:
    """1-based line of the JSON value at ``path`` (keys and list indices) in ``text``."""
    dec = json.JSONDecoder()
    pos = _ws(text, 0)
    for key in path:
        if pos >= len(text):
            break
        opener = text[pos]
        if opener not in "{[":
            break
        pos += 1
        idx = 0
        while True:
            pos = _ws(text, pos)
            if text[pos] in "}]":
                return text.count("\n", 0, pos) + 1
            if opener == "{":
                name, pos = dec.raw_decode(text, pos)
                pos = _ws(text, pos) + 1
                pos = _ws(text, pos)
                hit = name == key
            else:
                hit = idx == key
            if hit:
                break
            _, pos = dec.raw_decode(text, pos)
            pos = _ws(text, pos)
            if text[pos] == ",":
                pos += 1
            idx += 1
    return text.count("\n", 0, pos) + 1


@dataclass
class ExperimentConfig:
    raw: dict
    text: str
    source: str
    rect: Rect
    grids: list
    p_values: list
    weights: list
    test_functions: list
    cube_functions: list
    inequalities: list
    k_max: int = 12
    self_cell_depth: int = 6
    gradient_mode: str = "exact"
    ceilings: dict = field(default_factory=dict)
    slope_tolerance: float = 0.2
    family: TestFamily = field(default_factory=TestFamily)
    buckley: dict = field(default_factory=dict)
    sweeps: list = field(default_factory=list)
    oracle: dict = field(default_factory=dict)
    seed: int = 0
    name: str = "experiment"
    out_dir: Path = Path("biparam-out")
    stem: str = "experiment"

    @property
    def config_hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def product_grid(self, spec) -> ProductGrid:
        n1, n2 = (spec, spec) if isinstance(spec, int) else spec
        return build_product_grid(self.rect, n1, n2)

    def error(self, message: str, path) -> ConfigError:
        return ConfigError(message, locate(self.text, path), self.source)


def _rect(d: dict) -> Rect:
    n1, n2 = d["n1"], d["n2"]
    lo1 = d.get("lower1", [0.0] * n1)
    lo2 = d.get("lower2", [0.0] * n2)
    return Rect(Cube(n1, tuple(lo1), d.get("side1", 1.0)), Cube(n2, tuple(lo2), d.get("side2", 1.0)))


def _check_weight(cfg: ExperimentConfig, w: dict, p_list, path) -> None:
    dims = (("a", cfg.rect.n1), ("b", cfg.rect.n2))
    for p in p_list:
        for key, d in dims:
            a = w.get(key, 0.0)
            if not admissible_power(a, d, p):
                bound = f"-{d} < {key} <= 0" if p == 1 else f"-{d} < {key} < {d * (p - 1):g}"
                raise cfg.error(f"power weight exponent {key}={a:g} is not admissible for p={p:g}: need {bound}", path)


def _semantic(cfg: ExperimentConfig) -> None:
    raw = cfg.raw
    for key, d in (("c1", cfg.rect.n1), ("c2", cfg.rect.n2)):
        for i, w in enumerate(raw.get("weights", [])):
            if key in w and len(w[key]) != d:
                raise cfg.error(f"{key} must have {d} coordinates", ("weights", i, key))
    p_list = list(cfg.p_values) if any(i in P_INEQUALITIES for i in cfg.inequalities) else []
    if any(i in A1_INEQUALITIES for i in cfg.inequalities):
        p_list.append(1.0)
    for i, w in enumerate(raw.get("weights", [])):
        _check_weight(cfg, w, p_list, ("weights", i))
    needs_f = {"pointwise_L12", "poincare11", "poincare11_A1", "weak_pp", "strong_pp_T15", "strong_pp_T16",
               "thm31", "conjecture_probe", "maxfrac_L21"}
    if needs_f & set(cfg.inequalities) and not cfg.test_functions:
        raise cfg.error("selected inequalities need at least one test function", ("inequalities",))
    if set(P_INEQUALITIES) & set(cfg.inequalities) and not cfg.p_values:
        raise cfg.error("selected inequalities need at least one p value", ("inequalities",))
    if "classical_1d" in cfg.inequalities and not cfg.cube_functions:
        raise cfg.error("classical_1d needs at least one cube function", ("inequalities",))
    if cfg.inequalities and not cfg.grids:
        raise cfg.error("verify runs need at least one grid", ("rect",))
    for i, s in enumerate(raw.get("sweeps", [])):
        if s["inequality"] != "poincare11_A1" and "p" not in s:
            raise cfg.error(f"sweep {s['name']!r} needs p", ("sweeps", i))
        if s["inequality"] != "buckley" and "test_function" not in s:
            raise cfg.error(f"sweep {s['name']!r} needs a test function", ("sweeps", i))


def parse(text: str, source: str = "<config>") -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno, source) from None
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = errors[0]
        path = list(err.absolute_path)
        label = "/".join(str(p) for p in path) or "<root>"
        raise ConfigError(f"{label}: {err.message}", locate(text, path), source)
    out = raw.get("output", {})
    fam = raw.get("family", {})
    try:
        rect = _rect(raw["rect"])
    except InvalidArgument as exc:
        raise ConfigError(str(exc), locate(text, ["rect"]), source) from None
    cfg = ExperimentConfig(
        raw=raw,
        text=text,
        source=source,
        rect=rect,
        grids=[g if isinstance(g, int) else tuple(g) for g in raw.get("grids", [])],
        p_values=[float(p) for p in raw.get("p", [])],
        weights=[WeightSpec.from_dict(w) for w in raw.get("weights", [])],
        test_functions=[TestFn.from_dict(f) for f in raw.get("test_functions", [])],
        cube_functions=[CubeFn(f["family"], dict(f.get("params", {}))) for f in raw.get("cube_functions", [])],
        inequalities=list(raw.get("inequalities", [])),
        k_max=raw.get("k_max", 12),
        self_cell_depth=raw.get("self_cell_depth", 6),
        gradient_mode=raw.get("gradient_mode", "exact"),
        ceilings=dict(raw.get("ceilings", {})),
        slope_tolerance=float(raw.get("slope_tolerance", 0.2)),
        family=TestFamily(**fam),
        buckley=dict(raw.get("buckley", {})),
        sweeps=list(raw.get("sweeps", [])),
        oracle=dict(raw.get("oracle", {})),
        seed=raw.get("seed", 0),
        name=raw.get("name", Path(source).stem),
        out_dir=Path(out.get("dir", "biparam-out")),
        stem=out.get("stem", raw.get("name", Path(source).stem)),
    )
    _semantic(cfg)
    return cfg


def load(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    return parse(text, str(path))
