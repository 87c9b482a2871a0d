"""``biparam`` command line: verify | constants | sweep | oracle.

Every subcommand takes one JSON config.  Exit codes: 0 success, 1 a gating
check failed (or a computation raised), 2 invalid config or usage.
Set ``BIPARAM_THREADS`` to run independent reports concurrently; outputs are
always written in config order.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__, oracles
from .config import SCHEMA_VERSION, ConfigError, ExperimentConfig, load
from .errors import EvaluationError, InvalidArgument, SamplingError
from .extrapolation import check_rdf_properties, check_thm31, rubio_iterate
from .fractional import KernelQuadRule, self_cell_weight
from .grid import GridFn, sample
from .oscillation import TestFn
from .verify import (
    CSV_FIELDS,
    SweepConfig,
    check_buckley,
    check_classical_1d,
    check_maxfrac_L21,
    check_poincare11,
    check_poincare11_A1,
    check_pointwise_L12,
    check_slice_kernel_A1,
    check_strong_pp,
    check_weak_pp,
    probe_conjecture,
    sweep_weights,
)
from .weights import (
    WeightSpec,
    a1_constant_rect,
    ap_constant_rect,
    ap_constant_slices,
    dual_weight_constant,
)

THREADS_ENV = "BIPARAM_THREADS"
ORACLE_SUBJECTS = ("constants", "maximal", "T", "weaknorm")
ORACLE_CAPS = {"constants": 16, "maximal": 12, "T": 12, "weaknorm": 16}
SWEEP_FIELDS = (
    "sweep",
    "inequality",
    "p",
    "weight_params",
    "weight_constant",
    "value",
    "ratio",
    "residual",
    "fitted_slope",
    "theory_exponent",
    "slope_tolerance",
    "degenerate",
    "pass",
)
CONSTANT_FIELDS = ("N1", "N2", "weight_params", "p", "ap_rect", "a1_rect", "slice_x", "slice_y", "dual")


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _run_ordered(tasks: list) -> list:
    n = _threads()
    if n == 1:
        return [t() for t in tasks]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(lambda t: t(), tasks))


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, numpy scalars become Python."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _header(cfg: ExperimentConfig, kind: str) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "tool": "biparam",
        "version": __version__,
        "config_sha256": cfg.config_hash,
        "seed": cfg.seed,
        "name": cfg.name,
    }


def write_outputs(cfg: ExperimentConfig, kind: str, fields, rows: list, payload: dict) -> tuple[Path, Path]:
    """Write ``<stem>.<kind>.csv`` and ``<stem>.<kind>.json`` with identical provenance headers."""
    head = _header(cfg, kind)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = cfg.out_dir / f"{cfg.stem}.{kind}.csv"
    json_path = cfg.out_dir / f"{cfg.stem}.{kind}.json"
    buf = io.StringIO()
    for k, v in head.items():
        buf.write(f"# {k}={v}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([_cell(row.get(f)) for f in fields])
    csv_path.write_text(buf.getvalue())
    doc = dict(head)
    doc.update(payload)
    json_path.write_text(json.dumps(_clean(doc), indent=2, sort_keys=True, allow_nan=False) + "\n")
    return csv_path, json_path


# -- verify --------------------------------------------------------------------


def _one(fn, *args, **kw) -> list:
    return [fn(*args, **kw)]


def verify_tasks(cfg: ExperimentConfig) -> list:
    """Zero-argument callables, each returning a list of reports, in output order."""
    rule = KernelQuadRule(cfg.self_cell_depth)
    ceil = cfg.ceilings.get
    mode = cfg.gradient_mode
    op = cfg.buckley.get("op", "slice_x")
    weak = cfg.buckley.get("weak", False)
    tasks = []
    for gspec in cfg.grids:
        grid = cfg.product_grid(gspec)
        rules = (rule if grid.n1 == 2 else None, rule if grid.n2 == 2 else None)
        for iid in cfg.inequalities:
            c = ceil(iid)
            if iid == "pointwise_L12":
                tasks += [partial(_one, check_pointwise_L12, f, grid, rules, c, mode) for f in cfg.test_functions]
            elif iid == "poincare11":
                tasks += [partial(_one, check_poincare11, f, grid, c, mode) for f in cfg.test_functions]
            elif iid == "maxfrac_L21":
                tasks += [partial(_maxfrac, f, grid, rules, c) for f in cfg.test_functions]
            elif iid == "classical_1d":
                tasks += [partial(_one, check_classical_1d, cf, grid.g1, rules[0], c) for cf in cfg.cube_functions]
            elif iid == "slice_kernel_A1":
                tasks += [partial(_one, check_slice_kernel_A1, w, grid, "y", rules[1], c) for w in cfg.weights]
            elif iid == "poincare11_A1":
                tasks += [
                    partial(_one, check_poincare11_A1, f, w, grid, c, mode)
                    for f in cfg.test_functions
                    for w in cfg.weights
                ]
            elif iid == "buckley":
                tasks += [
                    partial(_one, check_buckley, p, w, grid, op, weak, cfg.family, c)
                    for w in cfg.weights
                    for p in cfg.p_values
                ]
            elif iid == "rdf":
                tasks += [partial(_rdf_task, cfg, w, p, grid) for w in cfg.weights for p in cfg.p_values]
            else:
                tasks += [
                    partial(_pp_task, cfg, iid, f, w, p, grid)
                    for f in cfg.test_functions
                    for w in cfg.weights
                    for p in cfg.p_values
                ]
    return tasks


def _maxfrac(f: TestFn, grid, rules, ceiling) -> list:
    g = sample(f, grid).abs()
    return [check_maxfrac_L21(g, "x", rules[0], ceiling), check_maxfrac_L21(g, "y", rules[1], ceiling)]


def _pp_task(cfg: ExperimentConfig, iid: str, f, w, p: float, grid) -> list:
    ceiling = cfg.ceilings.get(iid)
    mode = cfg.gradient_mode
    if iid == "weak_pp":
        return [check_weak_pp(f, w, p, grid, ceiling, mode)]
    if iid == "conjecture_probe":
        return [probe_conjecture(f, w, p, grid, mode)]
    if iid == "thm31":
        return [check_thm31(f, w, p, grid, family=cfg.family, ceiling=ceiling)]
    return [check_strong_pp(f, w, p, grid, iid[-3:], ceiling, mode)]


def _rdf_task(cfg: ExperimentConfig, w, p: float, grid) -> list:
    rng = np.random.default_rng(cfg.seed)
    h = GridFn(grid, rng.random(grid.shape))
    res = rubio_iterate(h, w, p, grid, cfg.k_max, family=cfg.family)
    reps = check_rdf_properties(res, h, w, p)
    for r in reps:
        r.extra["rdf"] = res.to_dict()
    return reps


def cmd_verify(cfg: ExperimentConfig, out=None) -> int:
    out = out or sys.stdout
    reports = [r for batch in _run_ordered(verify_tasks(cfg)) for r in batch]
    for r in reports:
        status = "PROBE" if r.probe else ("PASS" if r.passed else "FAIL")
        print(f"{status:5s} {r.inequality_id:18s} N={r.grid['N1']}x{r.grid['N2']} "
              f"p={r.p if r.p is not None else '-'} ratio={r.ratio:.6g} ceiling={r.ceiling:.6g}", file=out)
    write_outputs(cfg, "verify", CSV_FIELDS, [r.row() for r in reports], {"reports": [r.to_dict() for r in reports]})
    failed = [r for r in reports if r.gating and not r.passed]
    print(f"{len(reports)} reports, {len(failed)} failed", file=out)
    return 1 if failed else 0


# -- constants -----------------------------------------------------------------


def _constants_row(w: WeightSpec, grid, p: float | None) -> dict:
    row = {"N1": grid.g1.cells, "N2": grid.g2.cells, "weight_params": json.dumps(w.params(), sort_keys=True)}
    row["a1_rect"] = a1_constant_rect(w, grid).constant
    if p is None:
        row.update({"p": 1.0, "slice_x": ap_constant_slices(w, grid, 1.0, "x"),
                    "slice_y": ap_constant_slices(w, grid, 1.0, "y")})
        return row
    row.update(
        {
            "p": p,
            "ap_rect": ap_constant_rect(w, grid, p).constant,
            "slice_x": ap_constant_slices(w, grid, p, "x"),
            "slice_y": ap_constant_slices(w, grid, p, "y"),
            "dual": dual_weight_constant(w, grid, p),
        }
    )
    return row


def cmd_constants(cfg: ExperimentConfig, out=None) -> int:
    out = out or sys.stdout
    tasks = []
    for gspec in cfg.grids:
        grid = cfg.product_grid(gspec)
        for w in cfg.weights:
            for p in cfg.p_values or [None]:
                tasks.append(partial(_constants_row, w, grid, p))
    rows = _run_ordered(tasks)
    for r in rows:
        vals = " ".join(f"{k}={r[k]:.12g}" for k in CONSTANT_FIELDS[4:] if k in r)
        print(f"N={r['N1']}x{r['N2']} w={r['weight_params']} p={r['p']:g} {vals}", file=out)
    write_outputs(cfg, "constants", CONSTANT_FIELDS, rows, {"constants": rows})
    return 0


# -- sweep ---------------------------------------------------------------------


def _sweep_config(cfg: ExperimentConfig, s: dict) -> SweepConfig:
    gspec = s.get("grid", cfg.grids[0] if cfg.grids else 32)
    gspec = gspec if isinstance(gspec, int) else tuple(gspec)
    return SweepConfig(
        inequality=s["inequality"],
        grid=cfg.product_grid(gspec),
        p=float(s.get("p", 1.0)),
        weights=[WeightSpec.from_dict(w) for w in s["weights"]],
        test_fn=TestFn.from_dict(s["test_function"]) if "test_function" in s else None,
        variant=s.get("variant", "strong"),
        op=s.get("op", "slice_x"),
        family=cfg.family,
        slope_tolerance=float(s.get("slope_tolerance", cfg.slope_tolerance)),
        name=s["name"],
    )


def _run_sweep(cfg: ExperimentConfig, i: int, s: dict):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            return sweep_weights(_sweep_config(cfg, s))
        except InvalidArgument as exc:
            raise cfg.error(str(exc), ("sweeps", i)) from None


def cmd_sweep(cfg: ExperimentConfig, out=None) -> int:
    out = out or sys.stdout
    if not cfg.sweeps:
        raise cfg.error("config defines no sweeps", ())
    results = _run_ordered([partial(_run_sweep, cfg, i, s) for i, s in enumerate(cfg.sweeps)])
    rows = []
    for res in results:
        resid = res.residuals or [None] * len(res.rows)
        for r, e in zip(res.rows, resid):
            rows.append(
                {
                    "sweep": res.name,
                    "inequality": res.inequality,
                    "p": res.p,
                    "weight_params": json.dumps(r["weight"], sort_keys=True),
                    "weight_constant": r["weight_constant"],
                    "value": r["value"],
                    "ratio": r["ratio"],
                    "residual": e,
                    "fitted_slope": res.fitted_slope,
                    "theory_exponent": res.theory_exponent,
                    "slope_tolerance": res.slope_tolerance,
                    "degenerate": res.degenerate,
                    "pass": res.passed,
                }
            )
        slope = "degenerate" if res.degenerate else f"{res.fitted_slope:.4f}"
        status = "PASS" if res.passed else "FAIL"
        print(f"{status} {res.name}: slope={slope} bound={res.theory_exponent + res.slope_tolerance:.4f} "
              f"rows={len(res.rows)} skipped={len(res.skipped)}", file=out)
    write_outputs(cfg, "sweep", SWEEP_FIELDS, rows, {"sweeps": [r.to_dict() for r in results]})
    return 0 if all(r.passed for r in results) else 1


# -- oracle --------------------------------------------------------------------


def _oracle_grid(cfg: ExperimentConfig, subject: str):
    n = cfg.oracle.get("cells", 8)
    if n > ORACLE_CAPS[subject]:
        raise cfg.error(f"oracle {subject} is capped at {ORACLE_CAPS[subject]} cells per side, got {n}",
                        ("oracle", "cells"))
    return cfg.product_grid(n)


def cmd_oracle(subject: str, cfg: ExperimentConfig, out=None) -> int:
    out = out or sys.stdout
    grid = _oracle_grid(cfg, subject)
    rng = np.random.default_rng(cfg.seed)
    p = float(cfg.oracle.get("p", 2.0))
    wspec = WeightSpec.from_dict(cfg.oracle.get("weight", {"kind": "power", "a": 0.5, "b": -0.3}))
    payload = {"subject": subject, "grid": grid.to_dict(), "p": p, "weight": wspec.params()}
    if subject == "constants":
        wv = wspec.on(grid).values
        payload["results"] = {
            "ap": oracles.ap_constant(wv, grid, p),
            "a1": oracles.a1_constant(wv, grid),
            "slice_x": oracles.slice_ap_constant(wv, grid, p, "x"),
            "slice_y": oracles.slice_ap_constant(wv, grid, p, "y"),
            "slice_x_a1": oracles.slice_ap_constant(wv, grid, 1.0, "x"),
            "slice_y_a1": oracles.slice_ap_constant(wv, grid, 1.0, "y"),
        }
    elif subject == "maximal":
        vals = rng.random(grid.shape)
        payload["input"] = vals.tolist()
        payload["results"] = {
            "strong": oracles.strong_maximal(vals, grid).tolist(),
            "slice_x": oracles.slice_maximal(vals, grid, "x").tolist(),
            "slice_y": oracles.slice_maximal(vals, grid, "y").tolist(),
        }
    elif subject == "T":
        vals = rng.random(grid.shape)
        depth = cfg.self_cell_depth
        s1 = self_cell_weight(grid.g1.h, depth) if grid.n1 == 2 else 0.0
        s2 = self_cell_weight(grid.g2.h, depth) if grid.n2 == 2 else 0.0
        payload.update({"input": vals.tolist(), "self_cell_depth": depth})
        payload["results"] = {"T": oracles.biparam_T(vals, grid, s1, s2).tolist()}
    else:
        g = GridFn(grid, rng.standard_normal(grid.shape))
        wf = wspec.on(grid)
        n_scan = cfg.oracle.get("n_scan", 4000)
        payload.update({"input": g.values.tolist(), "n_scan": n_scan})
        payload["results"] = {
            "weak_scan": oracles.weak_norm_scan(g, p, wf, n_scan),
            "weak_unweighted_scan": oracles.weak_norm_scan(g, p, None, n_scan),
        }
    path = cfg.out_dir / f"{cfg.stem}.oracle_{subject}.json"
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    doc = _header(cfg, f"oracle_{subject}")
    doc.update(payload)
    path.write_text(json.dumps(_clean(doc), indent=1, sort_keys=True, allow_nan=False) + "\n")
    print(f"wrote {path}", file=out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biparam", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"biparam {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("verify", "run the selected inequality checks and write CSV/JSON reports"),
        ("constants", "print A_p, A_1, slice and dual constants per weight"),
        ("sweep", "fit log-log slopes of weight sweeps"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("config")
        p.add_argument("--out-dir", help="override output.dir from the config")
    p = sub.add_parser("oracle", help="write brute-force fixtures")
    p.add_argument("subject", choices=ORACLE_SUBJECTS)
    p.add_argument("config")
    p.add_argument("--out-dir", help="override output.dir from the config")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load(args.config)
        if args.out_dir:
            cfg.out_dir = Path(args.out_dir)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "constants":
            return cmd_constants(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        return cmd_oracle(args.subject, cfg)
    except ConfigError as exc:
        print(f"error: {exc.diagnostic()}", file=sys.stderr)
        return 2
    except (InvalidArgument, SamplingError, EvaluationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
