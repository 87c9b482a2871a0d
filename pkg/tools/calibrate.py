"""Regenerate the committed calibration ceilings from the fixture suite at N = 64.

Usage: python tools/calibrate.py [--factor 1.10]
"""

import argparse
import json
from collections import defaultdict
from pathlib import Path

from biparam import suite

OUT = Path(__file__).resolve().parents[1] / "src" / "biparam" / "data" / "calibration_n64.json"


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--factor", type=float, default=1.10)
    ap.add_argument("--cells", type=int, default=64)
    args = ap.parse_args()
    reports = suite.run(args.cells) + suite.run_auxiliary()
    ratios = {}
    worst = defaultdict(float)
    for r in reports:
        key = suite.report_key(r)
        if r.inequality_id in ("maxfrac_L21", "slice_kernel_A1"):
            key += f"|{r.extra.get('axis')}"
        if r.inequality_id == "buckley":
            key += "|weak" if r.extra.get("weak") else "|strong"
        ratios[key] = r.ratio
        worst[r.inequality_id] = max(worst[r.inequality_id], r.ratio)
    doc = {
        "cells": args.cells,
        "factor": args.factor,
        "ceilings": {k: v * args.factor for k, v in sorted(worst.items())},
        "ratios": dict(sorted(ratios.items())),
    }
    OUT.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    print(f"wrote {OUT} ({len(ratios)} ratios)")


if __name__ == "__main__":
    main()
