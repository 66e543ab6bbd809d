#!/usr/bin/env python3
"""Compare the two workforce parameterizations: how a non-negative stock and a
conveyor change the feedback structure of the same model.

Usage: python scripts/run_workforce.py
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

import numpy as np  # noqa: E402

from sdloops.pipeline import analyze_source  # noqa: E402
from sdloops.simplify import SimplificationParams, build_simplified_cld, summary_table  # noqa: E402

FIXTURES = pathlib.Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def run(tta):
    text = (FIXTURES / "workforce.sdm").read_text()
    bundle = analyze_source(text, path_label="workforce.sdm",
                            overrides={"time_to_adjust": tta}, include_trace=True)
    print(f"\n=== time_to_adjust = {tta} ===")
    flags = np.array(bundle["trace"]["binding"]["Workers"], dtype=bool)
    times = np.array(bundle["time"])
    if flags.any():
        window = times[flags]
        print(f"Workers non-negativity binds for {flags.sum()} steps "
              f"(t = {window.min():g} .. {window.max():g})")
    else:
        print("Workers non-negativity never binds")
    print("active loops:")
    for lp in bundle["loops"]:
        if lp["active"]:
            print(f"  {lp['label']:<4} mean|rel| {lp['mean_abs_relative']:6.2f}%  "
                  + " -> ".join(lp["members"]))
    cld = build_simplified_cld(bundle, SimplificationParams(150, 1.0, True))
    print(summary_table(cld), end="")


def main():
    run(5.0)
    run(2.0)


if __name__ == "__main__":
    main()
