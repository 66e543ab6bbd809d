#!/usr/bin/env python3
"""Walk the three classroom population models and print what drives each one.

Usage: python scripts/run_pedagogy.py
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from sdloops.pipeline import analyze_source  # noqa: E402

FIXTURES = pathlib.Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def show(title, bundle, sample_times=(0.25, 0.5, 0.75)):
    print(f"\n=== {title} ===")
    steps = bundle["sim"]["steps"]
    times = bundle["time"]
    header = "loop    label  mean|rel|  " + "  ".join(
        f"t={times[int(f * steps)]:<6g}" for f in sample_times)
    print(header)
    for lp in bundle["loops"]:
        cells = "  ".join(f"{lp['relative'][int(f * steps)]:+8.2f}" for f in sample_times)
        members = " -> ".join(lp["members"])
        print(f"{lp['id']:<7} {lp['label']:<6} {lp['mean_abs_relative']:8.2f}  {cells}   {members}")
    if not any(lp["active"] for lp in bundle["loops"]):
        print("  (no loops active: the model is in equilibrium)")


def main():
    fig4 = analyze_source((FIXTURES / "figure4.sdm").read_text(), path_label="figure4.sdm")
    show("births only: one reinforcing loop explains everything", fig4)

    fig5 = analyze_source((FIXTURES / "figure5.sdm").read_text(), path_label="figure5.sdm")
    show("births + deaths (lifetime 20): growth still wins, 2:1", fig5)

    eq = analyze_source((FIXTURES / "figure5.sdm").read_text(), path_label="figure5.sdm",
                        overrides={"lifetime": 10.0})
    show("births + deaths (lifetime 10): perfect equilibrium", eq)

    fig7 = analyze_source((FIXTURES / "figure7.sdm").read_text(), path_label="figure7.sdm")
    show("carrying capacity: dominance shifts to the crowding loop", fig7,
         sample_times=(0.05, 0.5, 1.0))


if __name__ == "__main__":
    main()
