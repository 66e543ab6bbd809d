#!/usr/bin/env python3
"""Regenerate the browser explorer's parity fixtures.

For every fixture model this writes the analysis bundle plus the expected
simplification results over a 5x5 threshold grid (both keep-flows settings),
as produced by the reference pipeline. The explorer's test suite replays the
grid through its own TypeScript implementation and requires identical sets.

Usage: python scripts/make_golden.py
"""

import json
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from sdloops.bundle import dumps_bundle  # noqa: E402
from sdloops.pipeline import analyze_source  # noqa: E402
from sdloops.simplify import SimplificationParams, build_simplified_cld  # noqa: E402

ROOT = pathlib.Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "tests" / "fixtures"
OUT = ROOT / "frontend" / "test" / "fixtures"

GRID = [0.0, 1.0, 5.0, 20.0, 150.0]

CASES = [
    ("figure4", "figure4.sdm", {}),
    ("figure5", "figure5.sdm", {}),
    ("figure5_eq", "figure5.sdm", {"lifetime": 10.0}),
    ("figure7", "figure7.sdm", {}),
    ("workforce", "workforce.sdm", {}),
    ("workforce_tight", "workforce.sdm", {"time_to_adjust": 2.0}),
    ("figure2", "figure2.sdm", {}),
    ("delay3_step", "delay3_step.sdm", {}),
    ("smooth1", "smooth1.sdm", {}),
    ("chain", "chain.sdm", {}),
]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for stem, model_name, overrides in CASES:
        text = (FIXTURES / model_name).read_text()
        bundle = analyze_source(text, path_label=model_name, overrides=overrides)
        (OUT / f"{stem}.analysis.json").write_text(dumps_bundle(bundle))

        cases = []
        for keep_flows in (True, False):
            for link_t in GRID:
                for loop_t in GRID:
                    cld = build_simplified_cld(
                        bundle, SimplificationParams(link_t, loop_t, keep_flows))
                    cases.append({
                        "params": {"link_threshold": link_t, "loop_threshold": loop_t,
                                   "keep_flows": keep_flows},
                        "retained": cld["retained"],
                        "links": sorted([l["source"], l["target"]] for l in cld["links"]),
                        "link_polarities": {f"{l['source']}->{l['target']}": l["polarity"]
                                            for l in cld["links"]},
                        "loops": sorted(lp["members"] for lp in cld["loops"]),
                        "labels": sorted(lp["label"] for lp in cld["loops"]),
                        "explained": cld["explained_pct"],
                    })
        (OUT / f"{stem}.golden.json").write_text(
            json.dumps({"bundle": f"{stem}.analysis.json", "cases": cases},
                       sort_keys=True, separators=(",", ":")) + "\n")
        print(f"wrote {stem}: bundle + {len(cases)} grid cases")


if __name__ == "__main__":
    main()
