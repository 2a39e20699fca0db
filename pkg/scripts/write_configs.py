#!/usr/bin/env python3
"""Regenerate the bundled experiment configs from the library presets.

Keeps configs/demo.json and configs/bridge.json in lockstep with
riskal.presets; run after changing either."""

import json
from pathlib import Path

from riskal.presets import (
    bridge_decision_process,
    bridge_synthetic_spec,
    demo_decision_process,
    demo_synthetic_spec,
)

ROOT = Path(__file__).resolve().parent.parent


def classifier_section(d: int) -> dict:
    return {
        "m0": [0.0] * d,
        "kappa0": 1.0,
        "v0": float(d + 2),
        "S0": [[1.0 if i == j else 0.0 for j in range(d)] for i in range(d)],
        "alpha": [1.0, 1.0, 1.0, 1.0],
    }


def decision_section(dp) -> dict:
    return {
        "K": dp.n_states,
        "A": dp.n_actions,
        "transitions": [[float(v) for v in t.rows.ravel()] for t in dp.transitions],
        "u_action": [float(v) for v in dp.u_action.values],
        "u_state": [float(v) for v in dp.u_state.values],
        "c_ins": float(dp.c_ins),
    }


def synthetic_section(spec) -> dict:
    doc = {
        "means": [[float(v) for v in c.mean] for c in spec.classes],
        "covariances": [[[float(v) for v in row] for row in c.cov] for c in spec.classes],
        "counts": [c.count for c in spec.classes],
        "seed": spec.seed,
    }
    if spec.segments is not None:
        doc["segments"] = [[label, count] for label, count in spec.segments]
    return doc


def main() -> None:
    demo = {
        "classifier": classifier_section(2),
        "decision": decision_section(demo_decision_process()),
        "run": {
            "order": "random",
            "seed": 1000,
            "initial_fraction": 0.015,
            "repetitions": 100,
            "coverage_enforcement": True,
        },
        "data": {"synthetic": synthetic_section(demo_synthetic_spec()), "standardize": False},
        "outputs": {"directory": "results/demo"},
        "grid": {"nx": 60, "ny": 60, "x_min": -6.6, "x_max": 7.0, "y_min": -1.3, "y_max": 1.6},
    }
    bridge = {
        "classifier": classifier_section(4),
        "decision": decision_section(bridge_decision_process()),
        "run": {
            "order": "sequential",
            "seed": 500,
            "initial_fraction": 0.01,
            "repetitions": 100,
            "coverage_enforcement": True,
        },
        "data": {"synthetic": synthetic_section(bridge_synthetic_spec()), "standardize": True},
        "outputs": {"directory": "results/bridge"},
        "grid": {"nx": 60, "ny": 60},
    }
    out = ROOT / "configs"
    out.mkdir(exist_ok=True)
    for name, doc in (("demo", demo), ("bridge", bridge)):
        path = out / f"{name}.json"
        path.write_text(json.dumps(doc, indent=2) + "\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
