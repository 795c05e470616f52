#!/usr/bin/env python3
"""Writes data/networks/feeder69.json, a 69-bus radial feeder with the
standard 69-bus branch layout and synthetic per-unit admittances."""
import json
import math
import sys

import numpy as np

SERIES_SCALE = 5.0
SHUNT_RATIO = 0.05


def branch_layout():
    lines = [(i, i + 1) for i in range(1, 27)]
    lines.append((3, 28)); lines += [(k, k + 1) for k in range(28, 35)]
    lines.append((3, 36)); lines += [(k, k + 1) for k in range(36, 46)]
    lines.append((4, 47)); lines += [(k, k + 1) for k in range(47, 50)]
    lines.append((8, 51)); lines.append((51, 52))
    lines.append((9, 53)); lines += [(k, k + 1) for k in range(53, 65)]
    lines.append((11, 66)); lines.append((66, 67))
    lines.append((12, 68)); lines.append((68, 69))
    return lines


GROUPS = {
    "lateral12": [12, 68, 69],
    "lateral11": [11, 66, 67],
    "lateral9": [9] + list(range(53, 66)),
    "lateral8": [8, 51, 52],
    "lateral4": [4, 47, 48, 49, 50],
    "lateral3": [3] + list(range(28, 36)),
    "lateral36": list(range(36, 47)),
}

LADDER = {
    2: ["lateral12"],
    4: ["lateral12", "lateral11"],
    17: ["lateral12", "lateral11", "lateral9"],
    19: ["lateral12", "lateral11", "lateral8", "lateral9"],
    23: ["lateral12", "lateral11", "lateral8", "lateral4", "lateral9"],
    27: ["lateral12", "lateral11", "lateral8", "lateral3", "lateral9"],
    34: ["lateral12", "lateral11", "lateral8", "lateral4", "lateral36", "lateral9"],
    42: ["lateral12", "lateral11", "lateral8", "lateral4", "lateral3", "lateral36", "lateral9"],
}


def main(out):
    rng = np.random.default_rng(1)
    lines = branch_layout()
    m = len(lines)
    mag = SERIES_SCALE * np.exp(rng.uniform(math.log(0.5), math.log(2.0), m))
    ang = rng.uniform(-1.3, -0.8, m)
    shunt = SHUNT_RATIO * mag * rng.uniform(0.7, 1.3, m)

    doc = {"name": "feeder69", "buses": [{"id": i, "phases": 1} for i in range(1, 70)]}
    doc["lines"] = [
        {
            "id": k + 1, "from": f, "to": t,
            "y_series": [round(mag[k] * math.cos(ang[k]), 12), round(mag[k] * math.sin(ang[k]), 12)],
            "y_shunt_from": [0.0, round(shunt[k], 12)],
            "y_shunt_to": [0.0, round(shunt[k], 12)],
        }
        for k, (f, t) in enumerate(lines)
    ]
    doc["current_meters"] = [{"line": k + 1, "direction": "from_to"} for k in range(m)]
    doc["pmu_buses"] = [1, 27, 35, 46, 50, 52, 67, 69]
    doc["main_chain"] = list(range(1, 28))
    doc["side_chains"] = []
    for name, buses in GROUPS.items():
        inner = set(buses[1:]) if name != "lateral36" else set(buses)
        meters = [k + 1 for k, (_, t) in enumerate(lines) if t in inner]
        doc["side_chains"].append({"name": name, "buses": buses, "meters": meters})
    doc["k_ladder"] = [{"k": k, "groups": g} for k, g in LADDER.items()]

    with open(out, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/networks/feeder69.json")
