#!/usr/bin/env python3
"""Writes a synthetic human-panel label file for metric tests.

Shape of the protocol: 8 classes x 2 test instances x 10 raters = 160
records. The 12 wrong answers are listed explicitly below so every
coherency value in the tests can be recomputed by hand.
This is a fixture, not study data.
"""
import sys
from pathlib import Path

CLASSES = ["Shoot", "Throw", "ChangeWeapon", "Goggles", "Start", "Next", "WindUp", "Tempo"]
RATERS = [f"p{k:02d}" for k in range(1, 11)]

# (instance, rater) -> wrong label
ERRORS = {
    ("test-Shoot-1", "p01"): "Throw",
    ("test-Shoot-1", "p02"): "Throw",
    ("test-Shoot-1", "p03"): "ChangeWeapon",
    ("test-Shoot-1", "p04"): "Start",
    ("test-Shoot-2", "p05"): "Tempo",
    ("test-Shoot-2", "p06"): "Throw",
    ("test-Throw-1", "p07"): "WindUp",
    ("test-Throw-2", "p08"): "Shoot",
    ("test-ChangeWeapon-2", "p09"): "Goggles",
    ("test-Goggles-1", "p01"): "ChangeWeapon",
    ("test-Goggles-1", "p10"): "Next",
    ("test-Start-1", "p02"): "Next",
}


def main(out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lines = ["instance_id,true_label,predicted_label,recognizer_id"]
    for rater in RATERS:
        for cls in CLASSES:
            for k in (1, 2):
                inst = f"test-{cls}-{k}"
                pred = ERRORS.get((inst, rater), cls)
                lines.append(f"{inst},{cls},{pred},human:{rater}")
    (out / "human_labels.csv").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/fixtures")
