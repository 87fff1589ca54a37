#!/usr/bin/env python3
"""Writes a small synthetic recording in the MSRC-12 text layout.

One skeleton file (timestamp + 20 joints x [x y z w], 30 Hz) with nine
tagged gestures: the eight upper-limb lexicon classes and one 'Kick' that
the loader is expected to skip.
"""
import math
import sys
from pathlib import Path

CLASSES = ["Shoot", "Throw", "ChangeWeapon", "Goggles", "Start", "Next", "WindUp", "Tempo", "Kick"]
HAND_LEFT, HAND_RIGHT = 7, 11
RATE = 30.0
SEGMENT = 3.0  # seconds per gesture slot


def hands(cls, s):
    """Left/right hand positions at phase s in [0, 1]."""
    left = [-0.2, 0.0, 2.0]
    right = [0.2, 0.0, 2.0]
    bump = math.sin(math.pi * s)
    if cls == "Shoot":
        left[2] -= 0.4 * bump
        right[2] -= 0.4 * bump
    elif cls == "Throw":
        right[1] += 0.4 * math.sin(2 * math.pi * s)
        right[2] -= 0.3 * s
    elif cls == "ChangeWeapon":
        right[0] -= 0.3 * bump
        right[1] += 0.2 * bump
    elif cls == "Goggles":
        left[1] += 0.5 * bump
        right[1] += 0.5 * bump
    elif cls == "Start":
        left[0] -= 0.4 * bump
        right[0] += 0.4 * bump
        left[1] += 0.3 * bump
        right[1] += 0.3 * bump
    elif cls == "Next":
        right[0] += 0.5 * s
    elif cls == "WindUp":
        right[0] += 0.15 * math.cos(4 * math.pi * s)
        right[1] += 0.15 * math.sin(4 * math.pi * s)
    elif cls == "Tempo":
        left[1] += 0.2 * math.sin(4 * math.pi * s)
        right[1] += 0.2 * math.sin(4 * math.pi * s)
    elif cls == "Kick":
        pass
    return left, right


def main(out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows, tags = [], []
    frames_per_slot = int(SEGMENT * RATE)
    for k, cls in enumerate(CLASSES):
        t0 = k * SEGMENT
        tags.append(f"{t0 + SEGMENT / 2:.4f};{cls}")
        for i in range(frames_per_slot):
            t = t0 + i / RATE
            s = min(max((i / RATE - 0.5) / 2.0, 0.0), 1.0)
            left, right = hands(cls, s)
            vals = [f"{t:.4f}"]
            for j in range(20):
                p = left if j == HAND_LEFT else right if j == HAND_RIGHT else [0.0, 0.1 * j, 2.2]
                vals += [f"{p[0]:.6f}", f"{p[1]:.6f}", f"{p[2]:.6f}", "2"]
            rows.append(" ".join(vals))
    (out / "msrc12_sample.txt").write_text("\n".join(rows) + "\n")
    (out / "msrc12_sample.tagstream").write_text("XQPCTick;Tag\n" + "\n".join(tags) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/fixtures")
