"""Writes the metrics fixtures and their expected indices.

Expected values are computed with exact rational arithmetic (the square root
is taken once, at the end, in double precision).
"""
import json
import math
from fractions import Fraction as F
from pathlib import Path

LAYOUTS = {
    "m00_disjoint": [("title", "0.1", "0.05", "0.8", "0.1"), ("paragraph", "0.1", "0.2", "0.8", "0.3"), ("footer", "0.1", "0.9", "0.8", "0.05")],
    "m01_single": [("figure", "0.2", "0.3", "0.5", "0.4")],
    "m02_corner_overlap": [("paragraph", "0.1", "0.1", "0.3", "0.3"), ("paragraph", "0.3", "0.3", "0.3", "0.3")],
    "m03_identical_three": [("figure", "0.2", "0.2", "0.25", "0.2")] * 3,
    "m04_two_columns": [("title", "0.1", "0.05", "0.8", "0.08"), ("paragraph", "0.1", "0.2", "0.35", "0.6"), ("paragraph", "0.55", "0.2", "0.35", "0.6")],
    "m05_centered": [("title", "0.3", "0.05", "0.4", "0.05"), ("figure", "0.2", "0.15", "0.6", "0.3"), ("paragraph", "0.1", "0.5", "0.8", "0.3")],
    "m06_left_center": [("paragraph", "0.1", "0.1", "0.2", "0.1"), ("paragraph", "0.3", "0.3", "0.2", "0.1")],
    "m07_nested": [("figure", "0.1", "0.1", "0.6", "0.6"), ("paragraph", "0.2", "0.2", "0.2", "0.2"), ("title", "0.5", "0.5", "0.4", "0.4")],
    "m08_staircase": [("paragraph", "0.05", "0.1", "0.3", "0.2"), ("paragraph", "0.25", "0.2", "0.3", "0.2"), ("paragraph", "0.45", "0.3", "0.3", "0.2"), ("page number", "0.9", "0.95", "0.05", "0.03")],
    "m09_touching": [("paragraph", "0.1", "0.1", "0.4", "0.2"), ("paragraph", "0.5", "0.1", "0.4", "0.2"), ("footer", "0.1", "0.3", "0.8", "0.1")],
}


def overlap(boxes):
    total = F(0)
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            a, b = boxes[i], boxes[j]
            ix = min(a[0] + a[2], b[0] + b[2]) - max(a[0], b[0])
            iy = min(a[1] + a[3], b[1] + b[3]) - max(a[1], b[1])
            if ix > 0 and iy > 0:
                total += ix * iy
    return 100 * total


def pop_var(values):
    m = sum(values) / len(values)
    return sum((v - m) ** 2 for v in values) / len(values)


def alignment(boxes):
    if len(boxes) < 2:
        return 0.0
    lefts = [b[0] for b in boxes]
    centers = [b[0] + b[2] / 2 for b in boxes]
    return 100 * math.sqrt(min(pop_var(lefts), pop_var(centers)))


def main():
    out = Path(__file__).parent / "metrics"
    out.mkdir(exist_ok=True)
    expected = {}
    for name, raw in LAYOUTS.items():
        boxes = [tuple(F(v) for v in b[1:]) for b in raw]
        doc = {
            "source_id": name,
            "page": {"width": 1000, "height": 1000},
            "boxes": [
                {"label": b[0], "x": float(b[1]), "y": float(b[2]), "w": float(b[3]), "h": float(b[4])}
                for b in raw
            ],
        }
        (out / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n")
        expected[name] = {"overlap": float(overlap(boxes)), "alignment": alignment(boxes)}
    (out.parent / "metrics_expected.json").write_text(json.dumps(expected, indent=2) + "\n")


if __name__ == "__main__":
    main()
