"""Preferred-value component series and nearest-value rounding."""
from __future__ import annotations

import math

E24 = (1.0, 1.1, 1.2, 1.3, 1.5, 1.6, 1.8, 2.0, 2.2, 2.4, 2.7, 3.0,
       3.3, 3.6, 3.9, 4.3, 4.7, 5.1, 5.6, 6.2, 6.8, 7.5, 8.2, 9.1)

E96 = tuple(v / 100 for v in (
    100, 102, 105, 107, 110, 113, 115, 118, 121, 124, 127, 130, 133, 137, 140, 143,
    147, 150, 154, 158, 162, 165, 169, 174, 178, 182, 187, 191, 196, 200, 205, 210,
    215, 221, 226, 232, 237, 243, 249, 255, 261, 267, 274, 280, 287, 294, 301, 309,
    316, 324, 332, 340, 348, 357, 365, 374, 383, 392, 402, 412, 422, 432, 442, 453,
    464, 475, 487, 499, 511, 523, 536, 549, 562, 576, 590, 604, 619, 634, 649, 665,
    681, 698, 715, 732, 750, 768, 787, 806, 825, 845, 866, 887, 909, 931, 953, 976))

SERIES = {"e24": E24, "e96": E96, "none": None}


def round_to_series(value: float, series: str = "e24") -> tuple[float, float]:
    """Geometrically nearest series value and the relative error ``(rounded - value) / value``."""
    if not value > 0 or not math.isfinite(value):
        raise ValueError("component values must be positive and finite")
    key = series.lower()
    if key not in SERIES:
        raise ValueError(f"unknown series '{series}'")
    table = SERIES[key]
    if table is None:
        return value, 0.0
    decade = math.floor(math.log10(value))
    best, best_d = value, math.inf
    for e in (decade - 1, decade, decade + 1):
        scale = 10.0 ** e
        for m in table:
            # round the product so 2.2 * 1e3 prints as 2200.0
            cand = float(f"{m * scale:.3g}")
            d = abs(math.log(cand / value))
            if d < best_d - 1e-15:
                best, best_d = cand, d
    return best, (best - value) / value
