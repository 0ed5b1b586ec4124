"""Synthetic dealership-like panel used by the examples and the acceptance suite.

Each dealer contributes ``months`` rows of KPI readings. Dealers belong to
one of several latent segments whose profitability (``P``) and sales
effectiveness (``SE``) respond differently to the KPIs. Two KPIs are
deliberately collinear and a small share of KPI cells is blanked out.

Regenerate the packaged file with ``python -m fmrbench.demo``.
"""
from __future__ import annotations

import sys
from importlib import resources
from pathlib import Path

import numpy as np

from ._io import csv_text

KPI_NAMES = tuple(f"kpi{j}" for j in range(1, 7))

# Per-segment coefficients on the six KPIs.
P_COEF = np.array([
    [1.2, 0.0, -0.8, 0.5, 0.0, 0.3],
    [-0.6, 0.9, 0.4, 0.0, 0.7, -0.2],
    [0.2, -0.7, 0.0, -0.9, 0.4, 0.8],
])
SE_COEF = np.array([
    [-0.5, 0.6, 0.4, 0.0, 0.3, 0.0],
    [0.8, -0.4, 0.0, 0.5, -0.3, 0.2],
    [0.3, 0.5, -0.6, 0.4, 0.0, -0.5],
])


def dealership_demo(seed: int = 2024, dealers_per_segment: int = 12, months: int = 48,
                    noise: float = 0.6, missing_rate: float = 0.02) -> str:
    """Return the demo panel as CSV text."""
    rng = np.random.default_rng(seed)
    header = ["dealer", "segment", *KPI_NAMES, "P", "SE"]
    rows = []
    n_seg = P_COEF.shape[0]
    for seg in range(n_seg):
        for d in range(dealers_per_segment):
            dealer = f"D{seg * dealers_per_segment + d + 1:03d}"
            level = rng.normal(0.0, 0.5, size=len(KPI_NAMES))
            X = level + rng.standard_normal((months, len(KPI_NAMES)))
            X[:, 1] = 0.6 * X[:, 0] + 0.8 * rng.standard_normal(months) + level[1]
            P = 10.0 + X @ P_COEF[seg] + noise * rng.standard_normal(months)
            SE = 100.0 + 8.0 * (X @ SE_COEF[seg]) + 8.0 * noise * rng.standard_normal(months)
            kpis = 50.0 + 10.0 * X
            blank = rng.random(kpis.shape) < missing_rate
            for t in range(months):
                cells = ["" if blank[t, j] else f"{kpis[t, j]:.4f}" for j in range(len(KPI_NAMES))]
                rows.append([dealer, str(seg), *cells, f"{P[t]:.4f}", f"{SE[t]:.4f}"])
    # dealers appear interleaved, as in a monthly extract
    order = sorted(range(len(rows)), key=lambda i: (i % months, i // months))
    return csv_text(header, [rows[i] for i in order])


def demo_csv_path() -> Path:
    return Path(str(resources.files("fmrbench") / "datasets" / "dealership_demo.csv"))


if __name__ == "__main__":
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else demo_csv_path()
    out.write_text(dealership_demo(), encoding="utf-8")
    print(out)
