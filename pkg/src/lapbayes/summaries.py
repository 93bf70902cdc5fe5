"""Posterior summaries and density grids shared by the CLI and the service."""

from __future__ import annotations

import numpy as np

SUMMARY_PROBS = (0.025, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.975)


def silverman_bandwidth(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    n = x.size
    sd = float(np.std(x, ddof=1)) if n > 1 else 0.0
    q75, q25 = np.percentile(x, [75, 25])
    iqr = float(q75 - q25)
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    if spread <= 0:
        spread = max(abs(float(np.mean(x))), 1.0) * 1e-3
    return 0.9 * spread * n ** (-0.2)


def gaussian_kde_grid(x, n_grid: int = 512, lo=None, hi=None):
    """Gaussian-kernel density on a fixed grid (Silverman bandwidth).

    Returns (grid, pdf); every client renders the same curve.
    """
    x = np.asarray(x, dtype=float)
    h = silverman_bandwidth(x)
    if lo is None:
        lo = float(x.min()) - 3.0 * h
    if hi is None:
        hi = float(x.max()) + 3.0 * h
    grid = np.linspace(lo, hi, n_grid)
    z = (grid[:, None] - x[None, :]) / h
    pdf = np.exp(-0.5 * z * z).sum(axis=1) / (x.size * h * np.sqrt(2.0 * np.pi))
    return grid, pdf


def grid_quantile(grid: np.ndarray, pdf: np.ndarray, p: float) -> float:
    """Quantile of a density grid via trapezoid CDF inversion."""
    widths = np.diff(grid)
    panels = 0.5 * (pdf[1:] + pdf[:-1]) * widths
    cdf = np.concatenate(([0.0], np.cumsum(panels)))
    cdf /= cdf[-1]
    return float(np.interp(p, cdf, grid))


def summarize_batch(batch) -> dict:
    """Mean/sd/quantiles for every parameter column and observable."""
    out: dict = {"parameters": {}, "observables": {}}
    for section, names in (
        ("parameters", batch.column_names),
        ("observables", batch.observable_names),
    ):
        for name in names:
            x = batch.flat(name)
            out[section][name] = {
                "mean": float(np.mean(x)),
                "sd": float(np.std(x, ddof=1)),
                "quantiles": {str(p): float(np.quantile(x, p)) for p in SUMMARY_PROBS},
            }
    return out
