"""Scalar observables and fits: roughness, convergence orders, power laws."""

from __future__ import annotations

import numpy as np

__all__ = [
    "roughness",
    "convergence_order",
    "powerlaw_fit",
    "loglinear_fit",
    "singularity_slope",
]


def roughness(grid, phi):
    """Spatial standard deviation sqrt(mean((phi - mean(phi))^2))."""
    d = phi - grid.mean(phi)
    return float(np.sqrt(grid.integrate(d * d) / grid.area))


def convergence_order(errors, taus):
    """Pairwise experimental orders log(e_i/e_{i+1}) / log(tau_i/tau_{i+1})."""
    errors = np.asarray(errors, dtype=float)
    taus = np.asarray(taus, dtype=float)
    if errors.size != taus.size or errors.size < 2:
        raise ValueError("need matching error/step lists with >= 2 entries")
    return list(np.log(errors[:-1] / errors[1:]) / np.log(taus[:-1] / taus[1:]))


def _window_mask(times, window):
    times = np.asarray(times, dtype=float)
    if window is None:
        return times, np.ones(times.size, dtype=bool)
    lo, hi = window
    return times, (times >= lo) & (times <= hi)


def powerlaw_fit(times, values, window=None):
    """Least-squares fit of log10(values) = intercept + slope * log10(times).

    Exact (zero residual) on exact power laws.  The raw OLS slope is
    returned: negate it for a decay exponent, keep it for a growth rate.
    """
    times, mask = _window_mask(times, window)
    values = np.asarray(values, dtype=float)
    t, y = times[mask], values[mask]
    if t.size < 2:
        raise ValueError("window keeps fewer than 2 samples")
    if np.any(t <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit needs positive times and values")
    slope, intercept = np.polyfit(np.log10(t), np.log10(y), 1)
    return float(slope), float(intercept)


def loglinear_fit(times, values, window=None):
    """OLS fit of values = intercept + slope * log10(times) (semilog decay)."""
    times, mask = _window_mask(times, window)
    values = np.asarray(values, dtype=float)
    t, y = times[mask], values[mask]
    if t.size < 2:
        raise ValueError("window keeps fewer than 2 samples")
    slope, intercept = np.polyfit(np.log10(t), y, 1)
    return float(slope), float(intercept)


def singularity_slope(times_mid, quotients, fraction=0.1, skip=1, min_points=5):
    """Slope of log|difference quotient| vs log(midpoint time) near t = 0.

    A trajectory behaving like d_t phi ~ t^(a-1) shows up as slope a - 1.
    The fit window is the earliest ``fraction`` of the steps (graded meshes
    put only ~10^(1/gamma) points per time decade, so windowing by step
    index keeps enough samples); the first cell is skipped by default since
    its cell average sits visibly off the asymptote.
    """
    times_mid = np.asarray(times_mid, dtype=float)
    quotients = np.asarray(quotients, dtype=float)
    if times_mid.size != quotients.size:
        raise ValueError("times and quotients must have equal length")
    hi = max(int(np.ceil(fraction * times_mid.size)), skip + min_points)
    hi = min(hi, times_mid.size)
    t = times_mid[skip:hi]
    q = np.abs(quotients[skip:hi])
    if t.size < 2:
        raise ValueError("not enough early steps to fit")
    slope, _ = np.polyfit(np.log(t), np.log(q), 1)
    return float(slope)
