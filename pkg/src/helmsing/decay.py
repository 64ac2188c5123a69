"""Log-log regression of window maxima, shared by harmonic and asymptotics."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, FitError


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    residual: float
    window: tuple
    tail_bound: Optional[float] = None
    radii: Optional[np.ndarray] = None
    maxima: Optional[np.ndarray] = None

    def as_dict(self):
        out = {
            "slope": self.slope,
            "intercept": self.intercept,
            "residual": self.residual,
            "window": list(self.window),
            "tail_bound": self.tail_bound,
        }
        if self.radii is not None:
            out["radii"] = [float(v) for v in self.radii]
            out["maxima"] = [float(v) for v in self.maxima]
        return out


def dyadic_edges(r_min, r_max, windows):
    """Geometric window edges; every window has ratio at least 2."""
    if windows < 1 or r_min <= 0 or r_max <= r_min:
        raise DomainError("need 0 < r_min < r_max and windows >= 1")
    if r_max / r_min < 2.0 ** windows * (1 - 1e-12):
        raise DomainError("window ratio below 2")
    return r_min * (r_max / r_min) ** (np.arange(windows + 1) / windows)


def fit_window_maxima(radii, values, edges, extra_radii=None, extra_values=None):
    """Regress log(max |value| per window) against log(lower edge)."""
    radii = np.asarray(radii, dtype=float)
    mags = np.abs(np.asarray(values))
    if extra_radii is not None and len(extra_radii):
        radii = np.concatenate([radii, np.asarray(extra_radii, dtype=float)])
        mags = np.concatenate([mags, np.abs(np.asarray(extra_values))])
    maxima = np.empty(len(edges) - 1)
    for i in range(len(edges) - 1):
        sel = (radii >= edges[i]) & (radii <= edges[i + 1])
        if not np.any(sel):
            raise FitError(f"no samples in window [{edges[i]:.3g}, {edges[i + 1]:.3g}]")
        maxima[i] = mags[sel].max()
    return fit_power_law(edges[:-1], maxima, window=(float(edges[0]), float(edges[-1])))


def fit_power_law(radii, maxima, window=None):
    radii = np.asarray(radii, dtype=float)
    maxima = np.asarray(maxima, dtype=float)
    if np.any(maxima <= 0) or not np.all(np.isfinite(maxima)):
        raise FitError("degenerate (zero or non-finite) samples")
    x = np.log(radii)
    y = np.log(maxima)
    if x.size < 2:
        raise FitError("need at least two windows")
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    if window is None:
        window = (float(radii[0]), float(radii[-1]))
    return DecayFit(float(slope), float(intercept), resid, window, None, radii, maxima)
