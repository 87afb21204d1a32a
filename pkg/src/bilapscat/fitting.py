"""Straight-line fits used to read off scaling exponents."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

__all__ = ["LineFit", "fit_line", "fit_loglog", "fit_semilog"]


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    correlation: float
    npoints: int

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept,
                "correlation": self.correlation, "npoints": self.npoints}


def fit_line(x, y) -> LineFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(x) & np.isfinite(y)
    if ok.sum() < 2:
        raise ValueError("need at least two finite points to fit a line")
    r = stats.linregress(x[ok], y[ok])
    return LineFit(float(r.slope), float(r.intercept), float(r.rvalue), int(ok.sum()))


def fit_loglog(x, y) -> LineFit:
    """Fit ``log y = slope * log x + intercept``."""
    return fit_line(np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float)))


def fit_semilog(x, y) -> LineFit:
    """Fit ``y = slope * log x + intercept``."""
    return fit_line(np.log(np.asarray(x, dtype=float)), y)
