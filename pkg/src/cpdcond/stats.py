"""Empirical tail statistics: CCDFs, power-law fits, reference values.

The heavy-tail summary used throughout is the complementary cumulative
distribution c(x) = #{v > x}/n.  A power law c(x) = a*x^(-b) is a
straight line in log-log coordinates, so the fit is a closed-form
least-squares regression restricted to the tail window 1e-3 <= c <= 1e-1;
for this model and loss the regression minimizer coincides with what a
derivative-free search would return, and it is deterministic.

The exact acceptance probabilities for Gaussian n x n x 2 tensors
(Bergqvist's formula, with the Barnes G-function written as a
superfactorial) are included as the analytic reference the sampled
acceptance fractions must reproduce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

FIT_C_LOW = 1e-3
FIT_C_HIGH = 1e-1
_MIN_FIT_POINTS = 10


class TooFewTailPoints(ValueError):
    """Raised when the fit window holds fewer than the minimum points."""

    def __init__(self, points: int):
        super().__init__(
            f"only {points} sample points with c in [{FIT_C_LOW}, {FIT_C_HIGH}]; "
            f"need at least {_MIN_FIT_POINTS}"
        )
        self.points = points


@dataclass(frozen=True)
class EmpiricalCCDF:
    """Exact order-statistics survival function of a finite sample."""

    sorted_values: np.ndarray  # ascending, finite, positive
    n: int

    def __call__(self, x) -> np.ndarray | float:
        counts = self.n - np.searchsorted(self.sorted_values, x, side="right")
        return counts / self.n

    def at_samples(self) -> np.ndarray:
        """c evaluated at each sorted sample point (handles ties)."""
        return self(self.sorted_values)

    def quantile(self, p: float) -> float:
        """Smallest sample value whose tail mass c is at most p."""
        if not 0 <= p <= 1:
            raise ValueError("tail mass must lie in [0, 1]")
        c = self.at_samples()
        # c is nonincreasing along sorted_values; find first index with c <= p
        idx = int(np.searchsorted(-c, -p, side="left"))
        if idx == self.n:
            idx = self.n - 1
        return float(self.sorted_values[idx])


@dataclass(frozen=True)
class TailFit:
    a: float
    b: float
    r_squared: float
    fit_range: tuple[float, float]
    points_used: int


def empirical_ccdf(values) -> EmpiricalCCDF:
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("cannot build a CCDF from an empty sample")
    if not np.all(np.isfinite(v)) or np.any(v <= 0):
        raise ValueError("CCDF values must be finite and positive")
    return EmpiricalCCDF(np.sort(v), v.size)


def fit_tail(ccdf: EmpiricalCCDF) -> TailFit:
    """Least-squares power-law line through the tail window of the CCDF."""
    c = ccdf.at_samples()
    mask = (c >= FIT_C_LOW) & (c <= FIT_C_HIGH)
    points = int(mask.sum())
    if points < _MIN_FIT_POINTS:
        raise TooFewTailPoints(points)
    lx = np.log(ccdf.sorted_values[mask])
    lc = np.log(c[mask])
    slope, intercept = np.polyfit(lx, lc, 1)
    model = slope * lx + intercept
    ss_res = float(np.sum((lc - model) ** 2))
    ss_tot = float(np.sum((lc - lc.mean()) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res == 0.0 else float("-inf")
    else:
        r2 = 1.0 - ss_res / ss_tot
    return TailFit(
        a=float(np.exp(intercept)),
        b=float(-slope),
        r_squared=r2,
        fit_range=(FIT_C_LOW, FIT_C_HIGH),
        points_used=points,
    )


def barnes_g(n: int) -> int:
    """Barnes G at a positive integer: G(n) = 1! 2! ... (n-2)!."""
    if n < 1 or n != int(n):
        raise ValueError("defined here for integers n >= 1")
    g = 1
    fact = 1
    for k in range(1, int(n) - 1):
        fact *= k
        g *= fact
    return g


def bf_probability(n: int) -> float:
    """P(rank = n) for a Gaussian n x n x 2 tensor: Gamma((n+1)/2)^n / G(n+1).

    Evaluated through log-gamma so large n cannot overflow.
    """
    if n < 2:
        raise ValueError("needs n >= 2")
    log_g = sum(math.lgamma(k + 1) for k in range(1, n))
    return math.exp(n * math.lgamma((n + 1) / 2.0) - log_g)


def truncated_mean(values, fit: TailFit, kappa0: float) -> float:
    """Mean estimate: empirical mass below kappa0 plus the fitted tail.

    The analytic tail integral converges only for b > 1; otherwise the
    estimate is infinite and the infinity is returned as the flag.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("empty sample")
    if not (v.min() <= kappa0 <= v.max()):
        raise ValueError("kappa0 must lie within the sampled range")
    if fit.b <= 1.0:
        return float("inf")
    empirical = float(v[v <= kappa0].sum()) / v.size
    tail = fit.a * fit.b * kappa0 ** (1.0 - fit.b) / (fit.b - 1.0)
    return empirical + tail


def fit_report(shape, r: int, which: str, values) -> dict:
    """Fit summary for one condition-number column; infinities counted out."""
    if which not in ("regular", "angular"):
        raise ValueError("which must be 'regular' or 'angular'")
    v = np.asarray(values, dtype=float).ravel()
    finite = v[np.isfinite(v)]
    fit = fit_tail(empirical_ccdf(finite))
    return {
        "shape": str(shape),
        "r": r,
        "which": which,
        "a": fit.a,
        "b": fit.b,
        "r2": fit.r_squared,
        "points_used": fit.points_used,
        "excluded_inf": int(v.size - finite.size),
    }


def write_ccdf_csv(path, ccdf: EmpiricalCCDF) -> None:
    """Two-column plot-ready export: sample value, tail mass."""
    c = ccdf.at_samples()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,c\n")
        for x, cx in zip(ccdf.sorted_values, c):
            fh.write(f"{float(x)!r},{float(cx)!r}\n")
