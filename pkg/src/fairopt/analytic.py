"""Closed-form stationary densities of RMSProp and SGD on the two-quadratic
warm-up problem, the fairness threshold, and the density ratio at the fair
minimum w = 0.

Both densities are Gaussians centred on ``p0 - p1``:

    p_rms(w) = sqrt(kappa/pi)    * exp(-kappa    * (w - (p0 - p1))**2),  kappa    = 1 / (4 eta Theta sqrt(p0 p1))
    p_sgd(w) = sqrt(vartheta/pi) * exp(-vartheta * (w - (p0 - p1))**2),  vartheta = 1 / (8 eta p0 p1)
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from fairopt.errors import InvalidParameterError, UndefinedThresholdError


@dataclass(frozen=True)
class StationaryParams:
    p0: float
    eta: float
    theta_global: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.p0 < 1.0:
            raise InvalidParameterError(f"p0 must lie in (0, 1), got {self.p0}")
        if not self.eta > 0:
            raise InvalidParameterError(f"eta must be positive, got {self.eta}")
        if not self.theta_global > 0:
            raise InvalidParameterError(f"theta_global must be positive, got {self.theta_global}")

    @property
    def p1(self) -> float:
        return 1.0 - self.p0

    @property
    def kappa(self) -> float:
        return 1.0 / (4.0 * self.eta * self.theta_global * math.sqrt(self.p0 * self.p1))

    @property
    def vartheta(self) -> float:
        return 1.0 / (8.0 * self.eta * self.p0 * self.p1)

    @property
    def mean(self) -> float:
        return self.p0 - self.p1

    def to_dict(self) -> dict:
        return {"p0": self.p0, "eta": self.eta, "theta_global": self.theta_global}


def _gaussian(precision: float, mean: float, w):
    return np.sqrt(precision / np.pi) * np.exp(-precision * (np.asarray(w, dtype=float) - mean) ** 2)


def density_rmsprop(params: StationaryParams, w):
    out = _gaussian(params.kappa, params.mean, w)
    return float(out) if np.ndim(out) == 0 else out


def density_sgd(params: StationaryParams, w):
    out = _gaussian(params.vartheta, params.mean, w)
    return float(out) if np.ndim(out) == 0 else out


def delta_threshold(params: StationaryParams) -> float:
    """Bias level above which RMSProp puts more density on w = 0 than SGD.

    Raises :class:`UndefinedThresholdError` when kappa == vartheta (only at
    p0 = 0.5 for Theta = 1), where the closed form is 0/0.
    """
    k, t = params.kappa, params.vartheta
    if t == k or math.isclose(t, k, rel_tol=1e-15, abs_tol=0.0):
        raise UndefinedThresholdError(f"threshold undefined: kappa == vartheta at p0={params.p0}")
    return math.sqrt(0.5 * math.log(t / k) / (t - k))


def ratio_at_fair_min(params: StationaryParams) -> float:
    """p_rms(0) / p_sgd(0) in closed form."""
    k, t, m = params.kappa, params.vartheta, params.mean
    log_ratio = 0.5 * math.log(k / t) + (t - k) * m * m
    # strongly imbalanced, tiny-eta settings overflow a double; report inf
    return math.exp(log_ratio) if log_ratio < 709.0 else math.inf


def rmsprop_favours_fair_min(params: StationaryParams) -> bool:
    """Theorem-1 prediction: ``|p0 - p1| > Delta``."""
    return abs(params.mean) > delta_threshold(params)


def neighbourhood_mass(params: StationaryParams, center: float, radius: float) -> tuple[float, float]:
    """Stationary probability of ``|w - center| < radius`` under (RMSProp, SGD)."""

    def mass(precision):
        s = 1.0 / math.sqrt(2.0 * precision)
        lo = (center - radius - params.mean) / (s * math.sqrt(2.0))
        hi = (center + radius - params.mean) / (s * math.sqrt(2.0))
        return 0.5 * (math.erf(hi) - math.erf(lo))

    return mass(params.kappa), mass(params.vartheta)


def quadrature_moments(params: StationaryParams, which: str, panels: int = 10_000, width: float = 8.0):
    """Zeroth and first moment of a density by composite Simpson over mean +- width stddevs."""
    precision = {"rmsprop": params.kappa, "sgd": params.vartheta}[which]
    s = 1.0 / math.sqrt(2.0 * precision)
    grid = np.linspace(params.mean - width * s, params.mean + width * s, panels + 1)
    pdf = _gaussian(precision, params.mean, grid)
    return float(simpson(pdf, x=grid)), float(simpson(grid * pdf, x=grid))


def density_grid(params: StationaryParams, points: int = 401, half_width: float | None = None):
    """Evaluation grid for plotting; default half width is 5/sqrt(min(kappa, vartheta))."""
    if half_width is None:
        half_width = 5.0 / math.sqrt(min(params.kappa, params.vartheta))
    w = np.linspace(params.mean - half_width, params.mean + half_width, points)
    return w, density_rmsprop(params, w), density_sgd(params, w)
