"""Two-subgroup population: quadratic subgroup losses, the mixture gradient
oracle, Gaussian noisy-gradient oracles and the demographic-parity gap."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from fairopt.errors import InvalidParameterError, ValidationError
from fairopt.stats import SeededStream


@dataclass(frozen=True)
class QuadraticSubgroups:
    """Subgroup ``q`` has loss ``0.5 * (w - center_q)**2`` and sampling weight ``p_q``."""

    p0: float = 0.5
    center_0: float = 1.0
    center_1: float = -1.0

    def __post_init__(self):
        if not 0.0 <= self.p0 <= 1.0:
            raise InvalidParameterError(f"p0 must lie in [0, 1], got {self.p0}")
        if not (math.isfinite(self.center_0) and math.isfinite(self.center_1)):
            raise InvalidParameterError("centers must be finite")

    @property
    def p1(self) -> float:
        return 1.0 - self.p0

    @property
    def centers(self) -> tuple[float, float]:
        return (self.center_0, self.center_1)

    @property
    def minimizer(self) -> float:
        """Root of the population gradient, ``p0*c0 + p1*c1`` (= p0 - p1 for centers +-1)."""
        return self.p0 * self.center_0 + self.p1 * self.center_1

    @property
    def gradient_variance(self) -> float:
        """Variance of the sampled gradient; independent of w (4*p0*p1 for centers +-1)."""
        return self.p0 * self.p1 * (self.center_0 - self.center_1) ** 2

    def to_dict(self) -> dict:
        return {"p0": self.p0, "center_0": self.center_0, "center_1": self.center_1}


def subgroup_loss(model: QuadraticSubgroups, q: int, w: float) -> float:
    if q not in (0, 1):
        raise InvalidParameterError(f"subgroup index must be 0 or 1, got {q}")
    return 0.5 * (w - model.centers[q]) ** 2


def subgroup_gradient(model: QuadraticSubgroups, q: int, w: float) -> float:
    if q not in (0, 1):
        raise InvalidParameterError(f"subgroup index must be 0 or 1, got {q}")
    return w - model.centers[q]


def population_loss(model: QuadraticSubgroups, w: float) -> float:
    return model.p0 * subgroup_loss(model, 0, w) + model.p1 * subgroup_loss(model, 1, w)


def population_gradient(model: QuadraticSubgroups, w: float) -> float:
    return w - model.minimizer


def sample_gradient(model: QuadraticSubgroups, stream: SeededStream, w: float) -> tuple[float, int]:
    """Batch-size-1 gradient: subgroup 0 with probability p0, else subgroup 1."""
    q = 0 if stream.uniform() < model.p0 else 1
    return w - model.centers[q], q


def dp_gap(model: QuadraticSubgroups, w: float) -> float:
    """Loss-based demographic-parity gap ``|L0(w) - L1(w)|``; equals 2|w| for centers +-1."""
    return abs(subgroup_loss(model, 0, w) - subgroup_loss(model, 1, w))


@dataclass(frozen=True)
class NgosSpec:
    """Gaussian noisy gradient oracle for two subgroups.

    A draw from subgroup ``q`` is ``N(mu_q, diag((theta_global * theta_q)**2))``.
    Equal entries in a ``theta`` vector give the isotropic case.
    """

    mu_0: tuple = (1.0,)
    mu_1: tuple = (-1.0,)
    theta_0: tuple = (1.0,)
    theta_1: tuple = (1.0,)
    p0: float = 0.5
    theta_global: float = 1.0

    def __post_init__(self):
        for name in ("mu_0", "mu_1", "theta_0", "theta_1"):
            object.__setattr__(self, name, tuple(float(x) for x in np.atleast_1d(getattr(self, name))))

    @property
    def p1(self) -> float:
        return 1.0 - self.p0

    @property
    def dim(self) -> int:
        return len(self.mu_0)

    def arrays(self):
        return (np.array(self.mu_0), np.array(self.mu_1),
                self.theta_global * np.array(self.theta_0), self.theta_global * np.array(self.theta_1))

    def second_moment(self) -> np.ndarray:
        """Per-coordinate E[g**2] of the mixture: p0(mu0^2 + s0^2) + p1(mu1^2 + s1^2)."""
        mu0, mu1, s0, s1 = self.arrays()
        return self.p0 * (mu0**2 + s0**2) + self.p1 * (mu1**2 + s1**2)

    def preconditioner(self, epsilon: float = 0.0) -> np.ndarray:
        """Diagonal of the stationary RMSProp scaling matrix, 1/sqrt(E[g^2] + eps)."""
        with np.errstate(divide="ignore"):
            return 1.0 / np.sqrt(self.second_moment() + epsilon)

    def to_dict(self) -> dict:
        return {"mu_0": list(self.mu_0), "mu_1": list(self.mu_1), "theta_0": list(self.theta_0),
                "theta_1": list(self.theta_1), "p0": self.p0, "theta_global": self.theta_global}

    @classmethod
    def from_dict(cls, d: dict) -> "NgosSpec":
        return cls(**d)


@dataclass
class ValidationReport:
    checks: dict = field(default_factory=dict)  # condition name -> (passed, note)

    @property
    def ok(self) -> bool:
        return all(passed for passed, _ in self.checks.values())

    @property
    def failures(self) -> list[str]:
        return [name for name, (passed, _) in self.checks.items() if not passed]

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checks": {k: {"passed": p, "note": n} for k, (p, n) in self.checks.items()}}


# bound on sqrt(Sigma) used for the boundedness condition
COVARIANCE_ROOT_BOUND = 1e6


def validate_ngos(spec: NgosSpec) -> ValidationReport:
    """Check the well-behavedness conditions that can be checked for a Gaussian oracle.

    The Lipschitz and smoothness conditions hold structurally because the
    oracle's mean and covariance do not depend on w; the skewness and
    moment conditions hold analytically for Gaussians and are reported as
    such rather than tested.
    """
    r = ValidationReport()
    dims = {len(spec.mu_0), len(spec.mu_1), len(spec.theta_0), len(spec.theta_1)}
    r.checks["dimensions"] = (len(dims) == 1 and spec.dim > 0, f"dimensions {sorted(dims)}")
    r.checks["probability"] = (0.0 < spec.p0 < 1.0, f"p0 = {spec.p0}")
    values = spec.mu_0 + spec.mu_1 + spec.theta_0 + spec.theta_1 + (spec.theta_global,)
    r.checks["finite_parameters"] = (all(math.isfinite(x) for x in values), "all parameters finite")
    scales = spec.theta_0 + spec.theta_1 + (spec.theta_global,)
    r.checks["nonnegative_noise_scales"] = (all(x >= 0 for x in scales), "noise scales >= 0")
    r.checks["lipschitz_gradient"] = (True, "mean gradient is constant in w")
    roots = [abs(spec.theta_global * x) for x in spec.theta_0 + spec.theta_1]
    bounded = all(math.isfinite(x) and x <= COVARIANCE_ROOT_BOUND for x in roots)
    r.checks["bounded_covariance_root"] = (bounded, f"max sqrt(Sigma) entry <= {COVARIANCE_ROOT_BOUND:g}")
    r.checks["smooth_polynomial_growth"] = (True, "mean and covariance constant in w")
    r.checks["low_skewness"] = (True, "Gaussian: third central moment is zero")
    r.checks["bounded_moments"] = (True, "Gaussian: all moments finite")
    return r


def sample_ngos_gradient(spec: NgosSpec, stream: SeededStream) -> tuple[np.ndarray, int]:
    report = validate_ngos(spec)
    if not report.ok:
        raise ValidationError(f"invalid NGOS spec: {', '.join(report.failures)}")
    mu0, mu1, s0, s1 = spec.arrays()
    q = 0 if stream.uniform() < spec.p0 else 1
    mu, s = (mu0, s0) if q == 0 else (mu1, s1)
    return mu + s * stream.normal(spec.dim), q


def sample_ngos_batch(spec: NgosSpec, stream: SeededStream, shape) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised draws: gradients of shape ``shape + (dim,)`` and subgroup labels of shape ``shape``."""
    report = validate_ngos(spec)
    if not report.ok:
        raise ValidationError(f"invalid NGOS spec: {', '.join(report.failures)}")
    mu0, mu1, s0, s1 = spec.arrays()
    shape = tuple(np.atleast_1d(shape))
    q = (stream.uniform(shape) >= spec.p0).astype(np.int8)
    z = stream.normal(shape + (spec.dim,))
    sel = q[..., None] == 0
    return np.where(sel, mu0, mu1) + np.where(sel, s0, s1) * z, q


def sample_subgroup_ngos(spec: NgosSpec, stream: SeededStream, q: int, n: int) -> np.ndarray:
    """``n`` draws from one subgroup's Gaussian."""
    mu0, mu1, s0, s1 = spec.arrays()
    mu, s = (mu0, s0) if q == 0 else (mu1, s1)
    return mu + s * stream.normal((n, spec.dim))
