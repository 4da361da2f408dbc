"""Update rules for SGD, SGD with momentum, RMSProp, Adam, AdamW and AdaBound.

Every rule acts coordinate-wise on a flat parameter vector, so a vector of
``n`` coordinates is equivalent to ``n`` independent scalar runs that share
the step counter.  The Monte-Carlo fallback kernels rely on this.

Epsilon placement is deliberate: RMSProp adds it *inside* the square root,
Adam-family rules add it *outside*.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from fairopt.errors import (
    InvalidParameterError,
    NonFiniteInputError,
    UnsupportedAlgorithmError,
)


class Algorithm(str, enum.Enum):
    SGD = "sgd"
    SGD_MOMENTUM = "sgd_momentum"
    RMSPROP = "rmsprop"
    ADAM = "adam"
    ADAMW = "adamw"
    ADABOUND = "adabound"

    @property
    def code(self) -> int:
        return list(Algorithm).index(self)


ADAPTIVE = (Algorithm.RMSPROP, Algorithm.ADAM, Algorithm.ADAMW, Algorithm.ADABOUND)


@dataclass(frozen=True)
class OptimizerConfig:
    algorithm: Algorithm = Algorithm.SGD
    eta: float = 0.01
    gamma: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    momentum: float = 0.9
    weight_decay: float = 1e-4
    adabound_final_lr: float = 0.1
    adabound_gamma: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if not self.eta > 0:
            raise InvalidParameterError(f"eta must be positive, got {self.eta}")
        for name in ("gamma", "beta1", "beta2"):
            val = getattr(self, name)
            if not 0 < val < 1:
                raise InvalidParameterError(f"{name} must lie in (0, 1), got {val}")
        if not self.epsilon >= 0:
            raise InvalidParameterError(f"epsilon must be non-negative, got {self.epsilon}")
        if not 0 <= self.momentum < 1:
            raise InvalidParameterError(f"momentum must lie in [0, 1), got {self.momentum}")
        if not self.weight_decay >= 0:
            raise InvalidParameterError(f"weight_decay must be non-negative, got {self.weight_decay}")
        if not (self.adabound_final_lr > 0 and self.adabound_gamma > 0):
            raise InvalidParameterError("AdaBound final_lr and gamma must be positive")

    @property
    def label(self) -> str:
        return self.algorithm.value

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["algorithm"] = self.algorithm.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizerConfig":
        return cls(**d)

    def with_(self, **changes) -> "OptimizerConfig":
        return replace(self, **changes)


@dataclass
class OptimizerState:
    w: np.ndarray
    m: np.ndarray = field(default=None)
    v: np.ndarray = field(default=None)
    k: int = 0

    def __post_init__(self):
        self.w = np.array(self.w, dtype=float, ndmin=1)
        self.m = np.zeros_like(self.w) if self.m is None else np.array(self.m, dtype=float, ndmin=1)
        self.v = np.zeros_like(self.w) if self.v is None else np.array(self.v, dtype=float, ndmin=1)
        if self.m.shape != self.w.shape or self.v.shape != self.w.shape:
            raise InvalidParameterError("m and v must have the same shape as w")

    def copy(self) -> "OptimizerState":
        return OptimizerState(self.w.copy(), self.m.copy(), self.v.copy(), self.k)


def init_state(w0) -> OptimizerState:
    return OptimizerState(w0)


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    # a zero numerator never moves the iterate, even when epsilon = 0 leaves den = 0
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=num != 0)
    return out


def adabound_bounds(config: OptimizerConfig, k: int) -> tuple[float, float]:
    """Learning-rate clipping interval of AdaBound at (post-increment) step ``k``."""
    lower = config.adabound_final_lr * (1.0 - 1.0 / (config.adabound_gamma * k + 1.0))
    upper = config.adabound_final_lr * (1.0 + 1.0 / (config.adabound_gamma * k))
    return lower, upper


def step(state: OptimizerState, config: OptimizerConfig, grad, bounds=None) -> OptimizerState:
    """Return the state after one update with gradient ``grad``.

    ``bounds`` overrides AdaBound's clipping interval (used to pin it).
    """
    g = np.asarray(grad, dtype=float)
    if g.ndim == 0:
        g = g.reshape(1)
    if g.shape != state.w.shape:
        raise InvalidParameterError(f"gradient shape {g.shape} does not match parameters {state.w.shape}")
    if not np.all(np.isfinite(g)):
        raise NonFiniteInputError("gradient contains non-finite entries")

    w, m, v = state.w, state.m, state.v
    k = state.k + 1
    alg = config.algorithm
    eta = config.eta

    if alg is Algorithm.SGD:
        return OptimizerState(w - eta * g, m.copy(), v.copy(), k)

    if alg is Algorithm.SGD_MOMENTUM:
        m = config.momentum * m + g
        return OptimizerState(w - eta * m, m, v.copy(), k)

    if alg is Algorithm.RMSPROP:
        gamma = config.gamma
        v = gamma * v + (1.0 - gamma) * (g * g)
        w = w - _safe_ratio(eta * g, np.sqrt(v + config.epsilon))
        return OptimizerState(w, m.copy(), v, k)

    b1, b2 = config.beta1, config.beta2
    if alg is Algorithm.ADAMW:
        w = w - eta * config.weight_decay * w
    m = b1 * m + (1.0 - b1) * g
    v = b2 * v + (1.0 - b2) * (g * g)
    m_hat = m / (1.0 - math.pow(b1, k))
    v_hat = v / (1.0 - math.pow(b2, k))
    denom = np.sqrt(v_hat) + config.epsilon

    if alg is Algorithm.ADABOUND:
        lower, upper = bounds if bounds is not None else adabound_bounds(config, k)
        with np.errstate(divide="ignore"):
            rate = eta / denom
        rate = np.minimum(np.maximum(rate, lower), upper)
        return OptimizerState(w - rate * m_hat, m, v, k)

    return OptimizerState(w - _safe_ratio(eta * m_hat, denom), m, v, k)


def effective_rate(state: OptimizerState, config: OptimizerConfig) -> np.ndarray:
    """Per-coordinate multiplier the adaptive rule applies at the current state."""
    alg = config.algorithm
    if alg not in ADAPTIVE:
        raise UnsupportedAlgorithmError(f"{alg.value} has no second-moment preconditioner")
    with np.errstate(divide="ignore"):
        if alg is Algorithm.RMSPROP:
            return config.eta / np.sqrt(state.v + config.epsilon)
        v_hat = state.v / (1.0 - math.pow(config.beta2, state.k)) if state.k > 0 else state.v
        rate = config.eta / (np.sqrt(v_hat) + config.epsilon)
    if alg is Algorithm.ADABOUND and state.k > 0:
        lower, upper = adabound_bounds(config, state.k)
        rate = np.clip(rate, lower, upper)
    return rate
