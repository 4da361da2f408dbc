"""Monte-Carlo dynamics on the two-subgroup problem.

Trial ``t`` always draws from ``SeededStream(master_seed, t)``, so results
do not depend on how trials are split across workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from fairopt import backend
from fairopt.errors import DivergenceError, InvalidParameterError, UndefinedSignError
from fairopt.optimizers import Algorithm, OptimizerConfig
from fairopt.stats import Histogram, SeededStream
from fairopt.subgroups import (
    NgosSpec,
    QuadraticSubgroups,
    sample_ngos_batch,
    sample_subgroup_ngos,
    subgroup_loss,
)

CHUNK = 256


def optimizer_params(config: OptimizerConfig) -> tuple:
    """Flatten an optimizer config into the tuple the kernels take."""
    return (config.algorithm.code, config.eta, config.gamma, config.beta1, config.beta2,
            config.epsilon, config.momentum, config.weight_decay,
            config.adabound_final_lr, config.adabound_gamma)


def _map_chunks(fn, n_items: int, workers: int, chunk: int = CHUNK):
    """Apply ``fn(start, stop)`` over fixed chunks; results come back in order."""
    bounds = [(s, min(s + chunk, n_items)) for s in range(0, n_items, chunk)]
    if workers <= 1 or len(bounds) <= 1:
        return [fn(a, b) for a, b in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ab: fn(*ab), bounds))


@dataclass(frozen=True)
class WarmupConfig:
    model: QuadraticSubgroups = field(default_factory=QuadraticSubgroups)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    trials: int = 1000
    epochs: int = 100
    steps_per_epoch: int = 1
    fair_center: float = 0.0
    fair_threshold: float = 0.2
    w0: float = 0.0
    w0_range: tuple | None = None  # (lo, hi): draw w0 uniformly per trial instead
    master_seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidParameterError(f"trials must be positive, got {self.trials}")
        if self.epochs < 0:
            raise InvalidParameterError(f"epochs must be non-negative, got {self.epochs}")
        if self.steps_per_epoch < 1:
            raise InvalidParameterError("steps_per_epoch must be positive")
        if not self.fair_threshold >= 0:
            raise InvalidParameterError("fair_threshold must be non-negative")
        if self.w0_range is not None:
            lo, hi = self.w0_range
            if not hi >= lo:
                raise InvalidParameterError("w0_range needs lo <= hi")
            object.__setattr__(self, "w0_range", (float(lo), float(hi)))

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(), "optimizer": self.optimizer.to_dict(),
            "trials": self.trials, "epochs": self.epochs, "steps_per_epoch": self.steps_per_epoch,
            "fair_center": self.fair_center, "fair_threshold": self.fair_threshold,
            "w0": self.w0, "w0_range": list(self.w0_range) if self.w0_range else None,
            "master_seed": self.master_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WarmupConfig":
        d = dict(d)
        d["model"] = QuadraticSubgroups(**d["model"])
        d["optimizer"] = OptimizerConfig.from_dict(d["optimizer"])
        if d.get("w0_range") is not None:
            d["w0_range"] = tuple(d["w0_range"])
        return cls(**d)


@dataclass
class TrialRecords:
    """Iterates of every trial after every epoch; column 0 is the start point."""

    iterates: np.ndarray
    diverged: np.ndarray
    config: WarmupConfig

    def membership(self, threshold: float | None = None, center: float | None = None) -> np.ndarray:
        threshold = self.config.fair_threshold if threshold is None else threshold
        center = self.config.fair_center if center is None else center
        # NaN (diverged) compares False, i.e. outside the neighbourhood
        with np.errstate(invalid="ignore"):
            return np.abs(self.iterates - center) < threshold

    def curve(self, threshold: float | None = None, center: float | None = None) -> "ConvergenceCurve":
        counts = self.membership(threshold, center).sum(axis=0)
        return ConvergenceCurve(
            fractions=counts / self.iterates.shape[0],
            trials=self.iterates.shape[0],
            diverged=int(self.diverged.sum()),
            config=self.config,
            threshold=self.config.fair_threshold if threshold is None else threshold,
        )


@dataclass
class ConvergenceCurve:
    fractions: np.ndarray  # index = epoch, entry 0 is before any update
    trials: int
    diverged: int
    config: WarmupConfig
    threshold: float

    @property
    def final(self) -> float:
        return float(self.fractions[-1])


def _trial_inputs(config: WarmupConfig, start: int, stop: int):
    n_steps = config.epochs * config.steps_per_epoch
    w0 = np.empty(stop - start)
    u = np.empty((stop - start, n_steps))
    for i, t in enumerate(range(start, stop)):
        stream = SeededStream(config.master_seed, t)
        if config.w0_range is not None:
            lo, hi = config.w0_range
            w0[i] = lo + (hi - lo) * stream.uniform()
        else:
            w0[i] = config.w0
        u[i] = stream.uniform(n_steps)
    return w0, u


def simulate_warmup(config: WarmupConfig, workers: int = 1) -> TrialRecords:
    model = config.model
    params = optimizer_params(config.optimizer)

    def run(start, stop):
        w0, u = _trial_inputs(config, start, stop)
        return backend.warmup_paths(w0, u, model.p0, model.center_0, model.center_1,
                                    params, config.steps_per_epoch)

    parts = _map_chunks(run, config.trials, workers)
    iterates = np.concatenate([p[0] for p in parts])
    diverged = np.concatenate([p[1] for p in parts]).astype(bool)
    return TrialRecords(iterates, diverged, config)


def run_warmup(config: WarmupConfig, workers: int = 1) -> ConvergenceCurve:
    """Fraction of trials inside ``|w - fair_center| < fair_threshold`` after every epoch."""
    return simulate_warmup(config, workers).curve()


def stationary_histogram(config: WarmupConfig, burn_in: int, samples: int,
                         lo: float | None = None, hi: float | None = None, bins: int = 400) -> Histogram:
    """Histogram of one long trajectory after discarding ``burn_in`` steps."""
    if burn_in <= 0 or samples <= 0:
        raise InvalidParameterError("burn_in and samples must be positive")
    model = config.model
    if lo is None or hi is None:
        lo, hi = model.minimizer - 2.0, model.minimizer + 2.0
    stream = SeededStream(config.master_seed, 0)
    w0 = config.w0 if config.w0_range is None else config.w0_range[0] + (
        config.w0_range[1] - config.w0_range[0]) * stream.uniform()
    u = stream.uniform(burn_in + samples)[None, :]
    path, diverged = backend.warmup_paths(np.array([w0]), u, model.p0, model.center_0, model.center_1,
                                          optimizer_params(config.optimizer), 1)
    if diverged[0]:
        bad = int(np.argmax(~np.isfinite(path[0])))
        raise DivergenceError(f"trajectory diverged at step {bad}", step=bad)
    return Histogram(lo, hi, bins).add_many(path[0, burn_in + 1:])


def integrate_sgd_sde(model: QuadraticSubgroups, eta: float, dt: float, total_time: float,
                      stream: SeededStream, w0: float = 0.0, drift_scale: float = 1.0) -> np.ndarray:
    """Euler-Maruyama path of dW = -drift_scale * grad L_pop(W) dt + sqrt(eta * Sigma) dB.

    ``drift_scale=1`` is the SDE that tracks discrete SGD.  The closed-form
    stationary densities in :mod:`fairopt.analytic` correspond to
    ``drift_scale=0.5``, which doubles the stationary variance.
    """
    if not dt > 0:
        raise InvalidParameterError("dt must be positive")
    if dt > eta:
        raise InvalidParameterError(f"dt ({dt}) must not exceed eta ({eta})")
    n = int(round(total_time / dt))
    noise = math.sqrt(eta * model.gradient_variance) * math.sqrt(dt)
    path = backend.sgd_sde_paths(np.array([float(w0)]), stream.normal((1, n)), model.minimizer,
                                 drift_scale * dt, noise, 1)[0]
    if not np.all(np.isfinite(path)):
        raise DivergenceError("SDE path became non-finite", step=int(np.argmax(~np.isfinite(path))))
    return path


@dataclass
class RmspropSdePath:
    w: np.ndarray
    u: np.ndarray
    clipped_steps: int
    dt: float

    @property
    def clipped(self) -> bool:
        return self.clipped_steps > 0

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.w))


def integrate_rmsprop_sde(model: QuadraticSubgroups, eta: float, gamma: float, theta_global: float,
                          epsilon: float, dt: float, total_time: float, stream: SeededStream,
                          w0: float = 0.0, u0: float | None = None, drift_scale: float = 1.0) -> RmspropSdePath:
    """Euler-Maruyama for the coupled RMSProp SDE

        dW = -P^-1 (grad L_pop(W) dt + Theta eta sqrt(Sigma) dB),   P = Theta eta sqrt(u) + eps eta
        du = (1 - gamma) / eta^2 (Sigma - u) dt

    ``u`` defaults to its fixed point Sigma and is clipped at 0 if a step
    overshoots.  ``drift_scale`` multiplies grad L_pop as in
    :func:`integrate_sgd_sde`.
    """
    if not dt > 0:
        raise InvalidParameterError("dt must be positive")
    sigma = model.gradient_variance
    u0 = sigma if u0 is None else u0
    n = int(round(total_time / dt))
    w, u, clipped = backend.rmsprop_sde_paths(
        np.array([float(w0)]), np.array([float(u0)]), stream.normal((1, n)),
        model.minimizer, sigma, theta_global, eta, epsilon, gamma, dt, 1, drift_scale)
    return RmspropSdePath(w[0], u[0], int(clipped[0]), dt)


@dataclass
class WeakApproximation:
    eta: float
    times: np.ndarray
    sde_mean: np.ndarray
    sgd_mean: np.ndarray
    paths: int

    @property
    def gaps(self) -> np.ndarray:
        return np.abs(self.sde_mean - self.sgd_mean)

    @property
    def max_gap(self) -> float:
        return float(self.gaps.max())


def weak_approximation(model: QuadraticSubgroups, eta: float, horizon: float = 10.0, paths: int = 10_000,
                       master_seed: int = 0, substeps: int = 10, test_fn=None, workers: int = 1) -> WeakApproximation:
    """Compare E[f(W(k eta))] of the SGD SDE with E[f(w_k)] of discrete SGD for k eta <= horizon.

    The SDE runs with ``dt = eta / substeps`` so its own discretisation
    error stays well below the O(eta) gap being measured.
    """
    f = test_fn or (lambda x: x)
    n_sgd = int(round(horizon / eta))
    dt = eta / substeps
    noise = math.sqrt(eta * model.gradient_variance) * math.sqrt(dt)
    params = optimizer_params(OptimizerConfig(algorithm=Algorithm.SGD, eta=eta))

    def run(start, stop):
        u = np.empty((stop - start, n_sgd))
        xi = np.empty((stop - start, n_sgd * substeps))
        for i, p in enumerate(range(start, stop)):
            root = SeededStream(master_seed, p)
            u[i] = root.child(0).uniform(n_sgd)
            xi[i] = root.child(1).normal(n_sgd * substeps)
        zeros = np.zeros(stop - start)
        sgd, _ = backend.warmup_paths(zeros, u, model.p0, model.center_0, model.center_1, params, 1)
        sde = backend.sgd_sde_paths(zeros, xi, model.minimizer, dt, noise, substeps)
        return f(sgd).sum(axis=0), f(sde).sum(axis=0)

    parts = _map_chunks(run, paths, workers)
    sgd_mean = sum(p[0] for p in parts) / paths
    sde_mean = sum(p[1] for p in parts) / paths
    return WeakApproximation(eta, eta * np.arange(n_sgd + 1), sde_mean, sgd_mean, paths)


@dataclass
class TheoremCheckReport:
    analytic_bound: float
    empirical_value: float
    satisfied: bool
    sample_count: int
    condition_met: bool = True
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "analytic_bound": self.analytic_bound, "empirical_value": self.empirical_value,
            "satisfied": self.satisfied, "condition_met": self.condition_met,
            "sample_count": self.sample_count, "details": self.details,
        }


# relative slack for norm comparisons that hold exactly in real arithmetic
NORM_RTOL = 1e-12


def simulate_second_moment(spec: NgosSpec, gamma: float, steps: int, draws: int,
                           stream: SeededStream) -> np.ndarray:
    """RMSProp accumulators v after ``steps`` updates from v0 = 0, for ``draws`` independent runs."""
    v = np.zeros((draws, spec.dim))
    for _ in range(steps):
        g, _ = sample_ngos_batch(spec, stream, (draws,))
        v = gamma * v + (1.0 - gamma) * (g * g)
    return v


def check_theorem2(spec: NgosSpec, gamma: float, epsilon: float, steps: int, draws: int,
                   stream: SeededStream) -> TheoremCheckReport:
    """Empirical check that RMSProp's stationary scaling shrinks subgroup update gaps.

    (a) the diagonal scaling D from the mixture's second moment, (b) Monte-Carlo
    mean of v_k against its limit within 3 standard errors, (c) on fresh
    subgroup pairs, ||D(g0-g1)|| <= max D_jj ||g0-g1|| <= ||g0-g1||.
    """
    if draws < 2 or steps < 1:
        raise InvalidParameterError("need draws >= 2 and steps >= 1")
    if gamma**steps >= 1e-3:
        raise InvalidParameterError(f"steps={steps} too few for gamma={gamma}: gamma**steps must be < 1e-3")
    d = spec.preconditioner(epsilon)
    limit = spec.second_moment()
    condition_met = bool(np.all(d < 1.0))

    v = simulate_second_moment(spec, gamma, steps, draws, stream)
    mc_mean = v.mean(axis=0)
    mc_var = v.var(axis=0, ddof=1)
    se = np.sqrt(mc_var / draws)
    moment_ok = bool(np.all(np.abs(mc_mean - limit) <= 3.0 * se))

    g0 = sample_subgroup_ngos(spec, stream, 0, draws)
    g1 = sample_subgroup_ngos(spec, stream, 1, draws)
    diff = g0 - g1
    scaled = np.linalg.norm(d * diff, axis=1)
    raw = np.linalg.norm(diff, axis=1)
    d_max = float(d.max())
    operator_ok = scaled <= d_max * raw * (1 + NORM_RTOL)
    contraction_ok = scaled <= raw * (1 + NORM_RTOL)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratios = np.where(raw > 0, scaled / raw, 0.0)

    applicable = d_max <= 1.0
    satisfied = moment_ok and bool(operator_ok.all()) and (bool(contraction_ok.all()) if applicable else True)
    mu0, mu1, s0, s1 = spec.arrays()
    return TheoremCheckReport(
        analytic_bound=1.0,
        empirical_value=float(ratios.max()),
        satisfied=satisfied,
        sample_count=draws,
        condition_met=condition_met,
        details={
            "D": d.tolist(),
            "v_limit": limit.tolist(),
            "v_expected_at_steps": ((1 - gamma**steps) * limit).tolist(),
            "v_mc_mean": mc_mean.tolist(),
            "v_mc_standard_error": se.tolist(),
            "v_mc_variance": mc_var.tolist(),
            "v_within_3se": moment_ok,
            "operator_bound_rate": float(operator_ok.mean()),
            "contraction_rate": float(contraction_ok.mean()),
            "contraction_applicable": applicable,
            "noise_dominates_mean": bool(np.all(s0**2 >= mu0**2) and np.all(s1**2 >= mu1**2)),
            "gamma": gamma, "epsilon": epsilon, "steps": steps,
        },
    )


def check_theorem3(model: QuadraticSubgroups, spec: NgosSpec, w: float, eta: float, draws: int,
                   stream: SeededStream, epsilon: float = 0.0, subgroup: int | None = None) -> TheoremCheckReport:
    """One-step demographic-parity-gap bounds for SGD and RMSProp at ``w``.

    Per draw of a stochastic gradient g, compares eta*||D grad Psi||*|g|
    (RMSProp) with eta*||grad Psi||*|g| (SGD), where Psi = L0 - L1, and
    records the first-order gap changes -eta*phi*grad Psi*g and
    -eta*phi*grad Psi*D*g with phi = sign(L0 - L1).  ``subgroup`` pins the
    draws to one subgroup.
    """
    if draws < 1:
        raise InvalidParameterError("draws must be positive")
    if spec.dim != 1:
        raise InvalidParameterError("the quadratic model is scalar; the D spec must be one-dimensional")
    psi = subgroup_loss(model, 0, w) - subgroup_loss(model, 1, w)
    if psi == 0:
        raise UndefinedSignError(f"L0(w) == L1(w) at w={w}; sign of the gap is undefined")
    phi = math.copysign(1.0, psi)
    grad_psi = model.center_1 - model.center_0
    d = spec.preconditioner(epsilon)
    d_val = float(d[0])

    if subgroup is None:
        q = np.where(stream.uniform(draws) < model.p0, 0, 1)
    else:
        q = np.full(draws, subgroup)
    g = w - np.where(q == 0, model.center_0, model.center_1)

    sgd_bound = eta * abs(grad_psi) * np.abs(g)
    rms_bound = eta * abs(d_val * grad_psi) * np.abs(g)
    sgd_change = -eta * phi * grad_psi * g
    rms_change = -eta * phi * grad_psi * d_val * g
    strict = rms_bound < sgd_bound
    within = (np.abs(sgd_change) <= sgd_bound * (1 + NORM_RTOL)) & (np.abs(rms_change) <= rms_bound * (1 + NORM_RTOL))
    with np.errstate(invalid="ignore", divide="ignore"):
        ratios = np.where(sgd_bound > 0, rms_bound / sgd_bound, 0.0)

    condition_met = d_val < 1.0
    # strictness is only promised when every D_jj < 1
    satisfied = bool(within.all()) and (bool(strict.all()) if condition_met else True)
    return TheoremCheckReport(
        analytic_bound=1.0,
        empirical_value=float(ratios.max()),
        satisfied=satisfied,
        sample_count=draws,
        condition_met=condition_met,
        details={
            "D": [d_val], "grad_psi": grad_psi, "phi": phi, "w": w, "eta": eta,
            "strict_rate": float(strict.mean()),
            "bounds_hold_rate": float(within.mean()),
            "sgd_bound_first": float(sgd_bound[0]), "rmsprop_bound_first": float(rms_bound[0]),
            "sgd_bound_mean": float(sgd_bound.mean()), "rmsprop_bound_mean": float(rms_bound.mean()),
            "sgd_change_mean": float(sgd_change.mean()), "rmsprop_change_mean": float(rms_change.mean()),
        },
    )
