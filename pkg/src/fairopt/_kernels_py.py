"""Pure-Python (numpy) implementations of the hot loops.

Each function mirrors one in ``_kernels.pyx`` and must return bit-identical
results: the same IEEE operations in the same order, vectorised across
trials instead of looped.
"""
import numpy as np

from fairopt.optimizers import Algorithm, OptimizerConfig, OptimizerState, step

NAME = "python"


def _config(opt) -> OptimizerConfig:
    code, eta, gamma, beta1, beta2, eps, momentum, wd, final_lr, ab_gamma = opt
    return OptimizerConfig(
        algorithm=list(Algorithm)[int(code)], eta=eta, gamma=gamma, beta1=beta1, beta2=beta2,
        epsilon=eps, momentum=momentum, weight_decay=wd,
        adabound_final_lr=final_lr, adabound_gamma=ab_gamma,
    )


def warmup_paths(w0, uniforms, p0, c0, c1, opt, steps_per_epoch):
    """Run independent scalar trajectories on the two-quadratic mixture.

    ``uniforms[t, s] < p0`` selects subgroup 0 for step ``s`` of trial ``t``.
    Returns the iterate after every epoch (column 0 is the start) and a
    per-trial divergence flag; diverged trials freeze at NaN.
    """
    w0 = np.asarray(w0, dtype=float)
    uniforms = np.asarray(uniforms, dtype=float)
    n_trials, n_steps = uniforms.shape
    epochs = n_steps // steps_per_epoch
    config = _config(opt)

    out = np.empty((n_trials, epochs + 1))
    diverged = ~np.isfinite(w0)
    state = OptimizerState(np.where(diverged, 0.0, w0))
    out[:, 0] = np.where(diverged, np.nan, w0)

    for s in range(n_steps):
        g = state.w - np.where(uniforms[:, s] < p0, c0, c1)
        if diverged.any():
            g[diverged] = 0.0
        with np.errstate(over="ignore", invalid="ignore"):  # overflow is caught just below
            state = step(state, config, g)
        bad = ~np.isfinite(state.w)
        if bad.any():
            diverged |= bad
            state.w[diverged] = 0.0
            state.m[diverged] = 0.0
            state.v[diverged] = 0.0
        if (s + 1) % steps_per_epoch == 0:
            out[:, (s + 1) // steps_per_epoch] = np.where(diverged, np.nan, state.w)
    return out, diverged


def sgd_sde_paths(w0, normals, root, dt, noise, record_every):
    """Euler-Maruyama for dW = -(W - root) dt + noise/sqrt(dt) dB, recorded every ``record_every`` steps."""
    w = np.array(w0, dtype=float)
    normals = np.asarray(normals, dtype=float)
    n_steps = normals.shape[1]
    out = np.empty((w.shape[0], n_steps // record_every + 1))
    out[:, 0] = w
    for n in range(n_steps):
        w = w - dt * (w - root) + noise * normals[:, n]
        if (n + 1) % record_every == 0:
            out[:, (n + 1) // record_every] = w
    return out


def rmsprop_sde_paths(w0, u0, normals, root, sigma, theta, eta, eps, gamma, dt, record_every, drift=1.0):
    """Euler-Maruyama for the coupled (W, u) RMSProp SDE.

    u is clipped at 0 when a step overshoots; the per-path clip count is
    returned alongside the recorded W and u.
    """
    w = np.array(w0, dtype=float)
    u = np.array(u0, dtype=float)
    normals = np.asarray(normals, dtype=float)
    n_paths, n_steps = normals.shape
    noise = theta * eta * np.sqrt(sigma) * np.sqrt(dt)
    relax = (1.0 - gamma) / (eta * eta)
    drift_dt = drift * dt
    w_out = np.empty((n_paths, n_steps // record_every + 1))
    u_out = np.empty_like(w_out)
    w_out[:, 0] = w
    u_out[:, 0] = u
    clipped = np.zeros(n_paths, dtype=np.int64)
    for n in range(n_steps):
        p = theta * eta * np.sqrt(u) + eps * eta
        w = w - (drift_dt * (w - root) + noise * normals[:, n]) / p
        u = u + relax * (sigma - u) * dt
        neg = u < 0.0
        if neg.any():
            u[neg] = 0.0
            clipped += neg
        if (n + 1) % record_every == 0:
            w_out[:, (n + 1) // record_every] = w
            u_out[:, (n + 1) // record_every] = u
    return w_out, u_out, clipped


def signed_rank_null_counts(doubled_ranks):
    """Histogram of doubled W+ over all 2**n sign patterns (enumerated, not recursed)."""
    r = np.asarray(doubled_ranks, dtype=np.int64)
    sums = np.zeros(1, dtype=np.int64)
    for rank in r:
        sums = np.concatenate([sums, sums + rank])
    return np.bincount(sums, minlength=int(r.sum()) + 1)
