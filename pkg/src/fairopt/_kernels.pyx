# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops; see _kernels_py.py for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow, isfinite, fmin, fmax, NAN

cnp.import_array()

NAME = "cython"

# codes follow the declaration order of optimizers.Algorithm
cdef enum:
    SGD = 0
    SGD_MOMENTUM = 1
    RMSPROP = 2
    ADAM = 3
    ADAMW = 4
    ADABOUND = 5


cdef inline double _ratio(double num, double den) noexcept nogil:
    if num == 0.0:
        return 0.0
    return num / den


def warmup_paths(w0, uniforms, double p0, double c0, double c1, opt, Py_ssize_t steps_per_epoch):
    cdef double[::1] w0v = np.ascontiguousarray(w0, dtype=np.float64)
    cdef double[:, ::1] u = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef Py_ssize_t n_trials = u.shape[0], n_steps = u.shape[1]
    cdef Py_ssize_t epochs = n_steps // steps_per_epoch
    out_arr = np.empty((n_trials, epochs + 1))
    div_arr = np.zeros(n_trials, dtype=np.bool_)
    cdef double[:, ::1] out = out_arr
    cdef cnp.uint8_t[::1] div = div_arr.view(np.uint8)

    cdef int code = int(opt[0])
    cdef double eta = opt[1], gamma = opt[2], b1 = opt[3], b2 = opt[4], eps = opt[5]
    cdef double mom = opt[6], wd = opt[7], final_lr = opt[8], ab_gamma = opt[9]

    cdef Py_ssize_t t, s
    cdef double w, m, v, g, k, m_hat, v_hat, denom, rate, lower, upper
    cdef bint dead

    with nogil:
        for t in range(n_trials):
            w = w0v[t]
            m = 0.0
            v = 0.0
            dead = not isfinite(w)
            out[t, 0] = NAN if dead else w
            for s in range(n_steps):
                if not dead:
                    g = w - (c0 if u[t, s] < p0 else c1)
                    k = <double>(s + 1)
                    if code == SGD:
                        w = w - eta * g
                    elif code == SGD_MOMENTUM:
                        m = mom * m + g
                        w = w - eta * m
                    elif code == RMSPROP:
                        v = gamma * v + (1.0 - gamma) * (g * g)
                        w = w - _ratio(eta * g, sqrt(v + eps))
                    else:
                        if code == ADAMW:
                            w = w - eta * wd * w
                        m = b1 * m + (1.0 - b1) * g
                        v = b2 * v + (1.0 - b2) * (g * g)
                        m_hat = m / (1.0 - pow(b1, k))
                        v_hat = v / (1.0 - pow(b2, k))
                        denom = sqrt(v_hat) + eps
                        if code == ADABOUND:
                            lower = final_lr * (1.0 - 1.0 / (ab_gamma * k + 1.0))
                            upper = final_lr * (1.0 + 1.0 / (ab_gamma * k))
                            rate = fmin(fmax(eta / denom, lower), upper)
                            w = w - rate * m_hat
                        else:
                            w = w - _ratio(eta * m_hat, denom)
                    if not isfinite(w):
                        dead = True
                        div[t] = 1
                if (s + 1) % steps_per_epoch == 0:
                    out[t, (s + 1) // steps_per_epoch] = NAN if dead else w
    return out_arr, div_arr


def sgd_sde_paths(w0, normals, double root, double dt, double noise, Py_ssize_t record_every):
    cdef double[::1] w0v = np.ascontiguousarray(w0, dtype=np.float64)
    cdef double[:, ::1] xi = np.ascontiguousarray(normals, dtype=np.float64)
    cdef Py_ssize_t n_paths = xi.shape[0], n_steps = xi.shape[1]
    out_arr = np.empty((n_paths, n_steps // record_every + 1))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t p, n
    cdef double w
    with nogil:
        for p in range(n_paths):
            w = w0v[p]
            out[p, 0] = w
            for n in range(n_steps):
                w = w - dt * (w - root) + noise * xi[p, n]
                if (n + 1) % record_every == 0:
                    out[p, (n + 1) // record_every] = w
    return out_arr


def rmsprop_sde_paths(w0, u0, normals, double root, double sigma, double theta, double eta,
                      double eps, double gamma, double dt, Py_ssize_t record_every, double drift=1.0):
    cdef double[::1] w0v = np.ascontiguousarray(w0, dtype=np.float64)
    cdef double[::1] u0v = np.ascontiguousarray(u0, dtype=np.float64)
    cdef double[:, ::1] xi = np.ascontiguousarray(normals, dtype=np.float64)
    cdef Py_ssize_t n_paths = xi.shape[0], n_steps = xi.shape[1]
    w_arr = np.empty((n_paths, n_steps // record_every + 1))
    u_arr = np.empty_like(w_arr)
    clip_arr = np.zeros(n_paths, dtype=np.int64)
    cdef double[:, ::1] w_out = w_arr
    cdef double[:, ::1] u_out = u_arr
    cdef cnp.int64_t[::1] clipped = clip_arr
    cdef double noise = theta * eta * sqrt(sigma) * sqrt(dt)
    cdef double relax = (1.0 - gamma) / (eta * eta)
    cdef double drift_dt = drift * dt
    cdef Py_ssize_t p, n
    cdef double w, u, P
    with nogil:
        for p in range(n_paths):
            w = w0v[p]
            u = u0v[p]
            w_out[p, 0] = w
            u_out[p, 0] = u
            for n in range(n_steps):
                P = theta * eta * sqrt(u) + eps * eta
                w = w - (drift_dt * (w - root) + noise * xi[p, n]) / P
                u = u + relax * (sigma - u) * dt
                if u < 0.0:
                    u = 0.0
                    clipped[p] += 1
                if (n + 1) % record_every == 0:
                    w_out[p, (n + 1) // record_every] = w
                    u_out[p, (n + 1) // record_every] = u
    return w_arr, u_arr, clip_arr


def signed_rank_null_counts(doubled_ranks):
    cdef cnp.int64_t[::1] r = np.ascontiguousarray(doubled_ranks, dtype=np.int64)
    cdef Py_ssize_t n = r.shape[0]
    cdef cnp.int64_t total = 0
    cdef Py_ssize_t i
    for i in range(n):
        total += r[i]
    counts_arr = np.zeros(total + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef unsigned long long mask, gray, prev = 0, changed, n_masks = 1ULL << n
    cdef cnp.int64_t current = 0
    cdef Py_ssize_t bit
    with nogil:
        counts[0] = 1
        # walk sign patterns in Gray-code order: one rank flips per pattern
        for mask in range(1, n_masks):
            gray = mask ^ (mask >> 1)
            changed = gray ^ prev
            bit = 0
            while (changed >> bit) != 1:
                bit += 1
            if gray & changed:
                current += r[bit]
            else:
                current -= r[bit]
            counts[current] += 1
            prev = gray
    return counts_arr
