"""Kernel selection.

The compiled Cython module is used when it was built; otherwise the numpy
fallback.  ``FAIROPT_BACKEND=python`` forces the fallback.  Both produce
identical numbers, so the choice only affects speed.
"""
import os

from fairopt import _kernels_py

try:
    from fairopt import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    BACKENDS["cython"] = _compiled


def get(name: str):
    try:
        return BACKENDS[name]
    except KeyError:
        raise ImportError(f"kernel backend {name!r} is not available (have {sorted(BACKENDS)})") from None


_requested = os.environ.get("FAIROPT_BACKEND", "").strip().lower()
if _requested:
    _active = get(_requested)
else:
    _active = _compiled if _compiled is not None else _kernels_py

NAME = _active.NAME
warmup_paths = _active.warmup_paths
sgd_sde_paths = _active.sgd_sde_paths
rmsprop_sde_paths = _active.rmsprop_sde_paths
signed_rank_null_counts = _active.signed_rank_null_counts
