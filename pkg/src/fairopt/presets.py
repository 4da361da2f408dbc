"""Named experiment configurations and per-command defaults.

A preset is a partial config merged over the command defaults; flags and
``--set`` overrides are merged on top of it.
"""
from __future__ import annotations

import copy

from fairopt.errors import InvalidParameterError


def _opt(algorithm, eta, **extra):
    return {"algorithm": algorithm, "eta": eta, **extra}


DEFAULTS = {
    "warmup": {
        "model": {"p0": 0.1, "center_0": 1.0, "center_1": -1.0},
        "optimizers": [_opt("rmsprop", 0.1), _opt("sgd", 0.1)],
        "trials": 1000,
        "epochs": 100,
        "steps_per_epoch": 1,
        "fair_center": 0.0,
        "fair_threshold": 0.2,
        "report_thresholds": [0.1, 0.2, 0.4],
        "w0": 0.0,
        "w0_range": None,
        "master_seed": 0,
    },
    "density": {
        "p0": 0.1,
        "eta": 0.1,
        "theta_global": 1.0,
        "points": 401,
        "half_width": None,
        "master_seed": 0,
    },
    "theorems": {
        "ngos": {"mu_0": [1.0], "mu_1": [-1.0], "theta_0": [1.0], "theta_1": [1.0], "p0": 0.5, "theta_global": 1.0},
        "gamma": 0.9,
        "epsilon": 0.0,
        "steps": 200,
        "draws": 10000,
        "theorem3": {"w": 0.5, "eta": 0.1, "subgroup": None,
                     "model": {"p0": 0.5, "center_0": 1.0, "center_1": -1.0}},
        "master_seed": 0,
    },
    "train": {
        "data": {"synthetic": {
            "n_samples": 2000, "n_features": 2, "minority_fraction": 0.5,
            "group_means": [[0.0, 0.0], [0.0, 0.0]], "group_label_flip": [0.0, 0.0],
            "class_balance": 0.5, "label_weights": None,
        }},
        "model": {"kind": "logistic", "hidden_units": 16},
        "loss": {"kind": "cross_entropy", "xi": 0.25, "upsilon": 2.0},
        "optimizers": [_opt("rmsprop", 0.001), _opt("sgd", 0.01)],
        "seeds": [0, 1, 2, 3, 4],
        "epochs": 100,
        "batch_size": 32,
        "test_fraction": 0.2,
        "master_seed": 0,
    },
    "metrics": {
        "input": None,
        "format": "log",
        "alpha": 0.0,
        "missing_class": "exclude",
        "master_seed": 0,
    },
}

DEFAULTS["sweep"] = copy.deepcopy(DEFAULTS["train"])
DEFAULTS["sweep"]["fractions"] = [0.02, 0.22, 0.42]
DEFAULTS["sweep"]["metrics"] = ["f_dpa", "f_eod"]

# Minority with its own labelling feature (x3) and a group-revealing proxy (x2).
FIG3_DATA = {"synthetic": {
    "n_samples": 5000, "n_features": 3, "minority_fraction": 0.02,
    "group_means": [[-1.0, 3.0, 0.0], [0.0, 0.0, 0.0]], "group_label_flip": [0.0, 0.0],
    "class_balance": 0.5, "label_weights": [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]],
}}


def _warmup(p0, eta_rms, eta_sgd, threshold, **extra):
    cfg = {"command": "warmup", "model": {"p0": p0, "center_0": 1.0, "center_1": -1.0},
           "optimizers": [_opt("rmsprop", eta_rms, gamma=0.9), _opt("sgd", eta_sgd)],
           "trials": 1000, "epochs": 100, "fair_threshold": threshold}
    cfg.update(extra)
    return cfg


PRESETS = {
    "fig2-severe": _warmup(0.1, 0.1, 0.1, 0.2),
    "fig2-mild": _warmup(0.3, 0.1, 0.1, 0.2),
    # fig2 settings with a slower second-moment average; sensitivity studies, not reproductions
    "fig2-severe-gamma999": _warmup(0.1, 0.1, 0.1, 0.2,
                                    optimizers=[_opt("rmsprop", 0.1, gamma=0.999), _opt("sgd", 0.1)]),
    "fig2-mild-gamma999": _warmup(0.3, 0.1, 0.1, 0.2,
                                  optimizers=[_opt("rmsprop", 0.1, gamma=0.999), _opt("sgd", 0.1)]),
    "appF-1": _warmup(0.1, 0.01, 0.1, 0.2),
    "appF-2": _warmup(0.1, 0.1, 0.2, 0.2),
    "appF-3": _warmup(0.1, 0.01, 0.1, 0.1),
    "appF-4": _warmup(0.1, 0.01, 0.1, 0.4),
    "appF-5": _warmup(0.1, 0.1, 0.2, 0.1),
    "appF-6": _warmup(0.1, 0.1, 0.2, 0.4),
    "fig3-analog": {
        "command": "sweep",
        "data": FIG3_DATA,
        "model": {"kind": "mlp", "hidden_units": 16},
        "optimizers": [_opt("rmsprop", 0.001), _opt("sgd", 0.01)],
        "seeds": list(range(10)),
        "fractions": [0.02, 0.22, 0.42],
        "epochs": 100,
        "batch_size": 32,
    },
    "table2-analog": {
        "command": "train",
        "data": FIG3_DATA,
        "model": {"kind": "mlp", "hidden_units": 16},
        "optimizers": [_opt("sgd", 0.01), _opt("rmsprop", 0.001), _opt("adam", 0.001)],
        "seeds": list(range(10)),
        "epochs": 100,
        "batch_size": 32,
    },
    "theorems-default": {"command": "theorems"},
}


def deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def preset(name: str) -> dict:
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise InvalidParameterError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}") from None
