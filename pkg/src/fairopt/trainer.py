"""Small supervised-learning harness for optimizer fairness comparisons.

Models are logistic regression and a one-hidden-layer tanh network with
hand-written backpropagation.  Parameters live in one flat vector so any
:class:`~fairopt.optimizers.OptimizerConfig` can drive them.
"""
from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.special import expit, log_expit, log_softmax, ndtri

from fairopt.errors import DivergenceError, InsufficientDataError, InvalidParameterError, ParseError
from fairopt.fairness import FairnessReport, GroupedConfusion, fairness_report
from fairopt.optimizers import Algorithm, OptimizerConfig, OptimizerState, step
from fairopt.stats import SeededStream, wilcoxon_signed_rank

# fixed stream indices, so the split never depends on the optimizer
SPLIT_STREAM = 0
INIT_STREAM = 1
BATCH_STREAM = 2

COMPARED_METRICS = ("accuracy", "f1", "f_eod", "f_eop", "f_dpa", "gap_eop", "gap_eod", "gap_dpa")


# ---------------------------------------------------------------- data

@dataclass(frozen=True)
class SyntheticSpec:
    """Two-group Gaussian data with a controllable minority share.

    Group ``z`` has features ``N(group_means[z], I)``.  Its label is
    ``1[label_weights[z] . (x - group_means[z]) > t]`` with ``t`` set so that
    a fraction ``class_balance`` of each group is positive, then flipped with
    probability ``group_label_flip[z]``.  Without ``label_weights`` both
    groups use the first coordinate.  Group 0 is the minority.
    """

    n_samples: int = 2000
    n_features: int = 2
    minority_fraction: float = 0.5
    group_means: tuple = ((0.0, 0.0), (0.0, 0.0))
    group_label_flip: tuple = (0.0, 0.0)
    class_balance: float = 0.5
    master_seed: int = 0
    label_weights: tuple | None = None

    def __post_init__(self):
        if self.n_samples < 1 or self.n_features < 1:
            raise InvalidParameterError("n_samples and n_features must be positive")
        if not 0 < self.minority_fraction <= 0.5:
            raise InvalidParameterError(f"minority_fraction must lie in (0, 0.5], got {self.minority_fraction}")
        if not 0 < self.class_balance < 1:
            raise InvalidParameterError("class_balance must lie in (0, 1)")
        means = tuple(tuple(float(x) for x in m) for m in self.group_means)
        if len(means) != 2 or any(len(m) != self.n_features for m in means):
            raise InvalidParameterError("group_means must be two vectors of length n_features")
        object.__setattr__(self, "group_means", means)
        flips = tuple(float(x) for x in self.group_label_flip)
        if len(flips) != 2 or not all(0 <= f < 0.5 for f in flips):
            raise InvalidParameterError("group_label_flip must be two values in [0, 0.5)")
        object.__setattr__(self, "group_label_flip", flips)
        if self.label_weights is not None:
            lw = tuple(tuple(float(x) for x in v) for v in self.label_weights)
            if len(lw) != 2 or any(len(v) != self.n_features for v in lw) or any(not any(v) for v in lw):
                raise InvalidParameterError("label_weights must be two non-zero vectors of length n_features")
            object.__setattr__(self, "label_weights", lw)

    def with_(self, **changes) -> "SyntheticSpec":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "n_samples": self.n_samples, "n_features": self.n_features,
            "minority_fraction": self.minority_fraction,
            "group_means": [list(m) for m in self.group_means],
            "group_label_flip": list(self.group_label_flip),
            "class_balance": self.class_balance, "master_seed": self.master_seed,
            "label_weights": None if self.label_weights is None else [list(v) for v in self.label_weights],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        return cls(**d)


@dataclass(frozen=True)
class TabularDataset:
    features: np.ndarray
    labels: np.ndarray
    groups: np.ndarray
    feature_names: tuple = ()
    class_labels: tuple = (0, 1)
    group_labels: tuple = (0, 1)
    mean: np.ndarray | None = None
    std: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        if x.ndim != 2 or x.shape[0] == 0:
            raise InvalidParameterError("features must be a non-empty 2-D array")
        if not np.all(np.isfinite(x)):
            raise InvalidParameterError("features contain missing or non-finite values")
        y = np.asarray(self.labels, dtype=np.int64)
        z = np.asarray(self.groups, dtype=np.int64)
        if y.shape != (x.shape[0],) or z.shape != (x.shape[0],):
            raise InvalidParameterError("labels and groups need one entry per row")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "groups", z)
        if not self.feature_names:
            object.__setattr__(self, "feature_names", tuple(f"x{i}" for i in range(x.shape[1])))

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_classes(self) -> int:
        return len(self.class_labels)

    def subset(self, idx) -> "TabularDataset":
        return replace(self, features=self.features[idx], labels=self.labels[idx], groups=self.groups[idx])


def column_stats(x: np.ndarray, names=None):
    """Per-column mean and std; constant columns get std 0 and a warning."""
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    const = std == 0
    if const.any():
        cols = [names[i] if names else str(i) for i in np.flatnonzero(const)]
        warnings.warn(f"constant feature column(s) {cols}: standardised to 0", RuntimeWarning, stacklevel=3)
    return mean, std


def standardize(x: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    safe = np.where(std > 0, std, 1.0)
    return np.where(std > 0, (x - mean) / safe, 0.0)


def generate_synthetic(spec: SyntheticSpec, stream: SeededStream | None = None) -> TabularDataset:
    """Draw a dataset; group 0 gets exactly ``round(minority_fraction * n_samples)`` rows."""
    stream = stream or SeededStream(spec.master_seed, 0)
    rng = stream.rng
    n, d = spec.n_samples, spec.n_features
    n0 = int(round(spec.minority_fraction * n))
    z = np.ones(n, dtype=np.int64)
    z[:n0] = 0
    z = z[rng.permutation(n)]
    means = np.array(spec.group_means)
    x = means[z] + rng.standard_normal((n, d))
    if spec.label_weights is None:
        weights = np.zeros((2, d))
        weights[:, 0] = 1.0
    else:
        weights = np.array(spec.label_weights)
    score = np.einsum("ij,ij->i", weights[z], x - means[z]) / np.linalg.norm(weights[z], axis=1)
    threshold = ndtri(1.0 - spec.class_balance)
    y = (score > threshold).astype(np.int64)
    flip = rng.random(n) < np.array(spec.group_label_flip)[z]
    y = np.where(flip, 1 - y, y)
    return TabularDataset(x, y, z)


def load_csv(path, feature_columns, label_column: str, group_column: str) -> TabularDataset:
    """Read a tabular CSV; label and group values are encoded as sorted integer codes."""
    path = Path(path)
    try:
        handle = path.open(newline="")
    except OSError as exc:
        raise ParseError(f"{path}: cannot open ({exc.strerror})") from None
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise ParseError(f"{path}: file is empty")
        header = [h.strip() for h in header]
        index = {}
        for col in list(feature_columns) + [label_column, group_column]:
            if col not in header:
                raise ParseError(f"{path}: missing column {col!r}")
            index[col] = header.index(col)
        feats, labels, groups = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
            values = []
            for col in feature_columns:
                cell = row[index[col]].strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(f"{path}: row {lineno}, column {col!r}: {cell!r} is not numeric") from None
                if not math.isfinite(v):
                    raise ParseError(f"{path}: row {lineno}, column {col!r}: non-finite value")
                values.append(v)
            for col, sink in ((label_column, labels), (group_column, groups)):
                cell = row[index[col]].strip()
                if cell == "":
                    raise ParseError(f"{path}: row {lineno}, column {col!r}: empty value")
                sink.append(cell)
            feats.append(values)
    if not feats:
        raise ParseError(f"{path}: no data rows")
    x = np.array(feats, dtype=float).reshape(len(feats), len(feature_columns))
    class_labels, y = _encode(labels)
    group_labels, z = _encode(groups)
    mean, std = column_stats(x, list(feature_columns))
    return TabularDataset(x, y, z, tuple(feature_columns), class_labels, group_labels, mean, std)


def _encode(values):
    try:
        keys = [float(v) for v in values]
        uniq = sorted(set(keys))
        labels = tuple(int(u) if u == int(u) else u for u in uniq)
    except ValueError:
        keys = values
        uniq = sorted(set(keys))
        labels = tuple(uniq)
    lookup = {u: i for i, u in enumerate(uniq)}
    return labels, np.array([lookup[k] for k in keys], dtype=np.int64)


def train_test_split(data: TabularDataset, seed: int, test_fraction: float = 0.2):
    """Seeded split, standardised with training-split statistics."""
    n = data.n_samples
    perm = SeededStream(seed, SPLIT_STREAM).rng.permutation(n)
    n_test = int(round(test_fraction * n))
    if n - n_test < 1:
        raise InsufficientDataError("not enough rows for a training split")
    train, test = data.subset(perm[n_test:]), data.subset(perm[:n_test])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mean, std = column_stats(train.features)
    return (replace(train, features=standardize(train.features, mean, std), mean=mean, std=std),
            replace(test, features=standardize(test.features, mean, std), mean=mean, std=std))


# ---------------------------------------------------------------- models

@dataclass(frozen=True)
class ModelSpec:
    kind: str = "logistic"  # or "mlp"
    hidden_units: int = 16

    def __post_init__(self):
        if self.kind not in ("logistic", "mlp"):
            raise InvalidParameterError(f"unknown model kind {self.kind!r}")
        if self.hidden_units < 1:
            raise InvalidParameterError("hidden_units must be positive")


@dataclass(frozen=True)
class LossSpec:
    kind: str = "cross_entropy"  # or "focal"
    xi: float = 0.25
    upsilon: float = 2.0

    def __post_init__(self):
        if self.kind not in ("cross_entropy", "focal"):
            raise InvalidParameterError(f"unknown loss kind {self.kind!r}")
        if not (0 <= self.xi <= 1 and self.upsilon >= 0):
            raise InvalidParameterError("focal loss needs xi in [0, 1] and upsilon >= 0")


class Network:
    """Parameter layout plus forward/backward passes.

    Binary tasks use one output logit; more classes use a softmax head.
    """

    def __init__(self, spec: ModelSpec, n_features: int, n_classes: int):
        self.spec = spec
        self.n_out = 1 if n_classes == 2 else n_classes
        self.n_classes = n_classes
        if spec.kind == "logistic":
            self.shapes = [("W", (n_features, self.n_out)), ("b", (self.n_out,))]
        else:
            h = spec.hidden_units
            self.shapes = [("W1", (n_features, h)), ("b1", (h,)), ("W2", (h, self.n_out)), ("b2", (self.n_out,))]
        self.size = sum(int(np.prod(s)) for _, s in self.shapes)

    def unpack(self, theta: np.ndarray) -> dict:
        out, pos = {}, 0
        for name, shape in self.shapes:
            n = int(np.prod(shape))
            out[name] = theta[pos:pos + n].reshape(shape)
            pos += n
        return out

    def init(self, stream: SeededStream) -> np.ndarray:
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every layer, biases included."""
        parts = []
        fan_in = self.shapes[0][1][0]
        for name, shape in self.shapes:
            if name.startswith("W"):
                fan_in = shape[0]
            bound = 1.0 / math.sqrt(fan_in)
            parts.append(stream.rng.uniform(-bound, bound, size=int(np.prod(shape))))
        return np.concatenate(parts)

    def forward(self, theta: np.ndarray, x: np.ndarray):
        p = self.unpack(theta)
        if self.spec.kind == "logistic":
            return x @ p["W"] + p["b"], None
        h = np.tanh(x @ p["W1"] + p["b1"])
        return h @ p["W2"] + p["b2"], h

    def backward(self, theta: np.ndarray, x: np.ndarray, cache, dlogits: np.ndarray) -> np.ndarray:
        p = self.unpack(theta)
        if self.spec.kind == "logistic":
            return np.concatenate([(x.T @ dlogits).ravel(), dlogits.sum(axis=0)])
        h = cache
        dh = (dlogits @ p["W2"].T) * (1.0 - h * h)
        return np.concatenate([(x.T @ dh).ravel(), dh.sum(axis=0), (h.T @ dlogits).ravel(), dlogits.sum(axis=0)])

    def predict(self, theta: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Class indices; a tie goes to the lower index."""
        logits, _ = self.forward(theta, x)
        if self.n_out == 1:
            return (logits[:, 0] > 0).astype(np.int64)
        return np.argmax(logits, axis=1)


def loss_and_dlogits(logits: np.ndarray, y: np.ndarray, loss: LossSpec):
    """Mean loss over the batch and its gradient with respect to the logits."""
    n = logits.shape[0]
    if logits.shape[1] == 1:
        z = logits[:, 0]
        p = expit(z)
        log_p, log_q = log_expit(z), log_expit(-z)
        yf = y.astype(float)
        if loss.kind == "cross_entropy":
            per = -(yf * log_p + (1 - yf) * log_q)
            d = p - yf
        else:
            xi, u = loss.xi, loss.upsilon
            q = 1.0 - p
            pos = xi * q**u * log_p
            neg = (1 - xi) * p**u * log_q
            per = -(yf * pos + (1 - yf) * neg)
            d_pos = xi * q**u * (u * p * log_p - q)
            d_neg = (1 - xi) * p**u * (p - u * q * log_q)
            d = yf * d_pos + (1 - yf) * d_neg
        return float(per.mean()), (d / n)[:, None]
    if loss.kind == "focal":
        raise InvalidParameterError("focal loss is defined for binary tasks only")
    logp = log_softmax(logits, axis=1)
    per = -logp[np.arange(n), y]
    d = np.exp(logp)
    d[np.arange(n), y] -= 1.0
    return float(per.mean()), d / n


def objective(net: Network, theta, x, y, loss: LossSpec):
    """Loss and exact gradient with respect to the flat parameter vector."""
    logits, cache = net.forward(theta, x)
    value, dlogits = loss_and_dlogits(logits, y, loss)
    return value, net.backward(theta, x, cache, dlogits)


# ---------------------------------------------------------------- training

@dataclass
class TrainRunResult:
    weights: np.ndarray
    train_accuracy: float
    test_accuracy: float
    f1: float
    fairness: FairnessReport | None
    loss_curve: np.ndarray  # entry 0 is the initial full-training-set loss
    optimizer: OptimizerConfig
    seed: int

    @property
    def final_loss(self) -> float:
        return float(self.loss_curve[-1])

    def metric(self, name: str) -> float:
        if name == "accuracy":
            return self.test_accuracy
        if name == "f1":
            return self.f1
        return float("nan") if self.fairness is None else getattr(self.fairness, name)

    def row(self) -> dict:
        out = {"optimizer": self.optimizer.label, "seed": self.seed, "accuracy": self.test_accuracy, "f1": self.f1}
        for m in ("f_eod", "f_eop", "f_dpa", "gap_eop", "gap_eod", "gap_dpa"):
            out[m] = self.metric(m)
        out["final_loss"] = self.final_loss
        return out


TRAIN_CSV_COLUMNS = ("optimizer", "seed", "accuracy", "f1", "f_eod", "f_eop", "f_dpa",
                     "gap_eop", "gap_eod", "gap_dpa", "final_loss")


def f1_score(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int) -> float:
    """Positive-class F1 for binary tasks, macro F1 otherwise; empty cases score 0."""
    classes = [1] if n_classes == 2 else range(n_classes)
    scores = []
    for c in classes:
        tp = np.sum((y_pred == c) & (y_true == c))
        denom = np.sum(y_pred == c) + np.sum(y_true == c)
        scores.append(0.0 if denom == 0 else 2.0 * tp / denom)
    return float(np.mean(scores))


def _full_loss(net, theta, data, loss):
    logits, _ = net.forward(theta, data.features)
    return loss_and_dlogits(logits, data.labels, loss)[0]


def _run_epochs(net, train_set, loss, optimizer, epochs, batch_size, batch_rng, coupled, state, curve):
    """Mini-batch loop; appends per-epoch losses to ``curve`` and returns the final state."""
    n = train_set.n_samples
    for epoch in range(epochs):
        order = batch_rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            value, grad = objective(net, state.w, train_set.features[idx], train_set.labels[idx], loss)
            if not math.isfinite(value) or not np.all(np.isfinite(grad)):
                raise DivergenceError(f"non-finite loss in epoch {epoch + 1}; the learning rate "
                                      f"{optimizer.eta} is probably too high", step=epoch + 1)
            if coupled:
                grad = grad + coupled * state.w
            state = step(state, optimizer, grad)
        curve.append(_full_loss(net, state.w, train_set, loss))
        if not math.isfinite(curve[-1]):
            raise DivergenceError(f"non-finite training loss after epoch {epoch + 1}; "
                                  f"the learning rate {optimizer.eta} is probably too high", step=epoch + 1)
    return state


def train(data: TabularDataset, model: ModelSpec, loss: LossSpec, optimizer: OptimizerConfig,
          epochs: int = 100, batch_size: int = 32, seed: int = 0, test_fraction: float = 0.2) -> TrainRunResult:
    """Mini-batch training on a seeded train/test split.

    Non-AdamW optimizers get coupled L2 decay (``weight_decay * theta`` added
    to the gradient); AdamW applies its own decoupled decay.
    """
    if batch_size < 1:
        raise InvalidParameterError("batch_size must be at least 1")
    if epochs < 0:
        raise InvalidParameterError("epochs must be non-negative")
    train_set, test_set = train_test_split(data, seed, test_fraction)
    net = Network(model, data.features.shape[1], data.n_classes)
    theta = net.init(SeededStream(seed, INIT_STREAM))
    state = OptimizerState(theta)
    batch_rng = SeededStream(seed, BATCH_STREAM).rng
    coupled = optimizer.weight_decay if optimizer.algorithm is not Algorithm.ADAMW else 0.0

    curve = [_full_loss(net, state.w, train_set, loss)]
    # overflow is detected explicitly below and raised as DivergenceError
    with np.errstate(over="ignore", invalid="ignore"):
        state = _run_epochs(net, train_set, loss, optimizer, epochs, batch_size, batch_rng, coupled, state, curve)

    theta = state.w
    train_pred = net.predict(theta, train_set.features)
    test_pred = net.predict(theta, test_set.features)
    report = None
    if test_set.n_samples:
        try:
            conf = GroupedConfusion.from_predictions(
                test_set.groups, test_set.labels, test_pred,
                group_labels=range(len(data.group_labels)), class_labels=range(data.n_classes))
            report = fairness_report(conf)
        except (InsufficientDataError, InvalidParameterError):
            report = None
    return TrainRunResult(
        weights=theta,
        train_accuracy=float(np.mean(train_pred == train_set.labels)),
        test_accuracy=float(np.mean(test_pred == test_set.labels)) if test_set.n_samples else float("nan"),
        f1=f1_score(test_set.labels, test_pred, data.n_classes),
        fairness=report,
        loss_curve=np.array(curve),
        optimizer=optimizer,
        seed=seed,
    )


@dataclass(frozen=True)
class TrainSettings:
    model: ModelSpec = field(default_factory=ModelSpec)
    loss: LossSpec = field(default_factory=LossSpec)
    epochs: int = 100
    batch_size: int = 32
    test_fraction: float = 0.2


@dataclass
class PairedTest:
    metric: str
    optimizer_a: str
    optimizer_b: str
    mean_a: float
    mean_b: float
    statistic: float | None
    p_value: float | None  # None when the test is not applicable
    note: str = ""

    @property
    def abs_difference(self) -> float:
        return abs(self.mean_a - self.mean_b)


@dataclass
class PairedComparison:
    results: list
    tests: list

    def rows(self) -> list[dict]:
        return [r.row() for r in self.results]

    def test(self, metric: str, a: str | None = None, b: str | None = None) -> PairedTest:
        for t in self.tests:
            if t.metric == metric and (a is None or t.optimizer_a == a) and (b is None or t.optimizer_b == b):
                return t
        raise KeyError(metric)


def _dataset_for(data_or_spec, seed: int) -> TabularDataset:
    if isinstance(data_or_spec, SyntheticSpec):
        return generate_synthetic(data_or_spec, SeededStream(data_or_spec.master_seed, seed))
    return data_or_spec


def optimizer_labels(optimizers) -> list[str]:
    """Algorithm names, suffixed with the list position when two share a name."""
    labels = [o.label for o in optimizers]
    if len(set(labels)) != len(labels):
        labels = [f"{o.label}#{i}" for i, o in enumerate(optimizers)]
    return labels


def run_grid(data_or_spec, optimizers: list, seeds: list, settings: TrainSettings = TrainSettings(),
             workers: int = 1) -> list[TrainRunResult]:
    """Train every (optimizer, seed) pair; results are ordered optimizer-major."""
    seeds = list(seeds)
    datasets = {s: _dataset_for(data_or_spec, s) for s in seeds}
    jobs = [(o, s) for o in optimizers for s in seeds]

    def run(job):
        o, s = job
        return train(datasets[s], settings.model, settings.loss, o, settings.epochs,
                     settings.batch_size, s, settings.test_fraction)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, jobs))
    return [run(j) for j in jobs]


def paired_comparison(data_or_spec, optimizers: list, seeds: list, settings: TrainSettings = TrainSettings(),
                      workers: int = 1, metrics=COMPARED_METRICS) -> PairedComparison:
    """Train every optimizer with every seed and run paired Wilcoxon tests per metric.

    With a :class:`SyntheticSpec` each seed draws its own dataset; all
    optimizers see the same dataset, split and initial weights for a seed.
    """
    seeds = list(seeds)
    if len(seeds) < 5:
        raise InsufficientDataError(f"paired comparison needs at least 5 seeds, got {len(seeds)}")
    if len(set(seeds)) != len(seeds):
        raise InvalidParameterError("seeds must be distinct")
    labels = optimizer_labels(optimizers)
    results = run_grid(data_or_spec, optimizers, seeds, settings, workers)
    table = {(labels[i // len(seeds)], r.seed): r for i, r in enumerate(results)}
    tests = []
    for ia in range(len(optimizers)):
        for ib in range(ia + 1, len(optimizers)):
            a, b = labels[ia], labels[ib]
            for metric in metrics:
                va = np.array([table[(a, s)].metric(metric) for s in seeds])
                vb = np.array([table[(b, s)].metric(metric) for s in seeds])
                keep = ~(np.isnan(va) | np.isnan(vb))
                mean_a = float(va[keep].mean()) if keep.any() else float("nan")
                mean_b = float(vb[keep].mean()) if keep.any() else float("nan")
                try:
                    stat, p = wilcoxon_signed_rank(va[keep], vb[keep])
                    note = ""
                except InsufficientDataError as exc:
                    stat, p, note = None, None, str(exc)
                tests.append(PairedTest(metric, a, b, mean_a, mean_b, stat, p, note))
    return PairedComparison(results, tests)


@dataclass
class SweepRow:
    minority_fraction: float
    metric: str
    abs_difference: float
    p_value: float | None
    mean_a: float
    mean_b: float


def imbalance_sweep(template: SyntheticSpec, fractions, optimizers: list, seeds: list,
                    settings: TrainSettings = TrainSettings(), workers: int = 1,
                    metrics=("f_dpa", "f_eod")) -> list[SweepRow]:
    """Paired comparison of two optimizers at each minority fraction."""
    if len(optimizers) != 2:
        raise InvalidParameterError("imbalance_sweep compares exactly two optimizers")
    rows = []
    for frac in fractions:
        if not 0 < frac <= 0.5:
            raise InvalidParameterError(f"minority fractions must lie in (0, 0.5], got {frac}")
        cmp = paired_comparison(template.with_(minority_fraction=frac), optimizers, seeds, settings,
                                workers, metrics)
        for metric in metrics:
            t = cmp.test(metric)
            rows.append(SweepRow(frac, metric, t.abs_difference, t.p_value, t.mean_a, t.mean_b))
    return rows
