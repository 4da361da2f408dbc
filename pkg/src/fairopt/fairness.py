"""Ratio-form group fairness metrics (equalized odds, equal opportunity,
demographic parity) and their absolute-gap counterparts.

Everything is computed from a :class:`GroupedConfusion` table,
``counts[group, true_class, predicted_class]``.

Conventions for zero denominators: a rate with no supporting samples is
undefined and the pairs that need it are skipped.  Between two defined
rates ``a`` and ``b`` the smaller of ``a/b`` and ``b/a`` is
``min(a, b) / max(a, b)``; two zero rates count as 1 (no evidence of
disparity) and a zero against a positive rate gives 0.
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from fairopt.errors import InsufficientDataError, InvalidParameterError, ParseError

MISSING_CLASS_POLICIES = ("exclude", "zero")


@dataclass(frozen=True)
class GroupedConfusion:
    groups: tuple
    classes: tuple
    counts: np.ndarray = field(repr=False)

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 3 or counts.shape[1] != counts.shape[2]:
            raise InvalidParameterError(f"counts must have shape (groups, classes, classes), got {counts.shape}")
        if counts.shape != (len(self.groups), len(self.classes), len(self.classes)):
            raise InvalidParameterError("counts shape does not match the group/class labels")
        if len(self.groups) < 2 or len(self.classes) < 2:
            raise InvalidParameterError("need at least 2 groups and 2 classes")
        if not np.all(np.isfinite(counts)) or np.any(counts < 0):
            raise InvalidParameterError("counts must be finite and non-negative")
        if counts.sum() == 0:
            raise InvalidParameterError("confusion table is empty")
        counts = counts.astype(np.int64) if np.all(counts == np.round(counts)) else counts.astype(float)
        counts.setflags(write=False)
        object.__setattr__(self, "groups", tuple(self.groups))
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_predictions(cls, groups, y_true, y_pred, group_labels=None, class_labels=None) -> "GroupedConfusion":
        groups, y_true, y_pred = (np.asarray(a) for a in (groups, y_true, y_pred))
        if not (groups.shape == y_true.shape == y_pred.shape) or groups.ndim != 1:
            raise InvalidParameterError("groups, y_true and y_pred must be 1-D arrays of equal length")
        g_labels = tuple(group_labels) if group_labels is not None else tuple(_sorted_labels(np.unique(groups)))
        c_labels = tuple(class_labels) if class_labels is not None else tuple(
            _sorted_labels(np.unique(np.concatenate([y_true, y_pred]))))
        g_index = {g: i for i, g in enumerate(g_labels)}
        c_index = {c: i for i, c in enumerate(c_labels)}
        counts = np.zeros((len(g_labels), len(c_labels), len(c_labels)), dtype=np.int64)
        try:
            gi = np.array([g_index[g] for g in groups.tolist()], dtype=np.int64)
            ti = np.array([c_index[c] for c in y_true.tolist()], dtype=np.int64)
            pi = np.array([c_index[c] for c in y_pred.tolist()], dtype=np.int64)
        except KeyError as exc:
            raise InvalidParameterError(f"label {exc.args[0]!r} not in the supplied label set") from None
        np.add.at(counts, (gi, ti, pi), 1)
        return cls(g_labels, c_labels, counts)

    def group_sizes(self) -> np.ndarray:
        return self.counts.sum(axis=(1, 2))

    def merged(self, a: int, b: int) -> "GroupedConfusion":
        """Table with group ``b`` folded into group ``a``."""
        counts = np.array(self.counts)
        counts[a] += counts[b]
        keep = [i for i in range(len(self.groups)) if i != b]
        return GroupedConfusion(tuple(self.groups[i] for i in keep), self.classes, counts[keep])


def _sorted_labels(values):
    values = list(values)
    try:
        return sorted(values)
    except TypeError:
        return sorted(values, key=str)


def _proportion(num, den, alpha):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = (num + alpha) / (den + 2.0 * alpha)
    return np.where(den + 2.0 * alpha > 0, out, np.nan)


def rates(conf: GroupedConfusion, alpha: float = 0.0) -> dict:
    """Per-(group, class) TPR, FPR and prediction rate; NaN where undefined.

    ``alpha`` adds pseudo-counts to each proportion as (x + alpha)/(n + 2 alpha).
    """
    if alpha < 0:
        raise InvalidParameterError("smoothing alpha must be non-negative")
    c = conf.counts.astype(float)
    diag = np.einsum("gii->gi", c)
    true_totals = c.sum(axis=2)           # samples with y = i
    pred_totals = c.sum(axis=1)           # samples with y_hat = i
    group_totals = c.sum(axis=(1, 2))[:, None]
    return {
        "tpr": _proportion(diag, true_totals, alpha),
        "fpr": _proportion(pred_totals - diag, group_totals - true_totals, alpha),
        "pred": _proportion(pred_totals, np.broadcast_to(group_totals, pred_totals.shape), alpha),
    }


def pair_ratio(a: float, b: float) -> float:
    """min(a/b, b/a) under the zero conventions of this module."""
    hi = max(a, b)
    return 1.0 if hi == 0 else min(a, b) / hi


def _min_ratio(rate: np.ndarray):
    """Minimum pair ratio over classes and group pairs, with an ordered witness."""
    best, witness = None, None
    n_groups, n_classes = rate.shape
    for i in range(n_classes):
        for j, q in itertools.combinations(range(n_groups), 2):
            a, b = rate[j, i], rate[q, i]
            if np.isnan(a) or np.isnan(b):
                continue
            r = pair_ratio(a, b)
            if best is None or r < best:
                best, witness = r, (i, (j, q) if a <= b else (q, j))
    return best, witness


def _max_gap(rate: np.ndarray):
    best, witness = None, None
    n_groups, n_classes = rate.shape
    for i in range(n_classes):
        for j, q in itertools.combinations(range(n_groups), 2):
            a, b = rate[j, i], rate[q, i]
            if np.isnan(a) or np.isnan(b):
                continue
            d = abs(a - b)
            if best is None or d > best:
                best, witness = d, (i, (j, q))
    return best, witness


def _require(value, what):
    if value is None:
        raise InsufficientDataError(f"no group pair has defined rates for {what}")
    return float(value)


def f_eod(conf: GroupedConfusion, alpha: float = 0.0) -> float:
    r = rates(conf, alpha)
    t, _ = _min_ratio(r["tpr"])
    f, _ = _min_ratio(r["fpr"])
    defined = [x for x in (t, f) if x is not None]
    return _require(min(defined) if defined else None, "equalized odds")


def _tpr_sums(tpr: np.ndarray, j: int, q: int, missing_class: str):
    a, b = tpr[j], tpr[q]
    if missing_class == "exclude":
        keep = ~(np.isnan(a) | np.isnan(b))
        if not keep.any():
            return None
        return a[keep].sum(), b[keep].sum()
    return np.nan_to_num(a).sum(), np.nan_to_num(b).sum()


def _eop(conf, alpha, missing_class):
    if missing_class not in MISSING_CLASS_POLICIES:
        raise InvalidParameterError(f"missing_class must be one of {MISSING_CLASS_POLICIES}")
    tpr = rates(conf, alpha)["tpr"]
    best, witness = None, None
    for j, q in itertools.combinations(range(len(conf.groups)), 2):
        sums = _tpr_sums(tpr, j, q, missing_class)
        if sums is None:
            continue
        r = pair_ratio(*sums)
        if best is None or r < best:
            best, witness = r, (None, (j, q) if sums[0] <= sums[1] else (q, j))
    return best, witness


def f_eop(conf: GroupedConfusion, alpha: float = 0.0, missing_class: str = "exclude") -> float:
    """Ratio of per-group TPR sums over classes, minimised over group pairs.

    ``missing_class="exclude"`` drops, for each pair, classes where either
    group has no samples; ``"zero"`` counts such a class as TPR 0.
    """
    best, _ = _eop(conf, alpha, missing_class)
    return _require(best, "equal opportunity")


def f_dpa(conf: GroupedConfusion, alpha: float = 0.0) -> float:
    if np.any(conf.group_sizes() == 0):
        raise InvalidParameterError("every group needs at least one sample for demographic parity")
    best, _ = _min_ratio(rates(conf, alpha)["pred"])
    return _require(best, "demographic parity")


def gap_metrics(conf: GroupedConfusion, alpha: float = 0.0) -> tuple[float, float, float]:
    """(gap_eop, gap_eod, gap_dpa): largest absolute rate differences over classes and group pairs."""
    r = rates(conf, alpha)
    g_tpr, _ = _max_gap(r["tpr"])
    g_fpr, _ = _max_gap(r["fpr"])
    g_pred, _ = _max_gap(r["pred"])
    eod_parts = [x for x in (g_tpr, g_fpr) if x is not None]
    return (_require(g_tpr, "equal opportunity gap"),
            _require(max(eod_parts) if eod_parts else None, "equalized odds gap"),
            _require(g_pred, "demographic parity gap"))


@dataclass
class FairnessReport:
    f_eod: float
    f_eop: float
    f_dpa: float
    gap_eop: float
    gap_eod: float
    gap_dpa: float
    # metric -> (class label or None, (numerator group, denominator group))
    witnesses: dict = field(default_factory=dict)

    METRICS = ("f_eod", "f_eop", "f_dpa", "gap_eop", "gap_eod", "gap_dpa")

    def values(self) -> dict:
        return {k: getattr(self, k) for k in self.METRICS}

    def to_dict(self) -> dict:
        out = self.values()
        out["witnesses"] = {k: {"class": v[0], "groups": list(v[1])} for k, v in self.witnesses.items()}
        return out


def fairness_report(conf: GroupedConfusion, alpha: float = 0.0, missing_class: str = "exclude") -> FairnessReport:
    r = rates(conf, alpha)

    def label(w):
        if w is None:
            return None
        cls, (j, q) = w
        return (None if cls is None else _plain(conf.classes[cls]), (_plain(conf.groups[j]), _plain(conf.groups[q])))

    t, tw = _min_ratio(r["tpr"])
    f, fw = _min_ratio(r["fpr"])
    candidates = [(v, w) for v, w in ((t, tw), (f, fw)) if v is not None]
    eod, eod_w = min(candidates, key=lambda vw: vw[0]) if candidates else (None, None)
    eop, eop_w = _eop(conf, alpha, missing_class)
    if np.any(conf.group_sizes() == 0):
        raise InvalidParameterError("every group needs at least one sample for demographic parity")
    dpa, dpa_w = _min_ratio(r["pred"])
    gaps = gap_metrics(conf, alpha)
    witnesses = {k: label(w) for k, w in (("f_eod", eod_w), ("f_eop", eop_w), ("f_dpa", dpa_w)) if w is not None}
    return FairnessReport(
        f_eod=_require(eod, "equalized odds"), f_eop=_require(eop, "equal opportunity"),
        f_dpa=_require(dpa, "demographic parity"),
        gap_eop=gaps[0], gap_eod=gaps[1], gap_dpa=gaps[2], witnesses=witnesses,
    )


def _plain(x):
    return x.item() if isinstance(x, np.generic) else x


def multilabel_confusions(groups, y_true, y_pred, label_names=None) -> dict:
    """One binary confusion table per label column of 0/1 indicator matrices."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.ndim != 2 or y_true.shape != y_pred.shape:
        raise InvalidParameterError("multi-label inputs must be matching (samples, labels) matrices")
    names = label_names or list(range(y_true.shape[1]))
    g_labels = _sorted_labels(np.unique(np.asarray(groups)))
    return {name: GroupedConfusion.from_predictions(groups, y_true[:, k], y_pred[:, k],
                                                    group_labels=g_labels, class_labels=(0, 1))
            for k, name in enumerate(names)}


def multilabel_report(groups, y_true, y_pred, alpha: float = 0.0, label_names=None) -> FairnessReport:
    """Per-label binary reports folded together: minimum of each ratio, maximum of each gap.

    Labels whose tables leave a metric undefined are skipped for that metric.
    """
    reports = {}
    for name, conf in multilabel_confusions(groups, y_true, y_pred, label_names).items():
        try:
            reports[name] = fairness_report(conf, alpha)
        except InsufficientDataError:
            continue
    if not reports:
        raise InsufficientDataError("no label has enough data for the fairness metrics")
    out, witnesses = {}, {}
    for metric in FairnessReport.METRICS:
        pick = min if metric.startswith("f_") else max
        name = pick(reports, key=lambda n: getattr(reports[n], metric))
        out[metric] = getattr(reports[name], metric)
        if metric in reports[name].witnesses:
            witnesses[metric] = (name, reports[name].witnesses[metric][1])
    return FairnessReport(witnesses=witnesses, **out)


def _open_rows(path, required):
    path = Path(path)
    try:
        handle = path.open(newline="")
    except OSError as exc:
        raise ParseError(f"{path}: cannot open ({exc.strerror})") from None
    with handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise ParseError(f"{path}: file is empty")
        header = [h.strip() for h in reader.fieldnames]
        for col in required:
            if col not in header:
                raise ParseError(f"{path}: missing column {col!r} (have {header})")
        reader.fieldnames = header
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if None in row or any(row.get(c) is None for c in required):
                raise ParseError(f"{path}: row {lineno} has the wrong number of fields")
            rows.append((lineno, {c: row[c].strip() for c in required}))
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return path, rows


def _coerce_labels(values):
    """Use integers when every label parses as one, so classes sort numerically."""
    try:
        return [int(v) for v in values]
    except ValueError:
        return list(values)


def read_prediction_log(path) -> GroupedConfusion:
    """Confusion table from a CSV with columns group, true_class, predicted_class."""
    path, rows = _open_rows(path, ("group", "true_class", "predicted_class"))
    for lineno, row in rows:
        for col, v in row.items():
            if v == "":
                raise ParseError(f"{path}: row {lineno}, column {col!r}: empty value")
    groups = _coerce_labels([r["group"] for _, r in rows])
    true = _coerce_labels([r["true_class"] for _, r in rows])
    pred = _coerce_labels([r["predicted_class"] for _, r in rows])
    if type(true[0]) is not type(pred[0]) or len({type(x) for x in true + pred}) > 1:
        true, pred = [str(x) for x in true], [str(x) for x in pred]
    return GroupedConfusion.from_predictions(np.array(groups, dtype=object), np.array(true, dtype=object),
                                             np.array(pred, dtype=object))


def read_count_table(path) -> GroupedConfusion:
    """Confusion table from a CSV with columns group, true_class, predicted_class, count."""
    path, rows = _open_rows(path, ("group", "true_class", "predicted_class", "count"))
    table = {}
    for lineno, row in rows:
        try:
            n = float(row["count"])
        except ValueError:
            raise ParseError(f"{path}: row {lineno}, column 'count': {row['count']!r} is not a number") from None
        if n < 0 or n != int(n):
            raise ParseError(f"{path}: row {lineno}, column 'count': must be a non-negative integer")
        key = (row["group"], row["true_class"], row["predicted_class"])
        table[key] = table.get(key, 0) + int(n)
    g_labels = _sorted_labels(set(_coerce_labels([k[0] for k in table])))
    c_raw = [k[1] for k in table] + [k[2] for k in table]
    c_labels = _sorted_labels(set(_coerce_labels(c_raw)))
    as_int = all(isinstance(c, int) for c in c_labels)
    g_int = all(isinstance(g, int) for g in g_labels)
    g_index = {str(g): i for i, g in enumerate(g_labels)}
    c_index = {str(c): i for i, c in enumerate(c_labels)}
    counts = np.zeros((len(g_labels), len(c_labels), len(c_labels)), dtype=np.int64)
    for (g, t, p), n in table.items():
        gk = str(int(g)) if g_int else g
        tk, pk = (str(int(t)), str(int(p))) if as_int else (t, p)
        counts[g_index[gk], c_index[tk], c_index[pk]] += n
    return GroupedConfusion(tuple(g_labels), tuple(c_labels), counts)
