"""Datasets, PU sampling and synthetic Gaussian scenarios with exact densities."""

from __future__ import annotations

import io
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DimensionError, EmptySampleError, ParseError
from .model import as_patterns
from .prior_cost import check_open_unit, sign
from .risk import PUSample


class ResamplingWarning(UserWarning):
    """A PU draw had to sample with replacement because a class was too small."""


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    patterns: np.ndarray
    labels: np.ndarray
    name: str = "data"

    def __post_init__(self):
        x = np.asarray(self.patterns, dtype=float)
        y = np.asarray(self.labels, dtype=int).ravel()
        if x.ndim == 1:
            x = x.reshape(len(y), -1) if len(y) else x.reshape(0, 0)
        if len(x) != len(y):
            raise DimensionError(f"{len(x)} patterns but {len(y)} labels")
        if np.any((y != 1) & (y != -1)):
            raise ValueError("labels must be +1 or -1")
        object.__setattr__(self, "patterns", x)
        object.__setattr__(self, "labels", y)

    def __len__(self):
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.patterns.shape[1] if self.patterns.ndim == 2 else 0


# ---------------------------------------------------------------- file formats

DEFAULT_LABEL_MAP = {1.0: 1, -1.0: -1, 0.0: -1, 2.0: -1}


def _map_label(raw: str, label_map, lineno):
    try:
        value = float(raw)
    except ValueError:
        raise ParseError(f"malformed label {raw!r}", lineno) from None
    if callable(label_map):
        return int(label_map(value))
    if value in label_map:
        return int(label_map[value])
    if "*" in label_map:
        return int(label_map["*"])
    raise ParseError(f"label {raw!r} is not in the label map", lineno)


def load_label_map(text: str) -> dict:
    """Parse a JSON label map such as ``{"0": 1, "2": 1, "*": -1}``."""
    doc = json.loads(text)
    out = {}
    for key, val in doc.items():
        if int(val) not in (1, -1):
            raise ValueError(f"label map targets must be +1 or -1, got {val!r}")
        out["*" if key == "*" else float(key)] = int(val)
    return out


def parse_libsvm(text, label_map=None, name="libsvm", n_features=None) -> LabeledDataset:
    """Parse LIBSVM/SVMlight text into a dense dataset.

    Indices are 1-based and must increase strictly within a line. Rows are
    zero-padded to the largest index seen (or ``n_features`` if larger).
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    label_map = DEFAULT_LABEL_MAP if label_map is None else label_map
    rows, labels = [], []
    max_index = 0
    for lineno, line in enumerate(io.StringIO(text), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        labels.append(_map_label(tokens[0], label_map, lineno))
        entries = []
        last = 0
        for tok in tokens[1:]:
            idx, sep, val = tok.partition(":")
            if not sep:
                raise ParseError(f"malformed token {tok!r}", lineno)
            try:
                i, v = int(idx), float(val)
            except ValueError:
                raise ParseError(f"malformed token {tok!r}", lineno) from None
            if i < 1:
                raise ParseError(f"feature index {i} is not 1-based", lineno)
            if i <= last:
                raise ParseError(f"feature index {i} does not increase (previous {last})", lineno)
            last = i
            entries.append((i, v))
        max_index = max(max_index, last)
        rows.append(entries)
    d = max(max_index, n_features or 0)
    x = np.zeros((len(rows), d))
    for r, entries in enumerate(rows):
        for i, v in entries:
            x[r, i - 1] = v
    return LabeledDataset(x, np.array(labels, dtype=int), name)


def _fmt(v: float) -> str:
    return repr(float(v))


def serialize_libsvm(data: LabeledDataset) -> str:
    out = []
    d = data.dim
    for x, y in zip(data.patterns, data.labels):
        # the last column is always written so the dimension survives a round trip
        feats = [f"{i + 1}:{_fmt(v)}" for i, v in enumerate(x) if v != 0 or i == d - 1]
        out.append(" ".join(["+1" if y > 0 else "-1"] + feats))
    return "\n".join(out) + ("\n" if out else "")


def parse_csv(text, header=False, label_map=None, name="csv") -> LabeledDataset:
    """Dense CSV with rows ``label,x1,...,xd``."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    label_map = DEFAULT_LABEL_MAP if label_map is None else label_map
    rows, labels = [], []
    for lineno, line in enumerate(io.StringIO(text), start=1):
        if header and lineno == 1:
            continue
        line = line.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        labels.append(_map_label(fields[0], label_map, lineno))
        try:
            rows.append([float(f) for f in fields[1:]])
        except ValueError:
            raise ParseError("non-numeric feature value", lineno) from None
        if rows and len(rows[-1]) != len(rows[0]):
            raise ParseError(f"expected {len(rows[0])} features, got {len(rows[-1])}", lineno)
    x = np.array(rows, dtype=float) if rows else np.zeros((0, 0))
    return LabeledDataset(x, np.array(labels, dtype=int), name)


def serialize_csv(data: LabeledDataset, header=False) -> str:
    lines = []
    if header:
        lines.append(",".join(["label"] + [f"x{i + 1}" for i in range(data.dim)]))
    for x, y in zip(data.patterns, data.labels):
        lines.append(",".join([str(int(y))] + [_fmt(v) for v in x]))
    return "\n".join(lines) + ("\n" if lines else "")


def load_dataset(path, fmt=None, header=False, label_map=None) -> LabeledDataset:
    """Read a LIBSVM or CSV file; the format defaults to the file extension."""
    path = str(path)
    if fmt is None:
        fmt = "csv" if path.lower().endswith(".csv") else "libsvm"
    with open(path, "rb") as fh:
        raw = fh.read()
    name = path.rsplit("/", 1)[-1].rsplit(".", 1)[0]
    if fmt == "csv":
        return parse_csv(raw, header=header, label_map=label_map, name=name)
    return parse_libsvm(raw, label_map=label_map, name=name)


# ---------------------------------------------------------- synthetic scenarios

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class SyntheticScenario:
    """Two Gaussian class-conditionals with diagonal covariances."""

    pos_mean: np.ndarray
    pos_var: np.ndarray
    neg_mean: np.ndarray
    neg_var: np.ndarray
    train_prior: float
    name: str = "gauss"

    def __post_init__(self):
        fields = {}
        for key in ("pos_mean", "pos_var", "neg_mean", "neg_var"):
            arr = np.atleast_1d(np.array(getattr(self, key), dtype=float))
            arr.setflags(write=False)
            fields[key] = arr
        d = len(fields["pos_mean"])
        if any(len(a) != d for a in fields.values()):
            raise DimensionError("means and variances must share one dimensionality")
        if np.any(fields["pos_var"] <= 0) or np.any(fields["neg_var"] <= 0):
            raise ValueError("variances must be positive")
        for key, arr in fields.items():
            object.__setattr__(self, key, arr)
        object.__setattr__(self, "train_prior", check_open_unit(self.train_prior, "train_prior"))

    @property
    def dim(self) -> int:
        return len(self.pos_mean)

    def with_prior(self, train_prior) -> "SyntheticScenario":
        return SyntheticScenario(self.pos_mean, self.pos_var, self.neg_mean, self.neg_var, train_prior, self.name)

    @staticmethod
    def _log_normal(x, mean, var):
        return -0.5 * np.sum((x - mean) ** 2 / var + np.log(var) + _LOG_2PI, axis=1)

    def log_pos(self, x):
        return self._log_normal(x, self.pos_mean, self.pos_var)

    def log_neg(self, x):
        return self._log_normal(x, self.neg_mean, self.neg_var)

    def draw(self, n: int, prior: float, rng: np.random.Generator):
        """``n`` labeled draws whose class composition is Binomial(n, prior)."""
        n_pos = int(rng.binomial(n, prior))
        return self.draw_counts(n_pos, n - n_pos, rng)

    def draw_counts(self, n_pos: int, n_neg: int, rng: np.random.Generator):
        xp = self.pos_mean + np.sqrt(self.pos_var) * rng.standard_normal((n_pos, self.dim))
        xn = self.neg_mean + np.sqrt(self.neg_var) * rng.standard_normal((n_neg, self.dim))
        x = np.vstack([xp, xn])
        y = np.concatenate([np.ones(n_pos, dtype=int), -np.ones(n_neg, dtype=int)])
        perm = rng.permutation(len(y))
        return x[perm], y[perm]

    def to_json(self) -> str:
        return json.dumps(
            {
                "pos_mean": self.pos_mean.tolist(),
                "pos_var": self.pos_var.tolist(),
                "neg_mean": self.neg_mean.tolist(),
                "neg_var": self.neg_var.tolist(),
                "pi": self.train_prior,
            }
        )

    @classmethod
    def from_json(cls, text: str, name="gauss") -> "SyntheticScenario":
        doc = json.loads(text)
        return cls(doc["pos_mean"], doc["pos_var"], doc["neg_mean"], doc["neg_var"], doc["pi"], doc.get("name", name))


def default_scenario(train_prior: float = 0.3) -> SyntheticScenario:
    """2-D scenario used by the benchmark defaults."""
    return SyntheticScenario([0.5, 0.5], [1.0, 1.0], [-0.5, -0.5], [2.0, 2.0], train_prior, "gauss2d")


def _patterns(scenario, x):
    arr, single = as_patterns(x, scenario.dim)
    return arr, single


def synth_densities(scenario: SyntheticScenario, x, which: str, test_prior: float | None = None):
    """Exact density ``p_p``, ``p_n``, ``p_u`` or ``p_t`` (``which`` in p/n/u/t)."""
    arr, single = _patterns(scenario, x)
    pp = np.exp(scenario.log_pos(arr))
    pn = np.exp(scenario.log_neg(arr))
    if which == "p":
        out = pp
    elif which == "n":
        out = pn
    elif which == "u":
        pi = scenario.train_prior
        out = pi * pp + (1.0 - pi) * pn
    elif which == "t":
        if test_prior is None:
            raise ValueError("the test density needs test_prior")
        t = check_open_unit(test_prior, "test_prior")
        out = t * pp + (1.0 - t) * pn
    else:
        raise ValueError(f"unknown density {which!r}")
    return float(out[0]) if single else out


def posterior(scenario: SyntheticScenario, x, prior: float):
    """p(y=+1 | x) under class prior ``prior``, computed in the log domain."""
    arr, single = _patterns(scenario, x)
    prior = check_open_unit(prior, "prior")
    logit = math.log(prior) - math.log1p(-prior) + scenario.log_pos(arr) - scenario.log_neg(arr)
    out = expit(logit)
    return float(out[0]) if single else out


def bayes_reference(scenario: SyntheticScenario, test_prior: float, fp_cost: float, x):
    """Bayes label sign[p(y=+1|x) - fp_cost] at test prior ``test_prior``."""
    a = check_open_unit(fp_cost, "fp_cost")
    arr, single = _patterns(scenario, x)
    t = check_open_unit(test_prior, "test_prior")
    # compare in log-odds to avoid underflow in the tails
    logit = math.log(t) - math.log1p(-t) + scenario.log_pos(arr) - scenario.log_neg(arr)
    labels = sign(logit - (math.log(a) - math.log1p(-a)))
    labels = np.atleast_1d(labels)
    return int(labels[0]) if single else labels


def analytic_ratio(scenario: SyntheticScenario, x, direction: str):
    """Exact p_p/p_u (``p_over_u``) or p_u/p_p (``u_over_p``)."""
    if direction not in ("p_over_u", "u_over_p"):
        raise ValueError(f"unknown ratio direction {direction!r}")
    arr, single = _patterns(scenario, x)
    pi = scenario.train_prior
    # p_u/p_p = pi + (1 - pi) * p_n/p_p, evaluated through the log densities
    u_over_p = pi + (1.0 - pi) * np.exp(scenario.log_neg(arr) - scenario.log_pos(arr))
    out = u_over_p if direction == "u_over_p" else 1.0 / u_over_p
    return float(out[0]) if single else out


def bayes_accuracy(scenario: SyntheticScenario, test_prior: float, classifier, n: int = 10**6, seed: int = 0):
    """Monte Carlo accuracy of ``classifier`` (patterns -> labels) at ``test_prior``.

    Returns ``(accuracy, standard_error)``.
    """
    t = check_open_unit(test_prior, "test_prior")
    rng = np.random.default_rng(seed)
    x, y = scenario.draw(n, t, rng)
    pred = np.asarray(classifier(x)).ravel()
    acc = float(np.mean(pred == y))
    return acc, math.sqrt(max(acc * (1.0 - acc), 0.0) / n)


def two_moons(n: int, rng: np.random.Generator, noise: float = 0.15, name="moons") -> LabeledDataset:
    """Banana-shaped 2-D benchmark: two interleaved half circles with Gaussian noise."""
    n_pos = n // 2
    n_neg = n - n_pos
    a = rng.uniform(0.0, math.pi, n_pos)
    b = rng.uniform(0.0, math.pi, n_neg)
    xp = np.column_stack([np.cos(a), np.sin(a)])
    xn = np.column_stack([1.0 - np.cos(b), 0.5 - np.sin(b)])
    x = np.vstack([xp, xn]) + noise * rng.standard_normal((n, 2))
    y = np.concatenate([np.ones(n_pos, dtype=int), -np.ones(n_neg, dtype=int)])
    return LabeledDataset(x, y, name)


# ------------------------------------------------------------------ PU sampling


@dataclass(frozen=True)
class PUScenarioConfig:
    n_p: int = 500
    n_u: int = 2000
    n_test: int = 500
    train_prior: float = 0.3
    test_prior: float = 0.5
    seed: int = 0

    def __post_init__(self):
        for key in ("n_p", "n_u", "n_test"):
            if int(getattr(self, key)) < 1:
                raise ValueError(f"{key} must be a positive integer")
        check_open_unit(self.train_prior, "train_prior")
        check_open_unit(self.test_prior, "test_prior")


def sample_pu(data, config: PUScenarioConfig, rng: np.random.Generator | None = None):
    """Draw ``(PUSample, test set)`` from a labeled pool or a synthetic scenario.

    The unlabeled set and the test set have Binomial class composition at the
    training and test prior respectively.  From a finite pool, training
    patterns are drawn without replacement (falling back to replacement with a
    ``ResamplingWarning``); test patterns are drawn with replacement from the
    patterns not used for training.
    """
    rng = np.random.default_rng(config.seed) if rng is None else rng
    pi, pt = config.train_prior, config.test_prior
    k_u = int(rng.binomial(config.n_u, pi))
    k_t = int(rng.binomial(config.n_test, pt))

    if isinstance(data, SyntheticScenario):
        xp, _ = data.draw_counts(config.n_p, 0, rng)
        xu, _ = data.draw_counts(k_u, config.n_u - k_u, rng)
        xt, yt = data.draw_counts(k_t, config.n_test - k_t, rng)
        return PUSample(xp, xu, pi), LabeledDataset(xt, yt, data.name)

    pos = np.flatnonzero(data.labels == 1)
    neg = np.flatnonzero(data.labels == -1)
    if len(pos) == 0 or len(neg) == 0:
        raise EmptySampleError(f"dataset {data.name!r} needs both classes, has {len(pos)} positive / {len(neg)} negative")
    need_pos = config.n_p + k_u
    need_neg = config.n_u - k_u
    if need_pos <= len(pos) and need_neg <= len(neg):
        p_idx = rng.permutation(pos)
        n_idx = rng.permutation(neg)
        train_p, u_pos, rest_p = p_idx[: config.n_p], p_idx[config.n_p : need_pos], p_idx[need_pos:]
        u_neg, rest_n = n_idx[:need_neg], n_idx[need_neg:]
    else:
        warnings.warn(
            f"{data.name}: not enough patterns for a disjoint draw "
            f"(need {need_pos}+/{need_neg}-, have {len(pos)}/{len(neg)}); sampling with replacement",
            ResamplingWarning,
            stacklevel=2,
        )
        train_p = rng.choice(pos, config.n_p, replace=True)
        u_pos = rng.choice(pos, k_u, replace=True)
        u_neg = rng.choice(neg, need_neg, replace=True)
        rest_p, rest_n = pos, neg
    if len(rest_p) == 0:
        rest_p = pos
    if len(rest_n) == 0:
        rest_n = neg
    u_idx = rng.permutation(np.concatenate([u_pos, u_neg]))
    t_idx = np.concatenate([rng.choice(rest_p, k_t, replace=True), rng.choice(rest_n, config.n_test - k_t, replace=True)])
    t_idx = rng.permutation(t_idx)
    x = data.patterns
    sample = PUSample(x[train_p], x[u_idx], pi)
    test = LabeledDataset(x[t_idx], data.labels[t_idx], data.name)
    return sample, test
