"""Benchmark harness: method matrix x prior grid, repeated trials, t-test highlighting.

Each grid point is a triple ``(pi, pi_prime, pi_given)``: the unlabeled pool
has prior ``pi``, the test set is drawn at ``pi_prime`` and the methods are
told ``pi_given``.  Density-ratio methods fit once per trial and re-threshold
for every ``pi_given``; risk-minimisation methods retrain for each one.
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter, OrderedDict
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg
from scipy.special import betainc

from . import density_ratio, optimizer
from .data import LabeledDataset, PUScenarioConfig, SyntheticScenario, bayes_accuracy, bayes_reference, default_scenario, load_dataset, sample_pu
from .errors import PUError
from .losses import Loss
from .model import FeatureMap, choose_centers, median_distance, predict_label
from .optimizer import TrainConfig
from .prior_cost import TestCondition, check_open_unit, reduce
from .risk import PU, PU_SHIFT, PUSample, RiskSpec

log = logging.getLogger(__name__)

DR_METHODS = {"dr_p_over_u": density_ratio.P_OVER_U, "dr_u_over_p": density_ratio.U_OVER_P}
RM_METHODS = {
    "rm_squared_lin": (Loss.SQUARED, "lin"),
    "rm_squared_ker": (Loss.SQUARED, "ker"),
    "rm_dh_lin": (Loss.DOUBLE_HINGE, "lin"),
    "rm_dh_ker": (Loss.DOUBLE_HINGE, "ker"),
    "rm_logistic_lin": (Loss.LOGISTIC, "lin"),
    "rm_logistic_ker": (Loss.LOGISTIC, "ker"),
}
ALL_METHODS = tuple(DR_METHODS) + tuple(RM_METHODS)


@dataclass(frozen=True)
class ExperimentConfig:
    methods: tuple = ALL_METHODS
    grid: tuple = ((0.3, 0.5, 0.5), (0.3, 0.5, 0.4), (0.3, 0.5, 0.3))
    trials: int = 10
    source: object = None  # SyntheticScenario, LabeledDataset or a file path; None = default scenario
    n_p: int = 500
    n_u: int = 2000
    n_test: int = 500
    train: TrainConfig = field(default_factory=TrainConfig)
    ulsif: density_ratio.UlsifGrid = field(default_factory=density_ratio.UlsifGrid)
    non_negative: bool = False
    kernel_bandwidth_factor: float = 1.0
    clip_ratio: bool = True
    standardize: bool = True
    seed: int = 0

    def __post_init__(self):
        methods = tuple(self.methods)
        if not methods:
            raise ValueError("at least one method is required")
        unknown = [m for m in methods if m not in ALL_METHODS]
        if unknown:
            raise ValueError(f"unknown methods: {unknown}")
        grid = tuple(tuple(float(v) for v in point) for point in self.grid)
        if not grid:
            raise ValueError("the prior grid is empty")
        for point in grid:
            if len(point) != 3:
                raise ValueError(f"grid points are (pi, pi_prime, pi_given) triples, got {point}")
            for name, v in zip(("pi", "pi_prime", "pi_given"), point):
                check_open_unit(v, name)
        if int(self.trials) < 2:
            raise ValueError("trials must be at least 2 to report a standard error")
        object.__setattr__(self, "methods", methods)
        object.__setattr__(self, "grid", grid)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        kwargs = {}
        for key in ("methods", "trials", "n_p", "n_u", "n_test", "non_negative", "kernel_bandwidth_factor", "clip_ratio", "standardize", "seed"):
            if key in doc:
                kwargs[key] = doc.pop(key)
        if "grid" in doc:
            kwargs["grid"] = tuple(tuple(p) for p in doc.pop("grid"))
        if "train" in doc:
            kwargs["train"] = TrainConfig(**doc.pop("train"))
        if "ulsif" in doc:
            u = dict(doc.pop("ulsif"))
            for key in ("bandwidths", "lambdas"):
                if u.get(key) is not None:
                    u[key] = tuple(u[key])
            kwargs["ulsif"] = density_ratio.UlsifGrid(**u)
        if "scenario" in doc:
            kwargs["source"] = SyntheticScenario.from_json(json.dumps(doc.pop("scenario")))
        elif "dataset" in doc:
            kwargs["source"] = doc.pop("dataset")
        if doc:
            raise ValueError(f"unknown config keys: {sorted(doc)}")
        return cls(**kwargs)


@dataclass
class ResultCell:
    dataset: str
    pi: float
    pi_prime: float
    pi_given: float
    method: str
    accuracies: list = field(default_factory=list)
    highlighted: bool = False
    error: str = ""

    @property
    def trials(self) -> int:
        return len(self.accuracies)

    @property
    def failed(self) -> bool:
        return not self.accuracies

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies)) if self.accuracies else math.nan

    @property
    def stderr(self) -> float:
        if len(self.accuracies) < 2:
            return 0.0 if self.accuracies else math.nan
        return float(np.std(self.accuracies, ddof=1) / math.sqrt(len(self.accuracies)))


@dataclass
class BenchmarkResult:
    cells: list
    calls: Counter = field(default_factory=Counter)
    bayes: dict = field(default_factory=dict)  # (pi, pi_prime) -> Bayes accuracy in percent

    def rows(self):
        """Cells grouped by (dataset, pi, pi_prime, pi_given) in grid order."""
        groups = OrderedDict()
        for cell in self.cells:
            groups.setdefault((cell.dataset, cell.pi, cell.pi_prime, cell.pi_given), []).append(cell)
        return groups

    def cell(self, method, pi_given, pi=None, pi_prime=None) -> ResultCell:
        for c in self.cells:
            if c.method == method and c.pi_given == pi_given and (pi is None or c.pi == pi) and (pi_prime is None or c.pi_prime == pi_prime):
                return c
        raise KeyError((method, pi_given, pi, pi_prime))


# ------------------------------------------------------------------ statistics


def t_sf(t: float, df: float) -> float:
    """P(T > t) for Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    tail = 0.5 * float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return tail if t >= 0 else 1.0 - tail


def welch_one_sided(a, b):
    """Welch test of H1: mean(a) > mean(b). Returns ``(t, df, p_value)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    va = np.var(a, ddof=1) / len(a)
    vb = np.var(b, ddof=1) / len(b)
    diff = float(np.mean(a) - np.mean(b))
    se2 = va + vb
    if se2 == 0.0:
        if diff == 0.0:
            return 0.0, math.inf, 0.5
        return math.copysign(math.inf, diff), math.inf, 0.0 if diff > 0 else 1.0
    t = diff / math.sqrt(se2)
    df = se2 * se2 / (va * va / (len(a) - 1) + vb * vb / (len(b) - 1))
    return t, df, t_sf(t, df)


def highlight(cells, level: float = 0.05):
    """Flags for one table row: the best mean plus every cell not significantly worse."""
    flags = [False] * len(cells)
    live = [i for i, c in enumerate(cells) if not c.failed]
    if not live:
        return flags
    best = max(live, key=lambda i: cells[i].mean)
    flags[best] = True
    for i in live:
        if i == best:
            continue
        a, b = cells[best].accuracies, cells[i].accuracies
        if len(a) < 2 or len(b) < 2:
            # no variance estimate: fall back to exact comparison of means
            flags[i] = cells[i].mean == cells[best].mean
            continue
        _, _, p = welch_one_sided(a, b)
        flags[i] = not p < level
    return flags


# ------------------------------------------------------------------ harness


def _resolve_source(source):
    if source is None:
        return default_scenario()
    if isinstance(source, (SyntheticScenario, LabeledDataset)):
        return source
    return load_dataset(source)


def _seed(*parts) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1, dtype=np.uint64)[0])


def _standardize(sample: PUSample, test: LabeledDataset):
    pool = np.vstack([sample.positives, sample.unlabeled])
    mu = pool.mean(axis=0)
    sd = pool.std(axis=0)
    sd[sd == 0] = 1.0
    return (
        PUSample((sample.positives - mu) / sd, (sample.unlabeled - mu) / sd, sample.train_prior),
        LabeledDataset((test.patterns - mu) / sd, test.labels, test.name),
    )


def _rm_feature_map(kind, sample, rng, bandwidth_factor):
    if kind == "lin":
        return FeatureMap.raw(sample.dim)
    pool = np.vstack([sample.positives, sample.unlabeled])
    centers = choose_centers(pool, rng)
    return FeatureMap.gaussian(centers, bandwidth_factor * median_distance(pool, rng))


def _rm_spec(loss, pi, pi_given, non_negative):
    if pi_given == pi:
        return RiskSpec(loss, PU, non_negative=non_negative)
    return RiskSpec(loss, PU_SHIFT, test_prior=pi_given, non_negative=non_negative)


_FAILURES = (PUError, ArithmeticError, linalg.LinAlgError, ValueError)


def run_benchmark(config: ExperimentConfig) -> BenchmarkResult:
    source = _resolve_source(config.source)
    name = source.name
    calls = Counter()
    cells = OrderedDict()
    for pi, pp, pg in config.grid:
        for m in config.methods:
            cells[(pi, pp, pg, m)] = ResultCell(name, pi, pp, pg, m)

    # one PU draw per (pi, pi_prime) pair and trial, shared by every method and pi_given
    pairs = list(OrderedDict.fromkeys((pi, pp) for pi, pp, _ in config.grid))
    bayes = {}
    for pair_idx, (pi, pp) in enumerate(pairs):
        givens = [pg for p1, p2, pg in config.grid if (p1, p2) == (pi, pp)]
        pool = source.with_prior(pi) if isinstance(source, SyntheticScenario) else source
        if isinstance(source, SyntheticScenario):
            acc, _ = bayes_accuracy(pool, pp, lambda x: bayes_reference(pool, pp, 0.5, x), seed=_seed(config.seed, pair_idx, 999))
            bayes[(pi, pp)] = 100.0 * acc
        for trial in range(int(config.trials)):
            sc = PUScenarioConfig(config.n_p, config.n_u, config.n_test, pi, pp, _seed(config.seed, pair_idx, trial))
            sample, test = sample_pu(pool, sc)
            if config.standardize:
                sample, test = _standardize(sample, test)
            for m_idx, method in enumerate(config.methods):
                mseed = _seed(config.seed, pair_idx, trial, m_idx + 1)
                if method in DR_METHODS:
                    _run_dr(method, sample, test, givens, pi, pp, mseed, config, cells, calls)
                else:
                    _run_rm(method, sample, test, givens, pi, pp, mseed, config, cells, calls)

    result = BenchmarkResult(list(cells.values()), calls, bayes)
    for row in result.rows().values():
        for cell, flag in zip(row, highlight(row)):
            cell.highlighted = flag
    return result


def _record_failure(cells, keys, method, trial_err):
    for key in keys:
        cell = cells[key]
        if not cell.error:
            cell.error = f"{type(trial_err).__name__}: {trial_err}"


def _run_dr(method, sample, test, givens, pi, pp, seed, config, cells, calls):
    direction = DR_METHODS[method]
    keys = [(pi, pp, pg, method) for pg in givens]
    try:
        if direction == density_ratio.P_OVER_U:
            model = density_ratio.fit_ulsif(sample.positives, sample.unlabeled, direction, config.ulsif, seed)
        else:
            model = density_ratio.fit_ulsif(sample.unlabeled, sample.positives, direction, config.ulsif, seed)
        calls[method] += 1
    except _FAILURES as err:
        log.warning("%s failed: %s", method, err)
        _record_failure(cells, keys, method, err)
        return
    for pg, key in zip(givens, keys):
        try:
            alpha_unif = reduce(TestCondition(pi, pg, 0.5)).alpha_unif
            pred = density_ratio.dr_classify(model, pi, alpha_unif, test.patterns, clip=config.clip_ratio)
            cells[key].accuracies.append(100.0 * float(np.mean(pred == test.labels)))
        except _FAILURES as err:
            _record_failure(cells, [key], method, err)


def _run_rm(method, sample, test, givens, pi, pp, seed, config, cells, calls):
    loss, kind = RM_METHODS[method]
    rng = np.random.default_rng(seed)
    try:
        fmap = _rm_feature_map(kind, sample, rng, config.kernel_bandwidth_factor)
    except _FAILURES as err:
        _record_failure(cells, [(pi, pp, pg, method) for pg in givens], method, err)
        return
    tcfg = replace(config.train, seed=seed)
    for pg in givens:
        key = (pi, pp, pg, method)
        try:
            model = optimizer.train(_rm_spec(loss, pi, pg, config.non_negative), sample, fmap, tcfg)
            calls[method] += 1
            pred = predict_label(model, test.patterns)
            cells[key].accuracies.append(100.0 * float(np.mean(pred == test.labels)))
        except _FAILURES as err:
            log.warning("%s (pi_given=%g) failed: %s", method, pg, err)
            _record_failure(cells, [key], method, err)


# ------------------------------------------------------------------ output

PLACEHOLDER = "—"


def _num(v: float) -> str:
    return f"{v:.1f}"


def _g(v: float) -> str:
    return f"{v:g}"


def emit_table(result: BenchmarkResult | list, fmt: str = "csv") -> bytes:
    cells = result.cells if isinstance(result, BenchmarkResult) else list(result)
    if fmt == "csv":
        lines = ["dataset,pi,pi_prime,pi_given,method,mean,stderr,highlighted,error"]
        for c in cells:
            if c.failed:
                mean, se = PLACEHOLDER, PLACEHOLDER
            else:
                mean, se = _num(c.mean), f"({_num(c.stderr)})"
            err = c.error.replace(",", ";").replace("\n", " ")
            lines.append(",".join([c.dataset, _g(c.pi), _g(c.pi_prime), _g(c.pi_given), c.method, mean, se, str(c.highlighted).lower(), err]))
        return ("\n".join(lines) + "\n").encode("utf-8")
    if fmt == "markdown":
        return _markdown(cells).encode("utf-8")
    raise ValueError(f"unknown table format {fmt!r}")


def format_cell(c: ResultCell) -> str:
    if c.failed:
        return PLACEHOLDER
    text = f"{_num(c.mean)} ({_num(c.stderr)})"
    return f"**{text}**" if c.highlighted else text


def _markdown(cells) -> str:
    blocks = OrderedDict()
    for c in cells:
        blocks.setdefault((c.dataset, c.pi, c.pi_prime), OrderedDict()).setdefault(c.pi_given, []).append(c)
    out = []
    for (ds, pi, pp), rows in blocks.items():
        methods = list(OrderedDict.fromkeys(c.method for row in rows.values() for c in row))
        out.append(f"### {ds}: pi = {_g(pi)}, pi' = {_g(pp)}")
        out.append("")
        out.append("| pi_given | " + " | ".join(methods) + " |")
        out.append("|---" * (len(methods) + 1) + "|")
        for pg, row in rows.items():
            by_method = {c.method: c for c in row}
            out.append(f"| {_g(pg)} | " + " | ".join(format_cell(by_method[m]) for m in methods) + " |")
        notes = [f"{c.method} (pi_given={_g(c.pi_given)}): {c.error}" for row in rows.values() for c in row if c.error]
        if notes:
            out.append("")
            out.extend(f"- {n}" for n in notes)
        out.append("")
    return "\n".join(out)
