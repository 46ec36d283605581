"""Command-line entry point: ``pushift {convert,synth,fit,predict,bench}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import replace

import numpy as np
from scipy import linalg

from . import bench, density_ratio, optimizer
from .data import (
    LabeledDataset,
    PUScenarioConfig,
    SyntheticScenario,
    default_scenario,
    load_dataset,
    load_label_map,
    sample_pu,
    serialize_csv,
    serialize_libsvm,
)
from .errors import DimensionError, EmptySampleError, NumericalError, ParseError
from .losses import Loss
from .model import FeatureMap, LinearModel, choose_centers, median_distance, predict_label
from .optimizer import TrainConfig
from .prior_cost import TestCondition, reduce
from .risk import PU, PU_SHIFT, PUSample, RiskSpec

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3

log = logging.getLogger("pushift")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _on_off(text):
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return text == "on"


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pushift", description="PU classification under class-prior shift and asymmetric costs.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("convert", help="reduce (pi, pi', alpha) to the unified prior and cost")
    p.add_argument("--pi", type=float, help="training class prior")
    p.add_argument("--pi-prime", type=float, help="test class prior")
    p.add_argument("--alpha", type=float, default=0.5, help="false-positive cost (default 0.5)")
    p.add_argument("--input", help="CSV of pi,pi_prime,alpha triples (default: stdin when --pi is absent)")
    p.add_argument("--out", help="output file (default: stdout)")

    p = sub.add_parser("synth", help="draw a PU training file and a labeled test file")
    p.add_argument("--config", help="scenario JSON {pos_mean, pos_var, neg_mean, neg_var, pi}")
    p.add_argument("--dataset", help="labeled LIBSVM/CSV pool to sample from instead of a scenario")
    p.add_argument("--label-map", help="JSON label map for --dataset")
    p.add_argument("--pi", type=float, default=0.3)
    p.add_argument("--pi-prime", type=float, default=0.5)
    p.add_argument("--n-p", type=int, default=500)
    p.add_argument("--n-u", type=int, default=2000)
    p.add_argument("--n-test", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "libsvm"), default="csv")
    p.add_argument("--out", required=True, help="output prefix; writes PREFIX.train.EXT and PREFIX.test.EXT")

    p = sub.add_parser("fit", help="train one model on a PU file and write it as JSON")
    p.add_argument("train", help="PU file: label +1 marks labeled positives, -1 unlabeled patterns")
    p.add_argument("--framework", choices=("risk", "ratio"), default="risk")
    p.add_argument("--loss", default="squared", help="squared, logistic or double-hinge")
    p.add_argument("--model", choices=("lin", "ker"), default="lin")
    p.add_argument("--direction", choices=density_ratio.DIRECTIONS, default=density_ratio.P_OVER_U)
    p.add_argument("--pi", type=float, required=True, help="training class prior")
    p.add_argument("--pi-given", type=float, help="assumed test class prior (default: --pi)")
    p.add_argument("--alpha", type=float, default=0.5, help="false-positive cost")
    p.add_argument("--non-negative", action="store_true", help="clamp the negative-class risk at zero")
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "libsvm"), help="input format (default: by extension)")
    p.add_argument("--out", required=True, help="model JSON path")

    p = sub.add_parser("predict", help="apply a model JSON to a labeled dataset")
    p.add_argument("model", help="model JSON written by fit")
    p.add_argument("data", help="LIBSVM or CSV file")
    p.add_argument("--pi", type=float, help="training class prior (ratio models)")
    p.add_argument("--pi-given", type=float, help="assumed test class prior (ratio models; default --pi)")
    p.add_argument("--alpha", type=float, default=0.5, help="false-positive cost (ratio models)")
    p.add_argument("--clip-ratio", type=_on_off, default=True, metavar="{on,off}")
    p.add_argument("--label-map", help="JSON label map")
    p.add_argument("--format", choices=("csv", "libsvm"), help="input format (default: by extension)")
    p.add_argument("--out", help="write one predicted label per line (default: stdout)")

    p = sub.add_parser("bench", help="run the benchmark grid and print the result table")
    p.add_argument("--config", help="ExperimentConfig JSON")
    p.add_argument("--dataset", help="labeled LIBSVM/CSV pool (overrides the config's data source)")
    p.add_argument("--methods", help="comma-separated method names")
    p.add_argument("--pi", type=_float_list, help="training priors (comma-separated)")
    p.add_argument("--pi-prime", type=_float_list, help="test priors (comma-separated)")
    p.add_argument("--pi-given", type=_float_list, help="given test priors (default: pi and pi')")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--clip-ratio", type=_on_off, metavar="{on,off}")
    p.add_argument("--format", choices=("csv", "markdown"), default="csv")
    p.add_argument("--out", help="output file (default: stdout)")
    return parser


# ------------------------------------------------------------------ helpers


def _write(path, payload):
    data = payload.encode("utf-8") if isinstance(payload, str) else payload
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        with open(path, "wb") as fh:
            fh.write(data)


def _read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _label_map(path):
    if path is None:
        return None
    with open(path, encoding="utf-8") as fh:
        return load_label_map(fh.read())


def _condition(pi, pi_given, alpha):
    return reduce(TestCondition(pi, pi if pi_given is None else pi_given, alpha))


# ------------------------------------------------------------------ commands


def cmd_convert(args):
    if args.pi is not None:
        if args.pi_prime is None:
            raise UsageError("--pi needs --pi-prime")
        triples = [(args.pi, args.pi_prime, args.alpha)]
    else:
        text = open(args.input, encoding="utf-8").read() if args.input else sys.stdin.read()
        triples = []
        for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
            if not row or not "".join(row).strip():
                continue
            try:
                values = [float(v) for v in row]
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise ParseError(f"non-numeric triple {row}", lineno) from None
            if len(values) != 3:
                raise ParseError(f"expected pi,pi_prime,alpha, got {len(values)} fields", lineno)
            triples.append(tuple(values))
    lines = ["pi,pi_prime,alpha,pi_unif,alpha_unif"]
    for pi, pp, a in triples:
        u = reduce(TestCondition(pi, pp, a))
        lines.append(",".join(f"{v:.12g}" for v in (pi, pp, a, u.pi_unif, u.alpha_unif)))
    _write(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_synth(args):
    if args.dataset:
        source = load_dataset(args.dataset, label_map=_label_map(args.label_map))
    elif args.config:
        source = SyntheticScenario.from_json(json.dumps(_read_json(args.config)))
    else:
        source = default_scenario()
    if isinstance(source, SyntheticScenario):
        source = source.with_prior(args.pi)
    cfg = PUScenarioConfig(args.n_p, args.n_u, args.n_test, args.pi, args.pi_prime, args.seed)
    sample, test = sample_pu(source, cfg)
    pu = LabeledDataset(
        np.vstack([sample.positives, sample.unlabeled]),
        np.concatenate([np.ones(sample.n_p, dtype=int), -np.ones(sample.n_u, dtype=int)]),
        "pu",
    )
    emit = serialize_csv if args.format == "csv" else serialize_libsvm
    _write(f"{args.out}.train.{args.format}", emit(pu))
    _write(f"{args.out}.test.{args.format}", emit(test))
    return EXIT_OK


def _pu_sample(path, fmt, pi):
    data = load_dataset(path, fmt, label_map={1.0: 1, "*": -1})
    return PUSample(data.patterns[data.labels == 1], data.patterns[data.labels == -1], pi)


def cmd_fit(args):
    sample = _pu_sample(args.train, args.format, args.pi)
    if args.framework == "ratio":
        if args.direction == density_ratio.P_OVER_U:
            model = density_ratio.fit_ulsif(sample.positives, sample.unlabeled, args.direction, seed=args.seed)
        else:
            model = density_ratio.fit_ulsif(sample.unlabeled, sample.positives, args.direction, seed=args.seed)
        _write(args.out, model.to_json())
        return EXIT_OK

    loss = Loss.parse(args.loss)
    if not loss.is_surrogate:
        raise UsageError(f"{loss.value} loss cannot be trained; use squared, logistic or double-hinge")
    target = _condition(args.pi, args.pi_given, args.alpha).pi_unif
    if target == sample.train_prior:
        spec = RiskSpec(loss, PU, non_negative=args.non_negative)
    else:
        spec = RiskSpec(loss, PU_SHIFT, test_prior=target, non_negative=args.non_negative)
    rng = np.random.default_rng(args.seed)
    if args.model == "lin":
        fmap = FeatureMap.raw(sample.dim)
    else:
        pool = np.vstack([sample.positives, sample.unlabeled])
        fmap = FeatureMap.gaussian(choose_centers(pool, rng), median_distance(pool, rng))
    config = TrainConfig(learning_rate=args.lr, epochs=args.epochs, seed=args.seed)
    model = optimizer.train(spec, sample, fmap, config)
    _write(args.out, model.to_json())
    return EXIT_OK


def cmd_predict(args):
    doc = _read_json(args.model)
    data = load_dataset(args.data, args.format, label_map=_label_map(args.label_map))
    if "direction" in doc:
        if args.pi is None:
            raise UsageError("ratio models need --pi")
        model = density_ratio.RatioModel.from_json(json.dumps(doc))
        cond = _condition(args.pi, args.pi_given, args.alpha)
        pred = density_ratio.dr_classify(model, args.pi, cond.alpha_unif, data.patterns, clip=args.clip_ratio)
    else:
        model = LinearModel.from_json(json.dumps(doc))
        pred = predict_label(model, data.patterns)
    pred = np.atleast_1d(pred)
    _write(args.out, "".join(f"{int(p):+d}\n" for p in pred))
    if len(data):
        print(f"accuracy: {100.0 * float(np.mean(pred == data.labels)):.2f}%", file=sys.stderr)
    return EXIT_OK


def _bench_config(args) -> bench.ExperimentConfig:
    doc = _read_json(args.config) if args.config else {}
    config = bench.ExperimentConfig.from_dict(doc)
    changes = {}
    if args.methods:
        changes["methods"] = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.clip_ratio is not None:
        changes["clip_ratio"] = args.clip_ratio
    if args.dataset:
        changes["source"] = args.dataset
    if args.lr is not None or args.epochs is not None:
        train = config.train
        if args.lr is not None:
            train = replace(train, learning_rate=args.lr)
        if args.epochs is not None:
            train = replace(train, epochs=args.epochs)
        changes["train"] = train
    if args.pi or args.pi_prime or args.pi_given:
        pis = args.pi or sorted({p[0] for p in config.grid})
        primes = args.pi_prime or sorted({p[1] for p in config.grid})
        grid = []
        for pi in pis:
            for pp in primes:
                givens = args.pi_given or [pp, pi]
                grid.extend((pi, pp, pg) for pg in dict.fromkeys(givens))
        changes["grid"] = tuple(grid)
    return replace(config, **changes) if changes else config


def cmd_bench(args):
    config = _bench_config(args)
    result = bench.run_benchmark(config)
    _write(args.out, bench.emit_table(result, args.format))
    return EXIT_OK


COMMANDS = {"convert": cmd_convert, "synth": cmd_synth, "fit": cmd_fit, "predict": cmd_predict, "bench": cmd_bench}

_DATA_ERRORS = (ParseError, EmptySampleError, DimensionError, OSError, json.JSONDecodeError, KeyError)
_NUMERICAL_ERRORS = (NumericalError, linalg.LinAlgError, FloatingPointError, OverflowError)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except _DATA_ERRORS as err:
        print(f"pushift: data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except _NUMERICAL_ERRORS as err:
        print(f"pushift: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, ValueError) as err:
        print(f"pushift: error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
