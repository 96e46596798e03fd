"""Command-line entry point: ``otbag run | synth | selftest``.

On failure the first stderr line is ``<ErrorName>: <message>`` and the exit
code is nonzero.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import BadConfig, IoError, OTBagError
from .harness import (
    ALGORITHMS,
    REPORT_FORMATS,
    SYNTHETIC_KINDS,
    ExperimentConfig,
    SyntheticSpec,
    emit_report,
    run_experiment,
)
from .serialize import save_model


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("experiment")
    g.add_argument("--config", help="JSON config file; flags override its values")
    g.add_argument("--algos", dest="algorithms", help=f"comma-separated subset of {','.join(ALGORITHMS)}")
    g.add_argument("--m", type=int, help="ensemble size (default 10)")
    g.add_argument("--alpha", type=int, help="number of JDSMV segments (default 10)")
    g.add_argument("--segment-length", type=int, help="fixed JDSMV segment length; overrides --alpha")
    g.add_argument("--train-fraction", type=float, help="target share used for training (default 0.4)")
    g.add_argument("--reps", dest="repetitions", type=int, help="repetitions (default 20)")
    g.add_argument("--seed", dest="base_seed", type=int, help="base seed; repetition r uses seed+r")
    g.add_argument("--learner", choices=["perceptron", "logistic"])
    g.add_argument("--lr", dest="learning_rate", type=float, help="logistic learning rate (default 0.1)")
    g.add_argument("--count-mode", choices=["prequential", "in_loop"])
    g.add_argument("--baseline", action="store_true", default=None, help="add the target-only control")

    o = p.add_argument_group("output")
    o.add_argument("--report", choices=REPORT_FORMATS, default="table")
    o.add_argument("--out", help="write the report here instead of stdout")
    o.add_argument("--timing", action="store_true", help="include per-repetition wall-clock in csv/json")
    o.add_argument("--save-models", metavar="DIR", help="save every trained model as DIR/<algo>_rep<r>.model")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="otbag", description="Online transfer bagging experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run on source/target data files")
    d = run.add_argument_group("data")
    d.add_argument("--source")
    d.add_argument("--target")
    d.add_argument("--format", choices=["csv", "svmlight"])
    d.add_argument("--dimension", type=int, help="feature count for svmlight input")
    d.add_argument("--label-column", type=int, help="csv label column (default -1, the last)")
    d.add_argument("--positive", dest="positive_value", help="csv label value mapped to 1 (default '1')")
    d.add_argument("--header", action="store_true", default=None, help="csv files start with a header row")
    d.add_argument("--mixed-foreign", help="foreign-domain file mixed into the source")
    d.add_argument("--subsample", type=float, help="keep this fraction of source and target (default 1)")
    d.add_argument("--normalize", action="store_true", default=None, help="z-score using training data")
    _add_experiment_flags(run)

    synth = sub.add_parser("synth", help="run on a generated Gaussian transfer task")
    s = synth.add_argument_group("task")
    s.add_argument("--kind", choices=SYNTHETIC_KINDS, default="aligned")
    s.add_argument("--d", type=int, default=10)
    s.add_argument("--n-source", type=int, default=1000)
    s.add_argument("--n-target", type=int, default=40)
    s.add_argument("--n-test", type=int, default=1000)
    s.add_argument("--separation", type=float, default=4.0)
    _add_experiment_flags(synth)

    sub.add_parser("selftest", help="run the built-in acceptance checks")
    return parser


_NOT_CONFIG = {"command", "verbose", "config", "report", "out", "timing", "save_models",
               "kind", "d", "n_source", "n_target", "n_test", "separation"}


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    raw = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except OSError as err:
            raise IoError(f"cannot read config {args.config}: {err}") from err
        except json.JSONDecodeError as err:
            raise BadConfig(f"config {args.config} is not valid JSON: {err}") from err
    for key, value in vars(args).items():
        if key not in _NOT_CONFIG and value is not None:
            raw[key] = value
    if args.command == "synth":
        raw["synthetic"] = SyntheticSpec(args.kind, args.d, args.n_source, args.n_target, args.n_test, args.separation)
    return ExperimentConfig.from_dict(raw).validate()


def _model_sink(directory: str):
    root = Path(directory)
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise IoError(str(err)) from err

    def sink(rep, algorithm, model):
        save_model(model, root / f"{algorithm}_rep{rep}.model")

    return sink


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "selftest":
            from .selftest import run_all

            return 0 if all(c.passed for c in run_all()) else 1
        config = config_from_args(args)
        sink = _model_sink(args.save_models) if args.save_models else None
        table = run_experiment(config, model_sink=sink)
        text = emit_report(table, args.report, args.out, include_timing=args.timing)
        if args.out is None:
            sys.stdout.write(text)
        return 0
    except OTBagError as err:
        print(f"{err.name}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
