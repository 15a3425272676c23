"""``tunnelphase`` command-line entry point.

Exit codes: 0 success, 2 configuration or usage error, 3 data error,
4 numerical error.  Every failure writes one JSON line to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import (
    CapabilityError,
    ConsistencyError,
    DataError,
    DomainError,
    FittingError,
    FormatError,
    MetricError,
    NumericalError,
    SpecificationError,
    TrainingError,
    TunnelPhaseError,
)

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3, 4

# first match wins, so subclasses go before their bases
EXIT_CODES = (
    (SpecificationError, EXIT_USAGE),
    (CapabilityError, EXIT_USAGE),
    (DomainError, EXIT_USAGE),
    (DataError, EXIT_DATA),
    (ConsistencyError, EXIT_DATA),
    (FormatError, EXIT_DATA),
    (TrainingError, EXIT_DATA),
    (FittingError, EXIT_NUMERICAL),
    (NumericalError, EXIT_NUMERICAL),
    (MetricError, EXIT_NUMERICAL),
)

_THREAD_VARS = ("NUMBA_NUM_THREADS", "OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def exit_code_for(exc: BaseException) -> int:
    for cls, code in EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return EXIT_INTERNAL


def _diagnostic(command, exc, code):
    doc = {"status": "error", "command": command, "error": type(exc).__name__, "message": str(exc), "exit_code": code}
    diag = getattr(exc, "diagnostics", None)
    if diag:
        doc["diagnostics"] = {k: repr(v) for k, v in diag.items()}
    sys.stderr.write(json.dumps(doc, sort_keys=True) + "\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", required=True, help="pipeline config JSON")
    common.add_argument(
        "--out", "--in", "--dir", dest="dir", default=None, help="working directory (default: config output_dir)"
    )
    common.add_argument("--force", action="store_true", help="overwrite outputs that differ")
    common.add_argument("--threads", type=int, default=None, help="cap on worker threads")

    parser = _Parser(prog="tunnelphase", description="Tunneling kinetics dataset, models and phase diagram.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("gen", parents=[common], help="catalog.json + raw_curves.csv")
    sub.add_parser("augment", parents=[common], help="fits.csv + dataset.csv")
    p = sub.add_parser("train", parents=[common], help="model.json + trial_log.csv + train_report.json")
    p.add_argument("--family", required=True, choices=["plsr", "ridge", "et", "rf", "gbdt", "xgb"])
    p.add_argument("--plan", default="kfold", choices=["kfold", "loo"])
    p.add_argument("--holdout", default=None, help="system id held out when --plan loo")
    sub.add_parser("benchmark", parents=[common], help="bench.json + deviations.csv")
    p = sub.add_parser("explain", parents=[common], help="shap.csv + shap_summary.json")
    p.add_argument("--model", default=None, help="model.json (default: <dir>/model.json)")
    sub.add_parser("phase", parents=[common], help="phase.csv + SVG panels")
    sub.add_parser("validate-physics", parents=[common], help="run the physics oracle suite")
    sub.add_parser("run", parents=[common], help="every stage in order")
    return parser


def _set_threads(n):
    if n is None:
        return
    if n < 1:
        raise UsageError("--threads must be >= 1")
    for var in _THREAD_VARS:
        os.environ[var] = str(n)


def _dispatch(args):
    # heavy imports after the thread caps are in the environment
    from . import oracles, pipeline
    from .config import Config

    cfg = Config.load(args.config)
    out = args.dir or cfg.doc["output_dir"]
    cmd = args.command
    if cmd == "validate-physics":
        from .dataset import build_catalog

        results = oracles.run_all(build_catalog(cfg.catalog_config(), cfg.doc["seed"]))
        passed = sum(r.passed for r in results)
        for r in results:
            print(json.dumps({"check": r.name, "passed": r.passed, "detail": r.detail}, sort_keys=True))
        print(json.dumps({"passed": passed, "total": len(results)}, sort_keys=True))
        for r in results:
            if not r.passed:
                _diagnostic(cmd, NumericalError(f"oracle {r.name} failed: {r.detail}"), EXIT_NUMERICAL)
        return EXIT_OK if passed == len(results) else EXIT_NUMERICAL
    if cmd == "gen":
        result = pipeline.gen(cfg, out, args.force)
    elif cmd == "augment":
        result = pipeline.augment(cfg, out, args.force)
    elif cmd == "train":
        result = pipeline.train(cfg, out, args.family, args.plan, args.holdout, args.force)
    elif cmd == "benchmark":
        result = pipeline.benchmark(cfg, out, args.force)
    elif cmd == "explain":
        result = pipeline.explain(cfg, out, args.model, args.force)
    elif cmd == "phase":
        result = pipeline.phase(cfg, out, args.force)
    else:
        result = pipeline.run_all(cfg, out, args.force)
    print(json.dumps({"status": "ok", "command": cmd, "dir": str(out), "result": result}, sort_keys=True, default=str))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    command = None
    try:
        args = parser.parse_args(argv)
        command = args.command
        _set_threads(args.threads)
        return _dispatch(args)
    except UsageError as exc:
        _diagnostic(command, exc, EXIT_USAGE)
        return EXIT_USAGE
    except TunnelPhaseError as exc:
        code = exit_code_for(exc)
        _diagnostic(command, exc, code)
        return code
    except Exception as exc:  # noqa: BLE001 - still report as one JSON line
        _diagnostic(command, exc, EXIT_INTERNAL)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
