"""Command-line entry point.

Subcommands: simulate (run a configured experiment), metrics (alignment
between two allocation files), fit (estimate from a survey CSV), props (the
property suite), export-fig (long-format plot data), serve (the session
service). Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Sequence, TextIO

from .errors import SchemaError
from .estimation import (
    baseline_as_overall,
    emit_figure_data,
    fit,
    ingest,
    write_figure_csv,
)
from .metrics import (
    DEFAULT_EPSILON,
    DEFAULT_P,
    AlignmentKind,
    AlignmentVector,
    evaluate_alignment,
)
from .principles import (
    LogRelativeVector,
    PrincipleSet,
    Stage,
    log_relative,
)
from .simulation import (
    ExperimentConfig,
    ExperimentKind,
    load_config,
    run_experiment,
    run_propositions,
)

DEFAULT_DATA_DIR = "align-data"
DATA_DIR_ENV = "ALIGN_DATA_DIR"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 1, not argparse's default 2
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="alignkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="command")

    simulate = sub.add_parser("simulate", help="run an experiment from a JSON config")
    simulate.add_argument("--config", required=True, help="experiment config file")
    simulate.add_argument("--output", default="-", help="summary CSV path or - for stdout")
    simulate.add_argument("--raw", default=None, help="optional raw-draw CSV path")
    simulate.add_argument("--seed", type=int, default=None, help="override the config seed")

    metrics = sub.add_parser(
        "metrics", help="alignment between an analyst and a consumer allocation file"
    )
    metrics.add_argument("--analyst", required=True, help="analyst allocation CSV")
    metrics.add_argument("--consumer", required=True, help="consumer allocation CSV")
    metrics.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    metrics.add_argument("--p", type=float, default=DEFAULT_P)
    metrics.add_argument("--reference", type=int, default=0, help="reference principle index")
    metrics.add_argument("--smoothing", type=float, default=0.0)

    fit_cmd = sub.add_parser("fit", help="estimate field means, deviations, adjustments")
    fit_cmd.add_argument("--input", required=True, help="survey CSV")
    fit_cmd.add_argument("--reference", type=int, default=0)
    fit_cmd.add_argument("--smoothing", type=float, default=0.0)
    fit_cmd.add_argument("--principles", default=None, help="comma-separated names (default: inferred)")
    fit_cmd.add_argument("--output", default="-", help="JSON path or - for stdout")

    props = sub.add_parser("props", help="run the property suite")
    props.add_argument("--seed", type=int, default=42)
    props.add_argument("--deviation-sd", type=float, default=0.2)

    export_fig = sub.add_parser("export-fig", help="emit long-format plot data")
    export_fig.add_argument("--input", required=True, help="survey CSV")
    export_fig.add_argument("--output", default="-", help="CSV path or - for stdout")
    export_fig.add_argument("--reference", type=int, default=0)
    export_fig.add_argument("--smoothing", type=float, default=0.0)
    export_fig.add_argument("--principles", default=None)

    serve = sub.add_parser("serve", help="start the session service")
    serve.add_argument("--listen", default="127.0.0.1:8000", help="addr:port to bind")
    serve.add_argument(
        "--data-dir",
        default=None,
        help=f"session directory (default ${DATA_DIR_ENV} or ./{DEFAULT_DATA_DIR})",
    )
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise _UsageError("a subcommand is required")
        handler = {
            "simulate": cmd_simulate,
            "metrics": cmd_metrics,
            "fit": cmd_fit,
            "props": cmd_props,
            "export-fig": cmd_export_fig,
            "serve": cmd_serve,
        }[args.command]
        return handler(args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"alignkit: error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError) as exc:
        print(f"alignkit: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"alignkit: i/o error: {exc}", file=sys.stderr)
        return 2


def run() -> None:
    sys.exit(main())


def _open_output(path: str) -> tuple[TextIO, bool]:
    if path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = ExperimentConfig(
            **{**_config_kwargs(config), "seed": args.seed}
        )
    if args.raw is not None and not config.keep_raw:
        config = ExperimentConfig(**{**_config_kwargs(config), "keep_raw": True})
    result = run_experiment(config)
    handle, owned = _open_output(args.output)
    try:
        result.write_csv(handle)
    finally:
        if owned:
            handle.close()
    if args.raw is not None:
        result.write_raw_csv(args.raw)
    if result.passed is False:
        return 1
    return 0


def _config_kwargs(config: ExperimentConfig) -> dict:
    return {
        "experiment": config.experiment,
        "principles": config.principles,
        "mean_log_relative": config.mean_log_relative,
        "analyst_field_mean": config.analyst_field_mean,
        "consumer_field_mean": config.consumer_field_mean,
        "deviation_sd": config.deviation_sd,
        "alpha_zero_values": config.alpha_zero_values,
        "sample_count": config.sample_count,
        "replicates": config.replicates,
        "strategy": config.strategy,
        "audience_sizes": config.audience_sizes,
        "audience_replicates": config.audience_replicates,
        "epsilon": config.epsilon,
        "p": config.p,
        "seed": config.seed,
        "keep_raw": config.keep_raw,
    }


def _read_party_file(path: str) -> dict[Stage, tuple[tuple[str, ...], tuple[float, ...]]]:
    """Read a per-party allocation CSV: principle,allocation[,stage]."""
    blocks: dict[Stage, tuple[list[str], list[float]]] = {}
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file")
        for column in ("principle", "allocation"):
            if column not in reader.fieldnames:
                raise SchemaError(f"{path}: missing column {column!r}")
        has_stage = "stage" in reader.fieldnames
        for line, row in enumerate(reader, start=2):
            stage = Stage(row["stage"]) if has_stage else Stage.BASELINE
            names, weights = blocks.setdefault(stage, ([], []))
            name = row["principle"]
            if name in names:
                raise SchemaError(f"{path}:{line}: duplicate principle {name!r}")
            try:
                weight = float(row["allocation"])
            except (TypeError, ValueError):
                raise SchemaError(
                    f"{path}:{line}: allocation must be a number, got "
                    f"{row['allocation']!r}"
                ) from None
            names.append(name)
            weights.append(weight)
    if Stage.BASELINE not in blocks:
        raise SchemaError(f"{path}: no baseline allocations found")
    return {
        stage: (tuple(names), tuple(weights)) for stage, (names, weights) in blocks.items()
    }


def _aligned_log_relative(
    names: tuple[str, ...],
    block: tuple[tuple[str, ...], tuple[float, ...]],
    reference: int,
    smoothing: float,
    label: str,
) -> LogRelativeVector:
    block_names, weights = block
    if set(block_names) != set(names):
        raise SchemaError(
            f"{label}: principles {sorted(block_names)} do not match {sorted(names)}"
        )
    by_name = dict(zip(block_names, weights))
    ordered = [by_name[name] for name in names]
    total = math.fsum(ordered)
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"{label}: allocations sum to {total!r}, not 1")
    ordered = [w / total for w in ordered]
    return log_relative(ordered, reference, smoothing=smoothing)


def cmd_metrics(args) -> int:
    analyst = _read_party_file(args.analyst)
    consumer = _read_party_file(args.consumer)
    names = analyst[Stage.BASELINE][0]
    if not 0 <= args.reference < len(names):
        raise ValueError(f"reference index {args.reference} out of range")
    reference = args.reference

    def party_vectors(blocks, label):
        base = _aligned_log_relative(
            names, blocks[Stage.BASELINE], reference, args.smoothing, label
        )
        adjustment = LogRelativeVector.zeros(len(names), reference)
        if Stage.RESOLUTION in blocks:
            resolution = _aligned_log_relative(
                names, blocks[Stage.RESOLUTION], reference, args.smoothing, label
            )
            adjustment = resolution.subtract(base)
        return base, adjustment

    analyst_base, analyst_adjustment = party_vectors(analyst, args.analyst)
    consumer_base, consumer_adjustment = party_vectors(consumer, args.consumer)
    baseline = AlignmentVector(
        AlignmentKind.BASELINE,
        analyst_base.subtract(consumer_base).values,
        reference,
    )
    residual_values = tuple(
        a - c for a, c in zip(analyst_adjustment.values, consumer_adjustment.values)
    )
    overall = AlignmentVector(
        AlignmentKind.OVERALL,
        tuple(b + r for b, r in zip(baseline.values, residual_values)),
        reference,
    )
    verdict = evaluate_alignment(overall, args.epsilon, args.p)
    baseline_verdict = evaluate_alignment(
        baseline_as_overall(baseline), args.epsilon, args.p
    )
    payload = {
        "principles": list(names),
        "reference_index": reference,
        "baseline": list(baseline.values),
        "residual": list(residual_values),
        "overall": list(overall.values),
        "baseline_verdict": asdict(baseline_verdict),
        "verdict": asdict(verdict),
    }
    print(json.dumps(payload, indent=2))
    return 0


def _principles_for(args, path: str) -> PrincipleSet:
    if args.principles:
        names = tuple(name.strip() for name in args.principles.split(","))
        return PrincipleSet(names, args.reference)
    return infer_principles(path, args.reference)


def infer_principles(path: str | Path, reference_index: int = 0) -> PrincipleSet:
    """Principle names in first-seen order from a survey CSV."""
    names: list[str] = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or "principle" not in reader.fieldnames:
            raise SchemaError(f"{path}: missing column 'principle'")
        for row in reader:
            name = row["principle"]
            if name and name not in names:
                names.append(name)
    return PrincipleSet(tuple(names), reference_index)


def cmd_fit(args) -> int:
    principles = _principles_for(args, args.input)
    records = ingest(args.input, principles)
    result = fit(records, reference_index=args.reference, smoothing_constant=args.smoothing)
    payload = {
        "principles": list(principles.names),
        "reference_index": result.reference_index,
        "smoothing_constant": result.smoothing_constant,
        "field_means": {
            group: list(vector.values)
            for group, vector in sorted(result.field_means.items())
        },
        "deviations": {
            subject: list(vector.values)
            for subject, vector in sorted(result.deviations.items())
        },
        "adjustments": {
            subject: list(vector.values)
            for subject, vector in sorted(result.adjustments.items())
        },
        "subject_groups": dict(sorted(result.subject_groups.items())),
        "subject_roles": {
            subject: role.value
            for subject, role in sorted(result.subject_roles.items())
        },
    }
    text = json.dumps(payload, indent=2)
    if args.output == "-":
        print(text)
    else:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
    return 0


def cmd_props(args) -> int:
    config = ExperimentConfig(
        experiment=ExperimentKind.PROPOSITIONS,
        seed=args.seed,
        deviation_sd=args.deviation_sd,
    )
    result = run_propositions(config)
    for check, status, detail in result.rows:
        if "[" in check:
            continue  # grid cells; the aggregate line covers them
        print(f"{status:>4}  {check}: {detail}")
    return 0 if result.passed else 1


def cmd_export_fig(args) -> int:
    principles = _principles_for(args, args.input)
    records = ingest(args.input, principles)
    result = fit(records, reference_index=args.reference, smoothing_constant=args.smoothing)
    rows = emit_figure_data(records, result, principles)
    handle, owned = _open_output(args.output)
    try:
        write_figure_csv(rows, handle)
    finally:
        if owned:
            handle.close()
    return 0


def resolve_data_dir(explicit: str | None) -> str:
    """--data-dir wins, then $ALIGN_DATA_DIR, then the local default."""
    return explicit or os.environ.get(DATA_DIR_ENV) or DEFAULT_DATA_DIR


def parse_listen(listen: str) -> tuple[str, int]:
    host, _, port_text = listen.rpartition(":")
    if not host or not port_text.isdigit():
        raise ValueError(f"--listen must look like addr:port, got {listen!r}")
    return host, int(port_text)


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    host, port = parse_listen(args.listen)
    uvicorn.run(create_app(resolve_data_dir(args.data_dir)), host=host, port=port)
    return 0
