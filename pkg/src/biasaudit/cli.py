"""Command-line interface.

Subcommands: audit-dataset, audit-model, subset, simulate, compare.
Exit codes: 0 success, 1 usage error, 2 validation error, 3 I/O failure,
so the tool composes cleanly in shell pipelines. Metric values printed
and written by the CLI are exactly the library's outputs; no rounding is
applied anywhere except the human-oriented comparison table. The default
output directory may be set via the BIASAUDIT_OUT environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Sequence

from . import io as _io
from . import metrics as _metrics
from . import simulate as _simulate
from ._version import __version__
from .core import overall_accuracy, recall_table
from .errors import IoFailure, SchemaMismatch, ValidationError
from .resample import SubsetSpec, build_subset

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage problems; this tool reserves 2 for validation."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _out_default() -> str | None:
    return os.environ.get("BIASAUDIT_OUT")


def _require_out(args: argparse.Namespace, parser: argparse.ArgumentParser) -> Path:
    if args.out is None:
        parser.error("--out is required (or set BIASAUDIT_OUT)")
    return Path(args.out)


def _load_schema(path: str | None):
    return _io.read_schema(path) if path else None


def _attribute_list(raw: str | None) -> tuple[str, ...] | None:
    if raw is None:
        return None
    names = tuple(a.strip() for a in raw.split(",") if a.strip())
    if not names:
        raise ValidationError("--attributes given but no attribute names parsed")
    return names


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="biasaudit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"biasaudit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("audit-dataset", help="dataset-bias report: NSD, NMI, NPMI per attribute")
    p.add_argument("--data", required=True, help="dataset CSV (id,class,<attributes...>)")
    p.add_argument("--schema", help="schema sidecar JSON; inferred from the file if omitted")
    p.add_argument("--attributes", help="comma-separated attribute subset to audit")
    p.add_argument("--out", default=_out_default(), help="output directory")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=_cmd_audit_dataset)

    p = sub.add_parser("audit-model", help="model-bias report: accuracy and recall disparity")
    p.add_argument("--evals", required=True,
                   help="evaluations CSV, inline or predictions-only when --data is given")
    p.add_argument("--data", help="dataset CSV to join predictions against by id")
    p.add_argument("--schema", help="schema sidecar JSON")
    p.add_argument("--min-support", type=int, default=1,
                   help="evaluation records a (class, group) cell needs to count (default 1)")
    p.add_argument("--out", default=_out_default(), help="output directory")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=_cmd_audit_model)

    p = sub.add_parser("subset", help="write a balanced, stratified, or single-group subset")
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("--schema", help="schema sidecar JSON")
    p.add_argument("--kind", required=True, choices=("balanced", "stratified", "single-group"))
    p.add_argument("--attribute", help="attribute to balance or restrict")
    p.add_argument("--group", help="group to keep (single-group)")
    p.add_argument("--fraction", type=float, help="fraction to keep (stratified)")
    p.add_argument("--match-balanced-totals", action="store_true",
                   help="force single-group per-class totals to match the balanced subset")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default=_out_default(), help="output CSV path")
    p.set_defaults(func=_cmd_subset)

    p = sub.add_parser("simulate", help="repeated classifier simulations with mean/std summary")
    p.add_argument("--population", required=True, help="population spec JSON")
    p.add_argument("--profile", required=True, help="classifier profile JSON")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default=_out_default(), help="output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("compare", help="merge audit reports into one comparison table")
    p.add_argument("--reports", nargs="+", required=True, help="report.json paths")
    p.add_argument("--out", default=_out_default(), help="output CSV path")
    p.set_defaults(func=_cmd_compare)
    return parser


def _cmd_audit_dataset(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    out = _require_out(args, parser)
    dataset = _io.read_dataset(args.data, _load_schema(args.schema))
    attributes = _attribute_list(args.attributes)
    if attributes is not None:
        for a in attributes:
            dataset.schema.groups(a)
    report = _io.build_dataset_report(dataset, source_path=str(args.data), attributes=attributes)
    paths = _io.write_report(report, out, args.format)
    print(f"audited {len(dataset)} records from {args.data}")
    for name, section in report.attributes.items():
        if section["excluded"]:
            print(f"  {name}: excluded ({section['excluded']})")
        else:
            print(f"  {name}: nsd={section['nsd']!r} nmi={section['nmi']!r}")
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_audit_model(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    out = _require_out(args, parser)
    evals = _io.read_evaluations(args.evals, _load_schema(args.schema), data_path=args.data)
    report = _io.build_model_report(
        evals, source_path=str(args.evals), min_support=args.min_support
    )
    paths = _io.write_report(report, out, args.format)
    print(f"evaluated {len(evals)} records; accuracy={report.model['accuracy']!r}")
    for name, section in report.model["disparity"].items():
        print(f"  {name}: overall_disparity={section['overall']!r}")
        for c, gs in section["excluded_groups"].items():
            print(f"    warning: class {c!r} excludes groups {gs} (support < "
                  f"{section['min_support']})", file=sys.stderr)
        for c in section["single_group_classes"]:
            print(f"    warning: class {c!r} kept a single group; disparity set to 0",
                  file=sys.stderr)
    for path in paths:
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_subset(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    out = _require_out(args, parser)
    dataset = _io.read_dataset(args.data, _load_schema(args.schema))
    spec = SubsetSpec(
        kind=args.kind.replace("-", "_"),
        seed=args.seed,
        attribute=args.attribute,
        group=args.group,
        fraction=args.fraction,
        match_balanced_totals=args.match_balanced_totals,
    )
    subset = build_subset(dataset, spec)
    _io.write_dataset(subset, out)
    totals: dict[str, int] = {c: 0 for c in subset.schema.classes}
    for rec in subset.records:
        totals[rec.class_label] += 1
    print(f"wrote {len(subset)} records to {out} (seed {args.seed})")
    for c in subset.schema.classes:
        print(f"  {c}: {totals[c]}")
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    out = _require_out(args, parser)
    if args.runs < 1:
        raise ValidationError("--runs must be at least 1")
    spec = _io.read_population_spec(args.population)
    profile = _io.read_classifier_profile(args.profile, spec.schema)
    dataset = _simulate.generate_population(spec)

    runs: list[dict[str, float]] = []
    for k in range(args.runs):
        evals = _simulate.simulate_classifier(dataset, profile, seed=[args.seed, k])
        table = recall_table(evals, profile.attribute)
        disparity = _metrics.overall_disparity(table)
        runs.append(
            {"accuracy": overall_accuracy(evals), f"od_{profile.attribute}": disparity.overall}
        )
    aggregate = _simulate.aggregate_runs(runs)
    analytic = _simulate.analytic_od(profile)

    doc = {
        "population": str(args.population),
        "profile": str(args.profile),
        "seed": args.seed,
        "runs": runs,
        "aggregate": {"means": aggregate.means, "stds": aggregate.stds, "k": aggregate.k},
        "analytic_od": analytic.overall,
        "provenance": _io._provenance({"simulate": args.seed}, None),
    }
    path = Path(out) / "simulation.json"
    _io._atomic_write(path, json.dumps(doc, indent=2) + "\n")
    key = f"od_{profile.attribute}"
    print(f"simulated {len(dataset)} records x {args.runs} runs (seed {args.seed})")
    print(f"  accuracy: {aggregate.means['accuracy']:.4f} +/- {aggregate.stds['accuracy']:.4f}")
    print(f"  {key}: {aggregate.means[key]:.4f} +/- {aggregate.stds[key]:.4f} "
          f"(analytic {analytic.overall:.4f})")
    print(f"wrote {path}")
    return EXIT_OK


def _compare_rows(reports: list[_io.AuditReport]) -> list[list[Any]]:
    first = reports[0].dataset["schema"]
    for rep in reports[1:]:
        if rep.dataset["schema"] != first:
            raise SchemaMismatch(
                f"report {rep.dataset['path']!r} disagrees with {reports[0].dataset['path']!r} "
                "on classes or attributes"
            )
    attrs = list(first["attributes"])
    header = ["dataset", "rows"]
    for a in attrs:
        header += [f"nsd_{a}", f"nmi_{a}"]
    header.append("accuracy")
    for a in attrs:
        header.append(f"od_{a}")

    def fmt(value: Any) -> str:
        return "-" if value is None else f"{value:.4f}"

    rows: list[list[Any]] = [header]
    for rep in reports:
        row: list[Any] = [rep.dataset["path"], rep.dataset["rows"]]
        for a in attrs:
            section = (rep.attributes or {}).get(a)
            row.append(fmt(section["nsd"] if section else None))
            row.append(fmt(section["nmi"] if section else None))
        model = rep.model or {}
        row.append(fmt(model.get("accuracy")))
        for a in attrs:
            disparity = model.get("disparity", {}).get(a)
            row.append(fmt(disparity["overall"] if disparity else None))
        rows.append(row)
    return rows


def _cmd_compare(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    out = _require_out(args, parser)
    reports = [_io.read_report(p) for p in args.reports]
    rows = _compare_rows(reports)
    _io._atomic_write(out, _io._csv_text(rows))
    for row in rows:
        print(",".join(str(v) for v in row))
    print(f"wrote {out}")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args, parser)
    except ValidationError as exc:
        print(f"biasaudit: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except IoFailure as exc:
        print(f"biasaudit: io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"biasaudit: io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
