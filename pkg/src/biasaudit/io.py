"""File ingestion and report emission.

Formats
-------
Dataset CSV: UTF-8, comma separated, mandatory header ``id,class,<attr>...``.
Evaluations CSV (inline): ``id,true_class,predicted_class,<attr>...``.
Predictions CSV (join form): ``id,predicted_class``, joined to a dataset
CSV by id; the predictions file defines which rows are evaluated.
Schema sidecar: JSON ``{"classes": [...], "attributes": {name: [groups]}}``;
list order in the sidecar governs every matrix layout downstream.
Without a sidecar the schema is inferred, ordered by first appearance
(for evaluations: true classes first, then predicted, so the inline and
join forms of the same data infer identical schemas).

Reports serialize to a single JSON document with stable key order and
full-precision floats (round-trip exact), or to a CSV bundle with one
file per table. Timestamps live in one provenance field so deterministic
outputs can be compared with that single field excluded. All writes are
atomic (write to a temp file, then rename).
"""

from __future__ import annotations

import csv
import io as _stringio
import json
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

from . import metrics as _metrics
from ._version import __version__
from .core import (
    AttributeSchema,
    EvaluationRecord,
    EvaluationSet,
    LabeledDataset,
    SampleRecord,
    build_contingency,
    group_distribution,
    normalize,
    overall_accuracy,
    recall_table,
)
from .errors import (
    DuplicateId,
    EmptyFile,
    InvalidSpec,
    IoFailure,
    MissingColumn,
    UnknownLabel,
    UnmatchedId,
    ValidationError,
)
from .simulate import ClassifierProfile, PopulationSpec


# ---------------------------------------------------------------------------
# low-level helpers
# ---------------------------------------------------------------------------

def _open_rows(path: str | Path) -> tuple[list[str], list[list[str]]]:
    """Read header and data rows, wrapping OS-level failures as IoFailure."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise EmptyFile(f"{path}: file is empty")
    header, data = rows[0], rows[1:]
    if not data:
        raise EmptyFile(f"{path}: no data rows")
    return header, data


def _atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _column_map(header: list[str], required: Iterable[str]) -> dict[str, int]:
    positions = {name: i for i, name in enumerate(header)}
    for name in required:
        if name not in positions:
            raise MissingColumn(name)
    return positions


def _csv_text(rows: Iterable[Iterable[Any]]) -> str:
    buf = _stringio.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow(["" if v is None else v for v in row])
    return buf.getvalue()


def _cell(row: list[str], idx: int, line: int, column: str, path: str | Path) -> str:
    if idx >= len(row):
        raise ValidationError(f"{path}: line {line}: missing value for column {column!r}")
    return row[idx]


# ---------------------------------------------------------------------------
# schema sidecar
# ---------------------------------------------------------------------------

def read_schema(path: str | Path) -> AttributeSchema:
    """Load a schema sidecar; list order fixes all downstream orderings."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    return _schema_from_dict(doc, str(path))


def _schema_from_dict(doc: Mapping[str, Any], context: str) -> AttributeSchema:
    if not isinstance(doc, Mapping) or "classes" not in doc or "attributes" not in doc:
        raise ValidationError(f"{context}: schema must declare 'classes' and 'attributes'")
    return AttributeSchema.create(
        classes=[str(c) for c in doc["classes"]],
        attributes={str(a): [str(g) for g in gs] for a, gs in doc["attributes"].items()},
    )


def _schema_to_dict(schema: AttributeSchema) -> dict[str, Any]:
    return {
        "classes": list(schema.classes),
        "attributes": {a: list(gs) for a, gs in schema.attributes.items()},
    }


# ---------------------------------------------------------------------------
# dataset / evaluations ingestion
# ---------------------------------------------------------------------------

def read_dataset(path: str | Path, schema: AttributeSchema | None = None) -> LabeledDataset:
    """Parse a dataset CSV, validating every row.

    With a declared schema, only its attribute columns are read (extra
    columns are ignored) and any value outside the schema raises
    :class:`UnknownLabel` with its line number. Without one, the schema is
    inferred with first-appearance ordering.
    """
    header, data = _open_rows(path)
    cols = _column_map(header, ("id", "class"))
    if schema is not None:
        attrs = schema.attribute_names
        for a in attrs:
            if a not in cols:
                raise MissingColumn(a)
    else:
        attrs = tuple(c for c in header if c not in ("id", "class"))

    records = []
    seen: set[str] = set()
    classes_seen: dict[str, None] = {}
    groups_seen: dict[str, dict[str, None]] = {a: {} for a in attrs}
    for offset, row in enumerate(data):
        line = offset + 2
        rid = _cell(row, cols["id"], line, "id", path)
        if rid in seen:
            raise DuplicateId(rid)
        seen.add(rid)
        class_label = _cell(row, cols["class"], line, "class", path)
        if schema is not None and class_label not in schema.classes:
            raise UnknownLabel(line, "class", class_label)
        classes_seen.setdefault(class_label)
        groups = {}
        for a in attrs:
            value = _cell(row, cols[a], line, a, path)
            if schema is not None and value not in schema.attributes[a]:
                raise UnknownLabel(line, a, value)
            groups_seen[a].setdefault(value)
            groups[a] = value
        records.append(SampleRecord(id=rid, class_label=class_label, groups=groups))

    if schema is None:
        schema = AttributeSchema.create(
            classes=classes_seen,
            attributes={a: tuple(groups_seen[a]) for a in attrs},
        )
    return LabeledDataset(schema=schema, records=tuple(records))


def read_evaluations(
    path: str | Path,
    schema: AttributeSchema | None = None,
    data_path: str | Path | None = None,
) -> EvaluationSet:
    """Parse evaluation records, either inline or joined to a dataset file.

    Inline: ``path`` holds id, true_class, predicted_class and attribute
    columns. Join: ``path`` holds id and predicted_class only, and
    ``data_path`` names the dataset CSV providing true classes and groups;
    rows are joined by id and emitted in dataset order. A prediction id
    absent from the dataset raises :class:`UnmatchedId`; dataset rows
    without a prediction are simply not evaluated.
    """
    if data_path is not None:
        return _read_join(path, data_path, schema)

    header, data = _open_rows(path)
    cols = _column_map(header, ("id", "true_class", "predicted_class"))
    if schema is not None:
        attrs = schema.attribute_names
        for a in attrs:
            if a not in cols:
                raise MissingColumn(a)
    else:
        attrs = tuple(
            c for c in header if c not in ("id", "true_class", "predicted_class")
        )

    rows = []
    seen: set[str] = set()
    true_seen: dict[str, None] = {}
    pred_seen: dict[str, None] = {}
    groups_seen: dict[str, dict[str, None]] = {a: {} for a in attrs}
    for offset, row in enumerate(data):
        line = offset + 2
        rid = _cell(row, cols["id"], line, "id", path)
        if rid in seen:
            raise DuplicateId(rid)
        seen.add(rid)
        true = _cell(row, cols["true_class"], line, "true_class", path)
        pred = _cell(row, cols["predicted_class"], line, "predicted_class", path)
        if schema is not None:
            if true not in schema.classes:
                raise UnknownLabel(line, "true_class", true)
            if pred not in schema.classes:
                raise UnknownLabel(line, "predicted_class", pred)
        true_seen.setdefault(true)
        pred_seen.setdefault(pred)
        groups = {}
        for a in attrs:
            value = _cell(row, cols[a], line, a, path)
            if schema is not None and value not in schema.attributes[a]:
                raise UnknownLabel(line, a, value)
            groups_seen[a].setdefault(value)
            groups[a] = value
        rows.append(EvaluationRecord(id=rid, true_class=true, predicted_class=pred, groups=groups))

    if schema is None:
        classes = dict(true_seen)
        for c in pred_seen:
            classes.setdefault(c)
        schema = AttributeSchema.create(
            classes=classes,
            attributes={a: tuple(groups_seen[a]) for a in attrs},
        )
    return EvaluationSet(schema=schema, records=tuple(rows))


def _read_join(
    predictions_path: str | Path,
    data_path: str | Path,
    schema: AttributeSchema | None,
) -> EvaluationSet:
    dataset = read_dataset(data_path, schema)
    header, data = _open_rows(predictions_path)
    cols = _column_map(header, ("id", "predicted_class"))
    by_id = {rec.id: rec for rec in dataset.records}

    predictions: dict[str, str] = {}
    pred_seen: dict[str, None] = {}
    for offset, row in enumerate(data):
        line = offset + 2
        rid = _cell(row, cols["id"], line, "id", predictions_path)
        if rid in predictions:
            raise DuplicateId(rid)
        if rid not in by_id:
            raise UnmatchedId(rid)
        pred = _cell(row, cols["predicted_class"], line, "predicted_class", predictions_path)
        if schema is not None and pred not in schema.classes:
            raise UnknownLabel(line, "predicted_class", pred)
        predictions[rid] = pred
        pred_seen.setdefault(pred)

    if schema is None:
        classes = dict.fromkeys(dataset.schema.classes)
        for c in pred_seen:
            classes.setdefault(c)
        final_schema = AttributeSchema.create(
            classes=classes, attributes=dataset.schema.attributes
        )
    else:
        final_schema = schema
    records = tuple(
        EvaluationRecord(
            id=rec.id,
            true_class=rec.class_label,
            predicted_class=predictions[rec.id],
            groups=rec.groups,
        )
        for rec in dataset.records
        if rec.id in predictions
    )
    return EvaluationSet(schema=final_schema, records=records)


def write_dataset(dataset: LabeledDataset, path: str | Path) -> None:
    """Write a dataset CSV with columns id, class, then schema attributes."""
    attrs = dataset.schema.attribute_names
    rows: list[Iterable[Any]] = [("id", "class", *attrs)]
    rows.extend(
        (rec.id, rec.class_label, *(rec.groups[a] for a in attrs))
        for rec in dataset.records
    )
    _atomic_write(path, _csv_text(rows))


# ---------------------------------------------------------------------------
# audit report
# ---------------------------------------------------------------------------

@dataclass
class AuditReport:
    """Everything one audit produced, in plain serializable values.

    ``attributes`` maps attribute name to its dataset-bias section (group
    distribution, nsd, nmi, npmi matrix); ``model`` holds accuracy and the
    per-attribute disparity sections when predictions were audited. Both
    may be absent. Undefined matrix entries serialize as null.
    """

    dataset: dict[str, Any]
    attributes: dict[str, Any] | None = None
    model: dict[str, Any] | None = None
    provenance: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "dataset": self.dataset,
            "attributes": self.attributes,
            "model": self.model,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "AuditReport":
        return cls(
            dataset=dict(doc["dataset"]),
            attributes=dict(doc["attributes"]) if doc.get("attributes") is not None else None,
            model=dict(doc["model"]) if doc.get("model") is not None else None,
            provenance=dict(doc.get("provenance", {})),
        )

    @property
    def schema(self) -> AttributeSchema:
        return _schema_from_dict(self.dataset["schema"], "report")


def _provenance(seeds: Mapping[str, int] | None, timestamp: str | None) -> dict[str, Any]:
    return {
        "tool": "biasaudit",
        "version": __version__,
        "seeds": dict(seeds) if seeds else {},
        "timestamp": timestamp
        if timestamp is not None
        else datetime.now(timezone.utc).isoformat(),
    }


def _npmi_section(matrix: _metrics.NpmiMatrix) -> dict[str, Any]:
    values: list[list[float | None]] = []
    for gi in range(len(matrix.groups)):
        row: list[float | None] = []
        for ci in range(len(matrix.classes)):
            row.append(None if matrix.undefined[gi, ci] else float(matrix.values[gi, ci]))
        values.append(row)
    return {
        "groups": list(matrix.groups),
        "classes": list(matrix.classes),
        "values": values,
    }


def build_dataset_report(
    dataset: LabeledDataset,
    source_path: str,
    attributes: Iterable[str] | None = None,
    seeds: Mapping[str, int] | None = None,
    timestamp: str | None = None,
) -> AuditReport:
    """Compute the dataset-bias section for each requested attribute.

    Attributes declared with fewer than two groups cannot carry a
    representational-bias score and are marked excluded instead.
    """
    names = tuple(attributes) if attributes is not None else dataset.schema.attribute_names
    sections: dict[str, Any] = {}
    for name in names:
        groups = dataset.schema.groups(name)
        dist = group_distribution(dataset, name)
        section: dict[str, Any] = {
            "group_distribution": {g: float(p) for g, p in zip(groups, dist)},
        }
        if len(groups) < 2:
            section.update(
                {"nsd": None, "nmi": None, "npmi": None, "excluded": "single group declared"}
            )
        else:
            joint = normalize(build_contingency(dataset, name))
            section["nsd"] = _metrics.nsd(dist)
            section["nmi"] = _metrics.nmi(joint)
            section["npmi"] = _npmi_section(_metrics.npmi_matrix(joint))
            section["excluded"] = None
        sections[name] = section
    return AuditReport(
        dataset={
            "path": source_path,
            "rows": len(dataset),
            "schema": _schema_to_dict(dataset.schema),
        },
        attributes=sections,
        model=None,
        provenance=_provenance(seeds, timestamp),
    )


def _disparity_section(report: _metrics.DisparityReport) -> dict[str, Any]:
    return {
        "overall": report.overall,
        "per_class": {c: v for c, v in zip(report.classes, report.per_class)},
        "excluded_groups": {
            c: list(gs) for c, gs in zip(report.classes, report.excluded_groups) if gs
        },
        "single_group_classes": list(report.single_group_classes),
        "min_support": report.min_support,
    }


def build_model_report(
    evals: EvaluationSet,
    source_path: str,
    min_support: int = 1,
    attributes: Iterable[str] | None = None,
    seeds: Mapping[str, int] | None = None,
    timestamp: str | None = None,
) -> AuditReport:
    """Compute accuracy and per-attribute disparity for an evaluation set."""
    names = tuple(attributes) if attributes is not None else evals.schema.attribute_names
    disparity: dict[str, Any] = {}
    for name in names:
        evals.schema.groups(name)
        table = recall_table(evals, name)
        disparity[name] = _disparity_section(
            _metrics.overall_disparity(table, min_support=min_support)
        )
    return AuditReport(
        dataset={
            "path": source_path,
            "rows": len(evals),
            "schema": _schema_to_dict(evals.schema),
        },
        attributes=None,
        model={"accuracy": overall_accuracy(evals), "disparity": disparity},
        provenance=_provenance(seeds, timestamp),
    )


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------

def write_report(
    report: AuditReport, out_dir: str | Path, fmt: str = "json"
) -> list[Path]:
    """Emit a report as report.json or as a CSV bundle; returns written paths."""
    out = Path(out_dir)
    if fmt == "json":
        path = out / "report.json"
        _atomic_write(path, json.dumps(report.to_dict(), indent=2) + "\n")
        return [path]
    if fmt == "csv":
        return _write_csv_bundle(report, out)
    raise ValidationError(f"unknown report format {fmt!r}; expected 'json' or 'csv'")


def read_report(path: str | Path) -> AuditReport:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    return AuditReport.from_dict(doc)


def _write_csv_bundle(report: AuditReport, out: Path) -> list[Path]:
    written: list[Path] = []

    def emit(name: str, rows: Iterable[Iterable[Any]]) -> None:
        path = out / name
        _atomic_write(path, _csv_text(rows))
        written.append(path)

    if report.attributes:
        summary = [("attribute", "nsd", "nmi", "excluded")]
        for name, section in report.attributes.items():
            summary.append(
                (name, section["nsd"], section["nmi"], section["excluded"] or "")
            )
            emit(
                f"{name}_distribution.csv",
                [("group", "share"), *section["group_distribution"].items()],
            )
            if section["npmi"] is not None:
                npmi = section["npmi"]
                rows = [("group", *npmi["classes"])]
                for g, vals in zip(npmi["groups"], npmi["values"]):
                    rows.append((g, *vals))
                emit(f"{name}_npmi.csv", rows)
        emit("summary.csv", summary)
    if report.model:
        emit("model_summary.csv", [("accuracy",), (report.model["accuracy"],)])
        for name, section in report.model["disparity"].items():
            rows = [("class", "intraclass_disparity", "excluded_groups", "single_group")]
            for c, v in section["per_class"].items():
                rows.append(
                    (
                        c,
                        v,
                        ";".join(section["excluded_groups"].get(c, [])),
                        "yes" if c in section["single_group_classes"] else "",
                    )
                )
            rows.append(("OVERALL", section["overall"], "", ""))
            emit(f"{name}_disparity.csv", rows)
    return written


# ---------------------------------------------------------------------------
# simulation configuration files
# ---------------------------------------------------------------------------

def read_population_spec(path: str | Path) -> PopulationSpec:
    """Parse a population configuration.

    JSON document with ``schema``, ``total``, ``seed`` and optionally
    ``cells``: a list of ``{"class": ..., "groups": {...}, "weight": ...}``
    entries (unlisted cells get weight zero). Without ``cells`` every
    (class, group-combination) cell gets equal weight.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"{path}: invalid JSON: {exc}") from exc
    for key in ("schema", "total", "seed"):
        if key not in doc:
            raise InvalidSpec(f"{path}: population spec requires {key!r}")
    schema = _schema_from_dict(doc["schema"], str(path))
    total = int(doc["total"])
    seed = int(doc["seed"])
    if "cells" not in doc:
        return PopulationSpec.uniform(schema, total, seed)
    cells = []
    for entry in doc["cells"]:
        try:
            cells.append((str(entry["class"]), dict(entry["groups"]), float(entry["weight"])))
        except (KeyError, TypeError) as exc:
            raise InvalidSpec(f"{path}: malformed cell entry {entry!r}") from exc
    return PopulationSpec.from_cells(schema, total, cells, seed)


def read_classifier_profile(path: str | Path, schema: AttributeSchema) -> ClassifierProfile:
    """Parse a classifier profile configuration against a known schema.

    JSON document with ``attribute`` plus either ``recall_by_group``
    (one recall per group, applied to every class, errors spread uniformly)
    or ``rows``: a list of ``{"class": ..., "group": ..., "probs": {...}}``
    or ``{"class": ..., "group": ..., "recall": ...}`` entries. Rows
    override the group defaults; cells covered by neither stay unspecified.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"{path}: invalid JSON: {exc}") from exc
    if "attribute" not in doc:
        raise InvalidSpec(f"{path}: profile requires 'attribute'")
    attribute = str(doc["attribute"])
    groups = schema.groups(attribute)
    classes = schema.classes
    n_c, n_g = len(classes), len(groups)

    probs = np.zeros((n_c, n_g, n_c))
    specified = np.zeros((n_c, n_g), dtype=bool)

    if "recall_by_group" in doc:
        base = ClassifierProfile.from_group_recalls(
            attribute, classes, groups,
            {str(g): float(r) for g, r in doc["recall_by_group"].items()},
        )
        probs = base.probs.copy()
        specified = base.specified.copy()

    def _diagonal_row(ci: int, recall: float) -> np.ndarray:
        if not 0.0 <= recall <= 1.0:
            raise InvalidSpec(f"{path}: recall {recall!r} outside [0, 1]")
        if n_c == 1 and recall != 1.0:
            raise InvalidSpec(f"{path}: with a single class recall must be 1")
        row = np.full(n_c, (1.0 - recall) / (n_c - 1) if n_c > 1 else 0.0)
        row[ci] = recall
        return row

    for entry in doc.get("rows", ()):
        try:
            class_label = str(entry["class"])
            group = str(entry["group"])
        except (KeyError, TypeError) as exc:
            raise InvalidSpec(f"{path}: malformed profile row {entry!r}") from exc
        ci = schema.class_index(class_label)
        if group not in groups:
            raise InvalidSpec(f"{path}: group {group!r} not declared for {attribute!r}")
        gi = groups.index(group)
        if "probs" in entry:
            row = np.zeros(n_c)
            for label, p in entry["probs"].items():
                row[schema.class_index(str(label))] = float(p)
            probs[ci, gi] = row
        elif "recall" in entry:
            probs[ci, gi] = _diagonal_row(ci, float(entry["recall"]))
        else:
            raise InvalidSpec(f"{path}: profile row needs 'probs' or 'recall'")
        specified[ci, gi] = True

    if not specified.any():
        raise InvalidSpec(f"{path}: profile specifies no confusion rows")
    return ClassifierProfile(
        attribute=attribute, classes=classes, groups=groups, probs=probs, specified=specified
    )
