"""Synthetic populations and a parametric classifier simulator.

Instead of training models, bias-transfer experiments are run against a
:class:`ClassifierProfile`: a table of per-(true class, group) confusion
distributions. :func:`simulate_classifier` draws predictions from the
profile, and :func:`analytic_od` computes the disparity the profile
implies exactly, which makes the sampled pipeline checkable against a
closed-form reference. The simulator models prediction behavior only;
records are sampled independently with no learning dynamics.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import (
    AttributeSchema,
    EvaluationRecord,
    EvaluationSet,
    LabeledDataset,
    SampleRecord,
)
from .errors import InvalidSpec, MismatchedKeys, MissingProfileRow, ValidationError
from .metrics import DisparityReport

_ROW_SUM_TOL = 1e-9


def group_combinations(
    schema: AttributeSchema, attributes: tuple[str, ...] | None = None
) -> list[dict[str, str]]:
    """All combinations of group labels, one per attribute, in schema order."""
    attrs = attributes if attributes is not None else schema.attribute_names
    return [
        dict(zip(attrs, combo))
        for combo in itertools.product(*(schema.groups(a) for a in attrs))
    ]


@dataclass(frozen=True)
class PopulationSpec:
    """Target shape of a synthetic dataset.

    ``weights[c, k]`` is the relative mass of class c and group-combination
    k (combinations enumerated by :func:`group_combinations`); weights need
    not be normalized.
    """

    schema: AttributeSchema
    total_count: int
    weights: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        if self.total_count < 1:
            raise InvalidSpec("total_count must be at least 1")
        n_combos = len(group_combinations(self.schema))
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.shape != (len(self.schema.classes), n_combos):
            raise InvalidSpec(
                f"weights shape {weights.shape} does not match "
                f"{len(self.schema.classes)} classes x {n_combos} group combinations"
            )
        if (weights < 0).any() or not np.isfinite(weights).all():
            raise InvalidSpec("weights must be finite and non-negative")
        if not (weights > 0).any():
            raise InvalidSpec("at least one weight must be positive")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, schema: AttributeSchema, total_count: int, seed: int) -> "PopulationSpec":
        shape = (len(schema.classes), len(group_combinations(schema)))
        return cls(schema=schema, total_count=total_count, weights=np.ones(shape), seed=seed)

    @classmethod
    def from_cells(
        cls,
        schema: AttributeSchema,
        total_count: int,
        cells: Sequence[tuple[str, Mapping[str, str], float]],
        seed: int,
    ) -> "PopulationSpec":
        """Build from (class, groups mapping, weight) triples; unlisted cells get 0."""
        combos = group_combinations(schema)
        combo_index = {
            tuple(c[a] for a in schema.attribute_names): k for k, c in enumerate(combos)
        }
        weights = np.zeros((len(schema.classes), len(combos)))
        for class_label, groups, weight in cells:
            ci = schema.class_index(class_label)
            key = tuple(groups[a] for a in schema.attribute_names)
            if key not in combo_index:
                raise InvalidSpec(f"cell groups {dict(groups)!r} not admissible under schema")
            weights[ci, combo_index[key]] = weight
        return cls(schema=schema, total_count=total_count, weights=weights, seed=seed)


@dataclass(frozen=True)
class ClassifierProfile:
    """Per-(true class, group) distributions over predicted classes.

    ``probs[c, g]`` is the confusion row P(predicted | true class c, group
    g); its diagonal entry is the cell's recall. Rows may be left
    unspecified (``specified[c, g]`` False), in which case simulating a
    dataset containing that cell fails with :class:`MissingProfileRow`.
    """

    attribute: str
    classes: tuple[str, ...]
    groups: tuple[str, ...]
    probs: np.ndarray
    specified: np.ndarray

    def __post_init__(self) -> None:
        n_c, n_g = len(self.classes), len(self.groups)
        probs = np.asarray(self.probs, dtype=np.float64)
        specified = np.asarray(self.specified, dtype=bool)
        if probs.shape != (n_c, n_g, n_c) or specified.shape != (n_c, n_g):
            raise InvalidSpec(
                f"probs must have shape ({n_c}, {n_g}, {n_c}) "
                f"and specified ({n_c}, {n_g})"
            )
        if (probs < 0).any():
            raise InvalidSpec("probabilities must be non-negative")
        sums = probs.sum(axis=2)
        bad = specified & (np.abs(sums - 1.0) > _ROW_SUM_TOL)
        if bad.any():
            c, g = np.argwhere(bad)[0]
            raise InvalidSpec(
                f"confusion row for class {self.classes[c]!r}, group "
                f"{self.groups[g]!r} sums to {sums[c, g]!r}, not 1"
            )
        probs.setflags(write=False)
        specified.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "specified", specified)

    @property
    def diagonal_recalls(self) -> np.ndarray:
        """Recall per (class, group): the diagonal of each confusion row."""
        idx = np.arange(len(self.classes))
        return self.probs[idx, :, idx]

    @classmethod
    def identity(
        cls, attribute: str, classes: tuple[str, ...], groups: tuple[str, ...]
    ) -> "ClassifierProfile":
        """A perfect classifier: all mass on the true class."""
        n_c, n_g = len(classes), len(groups)
        probs = np.zeros((n_c, n_g, n_c))
        for c in range(n_c):
            probs[c, :, c] = 1.0
        return cls(attribute, classes, groups, probs, np.ones((n_c, n_g), dtype=bool))

    @classmethod
    def from_recalls(
        cls,
        attribute: str,
        classes: tuple[str, ...],
        groups: tuple[str, ...],
        recalls: np.ndarray,
    ) -> "ClassifierProfile":
        """Diagonal set from a (class, group) recall matrix, errors spread uniformly.

        With a single class the recall must be 1, since there is nothing to
        confuse it with.
        """
        n_c, n_g = len(classes), len(groups)
        r = np.asarray(recalls, dtype=np.float64)
        if r.shape != (n_c, n_g):
            raise InvalidSpec(f"recalls must have shape ({n_c}, {n_g})")
        if (r < 0).any() or (r > 1).any():
            raise InvalidSpec("recalls must lie in [0, 1]")
        if n_c == 1 and not (r == 1.0).all():
            raise InvalidSpec("with a single class every recall must be 1")
        probs = np.zeros((n_c, n_g, n_c))
        for c in range(n_c):
            for g in range(n_g):
                probs[c, g, :] = (1.0 - r[c, g]) / (n_c - 1) if n_c > 1 else 0.0
                probs[c, g, c] = r[c, g]
        return cls(attribute, classes, groups, probs, np.ones((n_c, n_g), dtype=bool))

    @classmethod
    def from_group_recalls(
        cls,
        attribute: str,
        classes: tuple[str, ...],
        groups: tuple[str, ...],
        recall_by_group: Mapping[str, float],
    ) -> "ClassifierProfile":
        """Same recall for a group in every class."""
        missing = [g for g in groups if g not in recall_by_group]
        if missing:
            raise InvalidSpec(f"no recall given for groups: {missing}")
        row = np.array([recall_by_group[g] for g in groups])
        return cls.from_recalls(
            attribute, classes, groups, np.tile(row, (len(classes), 1))
        )


@dataclass(frozen=True)
class RunAggregate:
    """Mean and sample standard deviation of each metric over k runs."""

    means: dict[str, float]
    stds: dict[str, float]
    k: int


def generate_population(spec: PopulationSpec) -> LabeledDataset:
    """Materialize a dataset whose cell counts match the spec weights.

    Counts are apportioned by largest remainder, so each cell deviates from
    its exact share by less than one record and the total is exact. Record
    order is a seeded shuffle; ids are synthetic and sequential.
    """
    schema = spec.schema
    combos = group_combinations(schema)
    quotas = (spec.total_count * spec.weights) / spec.weights.sum()
    flat = quotas.ravel()
    base = np.floor(flat).astype(np.int64)
    extras = spec.total_count - int(base.sum())
    if extras:
        remainders = np.where(flat > 0, flat - base, -1.0)
        order = np.lexsort((np.arange(flat.size), -remainders))
        base[order[:extras]] += 1
    counts = base.reshape(quotas.shape)

    payload: list[tuple[str, dict[str, str]]] = []
    for ci, class_label in enumerate(schema.classes):
        for k, combo in enumerate(combos):
            payload.extend([(class_label, combo)] * int(counts[ci, k]))
    rng = np.random.default_rng(spec.seed)
    order = rng.permutation(len(payload))
    width = len(str(spec.total_count))
    records = tuple(
        SampleRecord(id=f"r{i:0{width}d}", class_label=payload[j][0], groups=dict(payload[j][1]))
        for i, j in enumerate(order)
    )
    return LabeledDataset(schema=schema, records=records)


def simulate_classifier(
    dataset: LabeledDataset, profile: ClassifierProfile, seed: int | Sequence[int]
) -> EvaluationSet:
    """Draw one prediction per record from the profile's confusion rows.

    Each record's draw consumes its own position in the random stream, so
    the result does not depend on evaluation order. Every (class, group)
    pair present in the dataset must have a specified profile row.
    """
    schema = dataset.schema
    schema.groups(profile.attribute)  # raises UnknownAttribute
    class_index = {c: i for i, c in enumerate(profile.classes)}
    group_index = {g: j for j, g in enumerate(profile.groups)}
    n = len(dataset.records)
    ci = np.empty(n, dtype=np.int64)
    gi = np.empty(n, dtype=np.int64)
    for i, rec in enumerate(dataset.records):
        group = rec.groups.get(profile.attribute)
        if rec.class_label not in class_index or group not in group_index:
            raise MissingProfileRow(rec.class_label, str(group))
        ci[i] = class_index[rec.class_label]
        gi[i] = group_index[group]
    for c, g in {(int(a), int(b)) for a, b in zip(ci, gi)}:
        if not profile.specified[c, g]:
            raise MissingProfileRow(profile.classes[c], profile.groups[g])

    rng = np.random.default_rng(seed)
    u = rng.random(n)
    cum = np.cumsum(profile.probs, axis=2)
    pred = np.minimum(
        (cum[ci, gi] < u[:, None]).sum(axis=1), len(profile.classes) - 1
    )
    records = tuple(
        EvaluationRecord(
            id=rec.id,
            true_class=rec.class_label,
            predicted_class=profile.classes[pred[i]],
            groups=rec.groups,
        )
        for i, rec in enumerate(dataset.records)
    )
    return EvaluationSet(schema=schema, records=records)


def analytic_od(profile: ClassifierProfile) -> DisparityReport:
    """Disparity implied by the profile's exact recalls, with no sampling.

    The closed-form counterpart of simulating a large population and
    measuring disparity on the result; used as the oracle for the sampled
    pipeline. Requires a fully specified profile.
    """
    if not profile.specified.all():
        c, g = np.argwhere(~profile.specified)[0]
        raise MissingProfileRow(profile.classes[c], profile.groups[g])
    diag = profile.diagonal_recalls
    n_groups = len(profile.groups)
    per_class: list[float] = []
    single: list[str] = []
    for ci, class_label in enumerate(profile.classes):
        if n_groups == 1:
            single.append(class_label)
            per_class.append(0.0)
            continue
        r = diag[ci]
        best = float(r.max())
        if best == 0.0:
            per_class.append(0.0)
            continue
        value = float(np.sum(1.0 - r / best)) / (n_groups - 1)
        per_class.append(float(min(max(value, 0.0), 1.0)))
    return DisparityReport(
        attribute=profile.attribute,
        classes=profile.classes,
        per_class=tuple(per_class),
        overall=sum(per_class) / len(per_class),
        excluded_groups=tuple(() for _ in profile.classes),
        single_group_classes=tuple(single),
        min_support=1,
    )


def aggregate_runs(runs: Sequence[Mapping[str, float]]) -> RunAggregate:
    """Per-metric mean and sample standard deviation over repeated runs."""
    if not runs:
        raise ValidationError("at least one run is required")
    keys = list(runs[0])
    for run in runs[1:]:
        if list(run) != keys:
            raise MismatchedKeys(
                f"run keys {sorted(run)} differ from {sorted(keys)}"
            )
    k = len(runs)
    means: dict[str, float] = {}
    stds: dict[str, float] = {}
    for key in keys:
        values = [float(run[key]) for run in runs]
        mean = sum(values) / k
        means[key] = mean
        if k == 1:
            stds[key] = 0.0
        else:
            stds[key] = math.sqrt(sum((v - mean) ** 2 for v in values) / (k - 1))
    return RunAggregate(means=means, stds=stds, k=k)
