"""Data model and counting operations.

The audit pipeline works over three kinds of objects:

* :class:`LabeledDataset` -- rows of (id, class, one group per attribute),
  the unit every dataset-bias metric consumes.
* :class:`EvaluationSet` -- rows of (id, true class, predicted class,
  groups), the unit every model-bias metric consumes.
* derived tables -- :class:`ContingencyTable`, :class:`JointDistribution`
  and :class:`RecallTable`, which the metrics module operates on.

All types are immutable after construction (arrays are marked read-only)
and every operation here is a pure function of its inputs, so callers may
evaluate attributes and metrics concurrently. Group and class orderings
always come from the schema declaration, which keeps every matrix output
stable across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    EmptyDataset,
    EmptyEvaluationSet,
    EmptyTable,
    UnknownAttribute,
    ValidationError,
)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class AttributeSchema:
    """Declares the class labels and, per attribute, the admissible group labels.

    Ordering is significant: every matrix produced downstream lays out its
    rows and columns in the order declared here.
    """

    classes: tuple[str, ...]
    attributes: dict[str, tuple[str, ...]]

    def __post_init__(self) -> None:
        if not self.classes:
            raise ValidationError("schema declares no classes")
        if len(set(self.classes)) != len(self.classes):
            raise ValidationError("class labels must be unique")
        for name, groups in self.attributes.items():
            if not groups:
                raise ValidationError(f"attribute {name!r} declares no groups")
            if len(set(groups)) != len(groups):
                raise ValidationError(f"group labels for {name!r} must be unique")

    @classmethod
    def create(
        cls,
        classes: Iterable[str],
        attributes: Mapping[str, Iterable[str]],
    ) -> "AttributeSchema":
        return cls(
            classes=tuple(classes),
            attributes={name: tuple(groups) for name, groups in attributes.items()},
        )

    @property
    def attribute_names(self) -> tuple[str, ...]:
        return tuple(self.attributes)

    def groups(self, attribute: str) -> tuple[str, ...]:
        try:
            return self.attributes[attribute]
        except KeyError:
            raise UnknownAttribute(attribute) from None

    def class_index(self, label: str) -> int:
        try:
            return self.classes.index(label)
        except ValueError:
            raise ValidationError(f"unknown class label: {label!r}") from None


@dataclass(frozen=True, slots=True)
class SampleRecord:
    """One labeled observation: an id, a class label, and one group per attribute."""

    id: str
    class_label: str
    groups: dict[str, str]


@dataclass(frozen=True, slots=True)
class EvaluationRecord:
    """One scored observation: true and predicted class plus group labels."""

    id: str
    true_class: str
    predicted_class: str
    groups: dict[str, str]


def _validate_groups(schema: AttributeSchema, groups: Mapping[str, str], ident: str) -> None:
    if set(groups) != set(schema.attributes):
        raise ValidationError(
            f"record {ident!r}: group labels must cover exactly the schema attributes"
        )
    for name, value in groups.items():
        if value not in schema.attributes[name]:
            raise ValidationError(
                f"record {ident!r}: group {value!r} not declared for attribute {name!r}"
            )


@dataclass(frozen=True)
class LabeledDataset:
    """A schema plus an ordered list of validated sample records."""

    schema: AttributeSchema
    records: tuple[SampleRecord, ...]

    def __post_init__(self) -> None:
        classes = set(self.schema.classes)
        seen: set[str] = set()
        for rec in self.records:
            if rec.id in seen:
                raise ValidationError(f"duplicate record id: {rec.id!r}")
            seen.add(rec.id)
            if rec.class_label not in classes:
                raise ValidationError(
                    f"record {rec.id!r}: class {rec.class_label!r} not in schema"
                )
            _validate_groups(self.schema, rec.groups, rec.id)

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class EvaluationSet:
    """A schema plus an ordered list of validated evaluation records."""

    schema: AttributeSchema
    records: tuple[EvaluationRecord, ...]

    def __post_init__(self) -> None:
        classes = set(self.schema.classes)
        seen: set[str] = set()
        for rec in self.records:
            if rec.id in seen:
                raise ValidationError(f"duplicate record id: {rec.id!r}")
            seen.add(rec.id)
            if rec.true_class not in classes:
                raise ValidationError(
                    f"record {rec.id!r}: true class {rec.true_class!r} not in schema"
                )
            if rec.predicted_class not in classes:
                raise ValidationError(
                    f"record {rec.id!r}: predicted class {rec.predicted_class!r} not in schema"
                )
            _validate_groups(self.schema, rec.groups, rec.id)

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class ContingencyTable:
    """Integer counts over (group x class) for one attribute.

    ``counts[g, c]`` is the number of records in group ``g`` with class
    ``c``; rows follow the schema's group order, columns its class order.
    """

    attribute: str
    groups: tuple[str, ...]
    classes: tuple[str, ...]
    counts: np.ndarray

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (len(self.groups), len(self.classes)):
            raise ValidationError(
                f"counts shape {counts.shape} does not match "
                f"{len(self.groups)} groups x {len(self.classes)} classes"
            )
        if (counts < 0).any():
            raise ValidationError("contingency counts must be non-negative")
        object.__setattr__(self, "counts", _freeze(counts))

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class JointDistribution:
    """Empirical joint probabilities P(group, class) with cached marginals."""

    attribute: str
    groups: tuple[str, ...]
    classes: tuple[str, ...]
    probs: np.ndarray
    group_marginals: np.ndarray = field(init=False)
    class_marginals: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.shape != (len(self.groups), len(self.classes)):
            raise ValidationError(
                f"probs shape {probs.shape} does not match "
                f"{len(self.groups)} groups x {len(self.classes)} classes"
            )
        if (probs < 0).any():
            raise ValidationError("joint probabilities must be non-negative")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValidationError(f"joint probabilities sum to {probs.sum()!r}, not 1")
        object.__setattr__(self, "probs", _freeze(probs))
        object.__setattr__(self, "group_marginals", _freeze(probs.sum(axis=1)))
        object.__setattr__(self, "class_marginals", _freeze(probs.sum(axis=0)))

    def transpose(self) -> "JointDistribution":
        """Swap the roles of groups and classes (useful for symmetry checks)."""
        return JointDistribution(
            attribute=self.attribute,
            groups=self.classes,
            classes=self.groups,
            probs=self.probs.T.copy(),
        )


@dataclass(frozen=True)
class RecallTable:
    """Per-(class, group) recall estimates with their support counts.

    ``recall[c, g]`` is the fraction of evaluation records with true class
    ``c`` and group ``g`` that were predicted correctly. A cell with zero
    support has no recall estimate: it is missing, marked NaN in ``recall``
    and zero in ``support``. Callers must consult ``support`` (or
    :meth:`missing`) rather than doing arithmetic on NaN cells.
    """

    attribute: str
    classes: tuple[str, ...]
    groups: tuple[str, ...]
    recall: np.ndarray
    support: np.ndarray

    def __post_init__(self) -> None:
        recall = np.asarray(self.recall, dtype=np.float64)
        support = np.asarray(self.support, dtype=np.int64)
        shape = (len(self.classes), len(self.groups))
        if recall.shape != shape or support.shape != shape:
            raise ValidationError(
                f"recall/support shapes must both be {shape}, "
                f"got {recall.shape} and {support.shape}"
            )
        if (support < 0).any():
            raise ValidationError("support counts must be non-negative")
        missing = support == 0
        if not np.isnan(recall[missing]).all():
            raise ValidationError("cells with zero support must have missing recall")
        supported = recall[~missing]
        if np.isnan(supported).any() or (supported < 0).any() or (supported > 1).any():
            raise ValidationError("supported recall values must lie in [0, 1]")
        object.__setattr__(self, "recall", _freeze(recall))
        object.__setattr__(self, "support", _freeze(support))

    @property
    def missing(self) -> np.ndarray:
        """Boolean mask of cells with no recall estimate (zero support)."""
        return self.support == 0


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def build_contingency(dataset: LabeledDataset, attribute: str) -> ContingencyTable:
    """Count records per (group, class) cell for one attribute.

    The result is independent of record order; cells sum to ``len(dataset)``.
    """
    groups = dataset.schema.groups(attribute)
    if not dataset.records:
        raise EmptyDataset("cannot build a contingency table from an empty dataset")
    group_index = {g: i for i, g in enumerate(groups)}
    class_index = {c: j for j, c in enumerate(dataset.schema.classes)}
    counts = np.zeros((len(groups), len(dataset.schema.classes)), dtype=np.int64)
    for rec in dataset.records:
        counts[group_index[rec.groups[attribute]], class_index[rec.class_label]] += 1
    return ContingencyTable(
        attribute=attribute,
        groups=groups,
        classes=dataset.schema.classes,
        counts=counts,
    )


def normalize(table: ContingencyTable) -> JointDistribution:
    """Maximum-likelihood joint distribution: each cell divided by the total.

    No smoothing is applied; zero cells stay exactly zero so the
    zero-cell conventions of the dependence metrics are preserved.
    """
    total = table.total
    if total == 0:
        raise EmptyTable("contingency table has no observations")
    return JointDistribution(
        attribute=table.attribute,
        groups=table.groups,
        classes=table.classes,
        probs=table.counts / total,
    )


def group_distribution(dataset: LabeledDataset, attribute: str) -> np.ndarray:
    """Fraction of records per group, in schema group order (sums to 1)."""
    groups = dataset.schema.groups(attribute)
    if not dataset.records:
        raise EmptyDataset("cannot compute a group distribution of an empty dataset")
    index = {g: i for i, g in enumerate(groups)}
    counts = np.zeros(len(groups), dtype=np.int64)
    for rec in dataset.records:
        counts[index[rec.groups[attribute]]] += 1
    return counts / len(dataset.records)


def recall_table(evals: EvaluationSet, attribute: str) -> RecallTable:
    """Estimate recall per (true class, group) cell.

    ``recall[c, g] = #(true == predicted == c, group g) / #(true == c, group g)``;
    cells with no records of that true class and group are missing.
    """
    groups = evals.schema.groups(attribute)
    if not evals.records:
        raise EmptyEvaluationSet("cannot compute recalls of an empty evaluation set")
    class_index = {c: i for i, c in enumerate(evals.schema.classes)}
    group_index = {g: j for j, g in enumerate(groups)}
    shape = (len(evals.schema.classes), len(groups))
    support = np.zeros(shape, dtype=np.int64)
    correct = np.zeros(shape, dtype=np.int64)
    for rec in evals.records:
        i = class_index[rec.true_class]
        j = group_index[rec.groups[attribute]]
        support[i, j] += 1
        if rec.predicted_class == rec.true_class:
            correct[i, j] += 1
    recall = np.full(shape, np.nan)
    mask = support > 0
    recall[mask] = correct[mask] / support[mask]
    return RecallTable(
        attribute=attribute,
        classes=evals.schema.classes,
        groups=groups,
        recall=recall,
        support=support,
    )


def overall_accuracy(evals: EvaluationSet) -> float:
    """Fraction of records whose prediction equals the true class."""
    if not evals.records:
        raise EmptyEvaluationSet("cannot compute accuracy of an empty evaluation set")
    correct = sum(1 for rec in evals.records if rec.predicted_class == rec.true_class)
    return correct / len(evals.records)
