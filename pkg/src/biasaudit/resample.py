"""Deterministic subset constructions: balanced, stratified, single-group.

Each construction subsamples an existing dataset (never duplicates or
synthesizes records) and is a pure function of (dataset, parameters, seed).
Sampling uses numpy's PCG64 generator with one substream per (class, cell)
so cells can be drawn independently; selected records keep their original
relative order, which makes the output byte-stable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import LabeledDataset
from .errors import (
    EmptyCell,
    InsufficientSamples,
    InvalidFraction,
    UnknownGroup,
    ValidationError,
)

_KINDS = ("balanced", "stratified", "single_group")


@dataclass(frozen=True)
class SubsetSpec:
    """Parameters of one subset construction, reproducible from the seed."""

    kind: str
    seed: int
    attribute: str | None = None
    group: str | None = None
    fraction: float | None = None
    match_balanced_totals: bool = False
    strat_attributes: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown subset kind {self.kind!r}; expected one of {_KINDS}")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        if self.kind in ("balanced", "single_group") and self.attribute is None:
            raise ValidationError(f"{self.kind} subsets require an attribute")
        if self.kind == "single_group" and self.group is None:
            raise ValidationError("single_group subsets require a group")
        if self.kind == "stratified":
            if self.fraction is None:
                raise ValidationError("stratified subsets require a fraction")
            if not 0.0 < self.fraction <= 1.0:
                raise InvalidFraction(f"fraction must be in (0, 1], got {self.fraction!r}")


def build_subset(dataset: LabeledDataset, spec: SubsetSpec) -> LabeledDataset:
    """Dispatch a :class:`SubsetSpec` to the matching construction."""
    if spec.kind == "balanced":
        return balanced_subset(dataset, spec.attribute, spec.seed)
    if spec.kind == "stratified":
        return stratified_subset(dataset, spec.fraction, spec.seed, spec.strat_attributes)
    return single_group_subset(
        dataset, spec.attribute, spec.group, spec.seed, spec.match_balanced_totals
    )


def _cell_rng(seed: int, cell_index: int) -> np.random.Generator:
    return np.random.default_rng([seed, cell_index])


def _take(pool: list[int], k: int, rng: np.random.Generator) -> list[int]:
    """Sample k record indices from the pool uniformly without replacement."""
    if k == len(pool):
        return list(pool)
    chosen = rng.choice(len(pool), size=k, replace=False)
    return [pool[i] for i in chosen]


def _subset_from_indices(dataset: LabeledDataset, indices: list[int]) -> LabeledDataset:
    indices.sort()
    return LabeledDataset(
        schema=dataset.schema,
        records=tuple(dataset.records[i] for i in indices),
    )


def _class_group_pools(
    dataset: LabeledDataset, attribute: str
) -> dict[str, dict[str, list[int]]]:
    groups = dataset.schema.groups(attribute)
    pools: dict[str, dict[str, list[int]]] = {
        c: {g: [] for g in groups} for c in dataset.schema.classes
    }
    for i, rec in enumerate(dataset.records):
        pools[rec.class_label][rec.groups[attribute]].append(i)
    return pools


def _balanced_cell_sizes(
    dataset: LabeledDataset, attribute: str
) -> tuple[dict[str, dict[str, list[int]]], dict[str, int]]:
    """Per-class minimum cell count, the largest exactly balanced per-cell size.

    Every (class, group) cell must be populated, otherwise the class cannot
    be balanced at all.
    """
    pools = _class_group_pools(dataset, attribute)
    k_per_class: dict[str, int] = {}
    for c in dataset.schema.classes:
        for g in dataset.schema.groups(attribute):
            if not pools[c][g]:
                raise EmptyCell(c, g)
        k_per_class[c] = min(len(pools[c][g]) for g in dataset.schema.groups(attribute))
    return pools, k_per_class


def balanced_subset(dataset: LabeledDataset, attribute: str, seed: int) -> LabeledDataset:
    """Subsample so every group has the same count within every class.

    For each class the per-group count is the class's smallest cell, the
    largest size an exact balance allows without replacement. The output
    has zero representational and zero stereotypical bias for the balanced
    attribute; other attributes are left to fall where they may.
    """
    pools, k_per_class = _balanced_cell_sizes(dataset, attribute)
    groups = dataset.schema.groups(attribute)
    selected: list[int] = []
    for ci, c in enumerate(dataset.schema.classes):
        for gi, g in enumerate(groups):
            rng = _cell_rng(seed, ci * len(groups) + gi)
            selected.extend(_take(pools[c][g], k_per_class[c], rng))
    return _subset_from_indices(dataset, selected)


def _largest_remainder(quotas: np.ndarray, total: int) -> np.ndarray:
    """Integer apportionment of ``total`` matching ``quotas`` as closely as possible.

    Floors every quota, then hands the remaining units to the largest
    fractional parts, ties broken by position.
    """
    base = np.floor(quotas).astype(np.int64)
    extras = total - int(base.sum())
    if extras < 0:
        raise ValidationError("apportionment target below the floor sum")
    if extras:
        remainders = quotas - base
        order = np.lexsort((np.arange(quotas.size), -remainders))
        base[order[:extras]] += 1
    return base


def stratified_subset(
    dataset: LabeledDataset,
    fraction: float,
    seed: int,
    strat_attributes: tuple[str, ...] | None = None,
) -> LabeledDataset:
    """Subsample a fixed fraction while preserving the joint distribution.

    Records are binned by (class, combination of stratification-attribute
    groups). Within each class, per-cell targets are the fraction of the
    cell count apportioned by largest remainder so the class total lands
    exactly on round(fraction * class count). Defaults to stratifying on
    every attribute; fraction 1 returns the input unchanged.
    """
    if not 0.0 < fraction <= 1.0:
        raise InvalidFraction(f"fraction must be in (0, 1], got {fraction!r}")
    schema = dataset.schema
    attrs = tuple(strat_attributes) if strat_attributes is not None else schema.attribute_names
    for a in attrs:
        schema.groups(a)  # raises UnknownAttribute
    combos = list(itertools.product(*(schema.attributes[a] for a in attrs)))
    combo_index = {combo: k for k, combo in enumerate(combos)}
    class_index = {c: i for i, c in enumerate(schema.classes)}

    pools: list[list[list[int]]] = [
        [[] for _ in combos] for _ in schema.classes
    ]
    for i, rec in enumerate(dataset.records):
        combo = tuple(rec.groups[a] for a in attrs)
        pools[class_index[rec.class_label]][combo_index[combo]].append(i)

    selected: list[int] = []
    for ci in range(len(schema.classes)):
        sizes = np.array([len(p) for p in pools[ci]], dtype=np.int64)
        class_total = int(sizes.sum())
        if class_total == 0:
            continue
        target_total = int(np.floor(fraction * class_total + 0.5))
        targets = _largest_remainder(fraction * sizes, target_total)
        for k, pool in enumerate(pools[ci]):
            if targets[k] == 0:
                continue
            rng = _cell_rng(seed, ci * len(combos) + k)
            selected.extend(_take(pool, int(targets[k]), rng))
    return _subset_from_indices(dataset, selected)


def single_group_subset(
    dataset: LabeledDataset,
    attribute: str,
    group: str,
    seed: int,
    match_balanced_totals: bool = False,
) -> LabeledDataset:
    """Keep only records of one group, an artificially biased variant.

    With ``match_balanced_totals`` the per-class totals are forced to equal
    those of :func:`balanced_subset` on the same dataset and attribute, so
    the biased and balanced variants stay directly comparable; the chosen
    group must then hold at least (number of groups) * (per-class minimum)
    records in every class.
    """
    groups = dataset.schema.groups(attribute)
    if group not in groups:
        raise UnknownGroup(attribute, group)
    if not match_balanced_totals:
        indices = [
            i for i, rec in enumerate(dataset.records) if rec.groups[attribute] == group
        ]
        return _subset_from_indices(dataset, indices)

    pools, k_per_class = _balanced_cell_sizes(dataset, attribute)
    selected: list[int] = []
    for ci, c in enumerate(dataset.schema.classes):
        needed = len(groups) * k_per_class[c]
        pool = pools[c][group]
        if len(pool) < needed:
            raise InsufficientSamples(c, needed, len(pool))
        rng = _cell_rng(seed, ci)
        selected.extend(_take(pool, needed, rng))
    return _subset_from_indices(dataset, selected)
