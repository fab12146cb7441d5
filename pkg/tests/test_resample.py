"""Subset constructions: balance, stratification, single-group restriction."""

from __future__ import annotations

import numpy as np
import pytest

from biasaudit import (
    SubsetSpec,
    balanced_subset,
    build_contingency,
    build_subset,
    group_distribution,
    nmi,
    normalize,
    nsd,
    single_group_subset,
    stratified_subset,
)
from biasaudit.errors import (
    EmptyCell,
    InsufficientSamples,
    InvalidFraction,
    UnknownGroup,
    ValidationError,
)

from conftest import dataset_from_cells


def class_totals(dataset):
    totals = {c: 0 for c in dataset.schema.classes}
    for rec in dataset.records:
        totals[rec.class_label] += 1
    return totals


def cell_counts(dataset, attribute):
    return build_contingency(dataset, attribute).counts


class TestBalancedSubset:
    def test_per_class_min_rule(self, two_class_dataset):
        subset = balanced_subset(two_class_dataset, "gender", seed=11)
        counts = cell_counts(subset, "gender")
        assert counts.tolist() == [[4, 6], [4, 6]]
        assert len(subset) == 20

    def test_already_balanced_is_fixpoint(self):
        ds = dataset_from_cells({("x", "A"): 5, ("x", "B"): 5, ("y", "A"): 3, ("y", "B"): 3})
        subset = balanced_subset(ds, "gender", seed=0)
        assert (cell_counts(subset, "gender") == cell_counts(ds, "gender")).all()
        assert len(subset) == len(ds)

    def test_output_has_zero_bias(self, two_class_dataset):
        subset = balanced_subset(two_class_dataset, "gender", seed=3)
        assert nsd(group_distribution(subset, "gender")) <= 1e-12
        assert nmi(normalize(build_contingency(subset, "gender"))) <= 1e-12

    def test_empty_cell_rejected(self):
        ds = dataset_from_cells({("x", "A"): 3, ("y", "A"): 2, ("y", "B"): 2})
        with pytest.raises(EmptyCell) as exc:
            balanced_subset(ds, "gender", seed=1)
        assert exc.value.class_label == "x" and exc.value.group == "B"

    def test_ids_are_subset_of_input(self, two_class_dataset):
        subset = balanced_subset(two_class_dataset, "gender", seed=5)
        input_ids = {r.id for r in two_class_dataset.records}
        subset_ids = [r.id for r in subset.records]
        assert len(set(subset_ids)) == len(subset_ids)
        assert set(subset_ids) <= input_ids

    def test_deterministic_per_seed(self, two_class_dataset):
        a = balanced_subset(two_class_dataset, "gender", seed=9)
        b = balanced_subset(two_class_dataset, "gender", seed=9)
        c = balanced_subset(two_class_dataset, "gender", seed=10)
        assert [r.id for r in a.records] == [r.id for r in b.records]
        assert [r.id for r in a.records] != [r.id for r in c.records]


class TestStratifiedSubset:
    def test_fraction_one_is_identity(self, two_class_dataset):
        subset = stratified_subset(two_class_dataset, 1.0, seed=4)
        assert subset.records == two_class_dataset.records

    def test_exact_proportional_targets(self):
        ds = dataset_from_cells(
            {("c", "a"): 40, ("c", "b"): 20, ("c", "c"): 30, ("c", "d"): 10}
        )
        subset = stratified_subset(ds, 0.5, seed=2)
        assert cell_counts(subset, "gender").ravel().tolist() == [20, 10, 15, 5]

    def test_invalid_fraction(self, two_class_dataset):
        for bad in (0.0, -0.2, 1.5):
            with pytest.raises(InvalidFraction):
                stratified_subset(two_class_dataset, bad, seed=1)

    def test_class_totals_within_one_record(self, rng):
        ds = dataset_from_cells(
            {("x", "A"): 137, ("x", "B"): 61, ("y", "A"): 29, ("y", "B"): 83}
        )
        source_totals = class_totals(ds)
        for fraction in (0.07, 0.13, 0.36, 0.5, 0.91):
            subset = stratified_subset(ds, fraction, seed=6)
            for c, total in class_totals(subset).items():
                assert abs(total - fraction * source_totals[c]) < 1.0

    def test_subset_of_strat_attributes(self, two_class_dataset):
        subset = stratified_subset(
            two_class_dataset, 0.5, seed=8, strat_attributes=("gender",)
        )
        assert cell_counts(subset, "gender").tolist() == [[5, 3], [2, 3]]

    def test_preserves_bias_metrics(self, skewed_dataset):
        """Small stratified fractions keep both dataset scores close to the source."""
        source_nsd = nsd(group_distribution(skewed_dataset, "race"))
        source_nmi = nmi(normalize(build_contingency(skewed_dataset, "gender")))
        subset = stratified_subset(skewed_dataset, 0.05, seed=31)
        assert abs(nsd(group_distribution(subset, "race")) - source_nsd) < 0.02
        assert abs(
            nmi(normalize(build_contingency(subset, "gender"))) - source_nmi
        ) < 0.02

    def test_deterministic_per_seed(self, two_class_dataset):
        a = stratified_subset(two_class_dataset, 0.5, seed=12)
        b = stratified_subset(two_class_dataset, 0.5, seed=12)
        assert [r.id for r in a.records] == [r.id for r in b.records]


class TestSingleGroupSubset:
    def test_match_takes_group_share_of_balanced_total(self):
        ds = dataset_from_cells({("x", "A"): 10, ("x", "B"): 4})
        subset = single_group_subset(ds, "gender", "A", seed=2, match_balanced_totals=True)
        assert len(subset) == 8
        assert all(r.groups["gender"] == "A" for r in subset.records)

    def test_match_insufficient_samples(self, two_class_dataset):
        with pytest.raises(InsufficientSamples) as exc:
            single_group_subset(
                two_class_dataset, "gender", "A", seed=2, match_balanced_totals=True
            )
        assert exc.value.class_label == "y"
        assert exc.value.needed == 12 and exc.value.available == 6

    def test_no_match_keeps_all_group_records(self, two_class_dataset):
        subset = single_group_subset(two_class_dataset, "gender", "A", seed=1)
        assert len(subset) == 16
        assert class_totals(subset) == {"x": 10, "y": 6}

    def test_unknown_group(self, two_class_dataset):
        with pytest.raises(UnknownGroup):
            single_group_subset(two_class_dataset, "gender", "Z", seed=1)

    def test_match_equals_balanced_class_totals(self):
        ds = dataset_from_cells(
            {("x", "A"): 30, ("x", "B"): 9, ("y", "A"): 21, ("y", "B"): 10}
        )
        balanced = balanced_subset(ds, "gender", seed=7)
        matched = single_group_subset(ds, "gender", "A", seed=7, match_balanced_totals=True)
        assert class_totals(matched) == class_totals(balanced)


class TestSubsetSpec:
    def test_dispatch(self, two_class_dataset):
        spec = SubsetSpec(kind="balanced", seed=3, attribute="gender")
        direct = balanced_subset(two_class_dataset, "gender", seed=3)
        assert build_subset(two_class_dataset, spec).records == direct.records

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            SubsetSpec(kind="bootstrap", seed=1)

    def test_missing_parameters(self):
        with pytest.raises(ValidationError):
            SubsetSpec(kind="balanced", seed=1)
        with pytest.raises(ValidationError):
            SubsetSpec(kind="single_group", seed=1, attribute="g")
        with pytest.raises(InvalidFraction):
            SubsetSpec(kind="stratified", seed=1, fraction=0.0)

    def test_seed_range(self):
        with pytest.raises(ValidationError):
            SubsetSpec(kind="balanced", seed=-1, attribute="g")
        with pytest.raises(ValidationError):
            SubsetSpec(kind="balanced", seed=2**64, attribute="g")
