"""Shared fixtures: tiny handmade datasets and a large skewed population."""

from __future__ import annotations

import numpy as np
import pytest

from biasaudit import (
    AttributeSchema,
    LabeledDataset,
    PopulationSpec,
    SampleRecord,
    generate_population,
)

# Race shares echo a web-scraped face dataset: one dominant group. Gender is
# globally near-balanced but skewed per class (72/28 in "angry"), which is
# the stereotype signature the dependence metrics are meant to catch.
RACE_SHARES = {
    "W": 0.644, "LH": 0.09, "ME": 0.07, "B": 0.06, "EA": 0.05, "I": 0.046, "SA": 0.04,
}
CLASS_SHARES = {
    "neutral": 0.24, "happy": 0.38, "sad": 0.09, "surprise": 0.07,
    "fear": 0.05, "disgust": 0.04, "angry": 0.09, "contempt": 0.04,
}
MALE_SHARE_BY_CLASS = {
    "neutral": 0.52, "happy": 0.38, "sad": 0.48, "surprise": 0.45,
    "fear": 0.47, "disgust": 0.50, "angry": 0.72, "contempt": 0.55,
}


def skewed_population_spec(total: int, seed: int) -> PopulationSpec:
    """Population spec with dominant-race and per-class gender-skew structure."""
    schema = AttributeSchema.create(
        classes=tuple(CLASS_SHARES),
        attributes={"gender": ("F", "M"), "race": tuple(RACE_SHARES)},
    )
    cells = []
    for c, c_share in CLASS_SHARES.items():
        male = MALE_SHARE_BY_CLASS[c]
        for g, g_share in (("F", 1.0 - male), ("M", male)):
            for r, r_share in RACE_SHARES.items():
                cells.append((c, {"gender": g, "race": r}, c_share * g_share * r_share))
    return PopulationSpec.from_cells(schema, total, cells, seed)


def dataset_from_cells(
    cells: dict[tuple[str, str], int], attribute: str = "gender"
) -> LabeledDataset:
    """Build a one-attribute dataset from {(class, group): count}."""
    classes = tuple(dict.fromkeys(c for c, _ in cells))
    groups = tuple(dict.fromkeys(g for _, g in cells))
    schema = AttributeSchema.create(classes=classes, attributes={attribute: groups})
    records = []
    i = 0
    for (c, g), n in cells.items():
        for _ in range(n):
            records.append(SampleRecord(id=f"r{i}", class_label=c, groups={attribute: g}))
            i += 1
    return LabeledDataset(schema=schema, records=tuple(records))


@pytest.fixture
def two_class_dataset() -> LabeledDataset:
    """Cells {x: (A=10, B=4), y: (A=6, B=6)}."""
    return dataset_from_cells({("x", "A"): 10, ("x", "B"): 4, ("y", "A"): 6, ("y", "B"): 6})


@pytest.fixture(scope="session")
def skewed_dataset() -> LabeledDataset:
    return generate_population(skewed_population_spec(50_000, seed=20240817))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
