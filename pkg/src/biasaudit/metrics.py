"""Bias metrics for multi-class, multi-demographic classification.

Three views of bias are quantified:

* representational bias of a dataset: :func:`nsd`, the standard deviation
  of the normalized group-share vector rescaled to [0, 1];
* stereotypical bias of a dataset: :func:`nmi` for a single aggregate
  score and :func:`npmi_matrix` to localize it per (group, class) pair;
* residual bias of a trained model: :func:`intraclass_disparity` per
  class and :func:`overall_disparity` as the single-number summary,
  built on per-group recall so an unbalanced validation partition does
  not masquerade as model bias.

Classic single-group baselines are included for reference:
:func:`disparate_impact`, :func:`overall_accuracy_equality` and
:func:`mutual_information`. All logarithms are natural, so information
quantities are reported in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import EvaluationSet, JointDistribution, RecallTable
from .errors import (
    DegenerateJoint,
    NoPrivilegedSamples,
    NoSupportedGroups,
    NotNormalized,
    NoUnprivilegedSamples,
    TooFewGroups,
    UnknownGroup,
    ValidationError,
    ZeroDenominator,
)

_SUM_TOL = 1e-9


@dataclass(frozen=True)
class NpmiMatrix:
    """Normalized pointwise mutual information per (group, class) cell.

    Defined entries lie in [-1, 1]: +1 is total correlation
    (overrepresentation), 0 independence, -1 inverse correlation
    (the combination never occurs). Cells whose group or class marginal
    is zero carry no information and are undefined: NaN in ``values``
    and True in ``undefined``.
    """

    attribute: str
    groups: tuple[str, ...]
    classes: tuple[str, ...]
    values: np.ndarray
    undefined: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        undefined = np.asarray(self.undefined, dtype=bool)
        shape = (len(self.groups), len(self.classes))
        if values.shape != shape or undefined.shape != shape:
            raise ValidationError(f"values/undefined shapes must both be {shape}")
        defined = values[~undefined]
        if np.isnan(defined).any() or (defined < -1).any() or (defined > 1).any():
            raise ValidationError("defined npmi entries must lie in [-1, 1]")
        values.setflags(write=False)
        undefined.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "undefined", undefined)


@dataclass(frozen=True)
class DisparityReport:
    """Per-class intraclass disparity, its mean, and the support bookkeeping.

    ``overall`` is exactly the arithmetic mean of ``per_class``.
    ``excluded_groups[c]`` lists the groups dropped from class ``c`` for
    failing the support policy; ``single_group_classes`` flags classes where
    only one group survived, whose disparity is 0 by lack of any comparison.
    """

    attribute: str
    classes: tuple[str, ...]
    per_class: tuple[float, ...]
    overall: float
    excluded_groups: tuple[tuple[str, ...], ...]
    single_group_classes: tuple[str, ...]
    min_support: int

    def __post_init__(self) -> None:
        if len(self.per_class) != len(self.classes):
            raise ValidationError("one disparity value per class required")
        if any(v < 0 or v > 1 for v in self.per_class):
            raise ValidationError("disparity values must lie in [0, 1]")


def nsd(dist: np.ndarray) -> float:
    """Normalized standard deviation of a group-share vector.

    For n shares x summing to 1, returns

        (n / sqrt(n - 1)) * sqrt(sum((x_i - mean)^2) / n)

    which is 0 for the uniform distribution and 1 when the full
    population belongs to a single group. The bound holds for every
    n >= 2; the result is clamped only against sub-1e-12 float overshoot.
    """
    x = np.asarray(dist, dtype=np.float64)
    if x.ndim != 1:
        raise NotNormalized("distribution must be a 1-d vector")
    n = x.size
    if n < 2:
        raise TooFewGroups("need at least two groups")
    if (x < 0).any():
        raise NotNormalized("shares must be non-negative")
    if abs(x.sum() - 1.0) > _SUM_TOL:
        raise NotNormalized(f"shares sum to {x.sum()!r}, not 1")
    mean = x.mean()
    value = (n / math.sqrt(n - 1)) * math.sqrt(np.square(x - mean).sum() / n)
    return float(min(value, 1.0))


def npmi_matrix(joint: JointDistribution) -> NpmiMatrix:
    """Normalized pointwise mutual information for every (group, class) pair.

    For a cell with joint probability p and marginals ps, py:

        npmi = -ln(p / (ps * py)) / ln(p)

    Cells with p = 0 but positive marginals take the limit value -1
    (the combination is absent although both values occur). Cells where a
    marginal is zero are undefined. A cell holding the entire mass has
    marginals 1 and takes the limit value +1.
    """
    p = joint.probs
    ps = joint.group_marginals[:, None]
    py = joint.class_marginals[None, :]
    undefined = (ps == 0) | (py == 0)
    values = np.full(p.shape, np.nan)
    values[~undefined & (p == 0)] = -1.0
    positive = ~undefined & (p > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_p = np.log(p, where=positive, out=np.full(p.shape, np.nan))
        ratio = np.log(p / (ps * py), where=positive, out=np.full(p.shape, np.nan))
        computed = -ratio / log_p
    whole_mass = positive & (log_p == 0)
    computed[whole_mass] = 1.0
    values[positive] = np.clip(computed[positive], -1.0, 1.0)
    return NpmiMatrix(
        attribute=joint.attribute,
        groups=joint.groups,
        classes=joint.classes,
        values=values,
        undefined=undefined,
    )


def mutual_information(joint: JointDistribution) -> float:
    """Mutual information of the joint in nats (zero cells contribute zero)."""
    p = joint.probs
    outer = joint.group_marginals[:, None] * joint.class_marginals[None, :]
    mask = p > 0
    mi = float(np.sum(p[mask] * np.log(p[mask] / outer[mask])))
    return max(mi, 0.0)


def nmi(joint: JointDistribution) -> float:
    """Normalized mutual information: MI divided by the joint entropy.

    Lies in [0, 1]: 0 when groups and classes are independent, 1 when one
    fully determines the other. Terms with zero probability contribute
    zero to both sums. A joint with the entire mass in one cell has zero
    entropy and no meaningful normalization.
    """
    p = joint.probs
    mask = p > 0
    if int(mask.sum()) < 2:
        raise DegenerateJoint("all probability mass lies in a single cell")
    entropy = -float(np.sum(p[mask] * np.log(p[mask])))
    return float(min(mutual_information(joint) / entropy, 1.0))


def intraclass_disparity(
    recalls: np.ndarray,
    supports: np.ndarray | None = None,
    min_support: int = 1,
) -> float:
    """Recall disparity among groups for one class.

    Uses the best group's recall as the baseline: with n surviving groups,

        (1 / (n - 1)) * sum(1 - r_g / max(r))

    so 0 means every group is treated like the best one and 1 means every
    other group has recall 0. Dividing by the class's own maximum recall
    normalizes away inherent class difficulty. Conventions: 0 when the
    maximum recall is 0, and 0 when only one group survives the support
    filter (no comparison possible).

    ``supports`` filters out groups with fewer than ``min_support``
    evaluation records; omit it to treat every entry as supported.
    """
    r = np.asarray(recalls, dtype=np.float64)
    if r.ndim != 1:
        raise ValidationError("recalls must be a 1-d vector of per-group values")
    if supports is None:
        kept = ~np.isnan(r)
    else:
        s = np.asarray(supports)
        if s.shape != r.shape:
            raise ValidationError("supports must align with recalls")
        kept = s >= max(min_support, 1)
    r = r[kept]
    if r.size == 0:
        raise NoSupportedGroups()
    if np.isnan(r).any() or (r < 0).any() or (r > 1).any():
        raise ValidationError("supported recalls must lie in [0, 1]")
    if r.size == 1:
        return 0.0
    best = float(r.max())
    if best == 0.0:
        return 0.0
    value = float(np.sum(1.0 - r / best)) / (r.size - 1)
    return float(min(max(value, 0.0), 1.0))


def overall_disparity(table: RecallTable, min_support: int = 1) -> DisparityReport:
    """Mean intraclass disparity over all classes, with support bookkeeping.

    Every class must keep at least one group under the support policy;
    otherwise the offending class is named in the error.
    """
    per_class: list[float] = []
    excluded: list[tuple[str, ...]] = []
    single: list[str] = []
    threshold = max(min_support, 1)
    for i, class_label in enumerate(table.classes):
        kept = table.support[i] >= threshold
        if not kept.any():
            raise NoSupportedGroups(class_label)
        excluded.append(tuple(g for g, k in zip(table.groups, kept) if not k))
        if int(kept.sum()) == 1:
            single.append(class_label)
            per_class.append(0.0)
            continue
        per_class.append(intraclass_disparity(table.recall[i], table.support[i], threshold))
    overall = sum(per_class) / len(per_class)
    return DisparityReport(
        attribute=table.attribute,
        classes=table.classes,
        per_class=tuple(per_class),
        overall=overall,
        excluded_groups=tuple(excluded),
        single_group_classes=tuple(single),
        min_support=threshold,
    )


def disparate_impact(
    evals: EvaluationSet,
    attribute: str,
    privileged_group: str,
    positive_class: str,
) -> float:
    """Ratio of positive-prediction rates: unprivileged over privileged.

    A value of 1 means both populations receive the positive prediction at
    the same rate. Requires a designated privileged group and positive
    class, which is why it only suits single-group binary audits.
    """
    groups = evals.schema.groups(attribute)
    if privileged_group not in groups:
        raise UnknownGroup(attribute, privileged_group)
    if positive_class not in evals.schema.classes:
        raise ValidationError(f"unknown class label: {positive_class!r}")
    priv_total = priv_pos = other_total = other_pos = 0
    for rec in evals.records:
        positive = rec.predicted_class == positive_class
        if rec.groups[attribute] == privileged_group:
            priv_total += 1
            priv_pos += positive
        else:
            other_total += 1
            other_pos += positive
    if priv_total == 0:
        raise NoPrivilegedSamples(f"no records with {attribute}={privileged_group!r}")
    if other_total == 0:
        raise NoUnprivilegedSamples(f"all records have {attribute}={privileged_group!r}")
    priv_rate = priv_pos / priv_total
    if priv_rate == 0.0:
        raise ZeroDenominator("privileged positive rate is zero")
    return (other_pos / other_total) / priv_rate


def overall_accuracy_equality(
    evals: EvaluationSet,
    attribute: str,
    privileged_group: str,
) -> float:
    """Absolute accuracy gap between the privileged group and everyone else."""
    groups = evals.schema.groups(attribute)
    if privileged_group not in groups:
        raise UnknownGroup(attribute, privileged_group)
    priv_total = priv_correct = other_total = other_correct = 0
    for rec in evals.records:
        correct = rec.predicted_class == rec.true_class
        if rec.groups[attribute] == privileged_group:
            priv_total += 1
            priv_correct += correct
        else:
            other_total += 1
            other_correct += correct
    if priv_total == 0:
        raise NoPrivilegedSamples(f"no records with {attribute}={privileged_group!r}")
    if other_total == 0:
        raise NoUnprivilegedSamples(f"all records have {attribute}={privileged_group!r}")
    return abs(priv_correct / priv_total - other_correct / other_total)
