"""Bias metrics: frozen oracle values, contract cases, and properties."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biasaudit import (
    AttributeSchema,
    EvaluationRecord,
    EvaluationSet,
    JointDistribution,
    RecallTable,
    disparate_impact,
    intraclass_disparity,
    mutual_information,
    nmi,
    npmi_matrix,
    nsd,
    overall_accuracy_equality,
    overall_disparity,
)
from biasaudit.errors import (
    DegenerateJoint,
    NoPrivilegedSamples,
    NoSupportedGroups,
    NotNormalized,
    NoUnprivilegedSamples,
    TooFewGroups,
    ZeroDenominator,
)

import oracles

# Frozen oracle constants, computed with an arbitrary-precision script.
NSD_4321 = 0.25819888974716113  # nsd of (0.4, 0.3, 0.2, 0.1)
NPMI_00 = 0.5129415947320601    # -ln(1.6)/ln(0.4)
MI_DIAGDOM = 0.19274475702175743
NMI_DIAGDOM = 0.16148868581578452

TOL = 1e-12


def joint_2x2(cells) -> JointDistribution:
    return JointDistribution(
        attribute="g", groups=("a", "b"), classes=("x", "y"), probs=np.array(cells)
    )


def random_joint(rng, max_groups=7, max_classes=8) -> np.ndarray:
    shape = (rng.integers(2, max_groups + 1), rng.integers(2, max_classes + 1))
    cells = rng.random(shape) * (rng.random(shape) < 0.8)  # sprinkle zero cells
    if cells.sum() == 0:
        cells[0, 0] = 1.0
    return cells / cells.sum()


def make_joint(probs: np.ndarray) -> JointDistribution:
    g, c = probs.shape
    return JointDistribution(
        attribute="g",
        groups=tuple(f"g{i}" for i in range(g)),
        classes=tuple(f"c{j}" for j in range(c)),
        probs=probs,
    )


shares_strategy = st.lists(
    st.floats(min_value=0.0, max_value=1.0, allow_nan=False), min_size=2, max_size=9
).filter(lambda xs: sum(xs) > 1e-6)


class TestNsd:
    def test_uniform_is_zero(self):
        assert nsd([0.25, 0.25, 0.25, 0.25]) == 0.0

    def test_one_hot_is_one(self):
        assert nsd([1.0, 0.0]) == 1.0

    def test_three_quarters(self):
        assert nsd([0.75, 0.25]) == 0.5

    def test_frozen_oracle_value(self):
        assert abs(nsd([0.4, 0.3, 0.2, 0.1]) - NSD_4321) <= TOL

    def test_not_normalized(self):
        with pytest.raises(NotNormalized):
            nsd([0.5, 0.6])
        with pytest.raises(NotNormalized):
            nsd([1.2, -0.2])

    def test_too_few_groups(self):
        with pytest.raises(TooFewGroups):
            nsd([1.0])

    @given(shares_strategy)
    @settings(max_examples=200)
    def test_bounds_and_permutation_invariance(self, raw):
        shares = np.array(raw) / sum(raw)
        value = nsd(shares)
        assert 0.0 <= value <= 1.0
        assert abs(nsd(shares[::-1].copy()) - value) <= TOL
        assert abs(oracles.naive_nsd(list(shares)) - value) <= TOL

    @given(
        st.floats(min_value=0.5, max_value=0.99),
        st.floats(min_value=0.001, max_value=0.2),
    )
    @settings(max_examples=100)
    def test_majorization_step_increases_nsd(self, heavy, step):
        """Moving mass from the lighter to the heavier group raises the score."""
        light = 1.0 - heavy
        delta = min(step, light / 2)
        assert nsd([heavy + delta, light - delta]) > nsd([heavy, light])


class TestNpmi:
    def test_product_distribution_is_zero(self):
        probs = np.outer([0.3, 0.7], [0.6, 0.4])
        matrix = npmi_matrix(make_joint(probs))
        assert not matrix.undefined.any()
        np.testing.assert_allclose(matrix.values, 0.0, atol=TOL)

    def test_diagonal_is_one(self):
        matrix = npmi_matrix(joint_2x2([[0.5, 0.0], [0.0, 0.5]]))
        assert matrix.values[0, 0] == 1.0
        assert matrix.values[1, 1] == 1.0
        assert matrix.values[0, 1] == -1.0
        assert matrix.values[1, 0] == -1.0

    def test_frozen_oracle_value(self):
        matrix = npmi_matrix(joint_2x2([[0.4, 0.1], [0.1, 0.4]]))
        assert abs(matrix.values[0, 0] - NPMI_00) <= TOL

    def test_zero_cell_with_positive_marginals_is_minus_one(self):
        matrix = npmi_matrix(joint_2x2([[0.5, 0.0], [0.25, 0.25]]))
        assert matrix.values[0, 1] == -1.0
        assert not matrix.undefined.any()

    def test_zero_marginal_is_undefined(self):
        matrix = npmi_matrix(joint_2x2([[0.5, 0.5], [0.0, 0.0]]))
        assert matrix.undefined[1, 0] and matrix.undefined[1, 1]
        assert not matrix.undefined[0, 0]

    def test_whole_mass_cell_is_one(self):
        matrix = npmi_matrix(joint_2x2([[1.0, 0.0], [0.0, 0.0]]))
        assert matrix.values[0, 0] == 1.0
        assert matrix.undefined[0, 1] and matrix.undefined[1, 0] and matrix.undefined[1, 1]

    def test_transpose_symmetry(self, rng):
        for _ in range(50):
            joint = make_joint(random_joint(rng))
            direct = npmi_matrix(joint)
            flipped = npmi_matrix(joint.transpose())
            np.testing.assert_array_equal(direct.undefined, flipped.undefined.T)
            defined = ~direct.undefined
            np.testing.assert_allclose(
                direct.values[defined], flipped.values.T[defined], atol=TOL
            )

    def test_reorder_invariance(self, rng):
        probs = random_joint(rng)
        g_perm = rng.permutation(probs.shape[0])
        c_perm = rng.permutation(probs.shape[1])
        direct = npmi_matrix(make_joint(probs)).values
        permuted = npmi_matrix(make_joint(probs[np.ix_(g_perm, c_perm)])).values
        np.testing.assert_allclose(
            direct[np.ix_(g_perm, c_perm)], permuted, atol=TOL, equal_nan=True
        )

    def test_matches_naive_oracle(self, rng):
        for _ in range(100):
            probs = random_joint(rng)
            matrix = npmi_matrix(make_joint(probs))
            expected = oracles.naive_npmi(probs.tolist())
            for i in range(probs.shape[0]):
                for j in range(probs.shape[1]):
                    if expected[i][j] is None:
                        assert matrix.undefined[i, j]
                    else:
                        assert abs(matrix.values[i, j] - expected[i][j]) <= TOL


class TestNmi:
    def test_product_distribution_is_zero(self):
        probs = np.outer([0.2, 0.3, 0.5], [0.6, 0.4])
        assert nmi(make_joint(probs)) <= TOL

    def test_frozen_oracle_value(self):
        assert abs(nmi(joint_2x2([[0.4, 0.1], [0.1, 0.4]])) - NMI_DIAGDOM) <= TOL

    def test_single_cell_degenerate(self):
        with pytest.raises(DegenerateJoint):
            nmi(joint_2x2([[1.0, 0.0], [0.0, 0.0]]))

    def test_total_correlation_is_one(self):
        assert abs(nmi(joint_2x2([[0.5, 0.0], [0.0, 0.5]])) - 1.0) <= TOL

    def test_bounds_transpose_and_naive(self, rng):
        for _ in range(100):
            probs = random_joint(rng)
            if (probs > 0).sum() < 2:
                continue
            joint = make_joint(probs)
            value = nmi(joint)
            assert 0.0 <= value <= 1.0
            assert abs(nmi(joint.transpose()) - value) <= TOL
            assert abs(oracles.naive_nmi(probs.tolist()) - value) <= TOL


class TestMutualInformation:
    def test_product_distribution_is_zero(self):
        probs = np.outer([0.2, 0.8], [0.1, 0.9])
        assert mutual_information(make_joint(probs)) <= TOL

    def test_frozen_oracle_value(self):
        assert abs(
            mutual_information(joint_2x2([[0.4, 0.1], [0.1, 0.4]])) - MI_DIAGDOM
        ) <= TOL

    def test_diagonal_is_ln2(self):
        assert abs(
            mutual_information(joint_2x2([[0.5, 0.0], [0.0, 0.5]])) - math.log(2)
        ) <= TOL

    def test_non_negative(self, rng):
        for _ in range(100):
            probs = random_joint(rng)
            value = mutual_information(make_joint(probs))
            assert value >= 0.0
            assert abs(oracles.naive_mi(probs.tolist()) - value) <= TOL


class TestIntraclassDisparity:
    def test_equal_treatment(self):
        assert intraclass_disparity(np.array([0.7, 0.7, 0.7])) == 0.0

    def test_maximum_privilege(self):
        assert intraclass_disparity(np.array([0.9, 0.0, 0.0])) == 1.0

    def test_two_group_gap(self):
        assert intraclass_disparity(np.array([0.8, 0.4])) == 0.5

    def test_three_group_mixed(self):
        assert intraclass_disparity(np.array([0.8, 0.4, 0.8])) == 0.25

    def test_all_zero_convention(self):
        assert intraclass_disparity(np.array([0.0, 0.0])) == 0.0

    def test_single_supported_group_is_zero(self):
        assert intraclass_disparity(np.array([0.4, 0.9]), np.array([3, 0])) == 0.0

    def test_no_supported_groups(self):
        with pytest.raises(NoSupportedGroups):
            intraclass_disparity(np.array([0.4]), np.array([0]))

    def test_support_policy_filters(self):
        value = intraclass_disparity(np.array([0.8, 0.4, 0.1]), np.array([10, 10, 2]), 5)
        assert value == 0.5  # third group dropped below min support

    @given(
        st.lists(st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
                 min_size=2, max_size=7),
        st.floats(min_value=1e-6, max_value=1.0),
    )
    @settings(max_examples=300)
    def test_scale_invariance(self, recalls, c):
        """Rescaling every recall by c in (0, 1] leaves the ratio structure alone."""
        r = np.array(recalls)
        assert abs(intraclass_disparity(r * c) - intraclass_disparity(r)) <= TOL

    @given(st.lists(st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
                    min_size=2, max_size=7))
    @settings(max_examples=300)
    def test_bounds_and_naive(self, recalls):
        value = intraclass_disparity(np.array(recalls))
        assert 0.0 <= value <= 1.0
        assert abs(oracles.naive_intraclass_disparity(recalls) - value) <= TOL


class TestOverallDisparity:
    def make_table(self, recall, support):
        recall = np.asarray(recall, dtype=float)
        support = np.asarray(support)
        return RecallTable(
            attribute="g",
            classes=tuple(f"c{i}" for i in range(recall.shape[0])),
            groups=tuple(f"g{j}" for j in range(recall.shape[1])),
            recall=recall,
            support=support,
        )

    def test_mean_of_per_class(self):
        table = self.make_table([[0.8, 0.4], [0.8, 0.2]], np.ones((2, 2), dtype=int))
        report = overall_disparity(table)
        assert report.per_class == (0.5, 0.75)
        assert report.overall == (0.5 + 0.75) / 2

    def test_perfect_classifier(self):
        table = self.make_table([[1.0, 1.0], [1.0, 1.0]], np.ones((2, 2), dtype=int))
        assert overall_disparity(table).overall == 0.0

    def test_unsupported_class_named(self):
        recall = np.array([[1.0, 1.0], [np.nan, np.nan]])
        support = np.array([[1, 1], [0, 0]])
        with pytest.raises(NoSupportedGroups) as exc:
            overall_disparity(self.make_table(recall, support))
        assert exc.value.class_label == "c1"

    def test_excluded_groups_reported(self):
        recall = np.array([[0.5, np.nan], [0.7, 0.7]])
        support = np.array([[4, 0], [2, 2]])
        report = overall_disparity(self.make_table(recall, support))
        assert report.excluded_groups == (("g1",), ())
        assert report.single_group_classes == ("c0",)
        assert report.per_class[0] == 0.0


def make_pred_evals(rows):
    """rows: (true, predicted, group) with classes pos/neg and groups priv/other."""
    schema = AttributeSchema.create(
        classes=("pos", "neg"), attributes={"g": ("priv", "other")}
    )
    records = tuple(
        EvaluationRecord(id=f"e{i}", true_class=t, predicted_class=p, groups={"g": g})
        for i, (t, p, g) in enumerate(rows)
    )
    return EvaluationSet(schema=schema, records=records)


class TestDisparateImpact:
    def test_identical_rates(self):
        rows = [("pos", "pos", "priv"), ("pos", "neg", "priv"),
                ("pos", "pos", "other"), ("pos", "neg", "other")]
        assert disparate_impact(make_pred_evals(rows), "g", "priv", "pos") == 1.0

    def test_half_rate(self):
        rows = (
            [("pos", "pos", "priv")] * 6 + [("pos", "neg", "priv")] * 4
            + [("pos", "pos", "other")] * 3 + [("pos", "neg", "other")] * 7
        )
        assert disparate_impact(make_pred_evals(rows), "g", "priv", "pos") == 0.5

    def test_zero_denominator(self):
        rows = [("pos", "neg", "priv"), ("pos", "pos", "other")]
        with pytest.raises(ZeroDenominator):
            disparate_impact(make_pred_evals(rows), "g", "priv", "pos")

    def test_missing_groups(self):
        with pytest.raises(NoPrivilegedSamples):
            disparate_impact(
                make_pred_evals([("pos", "pos", "other")]), "g", "priv", "pos"
            )
        with pytest.raises(NoUnprivilegedSamples):
            disparate_impact(
                make_pred_evals([("pos", "pos", "priv")]), "g", "priv", "pos"
            )


class TestOverallAccuracyEquality:
    def test_equal_accuracies(self):
        rows = [("pos", "pos", "priv"), ("pos", "pos", "other")]
        assert overall_accuracy_equality(make_pred_evals(rows), "g", "priv") == 0.0

    def test_quarter_gap(self):
        rows = (
            [("pos", "pos", "priv")] * 18 + [("pos", "neg", "priv")] * 2
            + [("pos", "pos", "other")] * 13 + [("pos", "neg", "other")] * 7
        )
        assert overall_accuracy_equality(make_pred_evals(rows), "g", "priv") == 0.25

    def test_missing_privileged(self):
        with pytest.raises(NoPrivilegedSamples):
            overall_accuracy_equality(make_pred_evals([("pos", "pos", "other")]), "g", "priv")
