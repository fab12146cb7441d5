"""Demographic bias audits for multi-class, multi-demographic classification.

Quantifies three complementary kinds of bias: representational (how
unevenly groups are represented), stereotypical (how group composition
varies across classes) and model disparity (how unevenly a trained
classifier's recall treats groups within each class). Also builds the
derived datasets used to study bias transfer (balanced, stratified and
single-group subsets) and ships a classifier simulator so experiments can
run without training models.
"""

from ._version import __version__
from .core import (
    AttributeSchema,
    ContingencyTable,
    EvaluationRecord,
    EvaluationSet,
    JointDistribution,
    LabeledDataset,
    RecallTable,
    SampleRecord,
    build_contingency,
    group_distribution,
    normalize,
    overall_accuracy,
    recall_table,
)
from .metrics import (
    DisparityReport,
    NpmiMatrix,
    disparate_impact,
    intraclass_disparity,
    mutual_information,
    nmi,
    npmi_matrix,
    nsd,
    overall_accuracy_equality,
    overall_disparity,
)
from .resample import (
    SubsetSpec,
    balanced_subset,
    build_subset,
    single_group_subset,
    stratified_subset,
)
from .simulate import (
    ClassifierProfile,
    PopulationSpec,
    RunAggregate,
    aggregate_runs,
    analytic_od,
    generate_population,
    group_combinations,
    simulate_classifier,
)

__all__ = [
    "__version__",
    "AttributeSchema",
    "SampleRecord",
    "LabeledDataset",
    "ContingencyTable",
    "JointDistribution",
    "EvaluationRecord",
    "EvaluationSet",
    "RecallTable",
    "build_contingency",
    "normalize",
    "group_distribution",
    "recall_table",
    "overall_accuracy",
    "NpmiMatrix",
    "DisparityReport",
    "nsd",
    "npmi_matrix",
    "nmi",
    "mutual_information",
    "intraclass_disparity",
    "overall_disparity",
    "disparate_impact",
    "overall_accuracy_equality",
    "SubsetSpec",
    "build_subset",
    "balanced_subset",
    "stratified_subset",
    "single_group_subset",
    "PopulationSpec",
    "ClassifierProfile",
    "RunAggregate",
    "group_combinations",
    "generate_population",
    "simulate_classifier",
    "analytic_od",
    "aggregate_runs",
]
