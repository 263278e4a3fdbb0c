"""Local implementation of measurements on a qubit encoded across several subsystems."""

from .errors import (
    CompilationError,
    DegenerateOutcome,
    DomainError,
    ExcludedCase,
    Infeasible,
    InvalidPovm,
    LocMeasError,
    NotNormalized,
    NotOrthogonal,
    NotPSD,
    NotSubIdentity,
    NotTraceless,
)
from .linalg import StateVector, hermitian_eig, permute_subsystems, zero_diagonal_unitary
from .povm import BinaryMeasurementTree, Povm, TwoOutcomeOp, canonical_form, decompose_binary, validate_povm
from .protocol import (
    MeasurementPlan,
    PlanLeaf,
    PlanNode,
    StrategyParams,
    compile_povm,
    compile_two_outcome,
    completion_feasible,
    completion_op,
    effective_kraus,
    strategy_select,
)
from .simulate import exact_distribution, locality_audit, plan_effective_povm, sample
from .subspace import LogicalSubspace, WalgateDecomposition, coarse_grain, embed, walgate_decompose

__version__ = "0.1.0"

__all__ = [
    "BinaryMeasurementTree",
    "CompilationError",
    "DegenerateOutcome",
    "DomainError",
    "ExcludedCase",
    "Infeasible",
    "InvalidPovm",
    "LocMeasError",
    "LogicalSubspace",
    "MeasurementPlan",
    "NotNormalized",
    "NotOrthogonal",
    "NotPSD",
    "NotSubIdentity",
    "NotTraceless",
    "PlanLeaf",
    "PlanNode",
    "Povm",
    "StateVector",
    "StrategyParams",
    "TwoOutcomeOp",
    "WalgateDecomposition",
    "canonical_form",
    "coarse_grain",
    "compile_povm",
    "compile_two_outcome",
    "completion_feasible",
    "completion_op",
    "decompose_binary",
    "effective_kraus",
    "embed",
    "exact_distribution",
    "hermitian_eig",
    "locality_audit",
    "permute_subsystems",
    "plan_effective_povm",
    "sample",
    "strategy_select",
    "validate_povm",
    "walgate_decompose",
    "zero_diagonal_unitary",
]
