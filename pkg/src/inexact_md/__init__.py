"""Adaptive mirror descent for constrained nonsmooth convex problems with
delta-subgradient oracles, plus runtime certificates of its guarantees."""

from .analysis import (
    Certificate,
    GrowthModulus,
    check_corollary,
    check_lemma1,
    check_step_inequalities,
    check_terminal_guarantees,
    estimate_omega,
    v_delta,
)
from .oracle import (
    DeltaSubgradient,
    MaxOfFunctions,
    MaxOracle,
    Oracle,
    exact_subgradient,
    inexact_max_oracle,
    max_constraint,
    perturbed_oracle,
)
from .problems import ProblemSpec, build_problem, builtin_catalog, grid_optimum
from .proximal import (
    Ball,
    Box,
    EntropySetup,
    EuclideanSetup,
    Simplex,
    bregman,
    dual_norm,
    mirror_step,
    prox_center,
    prox_value,
)
from .solver import (
    Problem,
    ReferenceOptimum,
    SolveResult,
    assemble_weighted_average,
    iteration_bound,
    productivity_test,
    solve_adaptive,
    solve_fixed_budget,
    solve_weighted,
)

__version__ = "0.1.0"
