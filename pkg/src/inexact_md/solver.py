"""Adaptive mirror descent with productive / non-productive steps.

Three variants share one loop and differ in the productivity test, the step
size laws and the stopping rule:

=====  ========================  ===============  ==================  ==========================================
name   productive if             productive h     non-productive h    stop when
=====  ========================  ===============  ==================  ==========================================
A      g <= eps ||dg||_* + dg    eps / ||df||^2   eps / ||dg||        2 T^2/eps^2 <= sum_I 1/||df||^2 + |J|
B      g <= eps + dg             eps / ||df||     eps / ||dg||^2      T^2 <= eps^2/2 (|I| + sum_J 1/||dg||^2)
C      g <= eps ||dg||_* + dg    eps / ||df||     eps / ||dg||        2 T^2/eps^2 <= N
=====  ========================  ===============  ==================  ==========================================

Here dg in the tests is the delta reported by the constraint oracle at that
step and T^2 = ``theta0_sq``.  Variant A outputs the h-weighted average of
productive iterates, B and C the productive iterate with the smallest
objective estimate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import ArgumentError, InfeasibleProblemError
from .oracle import DeltaSubgradient, Oracle, max_constraint
from .proximal import Point, ProximalSetup, bregman, dual_norm, mirror_step, prox_center, prox_value

DEFAULT_MAX_ITER_FACTOR = 50


class Variant(str, Enum):
    A = "A"
    B = "B"
    C = "C"


class StopReason(str, Enum):
    CRITERION_MET = "CriterionMet"
    ZERO_OBJECTIVE_SUBGRADIENT = "ZeroObjectiveSubgradient"
    ITERATION_CAP = "IterationCap"


class OutputRule(str, Enum):
    WEIGHTED_AVERAGE = "WeightedAverage"
    ARGMIN_PRODUCTIVE = "ArgminProductive"


@dataclass(frozen=True)
class ReferenceOptimum:
    x: Point
    f: float
    source: str = "analytic"
    error_bound: float = 0.0


@dataclass(eq=False)
class Problem:
    objective: Oracle
    constraints: Sequence[Oracle]
    setup: ProximalSetup
    M_g: float
    theta0_sq: float
    reference: ReferenceOptimum | None = None
    name: str = ""

    def __post_init__(self):
        if len(self.constraints) == 0:
            raise ArgumentError("a problem needs at least one constraint oracle")
        if not self.M_g > 0:
            raise ArgumentError("M_g must be > 0")
        if not self.theta0_sq > 0:
            raise ArgumentError("theta0_sq must be > 0")
        if self.reference is not None:
            d_star = prox_value(self.setup, self.reference.x)
            if d_star > self.theta0_sq + 1e-9:
                raise ArgumentError(
                    f"theta0_sq={self.theta0_sq} is below d(x*)={d_star}"
                )

    def f(self, x) -> float:
        return self.objective.value(x)

    def g(self, x) -> float:
        return max(c.value(x) for c in self.constraints)


@dataclass(frozen=True, eq=False)
class IterationRecord:
    k: int
    productive: bool
    h: float
    x: Point
    x_next: Point
    sub: DeltaSubgradient  # oracle answer the step moved along
    sub_norm: float
    g_value: float
    g_delta: float
    g_sub_norm: float
    f_value_estimate: float  # nan on non-productive steps
    bregman_to_ref: float | None = None

    @property
    def delta_reported(self) -> float:
        return self.sub.delta


@dataclass(frozen=True, eq=False)
class SolveResult:
    variant: Variant
    eps: float
    output_point: Point
    output_rule: OutputRule
    iterations: int
    productive_count: int
    nonproductive_count: int
    stop_reason: StopReason
    trace: list[IterationRecord] = field(repr=False)
    final_point: Point | None = None
    empty_productive: bool = False


def iteration_bound(M_g: float, theta0_sq: float, eps: float) -> int:
    """ceil(2 max{1, M_g^2} theta0^2 / eps^2)."""
    return math.ceil(2.0 * max(1.0, M_g * M_g) * theta0_sq / (eps * eps))


def productivity_test(variant, g_value: float, g_sub: DeltaSubgradient, eps: float,
                      setup: ProximalSetup) -> bool:
    variant = Variant(variant)
    if not eps > 0:
        raise ArgumentError("eps must be > 0")
    if variant is Variant.B:
        return g_value <= eps + g_sub.delta
    return g_value <= eps * dual_norm(setup, g_sub.vector) + g_sub.delta


def assemble_weighted_average(trace: Sequence[IterationRecord], eps: float | None = None) -> Point:
    """sum_{k in I} h_k x^k / sum_{k in I} h_k."""
    prod = [r for r in trace if r.productive]
    if not prod:
        raise RuntimeError("weighted average requested with no productive iterate")
    h = np.array([r.h for r in prod])
    w = h / h.sum()
    return w @ np.stack([r.x for r in prod])


def _argmin_productive(trace: Sequence[IterationRecord]) -> Point:
    prod = [r for r in trace if r.productive]
    best = min(prod, key=lambda r: r.f_value_estimate)  # first on ties
    return best.x


def _solve(problem: Problem, eps: float, variant: Variant,
           max_iter_factor: int = DEFAULT_MAX_ITER_FACTOR) -> SolveResult:
    if not eps > 0:
        raise ArgumentError("eps must be > 0")
    setup = problem.setup
    ref = problem.reference
    cap = max_iter_factor * iteration_bound(problem.M_g, problem.theta0_sq, eps)
    target_a = 2.0 * problem.theta0_sq / (eps * eps)

    x = prox_center(setup)
    trace: list[IterationRecord] = []
    acc = 0.0  # running stopping sum (A and B)
    stop = StopReason.ITERATION_CAP
    k = 0
    while k < cap:
        g_value, g_sub, _ = max_constraint(problem.constraints, x)
        g_norm = dual_norm(setup, g_sub.vector)
        productive = productivity_test(variant, g_value, g_sub, eps, setup)
        if productive:
            sub = problem.objective(x)
            n = dual_norm(setup, sub.vector)
            if n == 0.0:
                stop = StopReason.ZERO_OBJECTIVE_SUBGRADIENT
                break
            h = eps / n**2 if variant is Variant.A else eps / n
            f_est = sub.value
        else:
            n = g_norm
            if n == 0.0:
                raise InfeasibleProblemError(
                    f"constraint value {g_value} exceeds its delta with a zero "
                    "delta-subgradient: no feasible point exists"
                )
            sub = g_sub
            h = eps / n**2 if variant is Variant.B else eps / n
            f_est = math.nan
        y = mirror_step(setup, x, sub.vector, h)
        trace.append(IterationRecord(
            k=k, productive=productive, h=h, x=x, x_next=y, sub=sub, sub_norm=n,
            g_value=g_value, g_delta=g_sub.delta, g_sub_norm=g_norm, f_value_estimate=f_est,
            bregman_to_ref=None if ref is None else bregman(setup, ref.x, x),
        ))
        x = y
        k += 1
        if variant is Variant.A:
            acc += 1.0 / n**2 if productive else 1.0
            done = target_a <= acc
        elif variant is Variant.B:
            acc += 1.0 if productive else 1.0 / n**2
            done = problem.theta0_sq <= eps * eps / 2.0 * acc
        else:
            done = target_a <= k
        if done:
            stop = StopReason.CRITERION_MET
            break

    n_prod = sum(r.productive for r in trace)
    rule = OutputRule.WEIGHTED_AVERAGE if variant is Variant.A else OutputRule.ARGMIN_PRODUCTIVE
    empty = n_prod == 0
    if stop is StopReason.ZERO_OBJECTIVE_SUBGRADIENT or empty:
        out = x
    elif variant is Variant.A:
        out = assemble_weighted_average(trace, eps)
    else:
        out = _argmin_productive(trace)
    return SolveResult(
        variant=variant, eps=eps, output_point=out, output_rule=rule, iterations=len(trace),
        productive_count=n_prod, nonproductive_count=len(trace) - n_prod, stop_reason=stop,
        trace=trace, final_point=x, empty_productive=empty,
    )


def solve_weighted(problem: Problem, eps: float, max_iter_factor: int = DEFAULT_MAX_ITER_FACTOR) -> SolveResult:
    """Variant A: h-weighted average output, f(x_hat) - f* <= eps + delta."""
    return _solve(problem, eps, Variant.A, max_iter_factor)


def solve_adaptive(problem: Problem, eps: float, max_iter_factor: int = DEFAULT_MAX_ITER_FACTOR) -> SolveResult:
    """Variant B: stops within ``iteration_bound`` steps."""
    return _solve(problem, eps, Variant.B, max_iter_factor)


def solve_fixed_budget(problem: Problem, eps: float, max_iter_factor: int = DEFAULT_MAX_ITER_FACTOR) -> SolveResult:
    """Variant C: exactly ceil(2 theta0^2 / eps^2) iterations."""
    return _solve(problem, eps, Variant.C, max_iter_factor)


SOLVERS = {
    "weighted": solve_weighted,
    "adaptive": solve_adaptive,
    "fixed": solve_fixed_budget,
}
