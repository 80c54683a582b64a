"""Certificates: runtime checks of the convergence inequalities on solver traces.

Each check returns ``Certificate`` objects with ``lhs <= rhs + tolerance``
semantics.  Checks are pure functions of their inputs.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.stats import qmc

from .errors import ArgumentError, UnsupportedError
from .oracle import MaxOracle, PerturbedOracle
from .proximal import Ball, Box, Simplex, bregman, dual_norm, primal_norm
from .solver import IterationRecord, Problem, SolveResult, StopReason, Variant, iteration_bound

DEFAULT_TOL = 1e-8

CERTIFICATE_NAMES = (
    "Lemma1",
    "Lemma2Step",
    "NonproductiveDrop",
    "Theorem1",
    "Theorem2",
    "Theorem3",
    "CorollarySmoothMax",
    "IterationBound",
)


@dataclass(frozen=True)
class Certificate:
    name: str
    satisfied: bool
    lhs: float
    rhs: float
    slack: float
    context: str
    tolerance: float = DEFAULT_TOL
    evaluable: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def certify(name: str, lhs: float, rhs: float, context, tol: float = DEFAULT_TOL) -> Certificate:
    lhs, rhs = float(lhs), float(rhs)
    return Certificate(name, bool(lhs <= rhs + tol), lhs, rhs, rhs - lhs, str(context), tol)


def all_satisfied(certs: Sequence[Certificate]) -> bool:
    return all(c.satisfied for c in certs)


def v_delta(setup, sub, x, x_star) -> float:
    """<v / ||v||_*, x - x_star>, and 0 when v = 0.  ``sub`` may be a
    DeltaSubgradient or a bare dual vector."""
    vec = np.asarray(getattr(sub, "vector", sub), dtype=np.float64)
    n = dual_norm(setup, vec)
    if n == 0.0:
        return 0.0
    return float(vec @ (np.asarray(x) - np.asarray(x_star))) / n


# --------------------------------------------------------------------------
# growth modulus


@dataclass(frozen=True, eq=False)
class GrowthModulus:
    """Sampled lower bound of omega(tau) on ``tau_grid``.

    ``sampling_spec['cover_radius']`` is the primal-norm distance within which
    every point of Q has a sample; ``sampling_spec['pad']`` is the objective
    Lipschitz bound times that radius.
    """

    tau_grid: NDArray[np.float64]
    omega_values: NDArray[np.float64]
    sampling_spec: dict = field(default_factory=dict)

    @property
    def pad(self) -> float:
        return float(self.sampling_spec.get("pad", 0.0))

    @property
    def cover_radius(self) -> float:
        return float(self.sampling_spec.get("cover_radius", 0.0))

    def upper(self, v: float) -> float:
        """Value at the first grid node >= v + cover_radius; nan if out of range."""
        if v <= 0:
            return 0.0
        i = int(np.searchsorted(self.tau_grid, v + self.cover_radius, side="left"))
        if i >= len(self.tau_grid):
            return math.nan
        return float(self.omega_values[i])


def _cover_radius(q, spacing, norm_kind: str) -> float:
    if isinstance(q, Simplex):
        # largest-remainder rounding moves each coordinate by < 1/m
        return float(q.n * spacing[0])
    if isinstance(q, Ball):
        return primal_cover(spacing, norm_kind, scale=1.0)
    return primal_cover(spacing, norm_kind, scale=0.5)


def primal_cover(spacing, norm_kind: str, scale: float) -> float:
    half = scale * np.asarray(spacing)
    return float(np.linalg.norm(half)) if norm_kind == "l2" else float(np.sum(np.abs(half)))


def _quasi_random(q, n: int, seed: int = 0) -> NDArray[np.float64]:
    sob = qmc.Sobol(d=q.dim, scramble=True, seed=seed).random(n)
    if isinstance(q, Box):
        return q.lower + sob * (q.upper - q.lower)
    if isinstance(q, Ball):
        pts = q.center + (2 * sob - 1) * q.radius
        return pts[np.linalg.norm(pts - q.center, axis=1) <= q.radius]
    e = -np.log(np.clip(sob, 1e-300, None))
    return e / e.sum(axis=1, keepdims=True)


def estimate_omega(problem: Problem, x_star, f_star: float, tau_grid,
                   nodes_per_axis: int = 101, n_random: int = 100_000) -> GrowthModulus:
    """omega(tau) = max{f(x) - f* : x in Q, ||x - x*|| <= tau} by dense sampling."""
    if x_star is None or f_star is None:
        raise UnsupportedError("growth modulus needs a reference optimum")
    tau = np.asarray(tau_grid, dtype=np.float64)
    if tau.ndim != 1 or np.any(np.diff(tau) <= 0) or np.any(tau < 0):
        raise ArgumentError("tau_grid must be increasing and nonnegative")
    setup = problem.setup
    q = setup.feasible_set
    lip = problem.objective.lipschitz_bound
    if q.dim <= 3:
        if nodes_per_axis < 101:
            raise ArgumentError("need >= 101 grid nodes per axis")
        pts, spacing = q.grid(nodes_per_axis)
        cover = _cover_radius(q, spacing, setup.norm_kind)
        spec = {"method": "tensor_grid", "nodes_per_axis": nodes_per_axis, "certified": True}
    else:
        pts = _quasi_random(q, n_random)
        # heuristic mesh size: typical nearest-sample distance for uniform fill
        cover = float(np.max(np.ptp(pts, axis=0))) * len(pts) ** (-1.0 / q.dim)
        spec = {"method": "sobol", "samples": len(pts), "certified": False}
    gaps = problem.objective.values(pts) - f_star
    dist = np.array([primal_norm(setup, p - x_star) for p in pts]) if setup.norm_kind != "l2" \
        else np.linalg.norm(pts - np.asarray(x_star), axis=1)
    order = np.argsort(dist, kind="stable")
    running = np.maximum.accumulate(gaps[order])
    idx = np.searchsorted(dist[order], tau, side="right")
    omega = np.where(idx > 0, running[np.maximum(idx - 1, 0)], 0.0)
    omega = np.maximum(omega, 0.0)
    omega[tau == 0] = 0.0
    pad = math.inf if lip is None else lip * cover
    spec.update(cover_radius=cover, pad=pad, lipschitz=lip)
    return GrowthModulus(tau, omega, spec)


# --------------------------------------------------------------------------
# checks


def _reference(problem: Problem, x_star=None, f_star=None):
    ref = problem.reference
    if x_star is None:
        if ref is None:
            raise UnsupportedError("no reference optimum available")
        x_star = ref.x
    if f_star is None and ref is not None:
        f_star = ref.f
    return np.asarray(x_star, dtype=np.float64), f_star


def check_lemma1(problem: Problem, trace: Sequence[IterationRecord], modulus: GrowthModulus,
                 tol: float = DEFAULT_TOL, f_star: float | None = None) -> list[Certificate]:
    """f(x^k) - f* <= omega(v(x^k, x*)) + delta_k on each productive iterate."""
    x_star, f_star = _reference(problem, f_star=f_star)
    setup = problem.setup
    out = []
    for r in trace:
        if not r.productive:
            continue
        lhs = problem.f(r.x) - f_star
        v = v_delta(setup, r.sub, r.x, x_star)
        w = modulus.upper(v)
        if math.isnan(w):
            out.append(Certificate("Lemma1", True, float(lhs), math.inf, math.inf,
                                   f"k={r.k}", tol, evaluable=False))
            continue
        out.append(certify("Lemma1", lhs, w + r.sub.delta + modulus.pad, f"k={r.k}", tol))
    return out


def check_step_inequalities(trace: Sequence[IterationRecord], x_star, setup, *,
                            eps: float | None = None, variant=None,
                            tol: float = DEFAULT_TOL) -> list[Certificate]:
    """Three-point inequality per step and the Bregman drop on non-productive steps.

    Lemma2Step: h <p, x - z> <= h^2/2 ||p||_*^2 + V(z, x) - V(z, y) with z = x*.
    NonproductiveDrop (needs eps and variant): V(z, x) - V(z, y) exceeds
    eps^2/2 (A, C) or eps^2 / (2 ||dg||_*^2) (B).
    """
    z = np.asarray(x_star, dtype=np.float64)
    variant = None if variant is None else Variant(variant)
    out = []
    for r in trace:
        p = r.sub.vector
        pn = dual_norm(setup, p)
        v_before = bregman(setup, z, r.x)
        v_after = bregman(setup, z, r.x_next)
        lhs = r.h * float(p @ (r.x - z))
        rhs = 0.5 * r.h**2 * pn**2 + v_before - v_after
        out.append(certify("Lemma2Step", lhs, rhs, f"k={r.k}", tol))
        if not r.productive and eps is not None and variant is not None:
            need = 0.5 * eps**2 if variant is not Variant.B else 0.5 * eps**2 / pn**2
            out.append(certify("NonproductiveDrop", need, v_before - v_after, f"k={r.k}", tol))
    return out


def _productive(trace):
    return [r for r in trace if r.productive]


def check_terminal_guarantees(result: SolveResult, problem: Problem, eps: float,
                              tol: float = DEFAULT_TOL) -> list[Certificate]:
    """Terminal guarantees of the variant that produced ``result``.

    Constraint bounds carry the largest constraint delta seen on productive
    steps, because the productivity test admits g(x^k) up to that slack.
    """
    if result.stop_reason is not StopReason.CRITERION_MET:
        raise ArgumentError(f"terminal guarantees need CriterionMet, got {result.stop_reason.value}")
    prod = _productive(result.trace)
    ref = problem.reference
    d_f = max((r.sub.delta for r in prod), default=0.0)
    d_g = max((r.g_delta for r in prod), default=0.0)
    out = []
    if result.variant is Variant.A:
        x_hat = result.output_point
        if ref is not None:
            out.append(certify("Theorem1", problem.f(x_hat) - ref.f,
                               eps + d_f + ref.error_bound, "terminal:objective", tol))
        out.append(certify("Theorem1", problem.g(x_hat), eps * problem.M_g + d_g,
                           "terminal:constraint", tol))
        return out

    name = "Theorem2" if result.variant is Variant.B else "Theorem3"
    if ref is not None and prod:
        v_min = min(v_delta(problem.setup, r.sub, r.x, ref.x) for r in prod)
        out.append(certify(name, v_min, eps, "terminal:v", tol))
    g_max = max((problem.g(r.x) for r in prod), default=-math.inf)
    g_rhs = eps + d_g if result.variant is Variant.B else problem.M_g * eps + d_g
    out.append(certify(name, g_max, g_rhs, "terminal:constraint", tol))
    if result.variant is Variant.B:
        out.append(certify("IterationBound", result.iterations,
                           iteration_bound(problem.M_g, problem.theta0_sq, eps), "terminal", 0.0))
    return out


def default_grad_at_star_norm(problem: Problem) -> float:
    """max_i ||grad f_i(x*)||_*.

    This witness bounds f(y) - f(x*) <= G ||y - x*|| + L/2 ||y - x*||^2 for
    every component, which is what the smooth-max bound needs.
    """
    obj = _max_objective(problem)
    x_star, _ = _reference(problem)
    return max(dual_norm(problem.setup, c.grad(x_star)) for c in obj.functions.components)


def _max_objective(problem: Problem) -> MaxOracle:
    obj = problem.objective
    while isinstance(obj, PerturbedOracle):
        obj = obj.base
    if not isinstance(obj, MaxOracle):
        raise UnsupportedError("corollary check needs a max-of-smooth-functions objective")
    return obj


def check_corollary(problem: Problem, result: SolveResult, eps: float,
                    grad_at_star_norm: float | None = None,
                    tol: float = DEFAULT_TOL) -> Certificate:
    """min_{k in I} f(x^k) - f* <= G eps + (L/2) eps^2 + delta on variant-B runs."""
    obj = _max_objective(problem)
    if result.variant is not Variant.B:
        raise UnsupportedError("the smooth-max bound is checked on variant B runs only")
    _, f_star = _reference(problem)
    if grad_at_star_norm is None:
        grad_at_star_norm = default_grad_at_star_norm(problem)
    prod = _productive(result.trace)
    if not prod:
        raise ArgumentError("no productive iterates")
    lhs = min(problem.f(r.x) for r in prod) - f_star
    delta = max(r.sub.delta for r in prod)
    L = obj.functions.L
    rhs = grad_at_star_norm * eps + 0.5 * L * eps**2 + delta
    return certify("CorollarySmoothMax", lhs, rhs, "terminal", tol)
