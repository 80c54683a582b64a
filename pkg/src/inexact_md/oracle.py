"""First-order oracles returning delta-subgradients.

A delta-subgradient v of f at x satisfies

    f(y) - f(x) >= <v, y - x> - delta   for every y in Q.

Every oracle exposes ``oracle(x) -> DeltaSubgradient`` (the possibly inexact
answer used by the solvers) and ``oracle.value(x)`` (the exact function value,
used only by certificates and reference-optimum searches).
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import ArgumentError
from .proximal import DualVector, Point, as_vector, norm


@dataclass(frozen=True, eq=False)
class DeltaSubgradient:
    vector: DualVector
    delta: float
    value: float

    def __post_init__(self):
        if not self.delta >= 0:
            raise ArgumentError(f"delta must be >= 0, got {self.delta}")


class Oracle:
    """Base class. Subclasses implement ``__call__`` and ``value``."""

    delta_bound: float = 0.0
    lipschitz_bound: float | None = None

    def __call__(self, x: Point) -> DeltaSubgradient:
        raise NotImplementedError

    def value(self, x: Point) -> float:
        raise NotImplementedError

    def values(self, xs: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.array([self.value(x) for x in xs])

    def exact(self, x: Point) -> DeltaSubgradient:
        return self(x)


class FunctionOracle(Oracle):
    """Exact oracle from a value function and a subgradient selector."""

    def __init__(
        self,
        value_fn: Callable[[Point], float],
        subgrad_fn: Callable[[Point], DualVector],
        lipschitz_bound: float | None = None,
        batch_fn: Callable[[NDArray], NDArray] | None = None,
        name: str = "",
    ):
        self._value = value_fn
        self._subgrad = subgrad_fn
        self._batch = batch_fn
        self.lipschitz_bound = lipschitz_bound
        self.name = name

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        return DeltaSubgradient(
            np.asarray(self._subgrad(x), dtype=np.float64), 0.0, float(self._value(x))
        )

    def value(self, x):
        return float(self._value(np.asarray(x, dtype=np.float64)))

    def values(self, xs):
        if self._batch is not None:
            return np.asarray(self._batch(np.asarray(xs, dtype=np.float64)), dtype=np.float64)
        return super().values(xs)

    def __repr__(self):
        return f"FunctionOracle({self.name})"


def exact_subgradient(oracle: Oracle, x: Point) -> DeltaSubgradient:
    """An exact subgradient (delta = 0) at x."""
    sub = oracle.exact(x)
    assert sub.delta == 0.0
    return sub


# --------------------------------------------------------------------------
# built-in functions; kinks resolve to a fixed element of the subdifferential


def l1_distance(center, kink: float = 0.0, dual_norm_kind: str = "l2") -> FunctionOracle:
    """f(x) = ||x - center||_1.  ``kink`` is the subgradient coordinate used where
    x_i == center_i (any value in [-1, 1] is valid)."""
    c = as_vector(center, name="center")
    if not -1.0 <= kink <= 1.0:
        raise ArgumentError("kink choice must lie in [-1, 1]")

    def sub(x):
        s = np.sign(x - c)
        s[s == 0] = kink
        return s

    lip = norm(np.ones_like(c), dual_norm_kind)
    return FunctionOracle(
        lambda x: float(np.sum(np.abs(x - c))),
        sub,
        lipschitz_bound=lip,
        batch_fn=lambda xs: np.sum(np.abs(xs - c), axis=1),
        name=f"l1_distance({c.tolist()})",
    )


def linf_ball_constraint(radius: float = 1.0) -> FunctionOracle:
    """g(x) = ||x||_inf - radius.  Subgradient: sign(x_i) e_i at the first index
    attaining the max; zero at the origin."""

    def sub(x):
        s = np.zeros_like(x)
        i = int(np.argmax(np.abs(x)))
        s[i] = np.sign(x[i])
        return s

    return FunctionOracle(
        lambda x: float(np.max(np.abs(x))) - radius,
        sub,
        lipschitz_bound=1.0,  # every subgradient is +-e_i or 0: unit in L2, Linf and L1
        batch_fn=lambda xs: np.max(np.abs(xs), axis=1) - radius,
        name=f"linf_ball({radius})",
    )


def affine(a, b: float = 0.0, dual_norm_kind: str = "l2") -> FunctionOracle:
    """g(x) = <a, x> - b."""
    a = as_vector(a, name="a")
    b = float(b)
    return FunctionOracle(
        lambda x: float(a @ x) - b,
        lambda x: a.copy(),
        lipschitz_bound=norm(a, dual_norm_kind),
        batch_fn=lambda xs: xs @ a - b,
        name=f"affine({a.tolist()}, {b})",
    )


def half_sq_distance(center) -> FunctionOracle:
    """f(x) = 1/2 ||x - center||_2^2 (no global Lipschitz bound)."""
    c = as_vector(center, name="center")
    return FunctionOracle(
        lambda x: 0.5 * float(np.dot(x - c, x - c)),
        lambda x: x - c,
        batch_fn=lambda xs: 0.5 * np.sum((xs - c) ** 2, axis=1),
        name=f"half_sq_distance({c.tolist()})",
    )


def constant(value: float, dim: int) -> FunctionOracle:
    value = float(value)
    return FunctionOracle(
        lambda x: value,
        lambda x: np.zeros(dim),
        lipschitz_bound=0.0,
        batch_fn=lambda xs: np.full(len(xs), value),
        name=f"constant({value})",
    )


# --------------------------------------------------------------------------
# max of finitely many smooth convex functions


@dataclass(frozen=True, eq=False)
class SmoothComponent:
    value: Callable[[Point], float]
    grad: Callable[[Point], DualVector]
    batch: Callable[[NDArray], NDArray] | None = None


@dataclass(frozen=True, eq=False)
class MaxOfFunctions:
    """f(x) = max_i f_i(x) with ||grad f_i(x) - grad f_i(y)||_* <= L_i ||x - y||."""

    components: Sequence[SmoothComponent]
    lipschitz_grad_consts: Sequence[float]
    descriptor: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.components) == 0:
            raise ArgumentError("MaxOfFunctions needs at least one component")
        if len(self.lipschitz_grad_consts) != len(self.components):
            raise ArgumentError("one gradient Lipschitz constant per component")
        if any(not L >= 0 for L in self.lipschitz_grad_consts):
            raise ArgumentError("gradient Lipschitz constants must be >= 0")

    @property
    def L(self) -> float:
        return float(max(self.lipschitz_grad_consts))

    def component_values(self, x) -> NDArray[np.float64]:
        return np.array([c.value(x) for c in self.components], dtype=np.float64)

    def batch_values(self, xs) -> NDArray[np.float64]:
        cols = []
        for c in self.components:
            if c.batch is not None:
                cols.append(c.batch(xs))
            else:
                cols.append(np.array([c.value(x) for x in xs]))
        return np.max(np.stack(cols, axis=1), axis=1)

    @classmethod
    def affine(cls, slopes, offsets) -> "MaxOfFunctions":
        """max_i <a_i, x> + b_i."""
        A = np.atleast_2d(np.asarray(slopes, dtype=np.float64))
        b = np.asarray(offsets, dtype=np.float64)
        if A.shape[0] != b.shape[0]:
            raise ArgumentError("one offset per slope row")
        comps = [
            SmoothComponent(
                (lambda x, a=a, bi=bi: float(a @ x) + bi),
                (lambda x, a=a: a.copy()),
                (lambda xs, a=a, bi=bi: xs @ a + bi),
            )
            for a, bi in zip(A, b)
        ]
        desc = {"type": "max_affine", "slopes": A.tolist(), "offsets": b.tolist()}
        return cls(comps, [0.0] * len(comps), desc)

    @classmethod
    def quadratic(cls, centers, scales, offsets) -> "MaxOfFunctions":
        """max_i (s_i / 2) ||x - c_i||_2^2 + b_i, gradient Lipschitz constant s_i in L2."""
        C = np.atleast_2d(np.asarray(centers, dtype=np.float64))
        s = np.asarray(scales, dtype=np.float64)
        b = np.asarray(offsets, dtype=np.float64)
        if not (C.shape[0] == s.shape[0] == b.shape[0]):
            raise ArgumentError("centers, scales and offsets must have equal length")
        if np.any(s < 0):
            raise ArgumentError("quadratic scales must be >= 0 for convexity")
        comps = [
            SmoothComponent(
                (lambda x, c=c, si=si, bi=bi: 0.5 * si * float(np.dot(x - c, x - c)) + bi),
                (lambda x, c=c, si=si: si * (x - c)),
                (lambda xs, c=c, si=si, bi=bi: 0.5 * si * np.sum((xs - c) ** 2, axis=1) + bi),
            )
            for c, si, bi in zip(C, s, b)
        ]
        desc = {
            "type": "max_quadratic",
            "centers": C.tolist(),
            "scales": s.tolist(),
            "offsets": b.tolist(),
        }
        return cls(comps, s.tolist(), desc)


def inexact_max_oracle(m: MaxOfFunctions, x: Point, delta: float) -> DeltaSubgradient:
    """Gradient of a component f_j with max_i f_i(x) - f_j(x) <= delta.

    Among admissible components the one with the smallest value is taken
    (ties: smallest index).  The reported delta is the actual gap.
    """
    if not delta >= 0:
        raise ArgumentError(f"delta must be >= 0, got {delta}")
    x = np.asarray(x, dtype=np.float64)
    vals = m.component_values(x)
    top = vals.max()
    gaps = top - vals
    admissible = np.flatnonzero(gaps <= delta)
    j = int(admissible[np.argmin(vals[admissible])])  # argmin returns first on ties
    grad = np.asarray(m.components[j].grad(x), dtype=np.float64)
    return DeltaSubgradient(grad, float(gaps[j]), float(vals[j]))


class MaxOracle(Oracle):
    """Oracle for max_i f_i answering with ``inexact_max_oracle`` at level ``delta``."""

    def __init__(self, m: MaxOfFunctions, delta: float = 0.0, lipschitz_bound: float | None = None):
        if not delta >= 0:
            raise ArgumentError("delta must be >= 0")
        self.functions = m
        self.delta = float(delta)
        self.delta_bound = self.delta
        self.lipschitz_bound = lipschitz_bound

    def __call__(self, x):
        return inexact_max_oracle(self.functions, x, self.delta)

    def exact(self, x):
        return inexact_max_oracle(self.functions, x, 0.0)

    def value(self, x):
        return float(self.functions.component_values(np.asarray(x, dtype=np.float64)).max())

    def values(self, xs):
        return self.functions.batch_values(np.asarray(xs, dtype=np.float64))


# --------------------------------------------------------------------------
# controlled inexactness


class PerturbedOracle(Oracle):
    """Adds a bounded dual-space perturbation p to the base oracle's vector.

    Since f(y) - f(x) >= <g, y - x> >= <g + p, y - x> - ||p||_* ||y - x||,
    the perturbed vector is a delta-subgradient with
    delta = noise_dual_norm * q_diameter (plus whatever the base reports).
    """

    def __init__(self, base: Oracle, noise_dual_norm: float, q_diameter: float, seed: int,
                 dual_norm_kind: str = "l2"):
        if not noise_dual_norm >= 0:
            raise ArgumentError("noise_dual_norm must be >= 0")
        if not q_diameter > 0:
            raise ArgumentError("q_diameter must be > 0")
        if dual_norm_kind not in ("l2", "linf"):
            raise ArgumentError(f"unsupported dual norm {dual_norm_kind!r}")
        self.base = base
        self.noise = float(noise_dual_norm)
        self.q_diameter = float(q_diameter)
        self.seed = int(seed)
        self.dual_norm_kind = dual_norm_kind
        self.added_delta = self.noise * self.q_diameter
        self.delta_bound = base.delta_bound + self.added_delta
        self.lipschitz_bound = (
            None if base.lipschitz_bound is None else base.lipschitz_bound + self.noise
        )

    def _direction(self, x: Point) -> DualVector:
        digest = hashlib.blake2b(
            self.seed.to_bytes(8, "little", signed=True) + np.ascontiguousarray(x).tobytes(),
            digest_size=16,
        ).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "little"))
        if self.dual_norm_kind == "l2":
            u = rng.standard_normal(x.shape[0])
            while not np.any(u):
                u = rng.standard_normal(x.shape[0])
            return u / np.linalg.norm(u)
        u = rng.uniform(-1.0, 1.0, x.shape[0])
        i = rng.integers(x.shape[0])
        u[i] = 1.0 if rng.uniform() < 0.5 else -1.0
        return u

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        sub = self.base(x)
        if self.noise == 0.0:
            return sub
        p = self.noise * self._direction(x)
        return DeltaSubgradient(sub.vector + p, sub.delta + self.added_delta, sub.value)

    def exact(self, x):
        return self.base.exact(x)

    def value(self, x):
        return self.base.value(x)

    def values(self, xs):
        return self.base.values(xs)


def perturbed_oracle(base: Oracle, noise_dual_norm: float, q_diameter: float, seed: int,
                     dual_norm_kind: str = "l2") -> PerturbedOracle:
    return PerturbedOracle(base, noise_dual_norm, q_diameter, seed, dual_norm_kind)


def max_constraint(
    constraints: Sequence[Oracle], x: Point, delta: float = 0.0
) -> tuple[float, DeltaSubgradient, int]:
    """Aggregate constraints into G(x) = max_i g_i(x).

    Returns (G(x), a delta-subgradient of G, index of the component used).
    The component is the smallest index whose value is within ``delta`` of the
    max; its subgradient's delta is widened by that gap.  Indices are 0-based.
    """
    if len(constraints) == 0:
        raise ArgumentError("max_constraint needs at least one constraint")
    if not delta >= 0:
        raise ArgumentError("delta must be >= 0")
    subs = [c(x) for c in constraints]
    if len(subs) == 1:
        return subs[0].value, subs[0], 0
    vals = np.array([s.value for s in subs])
    top = float(vals.max())
    j = int(np.flatnonzero(top - vals <= delta)[0])
    gap = top - float(vals[j])
    s = subs[j]
    return top, DeltaSubgradient(s.vector, s.delta + gap, top), j
