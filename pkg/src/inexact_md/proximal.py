"""Proximal setups: feasible sets, prox functions, Bregman divergences, mirror steps.

Two geometries are provided:

* ``EuclideanSetup`` -- d(x) = 1/2 ||x - a||^2 on a box or an L2 ball,
  primal and dual norm both L2; the mirror step is a Euclidean projection.
* ``EntropySetup`` -- d(x) = sum x_i ln x_i + ln n on the probability simplex,
  primal norm L1, dual norm Linf; the mirror step is a multiplicative update.

Points and dual vectors are plain float64 numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TypeAlias

import numpy as np
from numpy.typing import NDArray

from .errors import ArgumentError, DomainError

Point: TypeAlias = NDArray[np.float64]
DualVector: TypeAlias = NDArray[np.float64]

MEMBERSHIP_TOL = 1e-10
SIMPLEX_SUM_TOL = 1e-12
ENTROPY_FLOOR = 1e-15


def as_vector(x, dim: int | None = None, name: str = "x") -> NDArray[np.float64]:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ArgumentError(f"{name} must be a 1-d vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ArgumentError(f"{name} has dimension {v.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(v)):
        raise ArgumentError(f"{name} has non-finite coordinates")
    return v


def norm(v, kind: str) -> float:
    v = np.asarray(v, dtype=np.float64)
    if kind == "l2":
        return math.hypot(*v)  # scaled internally: no underflow for tiny nonzero v
    if kind == "l1":
        return float(np.sum(np.abs(v)))
    if kind == "linf":
        return float(np.max(np.abs(v))) if v.size else 0.0
    raise ArgumentError(f"unknown norm {kind!r}")


# --------------------------------------------------------------------------
# feasible sets


@dataclass(frozen=True, eq=False)
class Box:
    lower: NDArray[np.float64]
    upper: NDArray[np.float64]

    def __post_init__(self):
        lo = as_vector(self.lower, name="lower")
        hi = as_vector(self.upper, dim=lo.shape[0], name="upper")
        if np.any(lo > hi):
            raise ArgumentError("box needs lower <= upper coordinatewise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    kind = "box"

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def project(self, x) -> Point:
        return np.clip(x, self.lower, self.upper)

    def diameter(self, kind: str = "l2") -> float:
        return norm(self.upper - self.lower, kind)

    def grid(self, nodes: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Tensor grid with ``nodes`` points per axis; returns (points, spacing)."""
        axes = [np.linspace(lo, hi, nodes) for lo, hi in zip(self.lower, self.upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        return pts, (self.upper - self.lower) / (nodes - 1)

    def sample(self, rng: np.random.Generator, n: int) -> NDArray[np.float64]:
        return rng.uniform(self.lower, self.upper, size=(n, self.dim))

    def to_dict(self) -> dict:
        return {"type": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}


@dataclass(frozen=True, eq=False)
class Ball:
    center: NDArray[np.float64]
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center, name="center"))
        if not self.radius > 0:
            raise ArgumentError("ball radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))

    kind = "ball"

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        return norm(np.asarray(x) - self.center, "l2") <= self.radius + tol

    def project(self, x) -> Point:
        d = x - self.center
        r = np.linalg.norm(d)
        if r <= self.radius:
            return x
        return self.center + d * (self.radius / r)

    def diameter(self, kind: str = "l2") -> float:
        if kind != "l2":
            raise ArgumentError("ball diameter is only defined for the L2 norm")
        return 2.0 * self.radius

    def grid(self, nodes: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        box = Box(self.center - self.radius, self.center + self.radius)
        pts, spacing = box.grid(nodes)
        keep = np.linalg.norm(pts - self.center, axis=1) <= self.radius
        return pts[keep], spacing

    def sample(self, rng: np.random.Generator, n: int) -> NDArray[np.float64]:
        d = rng.standard_normal((n, self.dim))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        r = self.radius * rng.uniform(size=(n, 1)) ** (1.0 / self.dim)
        return self.center + r * d

    def to_dict(self) -> dict:
        return {"type": "ball", "center": self.center.tolist(), "radius": self.radius}


@dataclass(frozen=True, eq=False)
class Simplex:
    n: int

    def __post_init__(self):
        if int(self.n) < 1:
            raise ArgumentError("simplex dimension must be positive")
        object.__setattr__(self, "n", int(self.n))

    kind = "simplex"

    @property
    def dim(self) -> int:
        return self.n

    def contains(self, x, tol: float = MEMBERSHIP_TOL) -> bool:
        x = np.asarray(x, dtype=np.float64)
        return bool(np.all(x >= -tol) and abs(x.sum() - 1.0) <= max(tol, SIMPLEX_SUM_TOL))

    def diameter(self, kind: str = "l1") -> float:
        if kind == "l1":
            return 2.0
        if kind == "l2":
            return float(np.sqrt(2.0))
        raise ArgumentError(f"unsupported norm {kind!r} for simplex diameter")

    def grid(self, nodes: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Barycentric lattice {i/m : sum i = m} with m = nodes - 1."""
        m = nodes - 1
        pts = [c for c in _compositions(m, self.n)]
        pts = np.asarray(pts, dtype=np.float64) / m
        return pts, np.full(self.n, 1.0 / m)

    def sample(self, rng: np.random.Generator, n: int) -> NDArray[np.float64]:
        return rng.dirichlet(np.ones(self.n), size=n)

    def to_dict(self) -> dict:
        return {"type": "simplex", "dim": self.n}


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for i in range(total + 1):
        for rest in _compositions(total - i, parts - 1):
            yield (i,) + rest


FeasibleSet: TypeAlias = Box | Ball | Simplex


def feasible_set_from_dict(d: dict) -> FeasibleSet:
    kind = d.get("type")
    if kind == "box":
        return Box(d["lower"], d["upper"])
    if kind == "ball":
        return Ball(d["center"], d["radius"])
    if kind == "simplex":
        return Simplex(d["dim"])
    raise ArgumentError(f"unknown feasible set type {kind!r}")


# --------------------------------------------------------------------------
# setups


@dataclass(frozen=True, eq=False)
class EuclideanSetup:
    """d(x) = 1/2 ||x - anchor||^2 - prox_offset on a box or L2 ball.

    ``anchor`` defaults to the box midpoint / ball center.  The offset makes
    min_Q d = 0, attained at the projection of the anchor onto Q.
    """

    feasible_set: Box | Ball
    anchor: NDArray[np.float64] | None = None
    prox_offset: float = field(init=False)

    norm_kind = "l2"
    dual_norm_kind = "l2"

    def __post_init__(self):
        q = self.feasible_set
        if not isinstance(q, (Box, Ball)):
            raise ArgumentError("Euclidean setup supports Box and Ball feasible sets")
        if self.anchor is None:
            a = q.center.copy() if isinstance(q, Ball) else 0.5 * (q.lower + q.upper)
        else:
            a = as_vector(self.anchor, dim=q.dim, name="anchor")
        object.__setattr__(self, "anchor", a)
        c = q.project(a)
        object.__setattr__(self, "prox_offset", 0.5 * float(np.dot(c - a, c - a)))

    @property
    def dim(self) -> int:
        return self.feasible_set.dim

    def _check(self, x, name="x") -> Point:
        x = as_vector(x, dim=self.dim, name=name)
        if not self.feasible_set.contains(x):
            raise DomainError(f"{name} lies outside the feasible set")
        return x

    def value(self, x) -> float:
        x = self._check(x)
        r = x - self.anchor
        return max(0.5 * float(np.dot(r, r)) - self.prox_offset, 0.0)

    def bregman(self, y, x) -> float:
        y = self._check(y, "y")
        x = self._check(x)
        r = y - x
        return 0.5 * float(np.dot(r, r))

    def mirror_step(self, x, p, h: float) -> Point:
        x = self._check(x)
        p = as_vector(p, dim=self.dim, name="p")
        if not h > 0:
            raise ArgumentError("step size must be positive")
        return self.feasible_set.project(x - h * p)

    def center(self) -> Point:
        return self.feasible_set.project(self.anchor.copy())

    def to_dict(self) -> dict:
        return {"kind": "euclidean", "anchor": self.anchor.tolist()}


@dataclass(frozen=True, eq=False)
class EntropySetup:
    """Negative entropy d(x) = sum x_i ln x_i + ln n on the simplex (L1 / Linf)."""

    feasible_set: Simplex
    prox_offset: float = field(init=False)

    norm_kind = "l1"
    dual_norm_kind = "linf"

    def __post_init__(self):
        if not isinstance(self.feasible_set, Simplex):
            raise ArgumentError("entropy setup requires a Simplex feasible set")
        object.__setattr__(self, "prox_offset", float(np.log(self.feasible_set.n)))

    @property
    def dim(self) -> int:
        return self.feasible_set.dim

    def _check(self, x, name="x", positive=False) -> Point:
        x = as_vector(x, dim=self.dim, name=name)
        if not self.feasible_set.contains(x):
            raise DomainError(f"{name} lies outside the simplex")
        if positive and np.any(x <= 0):
            raise DomainError(f"entropy gradient undefined: {name} has a zero coordinate")
        return x

    def value(self, x) -> float:
        x = self._check(x)
        xl = np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)
        return max(float(np.sum(xl)) + self.prox_offset, 0.0)

    def bregman(self, y, x) -> float:
        y = self._check(y, "y")
        x = self._check(x, positive=True)
        # generalized KL: the -sum(y - x) term is the "+1" part of grad d
        pos = y > 0
        kl = float(np.sum(y[pos] * np.log(y[pos] / x[pos])))
        return max(kl - float(np.sum(y)) + float(np.sum(x)), 0.0)

    def mirror_step(self, x, p, h: float) -> Point:
        x = self._check(x, positive=True)
        p = as_vector(p, dim=self.dim, name="p")
        if not h > 0:
            raise ArgumentError("step size must be positive")
        w = np.log(x) - h * p
        w -= w.max()
        y = np.exp(w)
        y /= y.sum()
        return np.maximum(y, ENTROPY_FLOOR)

    def center(self) -> Point:
        n = self.feasible_set.n
        return np.full(n, 1.0 / n)

    def to_dict(self) -> dict:
        return {"kind": "entropy"}


ProximalSetup: TypeAlias = EuclideanSetup | EntropySetup


def make_setup(kind: str, feasible_set: FeasibleSet, anchor=None) -> ProximalSetup:
    if kind == "euclidean":
        return EuclideanSetup(feasible_set, anchor)
    if kind == "entropy":
        return EntropySetup(feasible_set)
    raise ArgumentError(f"unknown setup kind {kind!r}")


# --------------------------------------------------------------------------
# functional surface


def prox_value(setup: ProximalSetup, x) -> float:
    """d(x) >= 0, normalized so that d(prox_center(setup)) == 0."""
    return setup.value(x)


def bregman(setup: ProximalSetup, y, x) -> float:
    """V(y, x) = d(y) - d(x) - <grad d(x), y - x>."""
    return setup.bregman(y, x)


def mirror_step(setup: ProximalSetup, x, p, h: float) -> Point:
    """argmin_{u in Q} <h p, u - x> + V(u, x)."""
    return setup.mirror_step(x, p, h)


def prox_center(setup: ProximalSetup) -> Point:
    return setup.center()


def dual_norm(setup: ProximalSetup, p) -> float:
    return norm(p, setup.dual_norm_kind)


def primal_norm(setup: ProximalSetup, v) -> float:
    return norm(v, setup.norm_kind)
