"""Benchmark problems with reference optima, plus a brute-force grid optimum.

Problems are described by JSON-compatible ``ProblemSpec`` records so they can
be shipped in run configs; ``build_problem`` turns a spec into a ``Problem``.

Descriptor types (objective or constraint):

* ``l1_distance``      ``center``, optional ``kink`` in [-1, 1]
* ``linf_ball``        ``radius`` (g(x) = ||x||_inf - radius)
* ``affine``           ``a``, ``b`` (<a, x> - b); ``linear`` is ``c`` with b = 0
* ``half_sq_distance`` ``center``
* ``constant``         ``value``
* ``max_affine``       ``slopes``, ``offsets``, optional ``oracle_delta``
* ``max_quadratic``    ``centers``, ``scales``, ``offsets``, optional ``oracle_delta``
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ArgumentError, ConfigError, InfeasibleProblemError, UnsupportedError
from .oracle import (
    MaxOfFunctions,
    MaxOracle,
    Oracle,
    PerturbedOracle,
    affine,
    constant,
    half_sq_distance,
    l1_distance,
    linf_ball_constraint,
)
from .proximal import Ball, Box, Simplex, feasible_set_from_dict, make_setup, norm
from .solver import Problem, ReferenceOptimum

GRID_MAX_DIM = 3


@dataclass
class ProblemSpec:
    name: str
    dimension: int
    objective: dict
    constraints: list[dict]
    feasible_set: dict
    setup: dict
    M_g: float
    theta0_sq: float
    reference: dict | None = None
    description: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemSpec":
        try:
            spec = cls(
                name=str(d.get("name", "inline")),
                dimension=int(d["dimension"]),
                objective=dict(d["objective"]),
                constraints=[dict(c) for c in d["constraints"]],
                feasible_set=dict(d["feasible_set"]),
                setup=dict(d.get("setup", {"kind": "euclidean"})),
                M_g=float(d["M_g"]),
                theta0_sq=float(d["theta0_sq"]),
                reference=d.get("reference"),
                description=str(d.get("description", "")),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"malformed problem spec: {e!r}") from e
        if spec.dimension < 1:
            raise ConfigError("problem dimension must be positive")
        if not spec.constraints:
            raise ConfigError("problem needs at least one constraint")
        return spec


# --------------------------------------------------------------------------
# descriptors -> oracles


def _max_distance(q, c, kind: str) -> float:
    """max_{x in Q} ||x - c|| in the given norm (attained at an extreme point)."""
    c = np.asarray(c, dtype=np.float64)
    if isinstance(q, Box):
        far = np.maximum(np.abs(q.lower - c), np.abs(q.upper - c))
        return norm(far, kind)
    if isinstance(q, Ball):
        return norm(q.center - c, kind) + q.radius * (1.0 if kind == "l2" else math.sqrt(q.dim))
    return max(norm(e - c, kind) for e in np.eye(q.n))


def make_oracle(desc: dict, q, dual_kind: str) -> Oracle:
    kind = desc.get("type")
    dim = q.dim
    try:
        if kind == "l1_distance":
            return l1_distance(desc["center"], float(desc.get("kink", 0.0)), dual_kind)
        if kind == "linf_ball":
            return linf_ball_constraint(float(desc.get("radius", 1.0)))
        if kind in ("affine", "linear"):
            a = desc["a"] if kind == "affine" else desc["c"]
            return affine(a, float(desc.get("b", 0.0)), dual_kind)
        if kind == "half_sq_distance":
            o = half_sq_distance(desc["center"])
            o.lipschitz_bound = _max_distance(q, desc["center"], dual_kind)
            return o
        if kind == "constant":
            return constant(float(desc["value"]), dim)
        if kind == "max_affine":
            m = MaxOfFunctions.affine(desc["slopes"], desc["offsets"])
            lip = max(norm(a, dual_kind) for a in np.atleast_2d(desc["slopes"]))
            return MaxOracle(m, float(desc.get("oracle_delta", 0.0)), lip)
        if kind == "max_quadratic":
            m = MaxOfFunctions.quadratic(desc["centers"], desc["scales"], desc["offsets"])
            lip = max(
                s * _max_distance(q, c, dual_kind)
                for c, s in zip(np.atleast_2d(desc["centers"]), desc["scales"])
            )
            return MaxOracle(m, float(desc.get("oracle_delta", 0.0)), lip)
    except KeyError as e:
        raise ConfigError(f"descriptor {kind!r} is missing field {e}") from e
    raise ConfigError(f"unknown function type {kind!r}")


def build_problem(spec: ProblemSpec, delta_noise: float = 0.0, seed: int = 0,
                  reference: str = "spec") -> Problem:
    """Instantiate oracles for ``spec``.

    ``delta_noise`` > 0 wraps every oracle in a ``PerturbedOracle`` whose
    reported delta equals ``delta_noise`` (noise dual norm = delta_noise / diam Q);
    M_g is raised by the noise norm so it still bounds constraint subgradients.
    ``reference="grid"`` fills a missing reference optimum by grid search.
    """
    if not delta_noise >= 0:
        raise ArgumentError("delta_noise must be >= 0")
    q = feasible_set_from_dict(spec.feasible_set)
    if q.dim != spec.dimension:
        raise ConfigError(f"feasible set has dimension {q.dim}, spec says {spec.dimension}")
    setup = make_setup(spec.setup.get("kind", "euclidean"), q, spec.setup.get("anchor"))
    dual_kind = setup.dual_norm_kind
    objective = make_oracle(spec.objective, q, dual_kind)
    constraints = [make_oracle(c, q, dual_kind) for c in spec.constraints]
    M_g = spec.M_g
    if delta_noise > 0:
        diam = q.diameter(setup.norm_kind)
        noise = delta_noise / diam
        objective = PerturbedOracle(objective, noise, diam, seed, dual_kind)
        constraints = [
            PerturbedOracle(c, noise, diam, seed + 1 + i, dual_kind)
            for i, c in enumerate(constraints)
        ]
        M_g = M_g + noise
    ref = None
    if spec.reference is not None:
        r = spec.reference
        ref = ReferenceOptimum(
            np.asarray(r["x"], dtype=np.float64), float(r["f"]),
            str(r.get("source", "analytic")), float(r.get("error_bound", 0.0)),
        )
    elif reference == "grid" and spec.dimension <= GRID_MAX_DIM:
        x, f, err = grid_optimum(spec, 201)
        ref = ReferenceOptimum(x, f, "grid:201", err)
    return Problem(objective, constraints, setup, M_g, spec.theta0_sq, ref, spec.name)


def grid_optimum(spec: ProblemSpec, resolution: int) -> tuple[np.ndarray, float, float]:
    """Exhaustive search over feasible grid nodes of Q.

    Returns (x*, f*, error bound M_f * h * sqrt(dim)), h the largest grid spacing.
    """
    if spec.dimension > GRID_MAX_DIM:
        raise UnsupportedError(f"grid search is limited to dimension <= {GRID_MAX_DIM}")
    if resolution < 11:
        raise ArgumentError("grid resolution must be >= 11")
    problem = build_problem(spec, reference="none")
    pts, spacing = problem.setup.feasible_set.grid(resolution)
    g = np.max(np.stack([c.values(pts) for c in problem.constraints], axis=1), axis=1)
    feasible = g <= 1e-12
    if not np.any(feasible):
        raise InfeasibleProblemError(f"no feasible node on the {resolution}-grid of {spec.name!r}")
    pts = pts[feasible]
    f = problem.objective.values(pts)
    i = int(np.argmin(f))
    lip = problem.objective.lipschitz_bound
    bound = math.inf if lip is None else lip * float(np.max(spacing)) * math.sqrt(spec.dimension)
    return pts[i].copy(), float(f[i]), bound


# --------------------------------------------------------------------------
# catalog


def _box2():
    return {"type": "box", "lower": [-1.0, -1.0], "upper": [1.0, 1.0]}


def builtin_catalog() -> list[ProblemSpec]:
    return [
        ProblemSpec(
            name="p1-l1-box",
            dimension=2,
            # kink +1: at x* the subgradient stays nonzero so runs end by the stopping rule
            objective={"type": "l1_distance", "center": [1.0, 1.0], "kink": 1.0},
            constraints=[{"type": "linf_ball", "radius": 1.0}],
            feasible_set=_box2(),
            setup={"kind": "euclidean", "anchor": [0.0, 0.0]},
            M_g=1.0,
            theta0_sq=1.0,
            reference={"x": [1.0, 1.0], "f": 0.0, "source": "analytic"},
            description="||x - (1,1)||_1 s.t. ||x||_inf <= 1 on [-1,1]^2",
        ),
        ProblemSpec(
            name="p2-max-affine-box",
            dimension=2,
            objective={"type": "max_affine", "slopes": [[1.0, -1.0], [-1.0, -1.0]],
                       "offsets": [0.0, 0.0]},
            constraints=[{"type": "affine", "a": [0.0, 1.0], "b": 0.5}],
            feasible_set=_box2(),
            setup={"kind": "euclidean", "anchor": [0.0, 0.0]},
            M_g=1.0,
            theta0_sq=1.0,
            reference={"x": [0.0, 0.5], "f": -0.5, "source": "analytic"},
            description="max(x1 - x2, -x1 - x2) s.t. x2 <= 0.5 on [-1,1]^2",
        ),
        ProblemSpec(
            name="p3-linear-simplex",
            dimension=3,
            objective={"type": "linear", "c": [1.0, 2.0, 3.0]},
            constraints=[{"type": "affine", "a": [0.0, 0.0, 1.0], "b": 0.5}],
            feasible_set={"type": "simplex", "dim": 3},
            setup={"kind": "entropy"},
            M_g=1.0,
            theta0_sq=math.log(3.0),
            reference={"x": [1.0, 0.0, 0.0], "f": 1.0, "source": "analytic"},
            description="<(1,2,3), x> s.t. x3 <= 0.5 (inactive) on the 3-simplex",
        ),
        ProblemSpec(
            name="p4-max-quadratic-box",
            dimension=2,
            objective={"type": "max_quadratic", "centers": [[0.5, 0.0], [-0.5, 0.0]],
                       "scales": [1.0, 1.0], "offsets": [0.0, 0.0]},
            constraints=[{"type": "affine", "a": [0.0, -1.0], "b": -0.25}],
            feasible_set=_box2(),
            setup={"kind": "euclidean", "anchor": [0.0, 0.0]},
            M_g=1.0,
            theta0_sq=1.0,
            reference={"x": [0.0, 0.25], "f": 0.15625, "source": "analytic"},
            description="max of two quadratics s.t. x2 >= 0.25 on [-1,1]^2",
        ),
        ProblemSpec(
            name="p5-linear-simplex-active",
            dimension=3,
            objective={"type": "linear", "c": [1.0, 2.0, 3.0]},
            constraints=[{"type": "affine", "a": [1.0, 0.0, 0.0], "b": 0.5}],
            feasible_set={"type": "simplex", "dim": 3},
            setup={"kind": "entropy"},
            M_g=1.0,
            theta0_sq=math.log(3.0),
            reference={"x": [0.5, 0.5, 0.0], "f": 1.5, "source": "analytic"},
            description="<(1,2,3), x> s.t. x1 <= 0.5 on the 3-simplex",
        ),
        ProblemSpec(
            name="p6-linear-ball",
            dimension=2,
            objective={"type": "linear", "c": [-1.0, -1.0]},
            constraints=[{"type": "affine", "a": [1.0, 0.0], "b": 0.3}],
            feasible_set={"type": "ball", "center": [0.0, 0.0], "radius": 1.0},
            setup={"kind": "euclidean"},
            M_g=1.0,
            theta0_sq=0.5,
            reference={"x": [0.3, math.sqrt(0.91)], "f": -0.3 - math.sqrt(0.91),
                       "source": "analytic"},
            description="-x1 - x2 s.t. x1 <= 0.3 on the unit disk",
        ),
    ]


def get_spec(name: str) -> ProblemSpec:
    for spec in builtin_catalog():
        if spec.name == name:
            return spec
    raise ConfigError(f"unknown problem {name!r}; see `catalog` for the list")
