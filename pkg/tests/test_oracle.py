import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from inexact_md.errors import ArgumentError
from inexact_md.oracle import (
    DeltaSubgradient,
    FunctionOracle,
    MaxOfFunctions,
    MaxOracle,
    affine,
    exact_subgradient,
    half_sq_distance,
    inexact_max_oracle,
    l1_distance,
    linf_ball_constraint,
    max_constraint,
    perturbed_oracle,
)


def abs_sum():
    return l1_distance([0.0, 0.0])


def check_delta_subgradient(oracle, x, ys, tol=1e-9):
    """Worst violation of f(y) - f(x) >= <v, y - x> - delta over the ys."""
    sub = oracle(x)
    fx = oracle.value(x)
    fy = oracle.values(ys)
    slack = fy - fx - (ys - x) @ sub.vector + sub.delta
    return float(slack.min())


# ---------------------------------------------------------- exact


def test_exact_sign_subgradient():
    sub = exact_subgradient(abs_sum(), np.array([1.0, -2.0]))
    np.testing.assert_array_equal(sub.vector, [1.0, -1.0])
    assert sub.delta == 0.0
    assert sub.value == 3.0


def test_exact_kink_picks_zero():
    f = l1_distance([0.0])
    sub = exact_subgradient(f, np.array([0.0]))
    np.testing.assert_array_equal(sub.vector, [0.0])
    assert sub.delta == 0.0


def test_exact_gradient_of_quadratic():
    sub = exact_subgradient(half_sq_distance([0.0, 0.0]), np.array([2.0, 0.0]))
    np.testing.assert_array_equal(sub.vector, [2.0, 0.0])
    assert sub.delta == 0.0


def test_delta_subgradient_rejects_negative_delta():
    with pytest.raises(ArgumentError):
        DeltaSubgradient(np.zeros(1), -1e-3, 0.0)


# ---------------------------------------------------- inexact max


ABS1 = MaxOfFunctions.affine([[1.0], [-1.0]], [0.0, 0.0])


def test_inexact_max_picks_most_adversarial_admissible():
    sub = inexact_max_oracle(ABS1, np.array([0.1]), 0.3)
    np.testing.assert_array_equal(sub.vector, [-1.0])
    assert sub.delta == pytest.approx(0.2, abs=1e-15)
    assert sub.value == pytest.approx(-0.1)
    ys = np.linspace(-2, 2, 4001)[:, None]
    oracle = MaxOracle(ABS1, 0.3)
    assert check_delta_subgradient(oracle, np.array([0.1]), ys) >= -1e-12


def test_inexact_max_zero_delta_is_exact():
    sub = inexact_max_oracle(ABS1, np.array([0.1]), 0.0)
    np.testing.assert_array_equal(sub.vector, [1.0])
    assert sub.delta == 0.0


def test_inexact_max_tie_smallest_index():
    m = MaxOfFunctions.affine([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0])
    for delta in (0.0, 0.5, 10.0):
        sub = inexact_max_oracle(m, np.array([0.5, 0.5]), delta)
        np.testing.assert_array_equal(sub.vector, [1.0, 0.0])
        assert sub.delta == 0.0


def test_inexact_max_negative_delta():
    with pytest.raises(ArgumentError):
        inexact_max_oracle(ABS1, np.array([0.0]), -0.1)


def test_max_of_functions_validation():
    with pytest.raises(ArgumentError):
        MaxOfFunctions([], [])
    with pytest.raises(ArgumentError):
        MaxOfFunctions.quadratic([[0.0]], [-1.0], [0.0])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_inexact_max_zero_delta_matches_exact_at_non_ties(seed):
    rng = np.random.default_rng(seed)
    m = MaxOfFunctions.affine(rng.normal(size=(4, 3)), rng.normal(size=4))
    x = rng.normal(size=3)
    vals = m.component_values(x)
    j = int(np.argmax(vals))
    sub = inexact_max_oracle(m, x, 0.0)
    np.testing.assert_array_equal(sub.vector, m.components[j].grad(x))
    assert sub.value == vals.max()


# ---------------------------------------------------- perturbation


def test_perturbed_zero_noise_is_identity():
    base = abs_sum()
    p = perturbed_oracle(base, 0.0, 2.0, seed=1)
    x = np.array([0.3, -0.4])
    a, b = base(x), p(x)
    np.testing.assert_array_equal(a.vector, b.vector)
    assert b.delta == 0.0 and a.value == b.value


def test_perturbed_reported_delta_is_product():
    base = FunctionOracle(lambda x: float(x[0]), lambda x: np.ones(1), lipschitz_bound=1.0)
    p = perturbed_oracle(base, 0.05, 2.0, seed=3)
    sub = p(np.array([0.2]))
    assert sub.delta == 0.05 * 2.0
    assert sub.delta == pytest.approx(0.1)
    assert abs(sub.vector[0] - 1.0) == pytest.approx(0.05)


def test_perturbed_negative_noise():
    with pytest.raises(ArgumentError):
        perturbed_oracle(abs_sum(), -0.1, 2.0, seed=0)


def test_perturbed_validity_sweep():
    rng = np.random.default_rng(11)
    p = perturbed_oracle(abs_sum(), 0.1, 2 * math.sqrt(2), seed=5)
    worst = math.inf
    for _ in range(1000):
        x, y = rng.uniform(-1, 1, size=(2, 2))
        worst = min(worst, check_delta_subgradient(p, x, y[None, :]))
    assert worst >= -1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2**31), st.sampled_from(["l2", "linf"]))
def test_perturbed_deterministic_and_bounded(xseed, seed, kind):
    rng = np.random.default_rng(xseed)
    x = rng.uniform(-1, 1, size=3)
    p = perturbed_oracle(l1_distance(np.zeros(3)), 0.2, 1.0, seed=seed, dual_norm_kind=kind)
    a, b = p(x), p(x.copy())
    np.testing.assert_array_equal(a.vector, b.vector)
    diff = a.vector - l1_distance(np.zeros(3))(x).vector
    size = np.linalg.norm(diff) if kind == "l2" else np.max(np.abs(diff))
    assert size == pytest.approx(0.2, rel=1e-12)
    assert a.delta == 0.2 * 1.0


def test_perturbed_seeds_differ():
    x = np.array([0.1, 0.2])
    a = perturbed_oracle(abs_sum(), 0.1, 1.0, seed=1)(x).vector
    b = perturbed_oracle(abs_sum(), 0.1, 1.0, seed=2)(x).vector
    assert not np.array_equal(a, b)


# ---------------------------------------------------- constraint aggregation


def test_max_constraint_picks_violating_branch():
    g1, g2 = affine([1.0, 0.0], 1.0), affine([-1.0, 0.0], 1.0)
    value, sub, idx = max_constraint([g1, g2], np.array([0.5, 0.0]))
    assert value == -0.5
    assert idx == 0
    np.testing.assert_array_equal(sub.vector, [1.0, 0.0])


def test_max_constraint_single_passthrough():
    g = linf_ball_constraint(1.0)
    x = np.array([0.2, -0.7])
    value, sub, idx = max_constraint([g], x)
    ref = g(x)
    assert (value, idx) == (ref.value, 0)
    np.testing.assert_array_equal(sub.vector, ref.vector)


def test_max_constraint_tie_smallest_index():
    g1, g2 = affine([1.0, 0.0], 0.0), affine([0.0, 1.0], 0.0)
    x = np.array([0.3, 0.3])
    value, sub, idx = max_constraint([g1, g2], x, delta=0.1)
    assert value == 0.3 and idx == 0
    # both branches are valid subgradients of max(x1, x2) at the tie
    grid = np.stack(np.meshgrid(np.linspace(-1, 1, 81), np.linspace(-1, 1, 81)), -1).reshape(-1, 2)
    G = np.maximum(grid[:, 0], grid[:, 1])
    for v in ([1.0, 0.0], [0.0, 1.0]):
        assert np.all(G - value - (grid - x) @ np.array(v) >= -1e-12)


def test_max_constraint_near_argmax_widens_delta():
    g1, g2 = affine([1.0, 0.0], 0.0), affine([0.0, 1.0], 0.0)
    x = np.array([0.25, 0.3])
    value, sub, idx = max_constraint([g1, g2], x, delta=0.1)
    assert idx == 0 and value == 0.3
    assert sub.delta == pytest.approx(0.05)


def test_max_constraint_empty():
    with pytest.raises(ArgumentError):
        max_constraint([], np.zeros(2))


# ---------------------------------------------------- validity of built-ins


BUILTINS = {
    "l1": (l1_distance([0.3, -0.2], kink=1.0), 1.0),
    "linf": (linf_ball_constraint(0.5), 1.0),
    "affine": (affine([1.0, -2.0], 0.3), 1.0),
    "quad": (half_sq_distance([0.1, 0.1]), 1.0),
    "max_affine": (MaxOracle(MaxOfFunctions.affine([[1, 2], [-1, 0], [0, -1]], [0, 0.5, 0.1]), 0.3), 1.0),
    "max_quad": (MaxOracle(MaxOfFunctions.quadratic([[0.5, 0], [-0.5, 0]], [1, 2], [0, 0]), 0.2), 1.0),
}


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_builtin_delta_subgradient_validity(name):
    oracle, r = BUILTINS[name]
    rng = np.random.default_rng(abs(hash(name)) % 2**32)
    worst = math.inf
    for _ in range(1000):
        x, y = rng.uniform(-r, r, size=(2, 2))
        worst = min(worst, check_delta_subgradient(oracle, x, y[None, :]))
    assert worst >= -1e-9


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_builtin_batch_values_agree(name):
    oracle, _ = BUILTINS[name]
    xs = np.random.default_rng(0).uniform(-1, 1, size=(50, 2))
    np.testing.assert_allclose(oracle.values(xs), [oracle.value(x) for x in xs], rtol=1e-14, atol=1e-14)
