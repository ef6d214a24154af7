"""Factor algebra, checked against hand-computed tables and numpy."""

import random

import numpy as np
import pytest

from hierax.factors import Factor, divide, marginalize, multiply, product


def test_multiply_disjoint_scopes_is_outer_product():
    a = Factor(("x",), np.array([0.2, 0.8]))
    b = Factor(("y",), np.array([0.5, 0.5]))
    f = multiply(a, b)
    assert f.scope == ("x", "y")
    np.testing.assert_allclose(f.values, np.outer([0.2, 0.8], [0.5, 0.5]))


def test_multiply_shared_variable_aligns_axes():
    a = Factor(("x", "y"), np.array([[1.0, 2.0], [3.0, 4.0]]))
    b = Factor(("y",), np.array([10.0, 100.0]))
    f = multiply(a, b)
    np.testing.assert_allclose(f.aligned(("x", "y")), [[10.0, 200.0], [30.0, 400.0]])


def test_marginalize_drops_named_axes():
    f = Factor(("x", "y"), np.array([[1.0, 2.0], [3.0, 4.0]]))
    m = marginalize(f, ("y",))
    assert m.scope == ("x",)
    np.testing.assert_allclose(m.values, [3.0, 7.0])


def test_marginalize_everything_leaves_scalar_mass():
    f = Factor(("x", "y"), np.full((2, 3), 0.5))
    m = f.marginalize(("x", "y"))
    assert m.scope == ()
    assert m.total() == pytest.approx(3.0)


def test_project_reorders_without_changing_content():
    rng = random.Random(7)
    vals = np.array([rng.random() for _ in range(12)]).reshape(2, 3, 2)
    f = Factor(("a", "b", "c"), vals)
    g = f.project(("c", "a", "b"))
    np.testing.assert_array_equal(g.aligned(("a", "b", "c")), vals)


def test_product_of_cpts_has_unit_mass():
    # prior times two conditionals over binary variables
    px = Factor(("x",), np.array([0.3, 0.7]))
    py = Factor(("x", "y"), np.array([[0.1, 0.9], [0.6, 0.4]]))
    pz = Factor(("y", "z"), np.array([[0.5, 0.5], [0.2, 0.8]]))
    joint = product([px, py, pz])
    assert joint.total() == pytest.approx(1.0)
    # P(z=0) = sum over x,y
    np.testing.assert_allclose(
        joint.marginalize(("x", "y")).values,
        [0.3 * (0.1 * 0.5 + 0.9 * 0.2) + 0.7 * (0.6 * 0.5 + 0.4 * 0.2),
         0.3 * (0.1 * 0.5 + 0.9 * 0.8) + 0.7 * (0.6 * 0.5 + 0.4 * 0.8)],
    )


def test_unit_factor_is_multiplicative_identity():
    f = Factor(("x",), np.array([0.25, 0.75]))
    g = multiply(Factor.unit(), f)
    assert g.scope == ("x",)
    np.testing.assert_array_equal(g.values, f.values)


def test_divide_by_projection_recovers_conditional():
    joint = Factor(("x", "y"), np.array([[0.12, 0.28], [0.18, 0.42]]))
    py = joint.marginalize(("x",))
    cond = divide(joint, py)
    np.testing.assert_allclose(cond.aligned(("x", "y")).sum(axis=0), [1.0, 1.0])


def test_divide_zero_by_zero_yields_zero():
    num = Factor(("x",), np.array([0.0, 0.5]))
    den = Factor(("x",), np.array([0.0, 0.5]))
    out = divide(num, den)
    assert out.values[0] == 0.0
    assert out.values[1] == pytest.approx(1.0)


def test_divide_positive_mass_over_zero_raises():
    num = Factor(("x",), np.array([0.2, 0.8]))
    den = Factor(("x",), np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        divide(num, den)


def test_scope_shape_mismatch_rejected():
    with pytest.raises(ValueError):
        Factor(("x",), np.zeros((2, 2)))


def test_duplicate_scope_rejected():
    with pytest.raises(ValueError):
        Factor(("x", "x"), np.zeros((2, 2)))


def test_multiply_commutes_and_associates():
    rng = random.Random(3)

    def rand(scope, shape):
        return Factor(scope, np.array(
            [rng.random() for _ in range(int(np.prod(shape)))]).reshape(shape))

    a = rand(("p", "q"), (2, 2))
    b = rand(("q", "r"), (2, 3))
    c = rand(("r",), (3,))
    left = multiply(multiply(a, b), c)
    right = multiply(a, multiply(b, c))
    np.testing.assert_allclose(
        left.aligned(("p", "q", "r")), right.aligned(("p", "q", "r")), atol=1e-15
    )
    np.testing.assert_allclose(
        multiply(a, b).aligned(("p", "q", "r")),
        multiply(b, a).aligned(("p", "q", "r")),
    )
