import numpy as np
import pytest
import sympy as sp

from walkersym import symexpr as se
from walkersym.families import cw_killing_basis
from walkersym.lie_symmetry import (
    LIE_OPERATORS, VectorField, bracket, lie_connection, lie_metric, lie_ricci, lie_riemann, lie_tensor,
)
from walkersym.symexpr import Trilean, X, Y
from walkersym.walker_geometry import build_manifold

t, x, y = 0, 1, 2

GENERAL = build_manifold("x^2*a(y) + x*b(y) + exp(x)*c(y)")


def field(*texts, positive=()):
    return VectorField.parse(texts, positive)


def is_zero_tensor(T):
    return all(se.is_zero(e).status is Trilean.ZERO for _, e in T.nonzero())


def test_dt_is_killing():
    assert lie_metric(GENERAL, field("1", "0", "0")).is_zero()
    assert lie_riemann(GENERAL, field("1", "0", "0")).is_zero()


def test_y_dt_changes_only_g_yy():
    L = lie_metric(GENERAL, field("y", "0", "0"))
    assert [(idx, e) for idx, e in L.nonzero()] == [((y, y), 2)]


def test_nb_killing_field():
    W = build_manifold("-2*exp(x)")
    assert lie_metric(W, field("t", "2", "-y")).is_zero()


def test_y_dt_is_affine():
    assert lie_connection(GENERAL, field("y", "0", "0")).is_zero()


def test_cw_affine_field():
    W = build_manifold("-x^2")
    assert lie_connection(W, field("t", "x/2", "0")).is_zero()


def test_x_dt_connection_residual():
    L = lie_connection(GENERAL, field("x", "0", "0"))
    assert se.equal(L[t, y, y], GENERAL.f_x / 2)
    assert se.is_zero(L[t, y, y]).status is Trilean.NONZERO


def test_function_of_y_times_dt_is_curvature_collineation():
    assert lie_riemann(GENERAL, field("X1(y)", "0", "0")).is_zero()


def test_t_dt_curvature_residual():
    L = lie_riemann(GENERAL, field("t", "0", "0"))
    assert se.equal(L[t, x, y, x], -GENERAL.f_xx / 2)
    assert se.is_zero(L[t, x, y, x]).status is Trilean.NONZERO


def test_arbitrary_function_times_dt_is_ricci_collineation():
    assert lie_ricci(GENERAL, field("h(t,x,y)", "0", "0")).is_zero()


def test_exp_x_plus_y_ricci_collineation():
    W = build_manifold("exp(x + y)")
    assert lie_ricci(W, field("0", "-1", "1")).is_zero()


def test_y_scaling_ricci_residual():
    # the Lie-derivative component; the written equation carries a factor -2 (value -20)
    L = lie_ricci(build_manifold("-x^2"), field("0", "0", "5*y"))
    assert [(idx, e) for idx, e in L.nonzero()] == [((y, y), 10)]


def test_dispatch():
    X_ = field("y", "0", "0")
    for kind, op in LIE_OPERATORS.items():
        assert lie_tensor(kind, GENERAL, X_).format() == op(GENERAL, X_).format()
    with pytest.raises(ValueError):
        lie_tensor("weyl", GENERAL, X_)


FIELDS = [
    field("1", "0", "0"), field("y", "0", "0"), field("y^2", "0", "0"), field("t", "0", "0"),
    field("t*y + sin(x)", "x*y - t", "y^2 + x"), field("X1(t,x,y)", "0", "0"), field("0", "0", "1"),
]
MANIFOLDS = [build_manifold("-x^2"), build_manifold("-2*exp(x)"), build_manifold("x^3*y + sin(y)"), GENERAL]


@pytest.mark.parametrize("W", MANIFOLDS, ids=lambda W: se.render(W.f))
@pytest.mark.parametrize("X_", FIELDS, ids=lambda X_: X_.render())
def test_hierarchy(W, X_):
    chain = [lie_metric, lie_connection, lie_riemann, lie_ricci]
    holds = [is_zero_tensor(op(W, X_)) for op in chain]
    for stronger, weaker in zip(holds, holds[1:]):
        assert not stronger or weaker


@pytest.mark.parametrize("kind", sorted(LIE_OPERATORS))
def test_linearity(kind):
    A = field("t*y", "x", "y^2")
    B = field("sin(y)", "t - x", "1")
    a, b = sp.Rational(3, 2), -2
    combo = VectorField(tuple(a * p + b * q for p, q in zip(A.components, B.components)))
    lhs = lie_tensor(kind, GENERAL, combo)
    rhs = lie_tensor(kind, GENERAL, A).scaled(a) + lie_tensor(kind, GENERAL, B).scaled(b)
    assert (lhs - rhs).normalized().is_zero()


def test_ricci_residual_is_trace_of_curvature_residual():
    X_ = field("t*y + sin(x)", "x*y - t", "y^2 + x")
    LR = lie_riemann(GENERAL, X_)
    Lrho = lie_ricci(GENERAL, X_)
    for j in range(3):
        for l in range(3):
            assert se.equal(sum(LR[k, k, j, l] for k in range(3)), Lrho[j, l])


@pytest.mark.parametrize("eps", [1, -1])
def test_killing_brackets_close(eps):
    W = build_manifold("-x^2" if eps == 1 else "x^2")
    basis = cw_killing_basis(eps)
    for i, A in enumerate(basis):
        for B in basis[i + 1:]:
            assert lie_metric(W, bracket(A, B)).is_zero()


def test_bracket_antisymmetry_and_jacobi():
    A, B, C = field("t", "x", "0"), field("y", "0", "1"), field("x*y", "t", "y")
    assert (bracket(A, B).components) == tuple(se.normalize(-c) for c in bracket(B, A).components)
    jac = [bracket(A, bracket(B, C)), bracket(B, bracket(C, A)), bracket(C, bracket(A, B))]
    assert all(se.normalize(sum(J[k] for J in jac)) == 0 for k in range(3))


def test_vector_field_helpers():
    V = field("t", "x", "y")
    assert se.equal(V.apply(X * Y), 2 * X * Y)
    assert V.render() == "(t, x, y)"
    with pytest.raises(ValueError):
        VectorField((1, 2))
