import numpy as np
import pytest

from walkersym.corpus import CORPUS, probe_field
from walkersym.lie_symmetry import VectorField, lie_metric
from walkersym.numeric_oracle import (
    Comparison, OracleError, Realization, SamplePlan, SingularMetricError, fd_lie, fd_tensors, flow,
    flow_defects, flow_pullback_check, make_realization, oracle_check, relative_error, symbolic_values,
    walker_metric,
)
from walkersym.walker_geometry import build_manifold

CW = build_manifold("-x^2")
N1 = build_manifold("-2*exp(x)")
P010 = np.array([[0.0, 1.0, 0.0]])
ORIGIN = np.zeros((1, 3))


def as_float(a):
    return np.array(a, dtype=float)


def test_cw_christoffel_at_a_point():
    d = fd_tensors(walker_metric(CW), P010)
    assert as_float(d["Gamma"][0, 1, 2, 0]) == pytest.approx(-1, abs=1e-8)
    assert as_float(d["Gamma"][0, 2, 1, 0]) == pytest.approx(-1, abs=1e-8)
    assert as_float(d["ginv"][..., 0]) @ as_float(d["g"][..., 0]) == pytest.approx(np.eye(3), abs=1e-30)


def test_nb_ricci_at_origin():
    d = fd_tensors(walker_metric(N1), ORIGIN)
    rho = as_float(d["rho"][..., 0])
    assert rho[2, 2] == pytest.approx(1, abs=1e-8)
    rho[2, 2] = 0
    assert np.abs(rho).max() < 1e-8
    assert abs(float(d["tau"][0])) < 1e-8


@pytest.mark.parametrize("comps,expected", [
    (("1", "0", "0"), np.zeros((3, 3))),
    (("y", "0", "0"), np.diag([0.0, 0.0, 2.0])),
    (("t", "0", "0"), np.array([[0, 0, 1.0], [0, 0, 0], [1.0, 0, 0]])),
])
def test_lie_metric_values(comps, expected):
    L = as_float(fd_lie("g", CW, VectorField.parse(comps), P010)[..., 0])
    assert L == pytest.approx(expected, abs=1e-8)


def test_singular_metric_rejected():
    def degenerate(t, x, y):
        return np.zeros((3, 3, np.size(t)), dtype=object)

    with pytest.raises(SingularMetricError):
        fd_tensors(degenerate, ORIGIN)


def test_sample_plan_guards_and_determinism():
    entry = next(e for e in CORPUS if e.guards)
    W = entry.manifold()
    real = make_realization([W.f], 0, entry.values)
    plan = SamplePlan(seed=5, count=40, guards=entry.guards)
    pts = plan.points(W, real)
    assert pts.shape == (40, 3)
    assert np.all(plan.admissible(W, real, pts))
    assert np.all(4 - pts[:, 2] > 0)
    assert np.array_equal(pts, plan.points(W, real))
    assert not np.array_equal(pts, SamplePlan(seed=6, count=40, guards=entry.guards).points(W, real))


def test_sample_plan_gives_up_on_flat_region():
    W = build_manifold("x^2/1000")
    with pytest.raises(OracleError):
        SamplePlan(count=5).points(W, Realization())


def test_realization_is_seeded():
    W = build_manifold("x^2*a(y) + b*x")
    r1, r2 = make_realization([W.f], 3), make_realization([W.f], 3)
    assert r1 == r2 and r1 != make_realization([W.f], 4)
    assert make_realization([W.f], 3, {"b": 0.5}).params == (("b", 0.5),)


def test_relative_error_detects_a_wrong_tensor():
    X = probe_field()
    L = lie_metric(CW, X)
    pts = SamplePlan(count=10).points(CW, Realization())
    fd = fd_lie("g", CW, X, pts)
    good, _ = relative_error(symbolic_values(L, Realization(), pts), fd)
    assert good < 1e-8
    bad, _ = relative_error(symbolic_values(L.scaled(1.001), Realization(), pts), fd)
    assert bad > 1e-4


def test_richardson_ratio():
    rep = oracle_check(N1, [probe_field()], SamplePlan(count=10))
    assert rep.passed
    ratios = [c.ratio for c in rep.comparisons if c.ratio is not None]
    assert ratios and all(3 <= r <= 5 for r in ratios)
    assert Comparison("x", 1e-9, 1e-9, (0, 0, 0)).passed is False
    assert Comparison("x", 1e-30, 1e-30, (0, 0, 0)).ratio is None


def test_oracle_check_is_deterministic():
    W = build_manifold("x^2*a(y) + exp(x)", positive=("a",))
    plan = SamplePlan(seed=2, count=8)
    a = [c.record() for c in oracle_check(W, [probe_field()], plan).comparisons]
    b = [c.record() for c in oracle_check(W, [probe_field()], plan).comparisons]
    assert a == b


def test_flow_of_translation():
    end = flow(VectorField.parse(("1", "0", "0")), [[0.0, 0.5, 0.25]], 0.3)
    assert end[0] == pytest.approx([0.3, 0.5, 0.25], abs=1e-14)


def test_flow_pullback():
    X = VectorField.parse(("sin(y)*x", "cos(y)", "0"))
    assert flow_pullback_check(CW, X, [0.2, 0.3, -0.4]) < 1e-8
    H = VectorField.parse(("2*t", "x", "0"))
    assert flow_pullback_check(CW, H, [0.2, 0.3, -0.4], eta=2.0) < 1e-8
    assert flow_pullback_check(CW, H, [0.2, 0.3, -0.4]) > 1e-3
    A = VectorField.parse(("y", "0", "0"))
    d = flow_defects(CW, A, SamplePlan(count=5), s=1e-2)
    assert d == pytest.approx(2e-2, rel=1e-3)
