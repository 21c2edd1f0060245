"""End-to-end acceptance criteria, each with its tolerance and time budget.

Every test prints one ``ACCEPTANCE <n> PASS|FAIL`` line.  Memo caches are
cleared before each timed block so the timings are cold.
"""

import re
import sys
import time

import numpy as np
import pytest

import walkersym
from walkersym import symexpr as se
from walkersym.classifier import system_mismatches
from walkersym.corpus import CORPUS, probe_field
from walkersym.families import cw_killing_basis, generate_family
from walkersym.lie_symmetry import VectorField
from walkersym.numeric_oracle import SamplePlan, flow_defects, oracle_check
from walkersym.symexpr import Trilean
from walkersym.verification import check_infinite_dimensional, check_pc_cw_consistency, verify_theorems
from walkersym.walker_geometry import (
    build_manifold, christoffel, closed_forms, compare_tensors, nabla_metric, nabla_riemann, recurrence_residual,
    ricci_and_scalar, riemann,
)

WITNESS_MIN = 1e-3


def clear_caches():
    for name, mod in list(sys.modules.items()):
        if name.startswith(walkersym.__name__):
            for obj in vars(mod).values():
                if callable(getattr(obj, "cache_clear", None)):
                    obj.cache_clear()


class Timer:
    def __enter__(self):
        clear_caches()
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def report(capsys, n, title, ok, elapsed, budget, detail=""):
    ok = ok and elapsed < budget
    with capsys.disabled():
        print(f"\nACCEPTANCE {n} {'PASS' if ok else 'FAIL'} {title}: {elapsed:.2f} s (budget {budget} s)"
              + (f"; {detail}" if detail else ""))
    return ok


def zero(e):
    return se.is_zero(e).status is Trilean.ZERO


def test_corpus_covers_required_functions():
    fs = [build_manifold(e.f, positive=e.positive).f for e in CORPUS]
    required = ["-2*exp(x)", "-exp(2*x)/2", "-2*exp(-x)", "-x^2", "x^2", "exp(x + y)"]
    assert len(CORPUS) >= 10
    for r in required:
        assert any(se.equal(f, se.parse(r)) for f in fs), r
    names = {e.name for e in CORPUS}
    assert {"P_c concrete", "conformally flat"} <= names


def test_1_closed_forms(capsys):
    bad = []
    with Timer() as tm:
        for entry in CORPUS:
            W = entry.manifold()
            cf = closed_forms(W)
            for label, T, ref in (("Gamma", christoffel(W), cf["christoffel"]), ("R", riemann(W), cf["riemann"]),
                                  ("nablaR", nabla_riemann(W), cf["nabla_riemann"]),
                                  ("rho", ricci_and_scalar(W)[0], cf["ricci"])):
                if compare_tensors(T, ref):
                    bad.append(f"{entry.name}:{label}")
    ok = report(capsys, 1, "closed-form tensor agreement", not bad, tm.elapsed, 5,
                f"{len(CORPUS)} functions, mismatches: {bad or 'none'}")
    assert ok


def test_2_structural_identities(capsys):
    bad = []
    with Timer() as tm:
        for entry in CORPUS:
            W = entry.manifold()
            G = christoffel(W)
            R = riemann(W)
            checks = {
                "tau": zero(ricci_and_scalar(W)[1]),
                "nabla g": all(zero(e) for _, e in nabla_metric(W).nonzero()),
                "torsion": all(zero(G[k, i, j] - G[k, j, i]) for k in range(3) for i in range(3) for j in range(3)),
                "bianchi": all(zero(R[k, a, b, c] + R[k, b, c, a] + R[k, c, a, b])
                               for k in range(3) for a in range(3) for b in range(3) for c in range(3)),
                "recurrence": all(zero(e) for _, e in recurrence_residual(W).nonzero()),
            }
            bad += [f"{entry.name}:{k}" for k, v in checks.items() if not v]
    ok = report(capsys, 2, "structural identities", not bad, tm.elapsed, 10, f"failures: {bad or 'none'}")
    assert ok


def test_3_systems_match_lie_tensors(capsys):
    eta = se.parameter("eta")
    fields = [VectorField.parse(["X1(t,x,y)", "X2(t,x,y)", "X3(t,x,y)"]),
              VectorField.parse(["X1(t,x,y)", "X2(t,x,y)", "X3(y)"])]
    bad = []
    with Timer() as tm:
        W = build_manifold("f(x,y)")
        for X_ in fields:
            bad += system_mismatches(W, X_, eta)
    ok = report(capsys, 3, "componentwise systems vs Lie-derivative tensors", not bad, tm.elapsed, 10,
                f"mismatches: {bad or 'none'}")
    assert ok


def _witness_value(check):
    m = re.search(r"value=(\S+)", check.witness)
    return abs(float(m.group(1))) if m else 0.0


def test_4_claim_suite(capsys):
    with Timer() as tm:
        rep = verify_theorems(seed=0)
    proper = {(c.clause.split("(")[0], c.subject): c for c in rep.checks if c.kind == "proper"}
    required = [("CW_+1", "2t*d_t+x*d_x"), ("CW_-1", "2t*d_t+x*d_x")]
    for fam in ("N_b", "P_c", "CW_+1"):
        required += [(fam, "y*d_t"), (fam, "y^2*d_t"), (fam, "t*d_t")]
    required += [("N_b", "curvature_f1=y^2"), ("N_b", "ricci_f1=y"), ("CW_+1", "ricci_x2=t*x")]
    missing = [r for r in required if r not in proper]
    weak = [k for k, c in proper.items() if not (c.passed and _witness_value(c) > WITNESS_MIN)]
    n = sum(c.counts for c in rep.checks)
    ok = report(capsys, 4, "verify-paper", rep.exit_code == 0 and not missing and not weak, tm.elapsed, 60,
                f"{n - len(rep.failures)}/{n} checks, {len(proper)} properness witnesses, "
                f"missing {missing or 'none'}, weak {weak or 'none'}")
    assert ok, [c.text() for c in rep.failures]


def test_5_infinite_dimensionality(capsys):
    with Timer() as tm:
        checks = check_infinite_dimensional(seed=0, n=5)
    consequences = [c for c in checks if c.kind == "consequence"]
    ok = report(capsys, 5, "random X1 d_t collineations", len(consequences) == 10 and all(c.passed for c in consequences),
                tm.elapsed, 5, f"{sum(c.passed for c in consequences)}/10 symbolic Zero")
    assert ok


def test_6_oracle_equivalence(capsys):
    worst, ratios, failed = 0.0, [], []
    with Timer() as tm:
        for entry in CORPUS:
            W = entry.manifold()
            plan = SamplePlan(seed=0, count=100, guards=entry.guards)
            rep = oracle_check(W, [probe_field()], plan, tol=1e-6, values=entry.values)
            assert rep.n_points == 100
            worst = max(worst, rep.worst.error)
            ratios += [c.ratio for c in rep.comparisons if c.ratio is not None]
            failed += [f"{entry.name}:{c.subject}" for c in rep.comparisons if not c.passed]
    ok = report(capsys, 6, "finite-difference oracle", not failed, tm.elapsed, 30,
                f"worst relative error {worst:.2e}, halving ratios {min(ratios):.3f}..{max(ratios):.3f}, "
                f"failures: {failed or 'none'}")
    assert ok


def test_7_flow_pullback(capsys):
    s = 1e-2
    plan = SamplePlan(seed=0, count=20, box=2.0)
    with Timer() as tm:
        killing = [flow_defects(generate_family("CW", {"eps": eps}).manifold, K, plan, s).max()
                   for eps in (1, -1) for K in cw_killing_basis(eps)]
        H = VectorField.parse(["2*t", "x", "0"])
        homothetic = [flow_defects(generate_family("CW", {"eps": eps}).manifold, H, plan, s, eta=2.0).max()
                      for eps in (1, -1)]
        A = VectorField.parse(["y", "0", "0"])
        affine = flow_defects(build_manifold("-x^2"), A, plan, s)
    rel = np.abs(affine - 2 * abs(s)) / (2 * abs(s))
    ok = max(killing) < 1e-6 and max(homothetic) < 1e-6 and rel.max() < 0.1
    ok = report(capsys, 7, "flow pullback", ok, tm.elapsed, 10,
                f"Killing {max(killing):.1e}, homothetic {max(homothetic):.1e}, "
                f"y*d_t {affine.min():.4f}..{affine.max():.4f} vs {2 * abs(s)}")
    assert ok


def test_8_pc_cw_consistency(capsys):
    with Timer() as tm:
        checks = check_pc_cw_consistency()
        pc = generate_family("P_c", {"c": 0, "alpha": 1})
        cw = cw_killing_basis(1)
        by_h = [pc.generator(n).field for n in ("killing_h=sin", "killing_h=cos")]
        exact = all(se.equal(a, b) for Xp, Xc in zip(by_h, cw[:2]) for a, b in zip(Xp.components, Xc.components))
    counted = [c for c in checks if c.counts]
    ok = report(capsys, 8, "P_c(c=0, alpha=1) vs CW_+1", exact and all(c.passed for c in counted), tm.elapsed, 5,
                "h = sin, cos give the rotation generators exactly")
    assert ok
