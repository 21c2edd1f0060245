"""Machine check of the symmetry classification claims.

Every generator of every family is classified at its claimed level; proper
generators must also fail the next stronger level with a numeric witness
above :data:`WITNESS_MIN`.  Alongside these the suite checks:

* that the general Killing, homothetic and affine forms reduce the Lie
  derivative to a single ``dy (x) dy`` term (the side condition),
* the componentwise systems against the Lie-derivative tensors,
* that ``X1(t,x,y) d_t`` and ``X1(y) d_t`` are Ricci and curvature
  collineations for random ``X1``,
* which grouping of an ambiguous formula makes the residual vanish,
* agreement of P_c at ``c = 0, alpha = 1`` with CW_{+1}.

Results that go beyond the claims (a Killing field missing from a list)
are reported as observations and do not affect the verdict.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import sympy as sp

from . import symexpr
from .classifier import (
    HIERARCHY, Level, Status, Verdict, homothety_factor, system_mismatches, verdict_for,
)
from .families import Generator, SymmetryFamily, canonical_tag, cw_killing_basis, generate_family
from .lie_symmetry import VectorField, bracket, lie_connection, lie_metric
from .symexpr import T, Trilean, X, Y
from .walker_geometry import Tensor, build_manifold, metric_and_inverse

WITNESS_MIN = 1e-3
N_RANDOM_FIELDS = 5

FAMILY_RUNS = {
    "N_b": [{"b": 1}, {"b": 2}, {"b": -1}],
    "CW": [{"eps": 1}, {"eps": -1}],
    "P_c": [{}, {"c": 5, "k": 20}, {"c": 0, "alpha": 1}],
    "cflat": [{}],
}


@dataclass(frozen=True)
class Check:
    clause: str
    subject: str
    kind: str
    level: str
    expected: str
    observed: str
    passed: bool
    eta: str = ""
    witness: str = ""
    residual: str = ""
    note: str = ""

    @property
    def counts(self) -> bool:
        return self.kind != "observation"

    def record(self) -> dict[str, str]:
        rec = {"clause": self.clause, "subject": self.subject, "kind": self.kind, "level": self.level,
               "expected": self.expected, "observed": self.observed,
               "result": "pass" if self.passed else "fail"}
        for key in ("eta", "witness", "residual", "note"):
            value = getattr(self, key)
            if value:
                rec[key] = value
        if not self.counts:
            rec["result"] = "info"
        return rec

    def text(self) -> str:
        tag = "INFO" if not self.counts else ("PASS" if self.passed else "FAIL")
        line = f"{tag} {self.clause} :: {self.subject} [{self.kind}] {self.level}: expected {self.expected}, got {self.observed}"
        if self.eta:
            line += f" eta={self.eta}"
        if self.witness:
            line += f" witness {self.witness}"
        if self.residual:
            line += f" residual {self.residual}"
        if self.note:
            line += f" ({self.note})"
        return line


@dataclass
class VerificationReport:
    seed: int
    checks: list[Check] = field(default_factory=list)

    def add(self, check: Check):
        self.checks.append(check)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.counts and not c.passed]

    @property
    def inconclusive(self) -> list[Check]:
        return [c for c in self.checks if c.counts and c.observed == str(Status.UNKNOWN)]

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 4

    def text_lines(self) -> list[str]:
        lines = [c.text() for c in self.checks]
        n = sum(c.counts for c in self.checks)
        lines.append(f"summary: {n - len(self.failures)}/{n} checks passed, "
                     f"{len(self.inconclusive)} inconclusive, "
                     f"{sum(not c.counts for c in self.checks)} observations")
        return lines

    def records(self) -> list[dict[str, str]]:
        out = [c.record() for c in self.checks]
        n = sum(c.counts for c in self.checks)
        out.append({"kind": "summary", "checks": str(n), "failed": str(len(self.failures)),
                    "inconclusive": str(len(self.inconclusive)), "result": "pass" if self.passed else "fail"})
        return out


def _witness_text(v: Verdict) -> str:
    return v.witness.describe() if v.witness is not None else ""


def _residual_text(v: Verdict) -> str:
    if v.component and v.residual is not None:
        return f"{v.component} = {symexpr.render(v.residual)}"
    if v.unresolved:
        return "; ".join(f"{label} = {symexpr.render(e)}" for label, e in v.unresolved)
    return ""


# --------------------------------------------------------------------------
# generator claims
# --------------------------------------------------------------------------

def check_generator(clause: str, fam: SymmetryFamily, gen: Generator, seed: int = 0) -> list[Check]:
    W = gen.manifold or fam.manifold
    rules = tuple(gen.rules) + tuple(fam.rules)
    v = verdict_for(W, gen.field, gen.level, rules, seed)
    eta_text, note = "", ""
    ok = v.holds
    if gen.eta is not None and v.holds:
        eta = symexpr.normalize(homothety_factor(W, gen.field, rules), rules)
        eta_text = symexpr.render(eta)
        if not symexpr.equal(eta, gen.eta, rules):
            ok = False
            note = f"claimed eta = {symexpr.render(gen.eta)}"
    out = [Check(clause, gen.name, "claim", str(gen.level), "holds", str(v.status), ok, eta_text,
                 _witness_text(v), _residual_text(v), note)]
    if gen.proper and gen.stronger is not None:
        vs = verdict_for(W, gen.field, gen.stronger, rules, seed)
        strong_ok = vs.fails and vs.witness is not None and abs(vs.witness.value) > WITNESS_MIN
        out.append(Check(clause, gen.name, "proper", str(gen.stronger), "fails", str(vs.status), strong_ok,
                         witness=_witness_text(vs), residual=_residual_text(vs)))
    return out


def check_readings(clause: str, fam: SymmetryFamily, seed: int = 0) -> list[Check]:
    """Each ambiguous formula must have exactly one vanishing reading."""
    out = []
    for reading in fam.readings:
        statuses = []
        for label, field_, rules in reading.candidates:
            v = verdict_for(reading.manifold, field_, reading.level, tuple(rules) + tuple(fam.rules), seed)
            statuses.append((label, v))
        adopted = [label for label, v in statuses if v.holds]
        rejected = [(label, v) for label, v in statuses if v.fails]
        ok = len(adopted) == 1 and len(rejected) == len(statuses) - 1
        note = "; ".join(f"{label}: {v.status}" for label, v in statuses)
        witness = _witness_text(rejected[0][1]) if rejected else ""
        out.append(Check(clause, reading.name, "reading", str(reading.level), "one reading holds",
                         f"adopted {adopted[0]}" if len(adopted) == 1 else f"{len(adopted)} readings hold",
                         ok, witness=witness, note=note))
    return out


def _mutated(gen: Generator) -> Generator:
    X1, X2, X3 = gen.field.components
    return Generator(gen.name + " (sign-flipped X2)", VectorField((X1, -X2, X3), gen.field.name),
                     gen.level, gen.eta, gen.proper, gen.rules, gen.manifold)


def check_family(fam: SymmetryFamily, seed: int = 0, inject_fault: bool = False) -> list[Check]:
    out = []
    clause = fam.label
    injected = False
    for gen in fam.generators:
        if inject_fault and not injected and gen.level is Level.KILLING and gen.field[1] != 0:
            gen = _mutated(gen)
            injected = True
        out += check_generator(clause, fam, gen, seed)
    out += check_readings(clause, fam, seed)
    for name, expr in fam.constraints:
        if fam.tag == "cflat":
            continue
        test = symexpr.is_zero(expr, fam.rules, seed=seed)
        out.append(Check(clause, name, "constraint", "-", "zero", str(test.status), test.status is Trilean.ZERO,
                         residual=symexpr.render(test.canonical)))
    for gen in fam.extras:
        W = gen.manifold or fam.manifold
        v = verdict_for(W, gen.field, gen.level, tuple(gen.rules) + tuple(fam.rules), seed)
        out.append(Check(clause, gen.name, "observation", str(gen.level), "not in the printed list",
                         str(v.status), True,
                         note="Killing field with nonzero d_y component" if v.holds else ""))
    return out


# --------------------------------------------------------------------------
# general f: the integrated Killing / homothetic / affine forms
# --------------------------------------------------------------------------

def _dy_square(E) -> Tensor:
    return Tensor.build("dd", lambda i, j: E if (i, j) == (2, 2) else 0, "E dy dy")


def _affine_defect(W, E) -> Tensor:
    """C^k_ij = 1/2 [delta^k_t (E_i dy_j + E_j dy_i) - g^{kl} E_l dy_i dy_j]."""
    _, ginv = metric_and_inverse(W)
    dE = [sp.diff(E, v) for v in (T, X, Y)]
    dy = (0, 0, 1)

    def comp(k, i, j):
        e = int(k == 0) * (dE[i] * dy[j] + dE[j] * dy[i])
        e -= sum(ginv[k, l] * dE[l] for l in range(3)) * dy[i] * dy[j]
        return e / 2

    return Tensor.build("udd", comp, "C")


def _tensor_zero(name: str, Tt: Tensor, seed: int) -> tuple[bool, str, str]:
    for idx, e in Tt.nonzero():
        test = symexpr.is_zero(e, seed=seed)
        if test.status is not Trilean.ZERO:
            return False, str(test.status), f"{Tt.label(idx)} = {symexpr.render(test.canonical)}"
    return True, "zero", ""


def check_walker_forms(seed: int = 0) -> list[Check]:
    """For arbitrary f, the printed field forms leave exactly the printed side condition."""
    W = build_manifold("f(x,y)")
    g, _ = metric_and_inverse(W)
    P = W.parse
    clause = "general f: Killing, homothetic, affine forms"
    out = []

    kil = VectorField.parse(["-c1*t - x*f1'(y) + f2(y)", "f1(y)", "c1*y + c2"])
    E7 = P("2*c1*f(x,y) - 2*f1''(y)*x + 2*f2'(y) + f1(y)*diff(f(x,y),x) + (c1*y + c2)*diff(f(x,y),y)")
    Lg = lie_metric(W, kil)
    ok, obs, res = _tensor_zero("killing", Lg - _dy_square(E7), seed)
    out.append(Check(clause, "L_X g = E dy^2 for the Killing form", "identity", "killing", "zero", obs, ok,
                     residual=res, note="E is the Killing side condition"))

    eta = symexpr.parameter("eta")
    hom = VectorField.parse(["eta*t - c1*t - x*f1'(y) + f2(y)", "eta/2*x + f1(y)", "c1*y + c2"])
    E9 = P("(2*c1 - eta)*f(x,y) - 2*f1''(y)*x + 2*f2'(y) + (eta/2*x + f1(y))*diff(f(x,y),x)"
           " + (c1*y + c2)*diff(f(x,y),y)")
    Lg = lie_metric(W, hom)
    ok, obs, res = _tensor_zero("homothetic", Lg - g.scaled(eta) - _dy_square(E9), seed)
    out.append(Check(clause, "L_X g - eta g = E dy^2 for the homothetic form", "identity", "homothetic",
                     "zero", obs, ok, residual=res))

    aff = VectorField.parse(["c3*t - x*f1'(y) + f2(y)", "(c1 + c3)/2*x + f1(y)", "c1*y + c2"])
    E11 = P("(c1 - c3)*f(x,y) - 2*f1''(y)*x + 2*f2'(y) + ((c1 + c3)/2*x + f1(y))*diff(f(x,y),x)"
            " + (c1*y + c2)*diff(f(x,y),y) + c4")
    c1, c3, c4 = (symexpr.parameter(n) for n in ("c1", "c3", "c4"))
    Lg = lie_metric(W, aff)
    ok, obs, res = _tensor_zero("affine metric", Lg - g.scaled(c1 + c3) - _dy_square(E11 - c4), seed)
    out.append(Check(clause, "L_X g = (c1+c3) g + (E - c4) dy^2 for the affine form", "identity", "affine",
                     "zero", obs, ok, residual=res))
    Ln = lie_connection(W, aff)
    ok, obs, res = _tensor_zero("affine", Ln - _affine_defect(W, E11), seed)
    out.append(Check(clause, "L_X nabla depends only on dE for the affine form", "identity", "affine",
                     "zero", obs, ok, residual=res))
    return out


def check_systems(seed: int = 0) -> list[Check]:
    """The componentwise systems coincide with the Lie-derivative tensors for arbitrary f and X."""
    W = build_manifold("f(x,y)")
    Xg = VectorField.parse(["X1(t,x,y)", "X2(t,x,y)", "X3(t,x,y)"])
    Xr = VectorField.parse(["X1(t,x,y)", "X2(t,x,y)", "X3(y)"])
    eta = symexpr.parameter("eta")
    out = []
    for label, field_ in (("arbitrary X", Xg), ("X3 = X3(y)", Xr)):
        bad = system_mismatches(W, field_, eta)
        out.append(Check("componentwise systems", label, "identity", "all", "no mismatch",
                         "no mismatch" if not bad else ",".join(bad), not bad))
    return out


def check_cflat_coefficients(seed: int = 0) -> list[Check]:
    """The side condition for f = p x^2 + q x + r splits into the x^2, x and 1 coefficients."""
    from .families import cflat_constraints
    fam = generate_family("cflat")
    W = fam.manifold
    out = []
    for kind in ("killing", "homothetic"):
        gen = fam.generator(f"{kind}_general")
        Lg = lie_metric(W, gen.field)
        eta = gen.eta if gen.eta is not None else 0
        resid = symexpr.normalize(Lg[2, 2] - eta * W.f)
        (_, a2), (_, a1), (_, a0) = cflat_constraints(kind)
        ok = symexpr.equal(resid, a2 * X ** 2 - a1 * X + a0)
        out.append(Check(fam.label, f"{kind} side condition by powers of x", "identity", kind, "zero",
                         "zero" if ok else "nonzero", ok))
    return out


# --------------------------------------------------------------------------
# infinite families, algebra structure, cross-family consistency
# --------------------------------------------------------------------------

def check_infinite_dimensional(seed: int = 0, n: int = N_RANDOM_FIELDS) -> list[Check]:
    rng = np.random.default_rng(seed)
    W = build_manifold("f(x,y)")
    clause = "ricci/curvature collineations are infinite-dimensional"
    out = []
    for i in range(n):
        X1 = symexpr.random_smooth((T, X, Y), rng, degree=3)
        v = verdict_for(W, VectorField.of(X1, 0, 0), Level.RICCI, seed=seed)
        out.append(Check(clause, f"random X1(t,x,y)*d_t #{i + 1}", "consequence", str(Level.RICCI), "holds",
                         str(v.status), v.holds, note=symexpr.render(X1)))
    for i in range(n):
        X1 = symexpr.random_smooth((Y,), rng, degree=4)
        v = verdict_for(W, VectorField.of(X1, 0, 0), Level.CURVATURE, seed=seed)
        out.append(Check(clause, f"random X1(y)*d_t #{i + 1}", "consequence", str(Level.CURVATURE), "holds",
                         str(v.status), v.holds, note=symexpr.render(X1)))
    v = verdict_for(W, VectorField.of(T, 0, 0), Level.CURVATURE, seed=seed)
    out.append(Check(clause, "t*d_t", "proper", str(Level.CURVATURE), "fails", str(v.status),
                     v.fails and v.witness is not None and abs(v.witness.value) > WITNESS_MIN,
                     witness=_witness_text(v), residual=_residual_text(v)))
    return out


def killing_rank(fields: Iterable[VectorField], seed: int = 0, n_points: int = 6) -> int:
    """Rank of the fields as functions, from their values at a few random points."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-2, 2, size=(n_points, 3))
    rows = []
    for Xf in fields:
        row = []
        for c in Xf.components:
            row.extend(symexpr.eval_numeric(c, p) for p in pts)
        rows.append(row)
    return int(np.linalg.matrix_rank(np.array(rows, dtype=float), tol=1e-9))


def check_cw_algebra(eps: int, seed: int = 0) -> list[Check]:
    fam = generate_family("CW", {"eps": eps})
    basis = cw_killing_basis(eps)
    clause = fam.label
    rank = killing_rank(basis, seed)
    out = [Check(clause, "Killing generators c1..c4", "dimension", "killing", "4", str(rank), rank == 4)]
    for i in range(len(basis)):
        for j in range(i + 1, len(basis)):
            br = bracket(basis[i], basis[j])
            v = verdict_for(fam.manifold, br, Level.KILLING, seed=seed)
            out.append(Check(clause, f"[K{i + 1},K{j + 1}] = {br.render()}", "closure", "killing", "holds",
                             str(v.status), v.holds, residual=_residual_text(v)))
    return out


def check_pc_cw_consistency(seed: int = 0) -> list[Check]:
    """P_c with c = 0 and alpha = 1 against CW_{+1}, with h in {sin, cos}."""
    pc = generate_family("P_c", {"c": 0, "alpha": 1})
    cw = generate_family("CW", {"eps": 1})
    clause = "P_c(c=0, alpha=1) vs CW_+1"
    out = []
    same = symexpr.equal(pc.manifold.f, cw.manifold.f)
    out.append(Check(clause, "defining function", "consistency", "-", "equal", "equal" if same else "different", same))
    general = pc.generator("killing_general").field
    produced = []
    for h in ("sin(y)", "cos(y)"):
        hx = symexpr.parse(h)
        ode = symexpr.normalize(sp.diff(hx, Y, 2) + hx)
        out.append(Check(clause, f"h = {h} solves h'' + h = 0", "consistency", "-", "zero",
                         "zero" if ode == 0 else symexpr.render(ode), ode == 0))
        produced.append(general.substitute({"h": hx, "c1": 0}).normalized())
    produced.append(general.substitute({"h": 0, "c1": 1}).normalized())
    cw_basis = cw_killing_basis(1)
    for Xp in produced:
        match = [k for k, Xc in enumerate(cw_basis)
                 if all(symexpr.equal(a, b) for a, b in zip(Xp.components, Xc.components))]
        out.append(Check(clause, Xp.render(), "consistency", "killing", "matches a CW_+1 generator",
                         f"matches c{match[0] + 1}" if match else "no match", bool(match)))
    covered = set()
    for Xp in produced:
        for k, Xc in enumerate(cw_basis):
            if all(symexpr.equal(a, b) for a, b in zip(Xp.components, Xc.components)):
                covered.add(k)
    missing = [cw_basis[k].render() for k in range(len(cw_basis)) if k not in covered]
    out.append(Check(clause, "CW_+1 generators not produced by the P_c list", "observation", "killing",
                     "none", ", ".join(missing) if missing else "none", True,
                     note="d_y is Killing on P_c at c = 0 as well" if missing else ""))
    return out


# --------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------

def verify_theorems(seed: int = 0, family: str | None = None, inject_fault: bool = False) -> VerificationReport:
    """Run the full claim suite (or one family's part of it)."""
    report = VerificationReport(seed)
    tag = canonical_tag(family) if family else None
    faulted = False

    def run_family(t):
        nonlocal faulted
        for params in FAMILY_RUNS[t]:
            fam = generate_family(t, params)
            for c in check_family(fam, seed, inject_fault and not faulted):
                report.add(c)
            faulted = True

    if tag is None:
        for c in check_walker_forms(seed) + check_systems(seed):
            report.add(c)
        fam = generate_family("general")
        for c in check_family(fam, seed):
            report.add(c)
        for c in check_infinite_dimensional(seed):
            report.add(c)
    for t in ("N_b", "P_c", "CW", "cflat"):
        if tag is not None and tag != t:
            continue
        run_family(t)
        if t == "CW":
            for eps in (1, -1):
                for c in check_cw_algebra(eps, seed):
                    report.add(c)
        if t == "P_c":
            for c in check_pc_cw_consistency(seed):
                report.add(c)
        if t == "cflat":
            for c in check_cflat_coefficients(seed):
                report.add(c)
    return report
