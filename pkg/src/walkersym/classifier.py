"""Classification of a vector field in the symmetry hierarchy of g_f.

The hierarchy runs Killing => homothetic => affine => curvature
collineation => Ricci collineation.  Matter collineations coincide with
Ricci collineations because the scalar curvature vanishes, and Weyl
collineations are automatic because the Weyl tensor of a three-manifold is
zero.

:func:`residual_systems` writes out the componentwise symmetry equations in
terms of X1, X2, X3 and partials of f, each tagged with the Lie-derivative
component it must reproduce.  :func:`system_mismatches` checks that tie.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import sympy as sp

from . import symexpr
from .lie_symmetry import VectorField, lie_connection, lie_metric, lie_ricci, lie_riemann
from .symexpr import COORDINATES, Expr, RewriteRule, Trilean, Witness
from .walker_geometry import Tensor, WalkerManifold, metric_and_inverse

WEYL_NOTE = "trivial in dimension three"


class Level(enum.Enum):
    KILLING = "killing"
    HOMOTHETIC = "homothetic"
    AFFINE = "affine"
    CURVATURE = "curvature_collineation"
    RICCI = "ricci_collineation"
    MATTER = "matter_collineation"
    WEYL = "weyl_collineation"

    def __str__(self):
        return self.value


# strongest first; matter and weyl sit outside the chain
HIERARCHY = (Level.KILLING, Level.HOMOTHETIC, Level.AFFINE, Level.CURVATURE, Level.RICCI)


class Status(enum.Enum):
    HOLDS = "holds"
    FAILS = "fails"
    UNKNOWN = "unknown"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Verdict:
    level: Level
    status: Status
    component: str | None = None
    witness: Witness | None = None
    residual: Expr | None = None
    unresolved: tuple[tuple[str, Expr], ...] = ()
    note: str | None = None

    @property
    def holds(self) -> bool:
        return self.status is Status.HOLDS

    @property
    def fails(self) -> bool:
        return self.status is Status.FAILS


@dataclass
class ClassificationReport:
    field: VectorField
    verdicts: dict[Level, Verdict]
    eta: Expr | None = None
    assumptions: tuple[str, ...] = ()

    def __getitem__(self, level: Level) -> Verdict:
        return self.verdicts[level]

    def status(self, level: Level) -> Status:
        return self.verdicts[level].status

    @property
    def decided(self) -> bool:
        return all(v.status is not Status.UNKNOWN for v in self.verdicts.values())

    @property
    def unresolved(self) -> list[tuple[str, Expr]]:
        return [item for v in self.verdicts.values() for item in v.unresolved]

    def strongest(self) -> Level | None:
        for level in HIERARCHY:
            if self.verdicts[level].holds:
                return level
        return None

    def properness(self) -> dict[str, bool]:
        """A symmetry is proper when it holds and the next stronger one fails."""
        s = {lvl: self.verdicts[lvl].status for lvl in HIERARCHY}
        flags = {}
        for weaker, stronger in zip(HIERARCHY[1:], HIERARCHY[:-1]):
            flags[f"proper_{weaker}"] = s[weaker] is Status.HOLDS and s[stronger] is Status.FAILS
        return flags

    def hierarchy_consistent(self) -> bool:
        """No weaker symmetry fails while a stronger one holds."""
        seen_holds = False
        for level in HIERARCHY:
            st = self.verdicts[level].status
            if seen_holds and st is Status.FAILS:
                return False
            seen_holds = seen_holds or st is Status.HOLDS
        return True

    def text_lines(self) -> list[str]:
        lines = [f"field: {self.field.render()}"]
        for level in Level:
            v = self.verdicts[level]
            line = f"{level}: {v.status}"
            if level is Level.HOMOTHETIC and v.holds and self.eta is not None:
                line += f" (eta = {symexpr.render(self.eta)})"
            if v.fails and v.component:
                line += f" at {v.component} = {symexpr.render(v.residual)}"
                if v.witness is not None:
                    line += f", witness {v.witness.describe()}"
            if v.note:
                line += f" ({v.note})"
            lines.append(line)
            for label, expr in v.unresolved:
                lines.append(f"  undecided {label} = {symexpr.render(expr)}")
        for name, flag in self.properness().items():
            lines.append(f"{name}: {'yes' if flag else 'no'}")
        return lines

    def records(self) -> list[dict[str, str]]:
        out = []
        for level in Level:
            v = self.verdicts[level]
            rec = {"kind": "verdict", "level": str(level), "status": str(v.status)}
            if level is Level.HOMOTHETIC and self.eta is not None:
                rec["eta"] = symexpr.render(self.eta)
            if v.component:
                rec["component"] = v.component
            if v.residual is not None:
                rec["residual"] = symexpr.render(v.residual)
            if v.witness is not None:
                rec["witness"] = ",".join(f"{c:.6g}" for c in v.witness.point)
                rec["witness_value"] = f"{v.witness.value:.6g}"
            if v.unresolved:
                rec["undecided"] = ";".join(label for label, _ in v.unresolved)
            if v.note:
                rec["note"] = v.note
            out.append(rec)
        for name, flag in self.properness().items():
            out.append({"kind": "properness", "name": name, "value": "yes" if flag else "no"})
        return out


def _unique_components(T: Tensor):
    seen = set()
    for idx, e in T.nonzero():
        if e in seen:
            continue
        seen.add(e)
        yield T.label(idx), e


def decide(level: Level, residuals, rules: Sequence[RewriteRule] = (), seed: int = 0) -> Verdict:
    """Holds when every residual is Zero; Fails on the first NonZero (with its witness)."""
    unresolved = []
    for label, expr in residuals:
        test = symexpr.is_zero(expr, rules, seed=seed)
        if test.status is Trilean.ZERO:
            continue
        if test.status is Trilean.NONZERO:
            return Verdict(level, Status.FAILS, label, test.witness, test.canonical)
        unresolved.append((label, test.canonical))
    if unresolved:
        return Verdict(level, Status.UNKNOWN, unresolved=tuple(unresolved))
    return Verdict(level, Status.HOLDS)


def homothety_factor(W: WalkerManifold, X: VectorField, rules: Sequence[RewriteRule] = ()) -> Expr:
    """eta read off the (t, y) slot of L_X g, where g_ty = 1."""
    return lie_metric(W, X, rules)[0, 2]


def homothetic_residuals(W: WalkerManifold, X: VectorField, rules: Sequence[RewriteRule] = (),
                         eta: Expr | None = None) -> list[tuple[str, Expr]]:
    """Components of L_X g - eta g plus the gradient of eta (it must be constant)."""
    Lg = lie_metric(W, X, rules)
    g, _ = metric_and_inverse(W)
    if eta is None:
        eta = Lg[0, 2]
    out = [(f"eta_{name}", symexpr.normalize(sp.diff(eta, v), rules))
           for name, v in zip(("t", "x", "y"), COORDINATES)]
    diff = Tensor.build("dd", lambda i, j: symexpr.normalize(Lg[i, j] - eta * g[i, j], rules), "Lg-eta*g")
    out += list(_unique_components(diff))
    return [(label, e) for label, e in out if e != 0]


def level_residuals(W: WalkerManifold, X: VectorField, level: Level,
                    rules: Sequence[RewriteRule] = ()) -> list[tuple[str, Expr]]:
    """Labelled residual components whose joint vanishing defines ``level``."""
    rules = tuple(rules)
    if level is Level.KILLING:
        return list(_unique_components(lie_metric(W, X, rules)))
    if level is Level.HOMOTHETIC:
        return homothetic_residuals(W, X, rules)
    if level is Level.AFFINE:
        return list(_unique_components(lie_connection(W, X, rules)))
    if level is Level.CURVATURE:
        return list(_unique_components(lie_riemann(W, X, rules)))
    if level in (Level.RICCI, Level.MATTER):
        return list(_unique_components(lie_ricci(W, X, rules)))
    return []


def verdict_for(W: WalkerManifold, X: VectorField, level: Level,
                rules: Sequence[RewriteRule] = (), seed: int = 0) -> Verdict:
    """Decide a single level without computing the others."""
    if level is Level.WEYL:
        return Verdict(Level.WEYL, Status.HOLDS, note=WEYL_NOTE)
    return decide(level, level_residuals(W, X, level, rules), rules, seed)


def classify(W: WalkerManifold, X: VectorField, rules: Sequence[RewriteRule] = (),
             seed: int = 0) -> ClassificationReport:
    """Run every Lie-derivative residual for X and collect verdicts."""
    rules = tuple(rules)
    eta = symexpr.normalize(homothety_factor(W, X, rules), rules)
    verdicts = {level: verdict_for(W, X, level, rules, seed) for level in HIERARCHY}
    ricci = verdicts[Level.RICCI]
    verdicts[Level.MATTER] = Verdict(Level.MATTER, ricci.status, ricci.component, ricci.witness,
                                     ricci.residual, ricci.unresolved, note="T = rho since tau = 0")
    verdicts[Level.WEYL] = verdict_for(W, X, Level.WEYL)
    has_eta = verdicts[Level.HOMOTHETIC].holds
    return ClassificationReport(X, verdicts, eta if has_eta else None, W.assumptions)


# --------------------------------------------------------------------------
# componentwise symmetry systems
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Equation:
    """``expr = 0``; ``expr`` equals ``scale`` times the named tensor component."""

    system: str
    index: int
    expr: Expr
    component: tuple[int, ...]
    scale: Expr = sp.Integer(1)
    applicable: bool = True

    @property
    def name(self) -> str:
        return f"{self.system}[{self.index}]"


def _d(e, *names):
    return sp.diff(e, *[symexpr.COORD_BY_NAME[n] for n in names])


_t, _x, _y = 0, 1, 2


def metric_system(W: WalkerManifold, X: VectorField, eta=0) -> list[Equation]:
    """Six equations of L_X g = eta g."""
    X1, X2, X3 = X.components
    f = W.f
    fx, fy = _d(f, "x"), _d(f, "y")
    eta = symexpr.sympify(eta)
    h = sp.Rational(1, 2)
    rows = [
        (_d(X3, "t"), (_t, _t), h),
        (_d(X2, "x") - eta / 2, (_x, _x), h),
        (_d(X3, "x") + _d(X2, "t"), (_t, _x), 1),
        (_d(X3, "y") + _d(X3, "t") * f + _d(X1, "t") - eta, (_t, _y), 1),
        (f * _d(X3, "x") + _d(X1, "x") + _d(X2, "y"), (_x, _y), 1),
        (2 * _d(X3, "y") * f + 2 * _d(X1, "y") + X2 * fx + X3 * fy - eta * f, (_y, _y), 1),
    ]
    return [Equation("metric", i + 1, e, c, sp.sympify(s)) for i, (e, c, s) in enumerate(rows)]


def connection_system(W: WalkerManifold, X: VectorField) -> list[Equation]:
    """Eighteen second-order equations of L_X nabla = 0."""
    X1, X2, X3 = X.components
    f = W.f
    fx, fy = _d(f, "x"), _d(f, "y")
    fxx, fxy, fyy = _d(f, "x", "x"), _d(f, "x", "y"), _d(f, "y", "y")
    rows = [
        (_d(X1, "t", "t"), (_t, _t, _t), 1),
        (_d(X2, "t", "t"), (_x, _t, _t), 1),
        (_d(X2, "x", "x"), (_x, _x, _x), 1),
        (_d(X2, "t", "x"), (_x, _t, _x), 1),
        (_d(X3, "t", "t"), (_y, _t, _t), 1),
        (_d(X3, "x", "x"), (_y, _x, _x), 1),
        (_d(X3, "t", "x"), (_y, _t, _x), 1),
        (_d(X3, "t", "y"), (_y, _t, _y), 1),
        (_d(X1, "x", "x") + _d(X3, "x") * fx, (_t, _x, _x), 1),
        (2 * _d(X1, "t", "x") + _d(X3, "t") * fx, (_t, _t, _x), 2),
        (2 * _d(X2, "t", "y") - _d(X3, "t") * fx, (_x, _t, _y), 2),
        (2 * _d(X3, "x", "y") - _d(X3, "t") * fx, (_y, _x, _y), 2),
        (2 * _d(X1, "t", "y") + _d(X3, "t") * fy + _d(X2, "t") * fx, (_t, _t, _y), 2),
        (2 * _d(X2, "x", "y") - _d(X3, "x") * fx - _d(X2, "t") * fx, (_x, _x, _y), 2),
        (2 * _d(X3, "y", "y") + _d(X3, "x") * fx - _d(X3, "t") * fy, (_y, _y, _y), 2),
        (2 * _d(X3, "y") * fx - 2 * _d(X2, "y", "y") - _d(X2, "x") * fx + _d(X2, "t") * fy
         + X2 * fxx + X3 * fxy, (_x, _y, _y), -2),
        (_d(X3, "y") * fx + 2 * _d(X1, "x", "y") + _d(X3, "x") * fy + _d(X2, "x") * fx
         - _d(X1, "t") * fx + X2 * fxx + X3 * fxy, (_t, _x, _y), 2),
        (2 * _d(X3, "y") * fy + 2 * _d(X1, "y", "y") + _d(X1, "x") * fx + 2 * _d(X2, "y") * fx
         - _d(X1, "t") * fy + X2 * fxy + X3 * fyy, (_t, _y, _y), 2),
    ]
    return [Equation("connection", i + 1, e, c, sp.sympify(s)) for i, (e, c, s) in enumerate(rows)]


def ricci_system(W: WalkerManifold, X: VectorField) -> list[Equation]:
    """Three equations of L_X rho = 0 and the reduced equation for X3 = X3(y)."""
    X1, X2, X3 = X.components
    f = W.f
    fxx, fxxx, fxxy = _d(f, "x", "x"), _d(f, "x", "x", "x"), _d(f, "x", "x", "y")
    rows = [
        (fxx * _d(X3, "t"), (_t, _y)),
        (fxx * _d(X3, "x"), (_x, _y)),
        (2 * fxx * _d(X3, "y") + fxxx * X2 + fxxy * X3, (_y, _y)),
    ]
    out = [Equation("ricci", i + 1, e, c, sp.Integer(-2)) for i, (e, c) in enumerate(rows)]
    reduced = symexpr.normalize(_d(X3, "t")) == 0 and symexpr.normalize(_d(X3, "x")) == 0
    out.append(Equation("ricci_reduced", 1, rows[2][0], (_y, _y), sp.Integer(-2), applicable=reduced))
    return out


def residual_systems(W: WalkerManifold, X: VectorField, eta=0) -> dict[str, list[Equation]]:
    systems = {
        "metric": metric_system(W, X, eta),
        "connection": connection_system(W, X),
        "ricci": [e for e in ricci_system(W, X) if e.system == "ricci"],
        "ricci_reduced": [e for e in ricci_system(W, X) if e.system == "ricci_reduced" and e.applicable],
    }
    return systems


def system_mismatches(W: WalkerManifold, X: VectorField, eta=0,
                      rules: Sequence[RewriteRule] = ()) -> list[str]:
    """Names of equations that differ from scale times their Lie-derivative component."""
    g, _ = metric_and_inverse(W)
    eta = symexpr.sympify(eta)
    Lg = lie_metric(W, X, rules)
    targets = {
        "metric": Tensor.build("dd", lambda i, j: Lg[i, j] - eta * g[i, j]),
        "connection": lie_connection(W, X, rules),
        "ricci": lie_ricci(W, X, rules),
        "ricci_reduced": lie_ricci(W, X, rules),
    }
    bad = []
    for name, eqs in residual_systems(W, X, eta).items():
        for eq in eqs:
            if not symexpr.equal(eq.expr, eq.scale * targets[name][eq.component], rules):
                bad.append(eq.name)
    return bad



# family generators and the claim checks live in their own modules, which
# import this one; these wrappers keep them reachable from here
def generate_family(tag: str, params=None):
    from .families import generate_family as build
    return build(tag, params)


def verify_theorems(seed: int = 0, family: str | None = None, inject_fault: bool = False):
    from .verification import verify_theorems as run
    return run(seed=seed, family=family, inject_fault=inject_fault)
