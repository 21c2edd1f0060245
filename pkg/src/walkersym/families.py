"""Symmetry generators claimed for the special classes of strictly Walker metrics.

Each family bundles a manifold, the rewrite rules that encode its
constrained function symbols, and a list of generators tagged with the
symmetry level they are claimed to reach.  General forms carry free
constants (parameters ``c1``, ``c2``, ...) and free functions; basis
generators are concrete fields used for properness checks, where the next
stronger symmetry must fail.

Where a printed formula admits two groupings, both are kept as a
:class:`Reading` and the verification step picks the one whose residual
vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import sympy as sp

from . import symexpr
from .classifier import HIERARCHY, Level
from .lie_symmetry import VectorField
from .symexpr import Expr, RewriteRule
from .walker_geometry import WalkerManifold, build_manifold

FAMILY_TAGS = ("N_b", "P_c", "CW", "cflat", "general")
_ALIASES = {"Nb": "N_b", "N_b": "N_b", "Pc": "P_c", "P_c": "P_c", "CW": "CW", "CW_eps": "CW",
            "cflat": "cflat", "ConformallyFlat": "cflat", "general": "general"}


class FamilyError(ValueError):
    pass


@dataclass(frozen=True)
class Generator:
    """A vector field together with the symmetry level it is claimed to reach."""

    name: str
    field: VectorField
    level: Level
    eta: Expr | None = None
    proper: bool = False
    rules: tuple[RewriteRule, ...] = ()
    manifold: WalkerManifold | None = None

    @property
    def stronger(self) -> Level | None:
        i = HIERARCHY.index(self.level)
        return HIERARCHY[i - 1] if i > 0 else None


@dataclass(frozen=True)
class Reading:
    """Alternative interpretations of one typeset formula; exactly one should vanish."""

    name: str
    level: Level
    candidates: tuple[tuple[str, VectorField, tuple[RewriteRule, ...]], ...]
    manifold: WalkerManifold


@dataclass(frozen=True)
class SymmetryFamily:
    tag: str
    label: str
    params: tuple[tuple[str, object], ...]
    manifold: WalkerManifold
    rules: tuple[RewriteRule, ...]
    generators: tuple[Generator, ...]
    constraints: tuple[tuple[str, Expr], ...] = ()
    readings: tuple[Reading, ...] = ()
    extras: tuple[Generator, ...] = ()

    def by_level(self, level: Level) -> list[Generator]:
        return [g for g in self.generators if g.level is level]

    def generator(self, name: str) -> Generator:
        for g in self.generators:
            if g.name == name:
                return g
        raise KeyError(name)


def _field(texts, positive=(), bindings=None, name="X") -> VectorField:
    return VectorField.parse(texts, positive, name, bindings)


def canonical_tag(tag: str) -> str:
    try:
        return _ALIASES[tag]
    except KeyError:
        raise FamilyError(f"unknown family {tag!r}; expected one of {FAMILY_TAGS}") from None


def generate_family(tag: str, params: Mapping | None = None) -> SymmetryFamily:
    """Build the family named by ``tag`` (``N_b``, ``P_c``, ``CW``, ``cflat`` or ``general``)."""
    params = dict(params or {})
    builders = {"N_b": _family_nb, "P_c": _family_pc, "CW": _family_cw,
                "cflat": _family_cflat, "general": _family_general}
    return builders[canonical_tag(tag)](params)


def _check_params(params: Mapping, allowed: set[str]):
    extra = set(params) - allowed
    if extra:
        raise FamilyError(f"unexpected parameters {sorted(extra)}; allowed {sorted(allowed)}")


def _common_basis() -> list[Generator]:
    """Fields that every strictly Walker metric shares."""
    return [
        Generator("d_t", _field(["1", "0", "0"]), Level.KILLING),
        Generator("y*d_t", _field(["y", "0", "0"]), Level.AFFINE, proper=True),
        Generator("y^2*d_t", _field(["y^2", "0", "0"]), Level.CURVATURE, proper=True),
        Generator("t*d_t", _field(["t", "0", "0"]), Level.RICCI, proper=True),
    ]


# --------------------------------------------------------------------------
# N_b: f = -2 exp(b x) / b^2
# --------------------------------------------------------------------------

def _family_nb(params: Mapping) -> SymmetryFamily:
    _check_params(params, {"b"})
    b = symexpr.sympify(params.get("b", 1))
    if b == 0:
        raise FamilyError("N_b requires b != 0")
    bind = {"b": b}
    W = build_manifold("-2*exp(b*x)/b^2", bind)

    def F(texts, name="X"):
        return _field(texts, bindings=bind, name=name)

    killing = F(["c1*t + c2", "2*c1/b", "-c1*y + c3"])
    gens = [
        Generator("killing_general", killing, Level.KILLING),
        Generator("homothetic_general", killing, Level.HOMOTHETIC, eta=sp.Integer(0)),
        Generator("affine_general", F(["c1*t + c2 + c4*y", "2*c1/b", "-c1*y + c3"]), Level.AFFINE),
        Generator("ricci_general", F(["X1(t,x,y)", "-2/b*f1'(y)", "f1(y)"]), Level.RICCI),
        Generator("curvature_general", F(["f2(y) - f1'(y)*t + 2/b*f1''(y)*x", "-2/b*f1'(y)", "f1(y)"]),
                  Level.CURVATURE),
        Generator("t*d_t+(2/b)*d_x-y*d_y", F(["t", "2/b", "-y"]), Level.KILLING),
        Generator("d_y", F(["0", "0", "1"]), Level.KILLING),
        Generator("curvature_f1=y^2", F(["-2*y*t + 4/b*x", "-4*y/b", "y^2"]), Level.CURVATURE, proper=True),
        Generator("ricci_f1=y", F(["exp(x)*t", "-2/b", "y"]), Level.RICCI, proper=True),
    ]
    gens += _common_basis()
    return SymmetryFamily("N_b", f"N_b(b={symexpr.render(b)})", (("b", b),), W, (), tuple(gens))


# --------------------------------------------------------------------------
# CW_eps: f = -eps x^2
# --------------------------------------------------------------------------

def _family_cw(params: Mapping) -> SymmetryFamily:
    _check_params(params, {"eps", "epsilon"})
    eps = symexpr.sympify(params.get("eps", params.get("epsilon", 1)))
    if eps not in (1, -1):
        raise FamilyError(f"CW_eps requires eps in {{-1, +1}}, got {eps}")
    W = build_manifold("-eps*x^2", {"eps": eps})
    if eps == 1:
        s, tt = "c2*sin(y) - c1*cos(y)", "c1*sin(y) + c2*cos(y)"
        basis = [("(-cos y)x*d_t+(sin y)*d_x", ["-cos(y)*x", "sin(y)", "0"]),
                 ("(sin y)x*d_t+(cos y)*d_x", ["sin(y)*x", "cos(y)", "0"])]
    else:
        s, tt = "c1*exp(-y) - c2*exp(y)", "c1*exp(-y) + c2*exp(y)"
        basis = [("exp(-y)x*d_t+exp(-y)*d_x", ["exp(-y)*x", "exp(-y)", "0"]),
                 ("-exp(y)x*d_t+exp(y)*d_x", ["-exp(y)*x", "exp(y)", "0"])]
    eta = symexpr.parameter("eta")
    gens = [
        Generator("killing_general", _field([f"({s})*x + c3", tt, "c4"]), Level.KILLING),
        Generator("homothetic_general", _field([f"({s})*x + c3 + eta*t", f"{tt} + eta/2*x", "c4"]),
                  Level.HOMOTHETIC, eta=eta),
        Generator("affine_general", _field([f"({s})*x + c3 + c5*t + c6*y", f"{tt} + c5/2*x", "c4"]),
                  Level.AFFINE),
        Generator("ricci_general", _field(["X1(t,x,y)", "X2(t,x,y)", "c1"]), Level.RICCI),
        Generator("curvature_general",
                  _field(["2*f1(y)*t - 1/2*f1'(y)*x^2 - f2'(y)*x + f3(y)", "f1(y)*x + f2(y)", "c1"]),
                  Level.CURVATURE),
    ]
    gens += [Generator(name, _field(texts), Level.KILLING) for name, texts in basis]
    gens += [
        Generator("d_y", _field(["0", "0", "1"]), Level.KILLING),
        Generator("2t*d_t+x*d_x", _field(["2*t", "x", "0"]), Level.HOMOTHETIC, eta=sp.Integer(2), proper=True),
        Generator("curvature_f1=y", _field(["2*y*t - x^2/2", "y*x", "0"]), Level.CURVATURE, proper=True),
        Generator("ricci_x2=t*x", _field(["0", "t*x", "1"]), Level.RICCI, proper=True),
    ]
    gens += _common_basis()
    label = f"CW_{'+1' if eps == 1 else '-1'}"
    return SymmetryFamily("CW", label, (("eps", eps),), W, (), tuple(gens))


def cw_killing_basis(eps: int = 1) -> list[VectorField]:
    """The four Killing generators of CW_eps, one per free constant c1..c4."""
    fam = generate_family("CW", {"eps": eps})
    general = fam.generator("killing_general").field
    out = []
    for k in range(1, 5):
        bind = {f"c{j}": int(j == k) for j in range(1, 5)}
        out.append(general.substitute(bind).normalized())
    return out


# --------------------------------------------------------------------------
# P_c: f = -x^2 alpha(y), alpha' = c alpha^(3/2), alpha > 0
# --------------------------------------------------------------------------

def euler_exponents(c) -> tuple[Fraction, Fraction] | None:
    """Rational m with c^2 m (m - 1) + 4 = 0, if any.

    With alpha = 4/u^2 and u' = -c, h = u^m solves h'' + alpha h = 0 exactly.
    """
    c = Fraction(str(c)) if not isinstance(c, Fraction) else c
    if c == 0:
        return None
    disc = 1 - Fraction(16) / (c * c)
    if disc < 0:
        return None
    num, den = disc.numerator, disc.denominator
    rn, rd = int(round(num ** 0.5)), int(round(den ** 0.5))
    if rn * rn != num or rd * rd != den:
        return None
    root = Fraction(rn, rd)
    return ((1 + root) / 2, (1 - root) / 2)


def _family_pc(params: Mapping) -> SymmetryFamily:
    """``c`` (number or name), optional ``alpha`` = 1 when c = 0, optional ``k`` for alpha = 4/(k - c y)^2."""
    _check_params(params, {"c", "alpha", "k"})
    c = symexpr.sympify(params.get("c", "c"))
    pos = ("alpha", "u")
    concrete = "k" in params
    if "alpha" in params:
        if c != 0:
            raise FamilyError("a constant alpha requires c = 0")
        alpha_val = symexpr.sympify(params["alpha"])
        if not (alpha_val.is_number and alpha_val > 0):
            raise FamilyError("alpha must be a positive constant")
        alpha_text = f"({symexpr.render(alpha_val)})"
        rules = [RewriteRule.from_text("h''(y)", f"-{alpha_text}*h(y)")]
        W = build_manifold(f"-x^2*{alpha_text}")
    elif concrete:
        # alpha = 4/u^2 with u = k - c y > 0; u stays symbolic with u' = -c
        alpha_text = "(4/u(y)^2)"
        rules = [RewriteRule.from_exprs(symexpr.parse("u'(y)", pos), -c),
                 RewriteRule.from_text("h''(y)", f"-{alpha_text}*h(y)", pos)]
        W = build_manifold(f"-x^2*{alpha_text}", positive=pos)
    else:
        alpha_text = "alpha(y)"
        rules = [RewriteRule.from_exprs(symexpr.parse("alpha'(y)", pos),
                                        c * symexpr.parse("alpha(y)^(3/2)", pos)),
                 RewriteRule.from_text("h''(y)", "-alpha(y)*h(y)", pos)]
        W = build_manifold("-x^2*alpha(y)", positive=pos)
    rules = tuple(rules)
    bind = {"c": c}

    def F(texts, name="X"):
        return _field(texts, pos, bind, name)

    sqrt_alpha = f"sqrt{alpha_text}" if alpha_text.startswith("(") else f"sqrt({alpha_text})"
    eta = symexpr.parameter("eta")
    gens = [
        Generator("killing_general", F(["-h'(y)*x + c1", "h(y)", "0"]), Level.KILLING, rules=rules),
        Generator("homothetic_general", F(["-h'(y)*x + c1 + eta*t", "h(y) + eta/2*x", "0"]),
                  Level.HOMOTHETIC, eta=eta, rules=rules),
        Generator("affine_general", F(["-h'(y)*x + c1 + c2*t + c3*y", "h(y) + c2/2*x", "0"]),
                  Level.AFFINE, rules=rules),
        Generator("ricci_general", F(["X1(t,x,y)", "X2(t,x,y)", f"c1/{sqrt_alpha}"]), Level.RICCI, rules=rules),
        Generator("curvature_general",
                  F(["-1/2*f1'(y)*x^2 - f2'(y)*x + (2*f1(y) + c1*c/2)*t + f3(y)", "f1(y)*x + f2(y)",
                     f"c1/{sqrt_alpha}"]), Level.CURVATURE, rules=rules),
        Generator("2t*d_t+x*d_x", F(["2*t", "x", "0"]), Level.HOMOTHETIC, eta=sp.Integer(2), proper=True),
        Generator("curvature_f1=y", F(["2*y*t - x^2/2", "y*x", "0"]), Level.CURVATURE, rules=rules,
                  proper=True),
    ]
    gens += _common_basis()
    m = euler_exponents(c) if c.is_Rational else None
    if concrete and m is not None:
        for mi in m:
            e = sp.Rational(mi.numerator, mi.denominator)
            h = f"u(y)^({e})"
            gens.append(Generator(f"killing_h=u^({e})", F([f"-diff({h},y)*x", h, "0"]), Level.KILLING,
                                  rules=rules))
    if "alpha" in params and alpha_val == 1:
        gens.append(Generator("killing_h=sin", F(["-cos(y)*x", "sin(y)", "0"]), Level.KILLING))
        gens.append(Generator("killing_h=cos", F(["sin(y)*x", "cos(y)", "0"]), Level.KILLING))

    readings = (Reading(
        "P_c curvature (2f1 + c1*c/2)t",
        Level.CURVATURE,
        (("A: (2*f1 + c1*c/2)*t",
          F(["-1/2*f1'(y)*x^2 - f2'(y)*x + (2*f1(y) + c1*c/2)*t + f3(y)", "f1(y)*x + f2(y)",
             f"c1/{sqrt_alpha}"]), rules),
         ("B: 2*f1*t + c1*c/2",
          F(["-1/2*f1'(y)*x^2 - f2'(y)*x + 2*f1(y)*t + c1*c/2 + f3(y)", "f1(y)*x + f2(y)",
             f"c1/{sqrt_alpha}"]), rules)),
        W),) if c != 0 else ()

    # a Killing field with nonzero y-component, absent from the printed list
    extras = (Generator("killing_extra:-c*t*d_t-(2/sqrt(alpha))*d_y",
                        F(["-c*t", "0", f"-2/{sqrt_alpha}"]), Level.KILLING, rules=rules),)
    constraints = ()
    if concrete:
        a = symexpr.parse(alpha_text, pos)
        constraints = (("alpha' - c*alpha^(3/2)",
                        symexpr.normalize(sp.diff(a, symexpr.Y) - c * a ** sp.Rational(3, 2), rules)),)
    prm = tuple(sorted((k, symexpr.sympify(v)) for k, v in params.items())) or (("c", c),)
    label = "P_c(" + ", ".join(f"{k}={symexpr.render(v)}" for k, v in prm) + ")"
    return SymmetryFamily("P_c", label, prm, W, rules, tuple(gens), constraints, readings, extras)


# --------------------------------------------------------------------------
# conformally flat: f = p(y) x^2 + q(y) x + r(y), p > 0
# --------------------------------------------------------------------------

CFLAT_POSITIVE = ("p",)


def _cflat_rules(kind: str) -> tuple[RewriteRule, ...]:
    """Side conditions on p, f1, f2 solved for their leading derivatives."""
    pos = CFLAT_POSITIVE
    if kind == "killing":
        texts = [("p'(y)", "-2*c1*p(y)/(c1*y + c2)"),
                 ("f1''(y)", "(2*c1*q(y) + (c1*y + c2)*q'(y) + 2*f1(y)*p(y))/2"),
                 ("f2'(y)", "-(2*c1*r(y) + (c1*y + c2)*r'(y) + f1(y)*q(y))/2")]
    elif kind == "homothetic":
        texts = [("p'(y)", "-2*c1*p(y)/(c1*y + c2)"),
                 ("f1''(y)", "(-(eta/2 - 2*c1)*q(y) + (c1*y + c2)*q'(y) + 2*f1(y)*p(y))/2"),
                 ("f2'(y)", "-((2*c1 - eta)*r(y) + (c1*y + c2)*r'(y) + f1(y)*q(y))/2")]
    elif kind == "affine_printed":
        texts = [("p'(y)", "-2*c2*p(y)/(c2*y + c3)"),
                 ("f1''(y)", "(-(c1 - 3*c2)/2*q(y) + (c2*y + c3)*q'(y) + 2*f1(y)*p(y))/2"),
                 ("f2'(y)", "-((c2 - c1)*r(y) + (c2*y + c3)*r'(y) + f1(y)*q(y) + c4)/2")]
    else:
        raise FamilyError(kind)
    return tuple(RewriteRule.from_text(lhs, rhs, pos) for lhs, rhs in texts)


def cflat_constraints(kind: str) -> tuple[tuple[str, Expr], ...]:
    """The three coefficient conditions (of x^2, x, 1) as expressions required to vanish."""
    pos = CFLAT_POSITIVE
    texts = {
        "killing": ["(c1*y + c2)*p'(y) + 2*c1*p(y)",
                    "2*f1''(y) - 2*c1*q(y) - (c1*y + c2)*q'(y) - 2*f1(y)*p(y)",
                    "2*f2'(y) + 2*c1*r(y) + (c1*y + c2)*r'(y) + f1(y)*q(y)"],
        "homothetic": ["(c1*y + c2)*p'(y) + 2*c1*p(y)",
                       "2*f1''(y) + (eta/2 - 2*c1)*q(y) - (c1*y + c2)*q'(y) - 2*f1(y)*p(y)",
                       "2*f2'(y) + (2*c1 - eta)*r(y) + (c1*y + c2)*r'(y) + f1(y)*q(y)"],
        "affine": ["(c2*y + c3)*p'(y) + 2*c2*p(y)",
                   "2*f1''(y) + (c1 - 3*c2)/2*q(y) - (c2*y + c3)*q'(y) - 2*f1(y)*p(y)",
                   "2*f2'(y) + (c2 - c1)*r(y) + (c2*y + c3)*r'(y) + f1(y)*q(y) + c4"],
    }[kind]
    return tuple((f"{kind}[{i + 1}]", symexpr.parse(t, pos)) for i, t in enumerate(texts))


# the affine side conditions name their constants differently from the
# affine field; (c1, c2, c3, c4) there are (c3, c1, c2, c4) in the field
AFFINE_CONSTANT_RELABEL = {"c1": "c3", "c2": "c1", "c3": "c2", "c4": "c4"}


def _relabel_rules(rules, mapping) -> tuple[RewriteRule, ...]:
    syms = {symexpr.parameter(k): symexpr.parameter(v) for k, v in mapping.items()}
    return tuple(RewriteRule(r.symbol, r.order, r.replacement.xreplace(syms), r.args) for r in rules)


def _family_cflat(params: Mapping) -> SymmetryFamily:
    _check_params(params, set())
    pos = CFLAT_POSITIVE
    W = build_manifold("p(y)*x^2 + q(y)*x + r(y)", positive=pos)
    eta = symexpr.parameter("eta")

    def F(texts, name="X"):
        return _field(texts, pos, None, name)

    affine_field = F(["c3*t - x*f1'(y) + f2(y)", "(c1 + c3)/2*x + f1(y)", "c1*y + c2"])
    printed = _cflat_rules("affine_printed")
    relabeled = _relabel_rules(printed, AFFINE_CONSTANT_RELABEL)
    gens = [
        Generator("killing_general", F(["-c1*t - x*f1'(y) + f2(y)", "f1(y)", "c1*y + c2"]), Level.KILLING,
                  rules=_cflat_rules("killing")),
        Generator("homothetic_general",
                  F(["eta*t - c1*t - x*f1'(y) + f2(y)", "eta/2*x + f1(y)", "c1*y + c2"]),
                  Level.HOMOTHETIC, eta=eta, rules=_cflat_rules("homothetic")),
        Generator("affine_general", affine_field, Level.AFFINE, rules=relabeled),
        Generator("ricci_general", F(["X1(t,x,y)", "X2(t,x,y)", "c1/sqrt(p(y))"]), Level.RICCI),
        Generator("curvature_general",
                  F(["2*f1(y)*t + c1*p'(y)/(2*p(y)*sqrt(p(y)))*t - 1/2*f1'(y)*x^2 - f2'(y)*x + f3(y)",
                     "f1(y)*x + f2(y)", "c1/sqrt(p(y))"]), Level.CURVATURE),
        Generator("curvature_c1=1", F(["p'(y)/(2*p(y)*sqrt(p(y)))*t", "0", "1/sqrt(p(y))"]), Level.CURVATURE,
                  proper=True),
    ]
    gens += _common_basis()
    readings = (Reading(
        "conformally flat affine side conditions",
        Level.AFFINE,
        (("A: constants as printed", affine_field, printed),
         ("B: constants relabeled", affine_field, relabeled)),
        W),)
    constraints = cflat_constraints("killing") + cflat_constraints("homothetic") + cflat_constraints("affine")
    return SymmetryFamily("cflat", "conformally_flat", (), W, (), tuple(gens), constraints, readings)


# --------------------------------------------------------------------------
# arbitrary f: Ricci and curvature collineation forms
# --------------------------------------------------------------------------

def _family_general(params: Mapping) -> SymmetryFamily:
    _check_params(params, set())
    W = build_manifold("f(x,y)")
    Wb = build_manifold("f1(y)*x^2 + f2(y)*x + f3(y)", positive=("f1",))
    Wa = build_manifold("f2(x)*f3(y) + f4(y)*x + f5(y)", positive=("f3",))
    gens = [
        Generator("ricci_(a)", _field(["X1(t,x,y)",
                                       "-(2*f1'(y)*diff(f(x,y),x,x) + f1(y)*diff(f(x,y),x,x,y))"
                                       "/diff(f(x,y),x,x,x)", "f1(y)"]), Level.RICCI),
        Generator("X1(t,x,y)*d_t", _field(["X1(t,x,y)", "0", "0"]), Level.RICCI),
        Generator("X1(y)*d_t", _field(["X1(y)", "0", "0"]), Level.CURVATURE),
        Generator("t*d_t", _field(["t", "0", "0"]), Level.RICCI, proper=True),
    ]
    gens.append(Generator("ricci_(b)", _field(["X1(t,x,y)", "X2(t,x,y)", "c1/sqrt(f1(y))"], ("f1",)),
                          Level.RICCI, manifold=Wb))
    x2_a = "-(2*diff(c1/sqrt(f3(y)),y)*diff(f2(x),x,x)*f3(y) + c1/sqrt(f3(y))*diff(f2(x),x,x)*f3'(y))" \
           "/(diff(f2(x),x,x,x)*f3(y))"
    readings = (
        Reading("curvature (a)' second case", Level.CURVATURE, (
            ("A: c1*f3'/(2*f3*sqrt(f3))*t",
             _field(["c1*f3'(y)/(2*f3(y)*sqrt(f3(y)))*t + f6(y)", x2_a, "c1/sqrt(f3(y))"], ("f3",)), ()),
            ("B: (c1*f3'/2)*f3*sqrt(f3)*t",
             _field(["c1*f3'(y)/2*f3(y)*sqrt(f3(y))*t + f6(y)", x2_a, "c1/sqrt(f3(y))"], ("f3",)), ()),
        ), Wa),
        Reading("curvature (b)'", Level.CURVATURE, (
            ("A: c1*f1'/(2*f1*sqrt(f1))*t",
             _field(["2*f4(y)*t + c1*f1'(y)/(2*f1(y)*sqrt(f1(y)))*t - 1/2*f4'(y)*x^2 - f5'(y)*x + f6(y)",
                     "f4(y)*x + f5(y)", "c1/sqrt(f1(y))"], ("f1",)), ()),
            ("B: (c1*f1'/2)*f1*sqrt(f1)*t",
             _field(["2*f4(y)*t + c1*f1'(y)/2*f1(y)*sqrt(f1(y))*t - 1/2*f4'(y)*x^2 - f5'(y)*x + f6(y)",
                     "f4(y)*x + f5(y)", "c1/sqrt(f1(y))"], ("f1",)), ()),
        ), Wb),
    )
    return SymmetryFamily("general", "general_f", (), W, (), tuple(gens), (), readings)
