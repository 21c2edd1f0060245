"""Exact expression core.

Expressions are plain sympy trees built under a few conventions:

* the coordinates are the real symbols ``t, x, y`` (:data:`T`, :data:`X`, :data:`Y`);
* every other bare identifier is a real parameter;
* abstract functions (``f1(y)``, ``alpha(y)``, ``f(x,y)``) are undefined sympy
  functions applied to coordinates, optionally flagged positive;
* derivatives of abstract functions are ``sympy.Derivative`` nodes.

On top of sympy this module provides the text grammar (:func:`parse`,
:func:`render`), derivative rewrite rules for constrained function symbols,
a deterministic canonical form (:func:`normalize`), a ternary zero test with
randomized numeric probing (:func:`is_zero`), and numeric evaluation on float
or high-precision backends (:func:`evaluate`, :func:`eval_numeric`).
"""

from __future__ import annotations

import contextlib
import enum
import math
import re
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from typing import Callable, Iterable, Mapping, Sequence, Union

import gmpy2
import numpy as np
import sympy as sp
from sympy.core.function import AppliedUndef, UndefinedFunction
from sympy.printing.precedence import precedence
from sympy.printing.str import StrPrinter

Expr = sp.Expr

T, X, Y = COORDINATES = sp.symbols("t x y", real=True)
COORD_BY_NAME = {"t": T, "x": X, "y": Y}
COORD_NAMES = ("t", "x", "y")

BUILTINS = ("exp", "sin", "cos", "sqrt", "abs")

ZERO_TOL = 1e-9
N_PROBES = 100
N_REALIZATIONS = 5


class SymExprError(ValueError):
    pass


class ParseError(SymExprError):
    """Syntax or arity error; ``offset`` is a byte offset into the UTF-8 text."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class SubstitutionError(SymExprError):
    pass


class EvaluationError(ArithmeticError):
    """Numeric evaluation failed; ``subtree`` is the offending node."""

    def __init__(self, message: str, subtree):
        super().__init__(f"{message}: {render(subtree) if isinstance(subtree, sp.Basic) else subtree}")
        self.subtree = subtree


# --------------------------------------------------------------------------
# symbols
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def function_symbol(name: str, positive: bool = False) -> UndefinedFunction:
    if positive:
        return sp.Function(name, real=True, positive=True)
    return sp.Function(name, real=True)


@lru_cache(maxsize=None)
def parameter(name: str, positive: bool = False) -> sp.Symbol:
    if name in COORD_BY_NAME:
        raise SymExprError(f"{name!r} is a coordinate, not a parameter")
    if positive:
        return sp.Symbol(name, positive=True)
    return sp.Symbol(name, real=True)


def apply_function(name: str, args: Sequence[sp.Symbol], positive: bool = False) -> Expr:
    return function_symbol(name, positive)(*args)


def function_applications(e: Expr) -> set:
    """All applied abstract functions ``F(args)`` occurring in ``e``."""
    return set(e.atoms(AppliedUndef))


def parameters_of(e: Expr) -> set:
    return {s for s in e.free_symbols if s not in COORDINATES}


def sympify(value) -> Expr:
    """Numbers become exact rationals; strings are parsed; Exprs pass through."""
    if isinstance(value, sp.Basic):
        return value
    if isinstance(value, str):
        return parse(value)
    if isinstance(value, bool):
        raise SymExprError("booleans are not expressions")
    if isinstance(value, int):
        return sp.Integer(value)
    if isinstance(value, float):
        return sp.Rational(repr(value))
    return sp.sympify(value, rational=True)


# --------------------------------------------------------------------------
# parsing
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[^\W\d]\w*)
  | (?P<op>\*\*|[-+*/^(),'])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    pos: int  # character index


class _Parser:
    def __init__(self, text: str, positive: frozenset[str]):
        self.text = text
        self.positive = positive
        self.tokens = self._tokenize(text)
        self.i = 0
        self.arity: dict[str, int] = {}

    def offset(self, pos: int) -> int:
        return len(self.text[:pos].encode("utf-8"))

    def error(self, message: str, pos: int | None = None):
        if pos is None:
            pos = self.peek().pos
        raise ParseError(message, self.offset(pos))

    def _tokenize(self, text: str) -> list[_Token]:
        out = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                raise ParseError(f"unexpected character {text[pos]!r}", len(text[:pos].encode("utf-8")))
            kind = m.lastgroup
            if kind != "ws":
                tok_text = m.group()
                out.append(_Token("^" if tok_text == "**" else (tok_text if kind == "op" else kind),
                                  tok_text, pos))
            pos = m.end()
        out.append(_Token("end", "", len(text)))
        return out

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def take(self, kind: str | None = None) -> _Token:
        tok = self.tokens[self.i]
        if kind is not None and tok.kind != kind:
            what = "end of input" if tok.kind == "end" else repr(tok.text)
            self.error(f"expected {kind!r}, found {what}")
        self.i += 1
        return tok

    def parse(self) -> Expr:
        if self.peek().kind == "end":
            self.error("empty expression")
        e = self.expr()
        if self.peek().kind != "end":
            self.error(f"unexpected {self.peek().text!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.take().kind
            rhs = self.term()
            e = e + rhs if op == "+" else e - rhs
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek().kind in ("*", "/"):
            op = self.take().kind
            rhs = self.unary()
            if op == "*":
                e = e * rhs
            else:
                if rhs == 0:
                    self.error("division by literal zero")
                e = e / rhs
        return e

    def unary(self) -> Expr:
        if self.peek().kind in ("-", "+"):
            op = self.take().kind
            e = self.unary()
            return -e if op == "-" else e
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek().kind == "^":
            tok = self.take()
            exponent = self.unary()
            if not exponent.is_Rational:
                self.error("exponent must be a rational constant", tok.pos)
            if base == 0 and exponent < 0:
                self.error("zero raised to a negative power", tok.pos)
            return base ** exponent
        return base

    def atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "num":
            self.take()
            return sp.Rational(tok.text)
        if tok.kind == "(":
            self.take()
            e = self.expr()
            self.take(")")
            return e
        if tok.kind == "name":
            return self.identifier()
        if tok.kind == "end":
            self.error("unexpected end of input")
        self.error(f"unexpected {tok.text!r}")

    def identifier(self) -> Expr:
        tok = self.take("name")
        name = tok.text
        primes = 0
        while self.peek().kind == "'":
            self.take()
            primes += 1
        called = self.peek().kind == "("
        if name in COORD_BY_NAME:
            if primes or called:
                self.error(f"coordinate {name!r} cannot be applied or primed", tok.pos)
            return COORD_BY_NAME[name]
        if name in BUILTINS:
            if primes:
                self.error(f"builtin {name!r} cannot carry primes", tok.pos)
            if not called:
                self.error(f"builtin {name!r} needs an argument list", tok.pos)
            args = self.arguments()
            if len(args) != 1:
                self.error(f"{name} takes exactly 1 argument, got {len(args)}", tok.pos)
            return _BUILTIN_FN[name](args[0])
        if name == "diff":
            if primes or not called:
                self.error("diff must be called as diff(expr, var, ...)", tok.pos)
            args = self.arguments()
            if len(args) < 2 or not all(a in COORDINATES for a in args[1:]):
                self.error("diff needs an expression followed by coordinates", tok.pos)
            return sp.diff(args[0], *args[1:])
        if not called:
            if primes:
                self.error(f"primes require an argument list on {name!r}", tok.pos)
            return parameter(name, name in self.positive)
        args = self.arguments()
        if not args or not all(a in COORDINATES for a in args):
            self.error(f"function symbol {name!r} must be applied to coordinates", tok.pos)
        if len(set(args)) != len(args):
            self.error(f"repeated argument in {name!r}", tok.pos)
        known = self.arity.setdefault(name, len(args))
        if known != len(args):
            self.error(f"{name!r} used with {len(args)} arguments, earlier with {known}", tok.pos)
        if primes and len(args) != 1:
            self.error(f"primes need a single-argument function, {name!r} has {len(args)}", tok.pos)
        applied = apply_function(name, args, name in self.positive)
        if primes:
            return sp.Derivative(applied, (args[0], primes))
        return applied

    def arguments(self) -> list[Expr]:
        self.take("(")
        args = [self.expr()]
        while self.peek().kind == ",":
            self.take()
            args.append(self.expr())
        self.take(")")
        return args


_BUILTIN_FN = {
    "exp": sp.exp,
    "sin": sp.sin,
    "cos": sp.cos,
    "sqrt": sp.sqrt,
    "abs": sp.Abs,
}


def parse(text: str, positive: Iterable[str] = ()) -> Expr:
    """Parse expression text; names in ``positive`` get a positivity assumption."""
    return _Parser(text, frozenset(positive)).parse()


# --------------------------------------------------------------------------
# rendering
# --------------------------------------------------------------------------

class _Printer(StrPrinter):
    def _print_Pow(self, expr, rational=False):
        b, e = expr.as_base_exp()
        if e is sp.S.Half:
            return f"sqrt({self._print(b)})"
        if expr.is_commutative and e.is_Rational and e < 0:
            if -e is sp.S.Half:
                return f"1/sqrt({self._print(b)})"
            if e == -1:
                return f"1/{self.parenthesize(b, precedence(expr), strict=False)}"
        base = self.parenthesize(b, precedence(expr), strict=False)
        if e.is_Integer and e >= 0:
            return f"{base}^{e}"
        return f"{base}^({self._print(e)})"

    def _print_Abs(self, expr):
        return f"abs({self._print(expr.args[0])})"

    def _print_Exp1(self, expr):
        return "exp(1)"

    def _print_Function(self, expr):
        if isinstance(expr, AppliedUndef):
            return f"{expr.func.__name__}({','.join(self._print(a) for a in expr.args)})"
        return super()._print_Function(expr)

    def _print_Derivative(self, expr):
        inner = expr.expr
        if isinstance(inner, AppliedUndef) and len(inner.args) == 1:
            (_, n), = expr.variable_count
            return f"{inner.func.__name__}{chr(39) * n}({self._print(inner.args[0])})"
        variables = []
        for v, n in expr.variable_count:
            variables.extend([self._print(v)] * int(n))
        return f"diff({self._print(inner)},{','.join(variables)})"

    def _print_Rational(self, expr):
        if expr.q == 1:
            return str(expr.p)
        return f"{expr.p}/{expr.q}"

    def _print_Symbol(self, expr):
        return expr.name


_PRINTER = _Printer({"order": None})


def render(e: Expr) -> str:
    """Text in the parse grammar; ``parse(render(e))`` rebuilds ``e``."""
    return _PRINTER.doprint(e)


# --------------------------------------------------------------------------
# calculus and substitution
# --------------------------------------------------------------------------

def diff(e: Expr, v: sp.Symbol | str, rules: Sequence["RewriteRule"] = ()) -> Expr:
    v = COORD_BY_NAME.get(v, v) if isinstance(v, str) else v
    if v not in COORDINATES:
        raise SymExprError(f"can only differentiate with respect to t, x, y, not {v}")
    return normalize(sp.diff(e, v), rules)


def _binding_key(key) -> tuple[str, str]:
    if isinstance(key, str):
        return ("name", key)
    if isinstance(key, sp.Symbol):
        return ("name", key.name)
    if isinstance(key, UndefinedFunction):
        return ("name", key.__name__)
    if isinstance(key, AppliedUndef):
        return ("name", key.func.__name__)
    raise SubstitutionError(f"cannot bind {key!r}")


def substitute_raw(e: Expr, bindings: Mapping) -> Expr:
    """Substitution without normalization (derivatives are still evaluated)."""
    if not bindings:
        return e
    names = {}
    for key, value in bindings.items():
        names[_binding_key(key)[1]] = sympify(value)

    sym_map = {}
    for s in e.free_symbols:
        if s.name in names and s not in COORDINATES:
            sym_map[s] = names[s.name]

    fn_map = {}
    for app in function_applications(e):
        name = app.func.__name__
        if name not in names:
            continue
        repl = names[name]
        extra = (repl.free_symbols & set(COORDINATES)) - set(app.args)
        if extra:
            raise SubstitutionError(
                f"binding for {name} depends on {sorted(s.name for s in extra)}, "
                f"not among its arguments {tuple(a.name for a in app.args)}")
        fn_map[app] = repl

    if not sym_map and not fn_map:
        return e
    out = e
    if fn_map:
        out = out.xreplace(fn_map)
        # Derivative(repl, y) nodes are left unevaluated by xreplace
        out = out.replace(lambda n: isinstance(n, sp.Derivative), lambda n: n.doit(deep=False))
    if sym_map:
        out = out.xreplace(sym_map)
    return out


def substitute(e: Expr, bindings: Mapping, rules: Sequence["RewriteRule"] = ()) -> Expr:
    """Replace parameters and function symbols (stored derivatives are re-derived)."""
    return normalize(substitute_raw(e, bindings), rules)


# --------------------------------------------------------------------------
# rewrite rules
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RewriteRule:
    """``symbol`` differentiated ``order`` times (per argument) becomes ``replacement``.

    Higher derivatives are rewritten by differentiating the replacement, so a
    rule eliminates every derivative whose order dominates its target.
    """

    symbol: str
    order: tuple[int, ...]
    replacement: Expr
    args: tuple[sp.Symbol, ...] = ()

    @classmethod
    def from_text(cls, lhs: str, rhs: str, positive: Iterable[str] = ()) -> "RewriteRule":
        return cls.from_exprs(parse(lhs, positive), parse(rhs, positive))

    @classmethod
    def from_exprs(cls, lhs: Expr, rhs: Expr) -> "RewriteRule":
        if isinstance(lhs, sp.Derivative) and isinstance(lhs.expr, AppliedUndef):
            app = lhs.expr
            counts = dict((v, int(n)) for v, n in lhs.variable_count)
            order = tuple(counts.get(a, 0) for a in app.args)
        elif isinstance(lhs, AppliedUndef):
            app, order = lhs, tuple(0 for _ in lhs.args)
        else:
            raise SymExprError(f"rule target must be a function symbol derivative, got {render(lhs)}")
        if any(order) and _dominated_in(rhs, app.func.__name__, order, app.args):
            raise SymExprError(f"rule for {render(lhs)} is not reducing")
        return cls(app.func.__name__, order, rhs, tuple(app.args))

    def __str__(self) -> str:
        app = function_symbol(self.symbol)(*self.args)
        lhs = app
        if any(self.order):
            lhs = sp.Derivative(app, *[(a, n) for a, n in zip(self.args, self.order) if n])
        return f"{render(lhs)} = {render(self.replacement)}"

    def match(self, node) -> tuple[sp.Symbol, ...] | None:
        """Extra differentiation variables if ``node`` is rewritten by this rule."""
        if isinstance(node, sp.Derivative):
            app = node.expr
            if not isinstance(app, AppliedUndef) or app.func.__name__ != self.symbol:
                return None
            counts = dict((v, int(n)) for v, n in node.variable_count)
        elif isinstance(node, AppliedUndef) and node.func.__name__ == self.symbol:
            app, counts = node, {}
        else:
            return None
        if tuple(app.args) != self.args:
            return None
        have = tuple(counts.get(a, 0) for a in app.args)
        if any(h < o for h, o in zip(have, self.order)):
            return None
        extra = []
        for a, h, o in zip(app.args, have, self.order):
            extra.extend([a] * (h - o))
        return tuple(extra)


def _dominated_in(e: Expr, name: str, order: tuple[int, ...], args) -> bool:
    for node in e.atoms(sp.Derivative):
        app = node.expr
        if isinstance(app, AppliedUndef) and app.func.__name__ == name:
            counts = dict((v, int(n)) for v, n in node.variable_count)
            have = tuple(counts.get(a, 0) for a in app.args)
            if all(h >= o for h, o in zip(have, order)):
                return True
    return False


def apply_rules(e: Expr, rules: Sequence[RewriteRule], max_rounds: int = 64) -> Expr:
    if not rules:
        return e
    for _ in range(max_rounds):
        mapping = {}
        candidates = e.atoms(sp.Derivative) | e.atoms(AppliedUndef)
        for node in candidates:
            for rule in rules:
                extra = rule.match(node)
                if extra is None:
                    continue
                repl = rule.replacement
                if extra:
                    repl = sp.diff(repl, *extra)
                if repl != node:
                    mapping[node] = repl
                break
        if not mapping:
            return e
        # innermost-first is unnecessary: targets are leaves of the tree
        e = e.xreplace(mapping)
    raise SymExprError("rewrite rules did not terminate")


# --------------------------------------------------------------------------
# canonical form
# --------------------------------------------------------------------------

def _pythagorean(e: Expr) -> Expr:
    """sin(u)^n with |n| >= 2 becomes sin(u)^(n mod 2) * (1 - cos(u)^2)^(n div 2)."""

    def is_sin_power(n):
        return (n.is_Pow and isinstance(n.base, sp.sin) and n.exp.is_Integer
                and abs(n.exp) >= 2)

    def rewrite(n):
        k = int(n.exp)
        sign = 1 if k > 0 else -1
        q, r = divmod(abs(k), 2)
        return n.base ** (sign * r) * (1 - sp.cos(n.base.args[0]) ** 2) ** (sign * q)

    return e.replace(is_sin_power, rewrite)


def _positive_atom(b) -> bool:
    return (isinstance(b, (sp.Symbol, AppliedUndef)) and b.is_positive is True
            and b not in COORDINATES)


@lru_cache(maxsize=65536)
def _canonical(e: Expr) -> Expr:
    e = sp.expand(e)
    e = _pythagorean(e)
    if e.is_Rational:
        return e

    # derivative nodes become opaque atoms so positive-base substitution
    # below cannot reach inside them
    derivs = sorted(e.atoms(sp.Derivative), key=sp.default_sort_key)
    forward = {}
    backward = {}
    for i, d in enumerate(derivs):
        s = sp.Symbol(f"_deriv{i}", real=True)
        forward[d] = s
        backward[s] = d
    if forward:
        e = e.xreplace(forward)

    # b^(p/q) for positive atoms b: write b = B^m with m the lcm of all
    # denominators, so every power of B is integral
    denominators: dict = {}
    for p in e.atoms(sp.Pow):
        if p.exp.is_Rational and not p.exp.is_Integer and _positive_atom(p.base):
            denominators[p.base] = math.lcm(denominators.get(p.base, 1), int(p.exp.q))
    if denominators:
        radical = {}
        for i, (b, m) in enumerate(sorted(denominators.items(), key=lambda kv: sp.default_sort_key(kv[0]))):
            s = sp.Symbol(f"_root{i}", positive=True)
            radical[b] = s ** m
            backward[s] = b ** sp.Rational(1, m)
        e = sp.expand(e.xreplace(radical))

    e = sp.cancel(sp.together(e))
    num, den = e.as_numer_denom()
    e = sp.expand(num) / sp.expand(den)
    if backward:
        e = e.xreplace(backward)
    return e


def normalize(e, rules: Sequence[RewriteRule] = ()) -> Expr:
    """Canonical form: rules to fixpoint, expanded, Pythagorean rewrite, cancelled."""
    e = sympify(e)
    if rules:
        e = apply_rules(e, rules)
    if e.is_Rational:
        return e
    return _canonical(e)


def equal(a, b, rules: Sequence[RewriteRule] = ()) -> bool:
    """Canonical-form equality."""
    return normalize(sympify(a) - sympify(b), rules) == 0


# --------------------------------------------------------------------------
# numeric evaluation
# --------------------------------------------------------------------------

class Backend:
    """Numeric backend for :func:`evaluate`; operates elementwise on arrays."""

    name = "abstract"

    def const(self, p: int, q: int = 1):
        raise NotImplementedError

    def scalar(self, value):
        raise NotImplementedError


class FloatBackend(Backend):
    name = "float"

    def const(self, p, q=1):
        return p / q

    def scalar(self, value):
        return np.asarray(value, dtype=float)

    exp = staticmethod(np.exp)
    sin = staticmethod(np.sin)
    cos = staticmethod(np.cos)
    abs = staticmethod(np.abs)

    def sqrt(self, a):
        return np.sqrt(a)

    def rpow(self, a, p, q):
        return np.power(a, p / q)

    def is_negative(self, a):
        return np.asarray(a < 0)

    def is_zero(self, a):
        return np.asarray(a == 0)


class MpfrBackend(Backend):
    """gmpy2 ``mpfr`` numbers in numpy object arrays (precision in bits)."""

    name = "mpfr"

    def __init__(self, precision: int = 160):
        self.precision = precision
        self.exp = np.frompyfunc(gmpy2.exp, 1, 1)
        self.sin = np.frompyfunc(gmpy2.sin, 1, 1)
        self.cos = np.frompyfunc(gmpy2.cos, 1, 1)
        self.abs = np.frompyfunc(abs, 1, 1)
        self._sqrt = np.frompyfunc(gmpy2.sqrt, 1, 1)
        self._lt0 = np.frompyfunc(lambda v: v < 0, 1, 1)
        self._eq0 = np.frompyfunc(lambda v: v == 0, 1, 1)

    def context(self):
        return gmpy2.context(gmpy2.get_context(), precision=self.precision)

    def const(self, p, q=1):
        return gmpy2.mpq(p, q)

    def scalar(self, value):
        arr = np.asarray(value, dtype=object)
        conv = np.frompyfunc(lambda v: v if isinstance(v, type(gmpy2.mpfr(0))) else gmpy2.mpfr(v), 1, 1)
        return conv(arr)

    def sqrt(self, a):
        return self._sqrt(a)

    def rpow(self, a, p, q):
        return np.frompyfunc(lambda v: gmpy2.rootn(v, q), 1, 1)(a) ** p

    def is_negative(self, a):
        return np.asarray(self._lt0(a), dtype=bool)

    def is_zero(self, a):
        return np.asarray(self._eq0(a), dtype=bool)


FLOAT = FloatBackend()


def evaluate(e: Expr, env: Mapping, backend: Backend = FLOAT, strict: bool = True):
    """Evaluate a realization-free expression.

    ``env`` maps symbols (or their names) to numbers/arrays in the backend's
    representation.  With ``strict`` a division by zero, an even root of a
    negative number, or an unbound symbol raises :class:`EvaluationError`
    naming the offending subtree; otherwise such entries become NaN (float
    backend only).
    """
    values = {}
    for k, v in env.items():
        values[k.name if isinstance(k, sp.Symbol) else k] = v
    cache: dict = {}

    def ev(n):
        hit = cache.get(n)
        if hit is not None:
            return hit
        out = _ev(n)
        cache[n] = out
        return out

    def _ev(n):
        if n.is_Symbol:
            if n.name not in values:
                raise EvaluationError("unbound symbol", n)
            return values[n.name]
        if n.is_Integer:
            return backend.const(int(n))
        if n.is_Rational:
            return backend.const(int(n.p), int(n.q))
        if n.is_Float:
            return backend.scalar(float(n))
        if n is sp.E:
            return backend.exp(backend.scalar(1))
        if n is sp.pi:
            return backend.scalar(gmpy2.const_pi() if backend.name == "mpfr" else math.pi)
        if n.is_Add:
            return reduce(lambda a, b: a + b, (ev(a) for a in n.args))
        if n.is_Mul:
            return reduce(lambda a, b: a * b, (ev(a) for a in n.args))
        if n.is_Pow:
            base = ev(n.base)
            ex = n.exp
            if not ex.is_Rational:
                raise EvaluationError("non-rational exponent", n)
            if ex < 0 and np.any(backend.is_zero(base)):
                if strict:
                    raise EvaluationError("division by zero", n.base)
                base = np.where(backend.is_zero(base), np.nan, base)
            if ex.is_Integer:
                return base ** int(ex)
            if int(ex.q) % 2 == 0 and np.any(backend.is_negative(base)):
                if strict:
                    raise EvaluationError("even root of a negative number", n.base)
                base = np.where(backend.is_negative(base), np.nan, base)
            if ex.q == 2:
                root = backend.sqrt(base)
                return root ** int(ex.p)
            return backend.rpow(base, int(ex.p), int(ex.q))
        if isinstance(n, sp.exp):
            return backend.exp(ev(n.args[0]))
        if isinstance(n, sp.sin):
            return backend.sin(ev(n.args[0]))
        if isinstance(n, sp.cos):
            return backend.cos(ev(n.args[0]))
        if isinstance(n, sp.Abs):
            return backend.abs(ev(n.args[0]))
        if isinstance(n, (AppliedUndef, sp.Derivative)):
            raise EvaluationError("function symbol without realization", n)
        raise EvaluationError("unsupported node", n)

    return ev(sympify(e))


Realizations = Mapping[str, Union[Expr, str]]


def eval_numeric(e: Expr, point: Sequence[float], params: Mapping | None = None,
                 realizations: Realizations | None = None) -> float:
    """IEEE double value of ``e`` at ``point = (t, x, y)``.

    Function symbols are replaced by their realization expressions, so
    derivative orders use the realization's exact derivative.
    """
    e = sympify(e)
    bindings = dict(realizations or {})
    e = substitute_raw(e, bindings)
    env = {name: float(v) for name, v in zip(COORD_NAMES, point)}
    for k, v in (params or {}).items():
        env[k.name if isinstance(k, sp.Symbol) else k] = float(v)
    leftover = function_applications(e)
    if leftover:
        raise EvaluationError("function symbol without realization", sorted(leftover, key=str)[0])
    with np.errstate(all="raise"):
        try:
            value = evaluate(e, env, FLOAT, strict=True)
        except FloatingPointError as exc:
            raise EvaluationError(str(exc), e) from None
    return float(value)


# --------------------------------------------------------------------------
# random realizations and zero testing
# --------------------------------------------------------------------------

def _rational(rng: np.random.Generator, lo: float, hi: float) -> sp.Rational:
    return sp.Rational(int(rng.integers(int(lo * 1000), int(hi * 1000) + 1)), 1000)


def random_smooth(args: Sequence[sp.Symbol], rng: np.random.Generator, positive: bool = False,
                  degree: int = 4) -> Expr:
    """Polynomial of total degree <= ``degree`` plus one sinusoid, coefficients in [-2, 2].

    Positive realizations are ``exp`` of that function scaled by 1/8.
    """
    terms = []
    for monomial in sorted(sp.itermonomials(list(args), degree), key=sp.default_sort_key):
        terms.append(_rational(rng, -2, 2) * monomial)
    phase = sum((_rational(rng, -2, 2) * a for a in args), sp.Integer(0)) + _rational(rng, -2, 2)
    terms.append(_rational(rng, -2, 2) * sp.sin(phase))
    body = sp.Add(*terms)
    if positive:
        return sp.exp(body / 8)
    return body


def random_realizations(e_or_apps, rng: np.random.Generator) -> dict[str, Expr]:
    """One random realization for every abstract function in the input."""
    apps = e_or_apps if isinstance(e_or_apps, (set, frozenset, list, tuple)) else function_applications(e_or_apps)
    out = {}
    for app in sorted(apps, key=sp.default_sort_key):
        name = app.func.__name__
        if name in out:
            continue
        out[name] = random_smooth(app.args, rng, positive=bool(app.is_positive))
    return out


def random_parameter_values(params: Iterable[sp.Symbol], rng: np.random.Generator) -> dict[str, float]:
    out = {}
    for p in sorted(params, key=lambda s: s.name):
        mag = float(rng.uniform(0.5, 2.0))
        sign = 1.0 if p.is_positive or rng.random() < 0.5 else -1.0
        out[p.name] = sign * mag
    return out


class Trilean(enum.Enum):
    ZERO = "zero"
    NONZERO = "nonzero"
    UNKNOWN = "unknown"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Witness:
    """A point (and realization) at which an expression is numerically nonzero."""

    point: tuple[float, float, float]
    value: float
    params: tuple[tuple[str, float], ...] = ()
    realizations: tuple[tuple[str, str], ...] = ()

    def describe(self) -> str:
        pt = ",".join(f"{v:.6g}" for v in self.point)
        out = f"(t,x,y)=({pt}) value={self.value:.6g}"
        if self.params:
            out += " params=" + ",".join(f"{k}={v:.6g}" for k, v in self.params)
        return out


@dataclass(frozen=True)
class ZeroTest:
    status: Trilean
    canonical: Expr
    witness: Witness | None = None

    @property
    def is_zero(self) -> bool:
        return self.status is Trilean.ZERO

    def __bool__(self):
        raise TypeError("ZeroTest is ternary; inspect .status")


_probe_tol = ZERO_TOL


@contextlib.contextmanager
def probe_tolerance(tol: float):
    """Temporarily change the default tolerance of numeric zero probing."""
    global _probe_tol
    saved, _probe_tol = _probe_tol, float(tol)
    try:
        yield
    finally:
        _probe_tol = saved


def _term_scale(e: Expr, env, backend) -> np.ndarray:
    terms = sp.Add.make_args(e)
    total = 0.0
    for term in terms:
        total = total + np.abs(evaluate(term, env, backend, strict=False))
    return total


def probe(e: Expr, rng: np.random.Generator, n_points: int = N_PROBES,
          n_realizations: int = N_REALIZATIONS, tol: float | None = None,
          box: float = 2.0) -> Witness | None:
    """Search for a point where ``e`` is numerically nonzero.

    Each realization draws fresh random function realizations and parameter
    values, then evaluates at ``n_points`` random points of ``[-box, box]^3``.
    A probe counts when the numerator exceeds ``tol`` relative to the
    magnitude of its own terms (at least ``tol`` absolute) and the value
    itself exceeds ``tol``.
    """
    tol = _probe_tol if tol is None else tol
    num, den = e.as_numer_denom()
    apps = function_applications(e)
    params = parameters_of(e)
    best = None
    for _ in range(n_realizations):
        real = random_realizations(apps, rng)
        pvals = random_parameter_values(params, rng)
        n_r = substitute_raw(num, real)
        d_r = substitute_raw(den, real)
        pts = rng.uniform(-box, box, size=(n_points, 3))
        env = {"t": pts[:, 0], "x": pts[:, 1], "y": pts[:, 2], **pvals}
        with np.errstate(all="ignore"):
            nv = np.broadcast_to(evaluate(n_r, env, FLOAT, strict=False), (n_points,))
            dv = np.broadcast_to(evaluate(d_r, env, FLOAT, strict=False), (n_points,))
            scale = np.broadcast_to(_term_scale(sp.expand(n_r), env, FLOAT), (n_points,))
            value = nv / dv
        ok = np.isfinite(nv) & np.isfinite(dv) & (dv != 0) & np.isfinite(value)
        hits = ok & (np.abs(nv) > tol * np.maximum(1.0, scale)) & (np.abs(value) > tol)
        if np.any(hits):
            idx = np.flatnonzero(hits)
            i = idx[np.argmax(np.abs(value[idx]))]
            cand = Witness(
                point=tuple(float(v) for v in pts[i]),
                value=float(value[i]),
                params=tuple(sorted(pvals.items())),
                realizations=tuple((k, render(v)) for k, v in sorted(real.items())),
            )
            if best is None or abs(cand.value) > abs(best.value):
                best = cand
            if abs(best.value) > 1e-3:
                return best
    return best


def is_zero(e, rules: Sequence[RewriteRule] = (), seed: int = 0,
            n_points: int = N_PROBES, n_realizations: int = N_REALIZATIONS,
            tol: float | None = None) -> ZeroTest:
    """Ternary zero test: canonical form first, randomized probing second."""
    canonical = normalize(e, rules)
    if canonical == 0:
        return ZeroTest(Trilean.ZERO, canonical)
    rng = np.random.default_rng(seed)
    witness = probe(canonical, rng, n_points, n_realizations, tol)
    if witness is None:
        return ZeroTest(Trilean.UNKNOWN, canonical)
    return ZeroTest(Trilean.NONZERO, canonical, witness)


def free_function_names(e: Expr) -> set[str]:
    return {a.func.__name__ for a in function_applications(e)}


def depends_on(e: Expr, v: sp.Symbol) -> bool:
    """Structural dependence (function symbols count through their arguments)."""
    return sp.diff(e, v) != 0
