"""Metric and curvature of a strictly Walker three-manifold.

In coordinates ``(t, x, y)`` the metric is::

    g_f = [[0, 0, 1],
           [0, 1, 0],
           [1, 0, f(x, y)]]

Every tensor here is computed from the general coordinate formulas; the
closed forms for this metric family are kept separately
(:func:`closed_forms`) so the two derivations can be checked against each
other.

Index conventions: coordinate order is ``(t, x, y) = (0, 1, 2)``.  The
curvature is stored as ``R[k, i, j, l] = dx^k(R(d_i, d_j) d_l)`` with
``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X,Y]``; its covariant derivative as
``nablaR[k, m, i, j, l] = ((nabla_m R)(d_i, d_j) d_l)^k``; the Ricci tensor is
``rho[j, l] = R[k, k, j, l]``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Mapping

import numpy as np
import sympy as sp

from . import symexpr
from .symexpr import COORDINATES, COORD_NAMES, T, X, Y, Expr, Trilean

log = logging.getLogger(__name__)

DIM = 3


class GeometryError(ValueError):
    pass


class StrictnessError(GeometryError):
    pass


class FlatManifoldError(GeometryError):
    pass


# --------------------------------------------------------------------------
# tensors
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Tensor:
    """Dense array of expressions with a variance signature ('u' up, 'd' down)."""

    variance: tuple[str, ...]
    components: np.ndarray
    name: str = "T"
    guard: str | None = None

    def __post_init__(self):
        if self.components.shape != (DIM,) * len(self.variance):
            raise GeometryError(
                f"{self.name}: shape {self.components.shape} does not match variance {self.variance}")
        if any(v not in ("u", "d") for v in self.variance):
            raise GeometryError(f"bad variance {self.variance}")

    @classmethod
    def build(cls, variance: Iterable[str], fn: Callable[..., Expr], name: str = "T",
              guard: str | None = None) -> "Tensor":
        variance = tuple(variance)
        arr = np.empty((DIM,) * len(variance), dtype=object)
        for idx in np.ndindex(arr.shape):
            arr[idx] = sp.sympify(fn(*idx))
        return cls(variance, arr, name, guard)

    @property
    def rank(self) -> int:
        return len(self.variance)

    def __getitem__(self, idx) -> Expr:
        return self.components[idx]

    def indices(self):
        return np.ndindex(self.components.shape)

    def map(self, fn: Callable[[Expr], Expr], name: str | None = None) -> "Tensor":
        arr = np.empty_like(self.components)
        for idx in self.indices():
            arr[idx] = fn(self.components[idx])
        return Tensor(self.variance, arr, name or self.name, self.guard)

    def normalized(self, rules=()) -> "Tensor":
        return self.map(lambda e: symexpr.normalize(e, rules))

    def __sub__(self, other: "Tensor") -> "Tensor":
        self._check_compatible(other)
        return Tensor(self.variance, self.components - other.components, self.name, self.guard)

    def __add__(self, other: "Tensor") -> "Tensor":
        self._check_compatible(other)
        return Tensor(self.variance, self.components + other.components, self.name, self.guard)

    def scaled(self, factor) -> "Tensor":
        factor = sp.sympify(factor)
        return self.map(lambda e: factor * e)

    def _check_compatible(self, other: "Tensor"):
        if self.variance != other.variance:
            raise GeometryError(f"variance mismatch {self.variance} vs {other.variance}")

    def nonzero(self) -> list[tuple[tuple[int, ...], Expr]]:
        return [(idx, self.components[idx]) for idx in self.indices() if self.components[idx] != 0]

    def is_zero(self) -> bool:
        """Exact structural zero (components assumed normalized)."""
        return not self.nonzero()

    def is_symmetric(self, a: int = 0, b: int = 1) -> bool:
        axes = list(range(self.rank))
        axes[a], axes[b] = axes[b], axes[a]
        swapped = self.components.transpose(axes)
        return all(symexpr.equal(self.components[i], swapped[i]) for i in self.indices())

    def label(self, idx: tuple[int, ...]) -> str:
        up = "".join(COORD_NAMES[i] for i, v in zip(idx, self.variance) if v == "u")
        down = "".join(COORD_NAMES[i] for i, v in zip(idx, self.variance) if v == "d")
        up = up if len(up) < 2 else f"{{{up}}}"
        if up and down:
            return f"{self.name}^{up}_{{{down}}}"
        if up:
            return f"{self.name}^{up}"
        return f"{self.name}_{down}"

    def format(self) -> list[str]:
        """One ``label = expr`` line per nonzero component, in index order."""
        lines = [f"{self.label(idx)} = {symexpr.render(e)}" for idx, e in self.nonzero()]
        if not lines:
            lines = [f"{self.name} = 0"]
        return lines

    def __repr__(self) -> str:
        return f"Tensor({self.name}, variance={''.join(self.variance)}, nonzero={len(self.nonzero())})"


# --------------------------------------------------------------------------
# manifold
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class WalkerManifold:
    """Strictly Walker metric determined by ``f(x, y)``; epsilon is fixed to +1."""

    f: Expr
    params: tuple[tuple[str, Expr], ...] = ()
    positive: frozenset[str] = frozenset()
    fxx_status: Trilean = Trilean.UNKNOWN
    assumptions: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()

    def partial(self, *coords: str) -> Expr:
        """Normalized partial derivative of f, e.g. ``W.partial('x', 'x')``."""
        return _f_partial(self.f, tuple(coords))

    @property
    def f_x(self) -> Expr:
        return self.partial("x")

    @property
    def f_y(self) -> Expr:
        return self.partial("y")

    @property
    def f_xx(self) -> Expr:
        return self.partial("x", "x")

    @property
    def f_xy(self) -> Expr:
        return self.partial("x", "y")

    @property
    def f_yy(self) -> Expr:
        return self.partial("y", "y")

    @property
    def f_xxx(self) -> Expr:
        return self.partial("x", "x", "x")

    @property
    def f_xxy(self) -> Expr:
        return self.partial("x", "x", "y")

    def parse(self, text: str) -> Expr:
        """Parse text with this manifold's positivity assumptions and parameter bindings."""
        e = symexpr.parse(text, self.positive)
        if self.params:
            e = symexpr.substitute_raw(e, dict(self.params))
        return e


@lru_cache(maxsize=4096)
def _f_partial(f: Expr, coords: tuple[str, ...]) -> Expr:
    e = f
    for c in coords:
        e = sp.diff(e, symexpr.COORD_BY_NAME[c])
    return symexpr.normalize(e)


def build_manifold(f, params: Mapping | None = None, positive: Iterable[str] = (),
                   seed: int = 0) -> WalkerManifold:
    """Validate ``f`` and record its assumptions.

    Rejects dependence on ``t`` and an identically vanishing ``f_xx`` (flat).
    An undecided ``f_xx`` is accepted with a warning.
    """
    positive = frozenset(positive)
    if isinstance(f, str):
        f = symexpr.parse(f, positive)
    else:
        f = symexpr.sympify(f)
    bound = tuple(sorted((str(k), symexpr.sympify(v)) for k, v in (params or {}).items()))
    if bound:
        f = symexpr.substitute_raw(f, dict(bound))
    f = symexpr.normalize(f)

    if symexpr.normalize(sp.diff(f, T)) != 0:
        raise StrictnessError(f"f depends on t: {symexpr.render(f)}")
    fxx = symexpr.normalize(sp.diff(f, X, X))
    status = symexpr.is_zero(fxx, seed=seed).status
    if status is Trilean.ZERO:
        raise FlatManifoldError(f"flat manifold rejected: f_xx vanishes identically for f = {symexpr.render(f)}")

    assumptions = ["epsilon = +1", f"f_xx != 0 ({status})"]
    assumptions += [f"positive branch: {name}" for name in sorted(positive)]
    warnings = []
    if status is Trilean.UNKNOWN:
        warnings.append("could not decide f_xx != 0; proceeding on the domain where it holds")
        log.warning("f_xx undecided for f = %s", symexpr.render(f))
    return WalkerManifold(f, bound, positive, status, tuple(assumptions), tuple(warnings))


# --------------------------------------------------------------------------
# generic tensors
# --------------------------------------------------------------------------

@lru_cache(maxsize=256)
def metric_and_inverse(W: WalkerManifold) -> tuple[Tensor, Tensor]:
    m = sp.Matrix([[0, 0, 1], [0, 1, 0], [1, 0, W.f]])
    inv = m.inv()
    g = Tensor.build("dd", lambda i, j: m[i, j], "g")
    ginv = Tensor.build("uu", lambda i, j: symexpr.normalize(inv[i, j]), "ginv")
    return g, ginv


@lru_cache(maxsize=256)
def christoffel(W: WalkerManifold) -> Tensor:
    """Gamma^k_{ij} = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)."""
    g, ginv = metric_and_inverse(W)
    dg = [[[sp.diff(g[i, j], c) for c in COORDINATES] for j in range(DIM)] for i in range(DIM)]

    def comp(k, i, j):
        return symexpr.normalize(sum(
            ginv[k, l] * (dg[j][l][i] + dg[i][l][j] - dg[i][j][l]) for l in range(DIM)) / 2)

    return Tensor.build("udd", comp, "Gamma")


@lru_cache(maxsize=256)
def riemann(W: WalkerManifold) -> Tensor:
    """R^k_{ijl} = d_i Gamma^k_{jl} - d_j Gamma^k_{il} + Gamma^k_{im} Gamma^m_{jl} - Gamma^k_{jm} Gamma^m_{il}."""
    G = christoffel(W)

    def comp(k, i, j, l):
        e = sp.diff(G[k, j, l], COORDINATES[i]) - sp.diff(G[k, i, l], COORDINATES[j])
        e += sum(G[k, i, m] * G[m, j, l] - G[k, j, m] * G[m, i, l] for m in range(DIM))
        return symexpr.normalize(e)

    return Tensor.build("uddd", comp, "R")


@lru_cache(maxsize=256)
def nabla_riemann(W: WalkerManifold) -> Tensor:
    G = christoffel(W)
    R = riemann(W)

    def comp(k, m, i, j, l):
        e = sp.diff(R[k, i, j, l], COORDINATES[m])
        for p in range(DIM):
            e += G[k, m, p] * R[p, i, j, l]
            e -= G[p, m, i] * R[k, p, j, l]
            e -= G[p, m, j] * R[k, i, p, l]
            e -= G[p, m, l] * R[k, i, j, p]
        return symexpr.normalize(e)

    return Tensor.build("udddd", comp, "nablaR")


@lru_cache(maxsize=256)
def recurrence_form(W: WalkerManifold) -> Tensor:
    """omega = (f_xxx/f_xx) dx + (f_xxy/f_xx) dy, defined where f_xx != 0."""
    fxx = W.f_xx
    comps = (sp.Integer(0), symexpr.normalize(W.f_xxx / fxx), symexpr.normalize(W.f_xxy / fxx))
    return Tensor.build("d", lambda m: comps[m], "omega", guard="f_xx != 0")


def recurrence_residual(W: WalkerManifold) -> Tensor:
    """nablaR - omega (x) R, componentwise normalized."""
    nR = nabla_riemann(W)
    R = riemann(W)
    om = recurrence_form(W)
    return Tensor.build(
        "udddd",
        lambda k, m, i, j, l: symexpr.normalize(nR[k, m, i, j, l] - om[m] * R[k, i, j, l]),
        "recurrence", guard="f_xx != 0")


@lru_cache(maxsize=256)
def curvature_tensors(W: WalkerManifold, seed: int = 0) -> tuple[Tensor, Tensor, Tensor]:
    """Curvature, its covariant derivative, and the recurrence one-form.

    The identity ``nablaR = omega (x) R`` is checked on the ``f_xx != 0``
    domain; a component that is numerically nonzero raises
    :class:`GeometryError`.
    """
    residual = recurrence_residual(W)
    for idx, e in residual.nonzero():
        if symexpr.is_zero(e, seed=seed).status is Trilean.NONZERO:
            raise GeometryError(f"recurrence fails at {residual.label(idx)}: {symexpr.render(e)}")
    return riemann(W), nabla_riemann(W), recurrence_form(W)


@lru_cache(maxsize=256)
def ricci_and_scalar(W: WalkerManifold) -> tuple[Tensor, Expr]:
    R = riemann(W)
    _, ginv = metric_and_inverse(W)
    rho = Tensor.build("dd", lambda j, l: symexpr.normalize(sum(R[k, k, j, l] for k in range(DIM))), "rho")
    tau = symexpr.normalize(sum(ginv[j, l] * rho[j, l] for j in range(DIM) for l in range(DIM)))
    return rho, tau


def energy_momentum(W: WalkerManifold) -> Tensor:
    """T = rho - tau/2 g (equal to rho, since tau vanishes)."""
    g, _ = metric_and_inverse(W)
    rho, tau = ricci_and_scalar(W)
    return Tensor.build("dd", lambda i, j: symexpr.normalize(rho[i, j] - tau * g[i, j] / 2), "T")


def nabla_metric(W: WalkerManifold) -> Tensor:
    """(nabla_k g)_{ij}; identically zero for the Levi-Civita connection."""
    g, _ = metric_and_inverse(W)
    G = christoffel(W)

    def comp(k, i, j):
        e = sp.diff(g[i, j], COORDINATES[k])
        e -= sum(G[l, k, i] * g[l, j] + G[l, k, j] * g[i, l] for l in range(DIM))
        return symexpr.normalize(e)

    return Tensor.build("ddd", comp, "nabla_g")


def is_conformally_flat(W: WalkerManifold, seed: int = 0) -> Trilean:
    """Locally conformally flat iff f_xxx vanishes identically."""
    return symexpr.is_zero(W.f_xxx, seed=seed).status


# --------------------------------------------------------------------------
# closed forms for g_f
# --------------------------------------------------------------------------

def _antisym_fill(arr, k, i, j, l, value):
    arr[k, i, j, l] = value
    arr[k, j, i, l] = -value


def closed_forms(W: WalkerManifold) -> dict[str, Tensor]:
    """Connection, curvature, its derivative and Ricci tensor written directly in f.

    Only the components listed as possibly non-vanishing for g_f are set;
    the remaining ones are zero (antisymmetric partners included).
    """
    t, x, y = 0, 1, 2
    half = sp.Rational(1, 2)

    G = np.full((DIM,) * 3, sp.Integer(0), dtype=object)
    G[t, x, y] = G[t, y, x] = half * W.f_x
    G[t, y, y] = half * W.f_y
    G[x, y, y] = -half * W.f_x

    R = np.full((DIM,) * 4, sp.Integer(0), dtype=object)
    _antisym_fill(R, t, x, y, x, half * W.f_xx)
    _antisym_fill(R, x, x, y, y, -half * W.f_xx)

    nR = np.full((DIM,) * 5, sp.Integer(0), dtype=object)
    for m, d3 in ((x, W.f_xxx), (y, W.f_xxy)):
        nR[t, m, x, y, x] = half * d3
        nR[t, m, y, x, x] = -half * d3
        nR[x, m, x, y, y] = -half * d3
        nR[x, m, y, x, y] = half * d3

    rho = np.full((DIM,) * 2, sp.Integer(0), dtype=object)
    rho[y, y] = -half * W.f_xx

    norm = np.frompyfunc(symexpr.normalize, 1, 1)
    return {
        "christoffel": Tensor(("u", "d", "d"), norm(G), "Gamma"),
        "riemann": Tensor(("u", "d", "d", "d"), norm(R), "R"),
        "nabla_riemann": Tensor(("u", "d", "d", "d", "d"), norm(nR), "nablaR"),
        "ricci": Tensor(("d", "d"), norm(rho), "rho"),
    }


def compare_tensors(a: Tensor, b: Tensor, rules=()) -> list[tuple[int, ...]]:
    """Indices where two tensors differ in canonical form."""
    a._check_compatible(b)
    return [idx for idx in a.indices() if symexpr.normalize(a[idx] - b[idx], rules) != 0]
