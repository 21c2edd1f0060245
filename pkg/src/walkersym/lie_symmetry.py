"""Lie derivatives along a vector field of g, its connection, curvature and Ricci tensor.

Each operator returns the residual tensor from the coordinate formula; a
vector field is a symmetry of the corresponding kind exactly when the
residual vanishes.  All four are built on the generic tensors of
:mod:`walkersym.walker_geometry` and never on integrated forms of the
symmetry equations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import sympy as sp

from . import symexpr
from .symexpr import COORDINATES, Expr, RewriteRule
from .walker_geometry import (
    DIM, Tensor, WalkerManifold, christoffel, metric_and_inverse, ricci_and_scalar, riemann,
)


@dataclass(frozen=True)
class VectorField:
    """X = X1 d_t + X2 d_x + X3 d_y."""

    components: tuple[Expr, Expr, Expr]
    name: str = "X"

    def __post_init__(self):
        if len(self.components) != DIM:
            raise ValueError(f"vector field needs {DIM} components, got {len(self.components)}")
        object.__setattr__(self, "components", tuple(symexpr.sympify(c) for c in self.components))

    @classmethod
    def parse(cls, texts: Sequence[str], positive: Iterable[str] = (), name: str = "X",
              bindings: Mapping | None = None) -> "VectorField":
        comps = [symexpr.parse(s, positive) for s in texts]
        if bindings:
            comps = [symexpr.substitute_raw(c, bindings) for c in comps]
        return cls(tuple(comps), name)

    @classmethod
    def of(cls, X1=0, X2=0, X3=0, name: str = "X") -> "VectorField":
        return cls((X1, X2, X3), name)

    def __getitem__(self, i: int) -> Expr:
        return self.components[i]

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(tuple(a + b for a, b in zip(self.components, other.components)), self.name)

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(tuple(a - b for a, b in zip(self.components, other.components)), self.name)

    def scaled(self, factor) -> "VectorField":
        factor = symexpr.sympify(factor)
        return VectorField(tuple(factor * c for c in self.components), self.name)

    def substitute(self, bindings: Mapping, rules: Sequence[RewriteRule] = ()) -> "VectorField":
        return VectorField(tuple(symexpr.substitute(c, bindings, rules) for c in self.components), self.name)

    def normalized(self, rules: Sequence[RewriteRule] = ()) -> "VectorField":
        return VectorField(tuple(symexpr.normalize(c, rules) for c in self.components), self.name)

    def apply(self, phi: Expr) -> Expr:
        """Directional derivative X(phi)."""
        return sum(c * sp.diff(phi, v) for c, v in zip(self.components, COORDINATES))

    def is_zero(self) -> bool:
        return all(symexpr.normalize(c) == 0 for c in self.components)

    def render(self) -> str:
        return "(" + ", ".join(symexpr.render(c) for c in self.components) + ")"

    def __str__(self) -> str:
        return f"{self.name} = {self.render()}"


def bracket(X: VectorField, Y: VectorField, rules: Sequence[RewriteRule] = ()) -> VectorField:
    """[X, Y]^k = X(Y^k) - Y(X^k)."""
    comps = tuple(symexpr.normalize(X.apply(Y[k]) - Y.apply(X[k]), rules) for k in range(DIM))
    return VectorField(comps, f"[{X.name},{Y.name}]")


def _jacobian(X: VectorField) -> list[list[Expr]]:
    """dX[i][k] = d_i X^k."""
    return [[sp.diff(X[k], v) for k in range(DIM)] for v in COORDINATES]


def _lie_covariant(T: Tensor, X: VectorField, rules, name: str) -> Tensor:
    """Lie derivative of an arbitrary tensor from the coordinate formula."""
    dX = _jacobian(X)

    def comp(*idx):
        e = X.apply(T[idx])
        for s, v in enumerate(T.variance):
            for m in range(DIM):
                moved = list(idx)
                moved[s] = m
                if v == "u":
                    e -= T[tuple(moved)] * dX[m][idx[s]]
                else:
                    e += T[tuple(moved)] * dX[idx[s]][m]
        return symexpr.normalize(e, rules)

    return Tensor.build(T.variance, comp, name)


def lie_metric(W: WalkerManifold, X: VectorField, rules: Sequence[RewriteRule] = ()) -> Tensor:
    """(L_X g)_ij = X^k d_k g_ij + g_kj d_i X^k + g_ik d_j X^k."""
    g, _ = metric_and_inverse(W)
    return _lie_covariant(g, X, rules, "Lg")


def lie_connection(W: WalkerManifold, X: VectorField, rules: Sequence[RewriteRule] = ()) -> Tensor:
    """(L_X nabla)^k_ij: the tensorial Lie derivative of Gamma plus d_i d_j X^k."""
    G = christoffel(W)
    dX = _jacobian(X)

    def comp(k, i, j):
        e = X.apply(G[k, i, j]) + sp.diff(X[k], COORDINATES[i], COORDINATES[j])
        for l in range(DIM):
            e -= G[l, i, j] * dX[l][k]
            e += G[k, l, j] * dX[i][l] + G[k, i, l] * dX[j][l]
        return symexpr.normalize(e, rules)

    return Tensor.build("udd", comp, "Lnabla")


def lie_riemann(W: WalkerManifold, X: VectorField, rules: Sequence[RewriteRule] = ()) -> Tensor:
    """(L_X R)^k_abc for the (1,3) curvature tensor."""
    return _lie_covariant(riemann(W), X, rules, "LR")


def lie_ricci(W: WalkerManifold, X: VectorField, rules: Sequence[RewriteRule] = ()) -> Tensor:
    """(L_X rho)_ij; also the matter-collineation residual since T = rho."""
    rho, _ = ricci_and_scalar(W)
    return _lie_covariant(rho, X, rules, "Lrho")


def lie_tensor(kind: str, W: WalkerManifold, X: VectorField, rules: Sequence[RewriteRule] = ()) -> Tensor:
    """Dispatch by residual kind: ``g``, ``nabla``, ``R`` or ``rho``."""
    try:
        op = LIE_OPERATORS[kind]
    except KeyError:
        raise ValueError(f"unknown residual kind {kind!r}; expected one of {sorted(LIE_OPERATORS)}") from None
    return op(W, X, rules)


LIE_OPERATORS = {"g": lie_metric, "nabla": lie_connection, "R": lie_riemann, "rho": lie_ricci}
