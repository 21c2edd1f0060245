"""Finite-difference oracle, independent of the symbolic derivation.

Tensors are rebuilt from point evaluations of the metric alone: nested
central differences on a memoized integer lattice ``p + n*h`` give the
Christoffel symbols, the curvature, its covariant derivative and the Lie
derivatives along a field.  Arithmetic runs in ``mpfr`` at 160 bits so the
triple nesting of differences loses nothing to cancellation and the error is
pure O(h^2) truncation.  Flow checks integrate a field with classical RK4 in
double precision and compare the pulled-back metric with the original.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import gmpy2
import numpy as np
import sympy as sp

from . import symexpr
from .lie_symmetry import VectorField, lie_tensor
from .symexpr import COORD_NAMES, FLOAT, Expr, MpfrBackend
from .walker_geometry import (
    DIM, Tensor, WalkerManifold, christoffel, metric_and_inverse, nabla_riemann, ricci_and_scalar, riemann,
)

PRECISION = 160
H_SCALE = 1e-5
REL_TOL = 1e-6
FXX_MIN = 0.1
DET_MIN = 1e-12
FLOW_STEPS = 16

MPFR = MpfrBackend(PRECISION)
_to_mpfr = np.frompyfunc(gmpy2.mpfr, 1, 1)
_to_float = np.frompyfunc(float, 1, 1)


def _in_precision(fn):
    """Run ``fn`` with the oracle's mpfr precision as the active context."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        with MPFR.context():
            return fn(*args, **kwargs)

    return wrapper


class OracleError(ValueError):
    pass


class SingularMetricError(OracleError):
    pass


class FlowEscapeError(OracleError):
    pass


# --------------------------------------------------------------------------
# realizations and sample plans
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Realization:
    """Concrete stand-ins for function symbols and free parameters."""

    functions: tuple[tuple[str, Expr], ...] = ()
    params: tuple[tuple[str, float], ...] = ()

    def apply(self, e: Expr) -> Expr:
        e = symexpr.sympify(e)
        if self.functions:
            e = symexpr.substitute_raw(e, dict(self.functions))
        return e

    def env(self, t, x, y) -> dict:
        env = {"t": t, "x": x, "y": y}
        env.update(self.params)
        return env

    def describe(self) -> str:
        parts = [f"{k}={v:.6g}" for k, v in self.params]
        parts += [f"{k}:={symexpr.render(v)}" for k, v in self.functions]
        return ", ".join(parts)


def make_realization(exprs: Iterable[Expr], seed: int = 0, values: Mapping | None = None) -> Realization:
    """Random realizations for every function symbol and unbound parameter.

    Uses the same generators as symbolic zero probing.  ``values`` pins
    chosen parameters instead of drawing them.
    """
    exprs = [symexpr.sympify(e) for e in exprs]
    apps, params = set(), set()
    for e in exprs:
        apps |= symexpr.function_applications(e)
        params |= symexpr.parameters_of(e)
    rng = np.random.default_rng([seed, 7])
    functions = symexpr.random_realizations(apps, rng)
    pinned = {str(k): float(v) for k, v in (values or {}).items()}
    drawn = symexpr.random_parameter_values([p for p in params if p.name not in pinned], rng)
    drawn.update({k: v for k, v in pinned.items() if any(p.name == k for p in params)})
    return Realization(tuple(sorted(functions.items())), tuple(sorted(drawn.items())))


def _eval_float(e: Expr, pts: np.ndarray, real: Realization) -> np.ndarray:
    with np.errstate(all="ignore"):
        v = symexpr.evaluate(real.apply(e), real.env(pts[:, 0], pts[:, 1], pts[:, 2]), FLOAT, strict=False)
    return np.broadcast_to(np.asarray(v, dtype=float), (len(pts),))


@dataclass(frozen=True)
class SamplePlan:
    """Seeded sample points in a box, away from ``f_xx = 0`` and outside positivity domains."""

    seed: int = 0
    count: int = 100
    box: float = 2.0
    fxx_min: float = FXX_MIN
    guards: tuple[str, ...] = ()

    def admissible(self, W: WalkerManifold, real: Realization, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        ok = np.all(np.abs(pts) <= self.box, axis=1)
        fxx = _eval_float(W.f_xx, pts, real)
        ok &= np.isfinite(fxx) & (np.abs(fxx) >= self.fxx_min)
        ok &= np.isfinite(_eval_float(W.f, pts, real))
        for g in self.guards:
            ok &= _eval_float(W.parse(g), pts, real) > 0
        return ok

    def points(self, W: WalkerManifold, real: Realization, count: int | None = None) -> np.ndarray:
        """``count`` admissible points, identical for identical seeds."""
        count = self.count if count is None else count
        rng = np.random.default_rng([self.seed, 11])
        out: list[np.ndarray] = []
        have = 0
        for _ in range(200):
            batch = rng.uniform(-self.box, self.box, size=(max(4 * count, 64), DIM))
            good = batch[self.admissible(W, real, batch)]
            out.append(good)
            have += len(good)
            if have >= count:
                return np.concatenate(out)[:count]
        raise OracleError(f"could not find {count} admissible sample points (found {have})")


# --------------------------------------------------------------------------
# numeric evaluators
# --------------------------------------------------------------------------

MetricEvaluator = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
FieldEvaluator = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def _mpfr_eval(e: Expr, real: Realization, t, x, y) -> np.ndarray:
    with MPFR.context():
        v = symexpr.evaluate(e, real.env(t, x, y), MPFR, strict=True)
    out = np.empty(len(t), dtype=object)
    out[:] = np.broadcast_to(np.asarray(v, dtype=object), (len(t),))
    return out


def walker_metric(W: WalkerManifold, real: Realization = Realization()) -> MetricEvaluator:
    """Metric components ``g[i, j, point]`` from point values of ``f``."""
    f = real.apply(W.f)

    def metric(t, x, y):
        n = len(t)
        g = np.zeros((DIM, DIM, n), dtype=object)
        g[0, 2] = g[2, 0] = 1
        g[1, 1] = 1
        g[2, 2] = _mpfr_eval(f, real, t, x, y)
        return g

    return metric


def field_evaluator(X: VectorField, real: Realization = Realization()) -> FieldEvaluator:
    comps = [real.apply(c) for c in X.components]

    def evaluate(t, x, y):
        return np.array([_mpfr_eval(c, real, t, x, y) for c in comps], dtype=object)

    return evaluate


def _inverse(g: np.ndarray) -> np.ndarray:
    """Adjugate inverse of a stack of 3x3 matrices ``g[i, j, point]``."""
    cof = np.empty_like(g)
    for i, j in itertools.product(range(DIM), repeat=2):
        r = [a for a in range(DIM) if a != i]
        c = [b for b in range(DIM) if b != j]
        cof[i, j] = (-1) ** (i + j) * (g[r[0], c[0]] * g[r[1], c[1]] - g[r[0], c[1]] * g[r[1], c[0]])
    det = g[0, 0] * cof[0, 0] + g[0, 1] * cof[0, 1] + g[0, 2] * cof[0, 2]
    det = np.broadcast_to(np.asarray(det, dtype=object), g.shape[2:])
    if np.any(np.abs(_to_float(det).astype(float)) < DET_MIN):
        raise SingularMetricError(f"singular numeric metric (|det| < {DET_MIN:g})")
    return cof.transpose(1, 0, 2) / det


# --------------------------------------------------------------------------
# lattice of nested central differences
# --------------------------------------------------------------------------

_AXES = tuple(tuple(int(a == i) for a in range(DIM)) for i in range(DIM))


def _shift(o, i, sign):
    return tuple(a + sign * b for a, b in zip(o, _AXES[i]))


class _Lattice:
    """Point-wise quantities on ``p + n*h`` for integer offsets ``n``, memoized per offset."""

    def __init__(self, points: np.ndarray, h_scale: float, metric: MetricEvaluator,
                 field: FieldEvaluator | None = None):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        with MPFR.context():
            self.p = _to_mpfr(pts.T.astype(object))
            self.h = _to_mpfr((1.0 + np.abs(pts.T)).astype(object)) * gmpy2.mpfr(h_scale)
        self.n = pts.shape[0]
        self.metric = metric
        self.field = field
        self._cache: dict = {}

    def with_field(self, field: FieldEvaluator) -> "_Lattice":
        """Same points and metric data, a different vector field."""
        other = object.__new__(_Lattice)
        other.__dict__.update(self.__dict__)
        other.field = field
        other._cache = {k: v for k, v in self._cache.items() if k[0] not in ("X", "dX")}
        return other

    def coords(self, offs):
        n = np.array(offs, dtype=object).T[:, :, None]
        c = self.p[:, None, :] + n * self.h[:, None, :]
        return c.reshape(DIM, -1)

    def _stack(self, offs, arr):
        return np.tile(arr, (1,) * (arr.ndim - 1) + (len(offs),))

    def get(self, name: str, offs) -> np.ndarray:
        offs = list(offs)
        missing = [o for o in dict.fromkeys(offs) if (name, o) not in self._cache]
        if missing:
            with MPFR.context():
                vals = getattr(self, "_" + name)(missing)
            for k, o in enumerate(missing):
                self._cache[(name, o)] = vals[..., k * self.n:(k + 1) * self.n]
        return np.concatenate([self._cache[(name, o)] for o in offs], axis=-1)

    def deriv(self, name: str, offs) -> np.ndarray:
        """Central differences ``out[i, ...] = d_i name`` at each offset."""
        offs = list(offs)
        parts = []
        for i in range(DIM):
            plus = self.get(name, [_shift(o, i, 1) for o in offs])
            minus = self.get(name, [_shift(o, i, -1) for o in offs])
            parts.append((plus - minus) / (2 * self._stack(offs, self.h[i])))
        return np.array(parts, dtype=object)

    # quantities ---------------------------------------------------------
    def _g(self, offs):
        c = self.coords(offs)
        return self.metric(c[0], c[1], c[2])

    def _ginv(self, offs):
        return _inverse(self.get("g", offs))

    def _Gamma(self, offs):
        dg = self.deriv("g", offs)
        ginv = self.get("ginv", offs)
        s = (np.einsum("ilj...->lij...", dg) + np.einsum("jil...->lij...", dg)
             - np.einsum("lij...->lij...", dg))
        return np.einsum("kl...,lij...->kij...", ginv, s) / 2

    def _R(self, offs):
        G = self.get("Gamma", offs)
        A = np.einsum("mkab...->kmab...", self.deriv("Gamma", offs))
        return (A - np.einsum("kijl...->kjil...", A)
                + np.einsum("kim...,mjl...->kijl...", G, G)
                - np.einsum("kjm...,mil...->kijl...", G, G))

    def _nablaR(self, offs):
        G = self.get("Gamma", offs)
        R = self.get("R", offs)
        out = np.einsum("mkijl...->kmijl...", self.deriv("R", offs))
        out = out + np.einsum("kmp...,pijl...->kmijl...", G, R)
        out = out - np.einsum("pmi...,kpjl...->kmijl...", G, R)
        out = out - np.einsum("pmj...,kipl...->kmijl...", G, R)
        out = out - np.einsum("pml...,kijp...->kmijl...", G, R)
        return out

    def _rho(self, offs):
        return np.einsum("kkjl...->jl...", self.get("R", offs))

    def _tau(self, offs):
        return np.einsum("jl...,jl...->...", self.get("ginv", offs), self.get("rho", offs))

    def _X(self, offs):
        if self.field is None:
            raise OracleError("no vector field supplied")
        c = self.coords(offs)
        return self.field(c[0], c[1], c[2])

    def _dX(self, offs):
        return self.deriv("X", offs)

    def lie(self, name: str, variance: str, offs) -> np.ndarray:
        """Coordinate Lie derivative of a lattice tensor along the field."""
        T = self.get(name, offs)
        dT = self.deriv(name, offs)
        X = self.get("X", offs)
        dX = self.get("dX", offs)
        out = sum(X[m] * dT[m] for m in range(DIM))
        letters = "abcde"[:len(variance)]
        for s, v in enumerate(variance):
            moved = letters[:s] + "m" + letters[s + 1:]
            jac = "m" + letters[s] if v == "u" else letters[s] + "m"
            term = np.einsum(f"{moved}...,{jac}...->{letters}...", T, dX)
            out = out - term if v == "u" else out + term
        return out


ORIGIN = (0, 0, 0)

TENSOR_VARIANCE = {"g": "dd", "Gamma": "udd", "R": "uddd", "nablaR": "udddd", "rho": "dd"}


@_in_precision
def fd_tensors(metric: MetricEvaluator, points, h_scale: float = H_SCALE) -> dict[str, np.ndarray]:
    """Numeric g, g^-1, Gamma, R, nablaR, rho and tau at one or many points.

    Arrays carry component indices first and the point index last; entries
    are ``mpfr``.  The step in coordinate ``i`` is ``(1 + |p_i|) * h_scale``.
    """
    lat = _Lattice(points, h_scale, metric)
    names = ("g", "ginv", "Gamma", "R", "nablaR", "rho", "tau")
    return {n: lat.get(n, [ORIGIN]) for n in names}


LIE_KINDS = ("g", "nabla", "R", "rho")


def _fd_lie(lat: _Lattice, kind: str) -> np.ndarray:
    if kind == "g":
        return lat.lie("g", "dd", [ORIGIN])
    if kind == "R":
        return lat.lie("R", "uddd", [ORIGIN])
    if kind == "rho":
        return lat.lie("rho", "dd", [ORIGIN])
    if kind == "nabla":
        ddX = lat.deriv("dX", [ORIGIN])
        return lat.lie("Gamma", "udd", [ORIGIN]) + np.einsum("jik...->kij...", ddX)
    raise OracleError(f"unknown residual kind {kind!r}; expected one of {list(LIE_KINDS)}")


@_in_precision
def fd_lie(kind: str, W: WalkerManifold, X: VectorField, points, h_scale: float = H_SCALE,
           real: Realization = Realization()) -> np.ndarray:
    """Finite-difference Lie derivative of g, the connection, R or rho along X."""
    lat = _Lattice(points, h_scale, walker_metric(W, real), field_evaluator(X, real))
    return _fd_lie(lat, kind)


# --------------------------------------------------------------------------
# symbolic vs numeric comparison
# --------------------------------------------------------------------------

@_in_precision
def symbolic_values(T: Tensor | Expr, real: Realization, points) -> np.ndarray:
    """Evaluate a symbolic tensor (or scalar) at points in ``mpfr``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    with MPFR.context():
        coords = [_to_mpfr(pts[:, i].astype(object)) for i in range(DIM)]
    if not isinstance(T, Tensor):
        return _mpfr_eval(real.apply(T), real, *coords)
    out = np.zeros(T.components.shape + (len(pts),), dtype=object)
    for idx, e in T.nonzero():
        out[idx] = _mpfr_eval(real.apply(e), real, *coords)
    return out


@_in_precision
def relative_error(sym: np.ndarray, num: np.ndarray) -> tuple[float, int]:
    """Worst point of ``max|sym - num| / (1 + max|sym|)``; returns (error, point index)."""
    comp_axes = tuple(range(sym.ndim - 1))
    diff = np.abs(_to_float(sym - num).astype(float))
    mag = np.abs(_to_float(sym).astype(float))
    if comp_axes:
        diff = diff.max(axis=comp_axes)
        mag = mag.max(axis=comp_axes)
    err = diff / (1.0 + mag)
    i = int(np.argmax(err))
    return float(err[i]), i


def symbolic_tensors(W: WalkerManifold) -> dict[str, Tensor | Expr]:
    g, _ = metric_and_inverse(W)
    rho, tau = ricci_and_scalar(W)
    return {"g": g, "Gamma": christoffel(W), "R": riemann(W), "nablaR": nabla_riemann(W),
            "rho": rho, "tau": tau}


@dataclass(frozen=True)
class Comparison:
    subject: str
    error: float
    error_half: float
    point: tuple[float, float, float]
    tol: float = REL_TOL

    EXACT_FLOOR = 1e-25

    @property
    def ratio(self) -> float | None:
        """Error reduction when h is halved; None when already exact to rounding."""
        if self.error < self.EXACT_FLOOR:
            return None
        return self.error / max(self.error_half, 1e-300)

    @property
    def second_order(self) -> bool:
        r = self.ratio
        return r is None or 3.0 <= r <= 5.0

    @property
    def passed(self) -> bool:
        return self.error <= self.tol and self.second_order

    def record(self) -> dict:
        r = self.ratio
        return {"subject": self.subject, "error": f"{self.error:.3e}", "error_half_h": f"{self.error_half:.3e}",
                "ratio": "exact" if r is None else f"{r:.3f}",
                "point": ",".join(f"{v:.6g}" for v in self.point),
                "verdict": "pass" if self.passed else "fail"}


@dataclass
class OracleReport:
    label: str
    realization: Realization
    n_points: int
    comparisons: list[Comparison] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.comparisons)

    @property
    def worst(self) -> Comparison | None:
        return max(self.comparisons, key=lambda c: c.error, default=None)


def _compare(subject, sym, fd, fd_half, pts, tol) -> Comparison:
    err, i = relative_error(sym, fd)
    err_half, _ = relative_error(sym, fd_half)
    return Comparison(subject, err, err_half, tuple(float(v) for v in pts[i]), tol)


@_in_precision
def oracle_check(W: WalkerManifold, fields: Sequence[VectorField] = (), plan: SamplePlan = SamplePlan(),
                 h_scale: float = H_SCALE, tol: float = REL_TOL, label: str = "",
                 values: Mapping | None = None, kinds: Sequence[str] = LIE_KINDS) -> OracleReport:
    """Compare every symbolic tensor and Lie residual with the oracle at step h and h/2."""
    exprs = [W.f] + [c for X in fields for c in X.components]
    real = make_realization(exprs, plan.seed, values)
    pts = plan.points(W, real)
    report = OracleReport(label or symexpr.render(W.f), real, len(pts))
    metric = walker_metric(W, real)
    sym = symbolic_tensors(W)
    lats = [_Lattice(pts, h, metric) for h in (h_scale, h_scale / 2)]
    for name, T in sym.items():
        fd = [lat.get(name, [ORIGIN]) for lat in lats]
        report.comparisons.append(_compare(name, symbolic_values(T, real, pts), fd[0], fd[1], pts, tol))
    for X in fields:
        fe = field_evaluator(X, real)
        with_field = [lat.with_field(fe) for lat in lats]
        for kind in kinds:
            S = lie_tensor(kind, W, X)
            fd = [_fd_lie(lat, kind) for lat in with_field]
            report.comparisons.append(
                _compare(f"L_{X.name} {kind}", symbolic_values(S, real, pts), fd[0], fd[1], pts, tol))
    return report


# --------------------------------------------------------------------------
# flows
# --------------------------------------------------------------------------

def _float_field(X: VectorField, real: Realization):
    comps = [real.apply(c) for c in X.components]

    def F(pts):
        env = real.env(pts[:, 0], pts[:, 1], pts[:, 2])
        return np.stack([np.broadcast_to(np.asarray(symexpr.evaluate(c, env, FLOAT), dtype=float), (len(pts),))
                         for c in comps], axis=1)

    return F


def flow(X: VectorField, points, s: float, real: Realization = Realization(),
         steps: int = FLOW_STEPS, box: float | None = None) -> np.ndarray:
    """Classical RK4 integration of the flow of X for time ``s``."""
    F = _float_field(X, real)
    p = np.atleast_2d(np.asarray(points, dtype=float)).copy()
    dt = s / steps
    for _ in range(steps):
        k1 = F(p)
        k2 = F(p + dt / 2 * k1)
        k3 = F(p + dt / 2 * k2)
        k4 = F(p + dt * k3)
        p = p + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if box is not None and np.any(np.abs(p) > box):
            raise FlowEscapeError("flow left the sample box")
    return p


def _float_metric(W: WalkerManifold, real: Realization, pts: np.ndarray) -> np.ndarray:
    g = np.zeros((len(pts), DIM, DIM))
    g[:, 0, 2] = g[:, 2, 0] = g[:, 1, 1] = 1.0
    g[:, 2, 2] = _eval_float(W.f, pts, real)
    return g


def flow_pullback_check(W: WalkerManifold, X: VectorField, point, s: float = 1e-2, eta: float = 0.0,
                        real: Realization = Realization(), box: float | None = None,
                        delta: float = 1e-5) -> float:
    """``max |exp(-eta*s) * (phi_s^* g) - g|`` at one point.

    The Jacobian of the flow map comes from central differences of the
    integrated flow with step ``delta * (1 + |p_i|)``.
    """
    p = np.asarray(point, dtype=float)
    steps = delta * (1.0 + np.abs(p))
    starts = [p]
    for i in range(DIM):
        for sign in (1, -1):
            q = p.copy()
            q[i] += sign * steps[i]
            starts.append(q)
    ends = flow(X, np.array(starts), s, real, box=box)
    J = np.empty((DIM, DIM))
    for i in range(DIM):
        J[:, i] = (ends[1 + 2 * i] - ends[2 + 2 * i]) / (2 * steps[i])
    g_end = _float_metric(W, real, ends[:1])[0]
    g_start = _float_metric(W, real, p[None, :])[0]
    pulled = J.T @ g_end @ J
    return float(np.max(np.abs(np.exp(-eta * s) * pulled - g_start)))


def flow_defects(W: WalkerManifold, X: VectorField, plan: SamplePlan = SamplePlan(count=20),
                 s: float = 1e-2, eta: float = 0.0) -> np.ndarray:
    """Defects at the plan's sample points; points whose flow leaves the box are replaced."""
    real = make_realization([W.f, *X.components], plan.seed)
    pool = plan.points(W, real, 4 * plan.count)
    out = []
    for p in pool:
        try:
            out.append(flow_pullback_check(W, X, p, s, eta, real, box=plan.box))
        except FlowEscapeError:
            continue
        if len(out) == plan.count:
            break
    if len(out) < plan.count:
        raise OracleError(f"only {len(out)} of {plan.count} flows stayed inside the box")
    return np.array(out)
