"""Manifest files: the metric function, parameters, vector fields, rules and oracle settings.

The format is INI-like and line oriented::

    # comments start with '#'
    [manifold]
    f = -2*exp(b*x)/b^2
    positive = alpha          # optional, comma-separated function symbols/parameters
    guards = k - c*y          # optional, comma-separated, must stay > 0 at oracle points

    [params]
    b = 1

    [fields]
    K = t ; 2 ; -y            # components along d_t, d_x, d_y

    [rules]
    h''(y) = -alpha(y)*h(y)

    [oracle]
    seed = 0
    points = 100
    box = 2
    fxx_min = 0.1

Only ``[manifold]`` with ``f`` is required.  Everything is parsed before any
computation starts; unknown sections or keys are errors.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

import sympy as sp

from . import symexpr
from .lie_symmetry import VectorField
from .numeric_oracle import SamplePlan
from .symexpr import Expr, RewriteRule
from .walker_geometry import WalkerManifold, build_manifold

SECTIONS = ("manifold", "params", "fields", "rules", "oracle")
MANIFOLD_KEYS = ("f", "positive", "guards")
ORACLE_KEYS = {"seed": int, "points": int, "box": float, "fxx_min": float}


class ManifestError(ValueError):
    """Malformed manifest; the message names the location."""


@dataclass(frozen=True)
class Manifest:
    f: Expr
    params: tuple[tuple[str, Expr], ...] = ()
    positive: tuple[str, ...] = ()
    guards: tuple[str, ...] = ()
    fields: tuple[tuple[str, tuple[str, str, str]], ...] = ()
    rules: tuple[RewriteRule, ...] = ()
    oracle: tuple[tuple[str, float], ...] = ()
    source: str = "<string>"

    def manifold(self, seed: int = 0) -> WalkerManifold:
        return build_manifold(self.f, dict(self.params), self.positive, seed=seed)

    @property
    def field_names(self) -> list[str]:
        return [name for name, _ in self.fields]

    def field(self, name: str) -> VectorField:
        for fname, comps in self.fields:
            if fname == name:
                return VectorField.parse(comps, self.positive, name, dict(self.params))
        raise ManifestError(f"{self.source}: no field named {name!r}; "
                            f"available: {', '.join(self.field_names) or 'none'}")

    def all_fields(self) -> list[VectorField]:
        return [self.field(n) for n in self.field_names]

    def sample_plan(self, seed: int | None = None, points: int | None = None) -> SamplePlan:
        opts = dict(self.oracle)
        return SamplePlan(
            seed=int(opts.get("seed", 0)) if seed is None else seed,
            count=int(opts.get("points", 100)) if points is None else points,
            box=float(opts.get("box", 2.0)),
            fxx_min=float(opts.get("fxx_min", 0.1)),
            guards=self.guards,
        )


def _line_of(text: str, section: str, key: str | None) -> int:
    current = None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
            if key is None and current == section:
                return n
            continue
        if current == section and key is not None and s.split("=", 1)[0].strip() == key:
            return n
    return 0


def _split_list(value: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in value.split(",") if v.strip())


def parse_manifest(text: str, source: str = "<string>") -> Manifest:
    """Parse and validate manifest text; raises :class:`ManifestError`."""
    cp = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#",),
                                   inline_comment_prefixes=("#",), interpolation=None,
                                   empty_lines_in_values=False)
    cp.optionxform = str
    try:
        cp.read_string(text, source)
    except configparser.Error as exc:
        raise ManifestError(f"{source}: {exc}") from None

    def where(section, key=None):
        line = _line_of(text, section, key)
        loc = f"{source}:{line}" if line else source
        return f"{loc} [{section}]" + (f" {key}" if key else "")

    def expr(section, key, value, positive):
        try:
            return symexpr.parse(value, positive)
        except symexpr.ParseError as exc:
            raise ManifestError(f"{where(section, key)}: {exc}") from None

    for section in cp.sections():
        if section not in SECTIONS:
            raise ManifestError(f"{where(section)}: unknown section (expected one of {', '.join(SECTIONS)})")
    if not cp.has_section("manifold"):
        raise ManifestError(f"{source}: missing [manifold] section")
    man = cp["manifold"]
    for key in man:
        if key not in MANIFOLD_KEYS:
            raise ManifestError(f"{where('manifold', key)}: unknown key (expected one of {', '.join(MANIFOLD_KEYS)})")
    if "f" not in man:
        raise ManifestError(f"{where('manifold')}: missing key f")
    positive = _split_list(man.get("positive", ""))
    guards = _split_list(man.get("guards", ""))
    f = expr("manifold", "f", man["f"], positive)
    for g in guards:
        expr("manifold", "guards", g, positive)

    params = []
    if cp.has_section("params"):
        for key, value in cp["params"].items():
            if not key.isidentifier():
                raise ManifestError(f"{where('params', key)}: parameter names must be identifiers")
            v = expr("params", key, value, positive)
            if not (v.is_number and v.is_real):
                raise ManifestError(f"{where('params', key)}: value must be a real number, got {value!r}")
            params.append((key, sp.nsimplify(v) if v.is_Float else v))

    fields = []
    if cp.has_section("fields"):
        for key, value in cp["fields"].items():
            comps = tuple(c.strip() for c in value.split(";"))
            if len(comps) != 3 or not all(comps):
                raise ManifestError(f"{where('fields', key)}: a field needs three components separated by ';'")
            for c in comps:
                expr("fields", key, c, positive)
            fields.append((key, comps))

    rules = []
    if cp.has_section("rules"):
        for key, value in cp["rules"].items():
            try:
                r = RewriteRule.from_text(key, value, positive)
            except symexpr.SymExprError as exc:
                raise ManifestError(f"{where('rules', key)}: {exc}") from None
            if params:
                r = RewriteRule(r.symbol, r.order, symexpr.substitute_raw(r.replacement, dict(params)), r.args)
            rules.append(r)

    oracle = []
    if cp.has_section("oracle"):
        for key, value in cp["oracle"].items():
            if key not in ORACLE_KEYS:
                raise ManifestError(f"{where('oracle', key)}: unknown key (expected one of {', '.join(ORACLE_KEYS)})")
            try:
                oracle.append((key, ORACLE_KEYS[key](value)))
            except ValueError:
                raise ManifestError(f"{where('oracle', key)}: expected {ORACLE_KEYS[key].__name__}, got {value!r}") from None

    return Manifest(f, tuple(params), positive, guards, tuple(fields), tuple(rules), tuple(oracle), source)


def load_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"{path}: {exc.strerror or exc}") from None
    return parse_manifest(text, str(path))
