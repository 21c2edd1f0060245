"""Defining functions used to cross-check the engine.

Each entry carries the numeric values the oracle should use for its free
parameters (others are drawn at random) and any positivity guard the sample
points must respect.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .lie_symmetry import VectorField
from .walker_geometry import WalkerManifold, build_manifold


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    f: str
    positive: tuple[str, ...] = ()
    values: dict = field(default_factory=dict)
    guards: tuple[str, ...] = ()

    def manifold(self, seed: int = 0) -> WalkerManifold:
        return build_manifold(self.f, positive=self.positive, seed=seed)


CORPUS = (
    CorpusEntry("N_1", "-2*exp(x)"),
    CorpusEntry("N_2", "-2*exp(2*x)/4"),
    CorpusEntry("N_-1", "-2*exp(-x)"),
    CorpusEntry("N_b", "-2*exp(b*x)/b^2", values={"b": 0.75}),
    CorpusEntry("P_c concrete", "-x^2*4/(k - c*y)^2", values={"k": 4, "c": 1}, guards=("k - c*y",)),
    CorpusEntry("P_c abstract", "-x^2*alpha(y)", positive=("alpha",)),
    CorpusEntry("CW_+1", "-x^2"),
    CorpusEntry("CW_-1", "x^2"),
    CorpusEntry("conformally flat", "p*x^2 + q*x + r"),
    CorpusEntry("conformally flat, y-dependent", "p(y)*x^2 + q(y)*x + r(y)"),
    CorpusEntry("exp(x+y)", "exp(x + y)"),
    CorpusEntry("polynomial", "x^3*y + sin(y)"),
    CorpusEntry("mixed", "exp(x)*cos(y) + x^2*y^2"),
)

# a field with no symmetry, exercising every term of the Lie-derivative formulas
PROBE_FIELD = ("t*y + sin(x)", "x*y - t", "y^2 + x")


def probe_field(name: str = "probe") -> VectorField:
    return VectorField.parse(PROBE_FIELD, name=name)
