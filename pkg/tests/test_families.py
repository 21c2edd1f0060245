from fractions import Fraction

import pytest

from walkersym import symexpr as se
from walkersym.classifier import Level, verdict_for
from walkersym.families import (
    AFFINE_CONSTANT_RELABEL, FamilyError, canonical_tag, cflat_constraints, cw_killing_basis, euler_exponents,
    generate_family,
)
from walkersym.lie_symmetry import VectorField


def same_field(A, B):
    return all(se.equal(a, b) for a, b in zip(A.components, B.components))


def test_aliases():
    assert canonical_tag("Nb") == canonical_tag("N_b") == "N_b"
    assert canonical_tag("Pc") == "P_c"
    with pytest.raises(FamilyError):
        canonical_tag("Schwarzschild")


@pytest.mark.parametrize("tag,params", [("N_b", {"b": 0}), ("CW", {"eps": 2}), ("CW", {"eps": 0}),
                                        ("N_b", {"q": 1}), ("P_c", {"c": 1, "alpha": 1}),
                                        ("P_c", {"c": 0, "alpha": -1})])
def test_bad_parameters(tag, params):
    with pytest.raises(FamilyError):
        generate_family(tag, params)


def test_euler_exponents():
    assert euler_exponents(5) == (Fraction(4, 5), Fraction(1, 5))
    assert euler_exponents(4) == (Fraction(1, 2), Fraction(1, 2))
    assert euler_exponents(1) is None      # complex roots
    assert euler_exponents(0) is None
    assert euler_exponents(3) is None      # irrational roots


@pytest.mark.parametrize("b", [1, 2, -1, "1/2"])
def test_nb_affine_general_spans_printed_generators(b):
    fam = generate_family("N_b", {"b": b})
    gen = fam.generator("affine_general").field
    bv = se.sympify(b)
    expected = [
        VectorField.of(se.T, 2 / bv, -se.Y),
        VectorField.of(1, 0, 0),
        VectorField.of(0, 0, 1),
        VectorField.of(se.Y, 0, 0),
    ]
    for k, want in enumerate(expected, 1):
        unit = gen.substitute({f"c{j}": int(j == k) for j in range(1, 5)}).normalized()
        assert same_field(unit, want), (k, unit.render())


def test_every_family_has_the_common_basis():
    for tag, params in (("N_b", {"b": 1}), ("CW", {"eps": 1}), ("P_c", {}), ("cflat", {})):
        names = {g.name for g in generate_family(tag, params).generators}
        assert {"d_t", "y*d_t", "y^2*d_t", "t*d_t"} <= names


def test_proper_generators_know_the_stronger_level():
    fam = generate_family("CW", {"eps": 1})
    g = fam.generator("2t*d_t+x*d_x")
    assert g.proper and g.level is Level.HOMOTHETIC and g.stronger is Level.KILLING and g.eta == 2
    assert fam.generator("d_t").stronger is None


@pytest.mark.parametrize("eps", [1, -1])
def test_cw_killing_basis_is_killing(eps):
    fam = generate_family("CW", {"eps": eps})
    basis = cw_killing_basis(eps)
    assert len(basis) == 4
    for X in basis:
        assert verdict_for(fam.manifold, X, Level.KILLING).holds
    assert same_field(basis[3], VectorField.of(0, 0, 1))


def test_pc_concrete_killing_from_euler_exponents():
    fam = generate_family("P_c", {"c": 5, "k": 20})
    names = [g.name for g in fam.generators if g.name.startswith("killing_h=")]
    assert names == ["killing_h=u^(4/5)", "killing_h=u^(1/5)"]
    for name in names:
        g = fam.generator(name)
        assert verdict_for(fam.manifold, g.field, g.level, g.rules).holds


def test_pc_extra_killing_field():
    fam = generate_family("P_c", {})
    (extra,) = fam.extras
    assert extra.field[2] != 0
    assert verdict_for(fam.manifold, extra.field, Level.KILLING, tuple(extra.rules)).holds


def test_pc_alpha_one_reduces_to_cw():
    pc = generate_family("P_c", {"c": 0, "alpha": 1})
    assert se.equal(pc.manifold.f, generate_family("CW", {"eps": 1}).manifold.f)
    assert not pc.readings


def test_cflat_constraints_shape():
    for kind in ("killing", "homothetic", "affine"):
        cons = cflat_constraints(kind)
        assert [n for n, _ in cons] == [f"{kind}[{i}]" for i in (1, 2, 3)]
    with pytest.raises(KeyError):
        cflat_constraints("ricci")


def test_affine_relabel_is_a_permutation():
    assert sorted(AFFINE_CONSTANT_RELABEL) == sorted(AFFINE_CONSTANT_RELABEL.values())


def test_general_family_has_two_ambiguous_formulas():
    fam = generate_family("general")
    assert len(fam.readings) == 2
    assert all(len(r.candidates) == 2 for r in fam.readings)
