import pytest

from conftest import write_manifest
from walkersym import symexpr as se
from walkersym.manifest import ManifestError, load_manifest, parse_manifest


def test_shipped_manifests_load(manifest_dir):
    for path in sorted(manifest_dir.glob("*.ini")):
        m = load_manifest(path)
        assert m.field_names
        m.manifold()


def test_params_are_bound():
    m = parse_manifest("[manifold]\nf = -2*exp(b*x)/b^2\n[params]\nb = 2\n[fields]\nK = t ; 1 ; -y\n")
    W = m.manifold()
    assert se.equal(W.f, se.parse("-exp(2*x)/2"))
    assert m.field("K").render() == "(t, 1, -y)"


def test_decimal_params_become_rationals():
    m = parse_manifest("[manifold]\nf = -x^2*b\n[params]\nb = 0.5\n")
    assert dict(m.params)["b"] == se.parse("1/2")


def test_rules_use_params():
    m = parse_manifest("[manifold]\nf = -x^2\n[params]\nw = 3\n[rules]\nh''(y) = -w*h(y)\n")
    (r,) = m.rules
    assert se.equal(r.replacement, se.parse("-3*h(y)"))


def test_oracle_settings():
    m = parse_manifest("[manifold]\nf = x^2\nguards = 1 - y\n[oracle]\nseed = 4\npoints = 7\nbox = 1.5\n")
    plan = m.sample_plan()
    assert (plan.seed, plan.count, plan.box, plan.guards) == (4, 7, 1.5, ("1 - y",))
    assert m.sample_plan(seed=9, points=3).seed == 9


def test_comments():
    m = parse_manifest("# header\n[manifold]\nf = x^2  # CW with eps = -1\n")
    assert se.equal(m.f, se.parse("x^2"))


@pytest.mark.parametrize("text,fragment", [
    ("[manifold]\nf = x^2\n[extras]\na = 1\n", "unknown section"),
    ("[manifold]\nf = x^2\ncolour = red\n", ":3 [manifold] colour: unknown key"),
    ("[manifold]\npositive = a\n", "missing key f"),
    ("[params]\nb = 1\n", "missing [manifold]"),
    ("[manifold]\nf = x^^2\n", "[manifold] f"),
    ("[manifold]\nf = x^2\n[params]\nb = y\n", "must be a real number"),
    ("[manifold]\nf = x^2\n[fields]\nX = 1 ; 2\n", "three components"),
    ("[manifold]\nf = x^2\n[oracle]\npoints = many\n", "expected int"),
    ("[manifold]\nf = x^2\n[oracle]\nstep = 1\n", "unknown key"),
    ("[manifold]\nf = x^2\nf = x^3\n", "m.ini"),
])
def test_errors_name_the_location(text, fragment):
    with pytest.raises(ManifestError) as exc:
        parse_manifest(text, "m.ini")
    assert fragment in str(exc.value)


def test_unknown_field():
    m = parse_manifest("[manifold]\nf = x^2\n[fields]\nA = 1 ; 0 ; 0\n")
    with pytest.raises(ManifestError, match="available: A"):
        m.field("B")


def test_missing_file(tmp_path):
    with pytest.raises(ManifestError):
        load_manifest(tmp_path / "absent.ini")
    path = write_manifest(tmp_path, "[manifold]\nf = exp(x)\n")
    assert load_manifest(path).source == str(path)
