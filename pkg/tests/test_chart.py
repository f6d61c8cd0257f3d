import itertools
import json

import numpy as np
import pytest

from sverify import jet
from sverify.chart import (
    BUILTIN_IDS,
    ChartPoint,
    builtin_example,
    check_almost_s,
    check_killing,
    check_nabla_phi,
    check_nabla_xi,
    christoffels,
    example_document,
    exterior_d_eta,
    load_structure,
    metric_from_expressions,
    nijenhuis_phi,
    riemann_at_point,
    s_r2ns_document,
    sample_points,
    structure_from_dict,
)
from sverify.errors import ConfigError, DegenerateMetric, ExpressionError, UnknownExample
from sverify.gff import fundamental_form
from sverify.spaceform import (
    phi_sectional_curvature,
    random_phi_unit_vectors,
    sectional_curvature,
    space_form_components,
)

sp = pytest.importorskip("sympy")

POLAR = metric_from_expressions("polar", ["r", "t"], [["1", "0"], ["0", "r**2"]], [[0.5, 3.0], [0, 6.0]])
SPHERE = metric_from_expressions(
    "sphere", ["th", "ph"], [["1", "0"], ["0", "sin(th)**2"]], [[0.3, 2.8], [0.0, 6.0]]
)
GENERIC = metric_from_expressions(
    "generic",
    ["u", "v", "w"],
    [
        ["1 + 0.3*u*v", "0.2*w", "0.1*u*u"],
        ["0.2*w", "-1 + 0.1*sin(v*w)", "0.05*u*v*w"],
        ["0.1*u*u", "0.05*u*v*w", "2 + exp(0.2*u)"],
    ],
    [[-0.5, 0.5]] * 3,
)


def sympy_geometry(cm, point):
    """Christoffels and R_abcd from exact symbolic derivatives of g.

    First-kind symbols are differentiated symbolically; the index is raised
    numerically using d(g^-1) = -g^-1 (dg) g^-1.
    """
    xs = sp.symbols(cm.coordinates)
    loc = {"pow": sp.Pow, "exp": sp.exp, "sin": sp.sin, "cos": sp.cos}
    loc.update(zip(cm.coordinates, xs))
    g = sp.Matrix([[sp.sympify(f.source.replace("^", "**"), locals=loc) for f in row] for row in cm.g])
    d = len(xs)
    sub = dict(zip(xs, point))
    ev = lambda e: float(e.subs(sub))
    first = [[[(sp.diff(g[l, j], xs[i]) + sp.diff(g[l, i], xs[j]) - sp.diff(g[i, j], xs[l])) / 2 for j in range(d)] for i in range(d)] for l in range(d)]
    G1 = np.array([[[ev(first[l][i][j]) for j in range(d)] for i in range(d)] for l in range(d)])
    dG1 = np.array([[[[ev(sp.diff(first[l][i][j], xs[a])) for j in range(d)] for i in range(d)] for l in range(d)] for a in range(d)])
    gn = np.array(g.subs(sub), dtype=float)
    dg = np.array([np.array(g.diff(x).subs(sub), dtype=float) for x in xs])
    gi = np.linalg.inv(gn)
    Gn = np.einsum("kl,lij->kij", gi, G1)
    dgi = -np.einsum("kp,apq,ql->akl", gi, dg, gi)
    dG = np.einsum("akl,lij->akij", dgi, G1) + np.einsum("kl,alij->akij", gi, dG1)
    R = np.zeros((d,) * 4)
    for a, b, c, e in itertools.product(range(d), repeat=4):
        tot = 0.0
        for l in range(d):
            rop = dG[c, l, e, b] - dG[e, l, c, b]
            rop += sum(Gn[l, c, m] * Gn[m, e, b] - Gn[l, e, m] * Gn[m, c, b] for m in range(d))
            tot += gn[a, l] * rop
        R[a, b, c, e] = tot
    return Gn, R


def test_polar_christoffels():
    gam = christoffels(POLAR, [2.0, 1.0]).gamma
    assert gam[0, 1, 1] == pytest.approx(-2.0)
    assert gam[1, 0, 1] == pytest.approx(0.5) and gam[1, 1, 0] == pytest.approx(0.5)
    assert np.count_nonzero(np.abs(gam) > 1e-14) == 3
    # finite-difference cross-check of Gamma^r_tt = -1/2 d_r g_tt
    h = 1e-6
    fd = -0.5 * ((2 + h) ** 2 - (2 - h) ** 2) / (2 * h)
    assert gam[0, 1, 1] == pytest.approx(fd, rel=1e-8)
    assert np.abs(riemann_at_point(POLAR, [2.0, 1.0]).components).max() < 1e-14


def test_flat_chart():
    cs = builtin_example("flat_gff", 2, 1)
    p = sample_points(cs, 1)[0]
    assert np.abs(christoffels(cs, p).gamma).max() == 0
    assert np.abs(riemann_at_point(cs, p).components).max() == 0


def test_sphere_curvature_one():
    for p in sample_points(SPHERE, 5, seed=11):
        R = riemann_at_point(SPHERE, p)
        assert sectional_curvature(R, [1.0, 0.0], [0.0, 1.0]) == pytest.approx(1.0, abs=1e-12)


def test_generic_metric_against_sympy():
    p = [0.31, -0.22, 0.17]
    Gn, Rn = sympy_geometry(GENERIC, p)
    cp = ChartPoint(GENERIC, p)
    assert np.abs(cp.gamma.value - Gn).max() < 1e-12
    assert np.abs(cp.riemann.value - Rn).max() < 1e-10
    assert cp.connection().torsion_residual() < 1e-14
    assert cp.metric_compatibility_residual() < 1e-13


def test_generic_metric_second_bianchi():
    # div Ric = 1/2 d tau needs third derivatives of g
    for p in sample_points(GENERIC, 3, seed=5):
        cp = ChartPoint(GENERIC, p, order=3)
        ric = cp.ricci
        tau = jet.einsum("...ab,...ab->...", cp.ginv.truncate(1), ric)
        R0, dR = ric.value, ric.parts[1]
        gam, ginv = cp.gamma.value, cp.ginv.value
        nab = dR - np.einsum("ljk,lm->jkm", gam, R0) - np.einsum("ljm,kl->jkm", gam, R0)
        div = np.einsum("jk,jkm->m", ginv, nab)
        assert np.abs(div - 0.5 * tau.parts[1]).max() < 1e-10


@pytest.mark.parametrize("args", [(1, 1, (1,), None), (1, 2, (1, -1), None), (2, 1, (-1,), (1, -1))])
def test_s_r2ns_against_sympy(args):
    cs = builtin_example("s_r2ns", *args)
    p = sample_points(cs, 1, seed=9)[0]
    _, Rn = sympy_geometry(cs, p)
    assert np.abs(riemann_at_point(cs, p).components - Rn).max() < 1e-10


def test_lorentz_example_gates():
    cs = builtin_example("s_r4_lorentz")
    assert cs.n == 1 and cs.s == 2 and cs.eps == (1, -1)
    for p in sample_points(cs, 5, seed=21):
        assert np.abs(nijenhuis_phi(cs, p).components).max() < 1e-8
        assert check_almost_s(cs, p) < 1e-7
        assert check_nabla_phi(cs, p) < 1e-7
        assert check_nabla_xi(cs, p) < 1e-7
        assert check_killing(cs, p) < 1e-7
        cp = ChartPoint(cs, p)
        assert cp.metric_compatibility_residual() < 1e-10
        st_ = cp.point_structure()
        model = space_form_components(0.0, st_)
        assert np.abs(cp.curvature().components - model).max() < 1e-7


@pytest.mark.parametrize("eps", [(1,), (-1,), (1, 1), (1, -1, -1)])
@pytest.mark.parametrize("phi_signs", [(1, 1), (1, -1)])
def test_s_r2ns_is_space_form_with_c_minus_3eps(eps, phi_signs):
    cs = builtin_example("s_r2ns", 2, len(eps), eps, phi_signs)
    rng = np.random.default_rng(0)
    for p in sample_points(cs, 2, seed=2):
        cp = ChartPoint(cs, p, order=2)
        assert max(cp.gate_residuals().values()) < 1e-10
        st_ = cp.point_structure()
        R = cp.curvature()
        for x, _ in random_phi_unit_vectors(st_, 4, rng):
            assert phi_sectional_curvature(R, st_, x) == pytest.approx(-3 * sum(eps), abs=1e-9)


def test_flat_gff_fails_almost_s_only():
    cs = builtin_example("flat_gff", 1, 1)
    p = sample_points(cs, 1)[0]
    Phi = fundamental_form(cs.point_structure(p)).components
    assert check_almost_s(cs, p) == pytest.approx(np.abs(Phi).max())
    assert check_almost_s(cs, p) >= 0.1
    assert np.abs(nijenhuis_phi(cs, p).components).max() == 0
    assert np.abs(exterior_d_eta(cs, p, 0).components).max() == 0


def test_mixed_partials_of_fields():
    cs = builtin_example("s_r2ns", 2, 2, (1, -1))
    p = sample_points(cs, 1)[0]
    assert max(f.mixed_partial_residual(p) for f in cs.all_fields()) < 1e-12
    assert SPHERE.g[1][1].mixed_partial_residual([0.7, 1.0]) < 1e-12


def test_sample_points_deterministic_and_in_box():
    cs = builtin_example("s_r2ns", 2, 1)
    a, b = sample_points(cs, 4, seed=3), sample_points(cs, 4, seed=3)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert all(np.all(np.abs(x) <= 1) for x in a)
    bad = metric_from_expressions("deg", ["x"], [["0"]], [[0, 1]])
    with pytest.raises(DegenerateMetric):
        sample_points(bad, 1, max_tries=5)


def test_structure_file_roundtrip(tmp_path):
    doc = s_r2ns_document(1, 2, (1, -1))
    path = tmp_path / "s.json"
    path.write_text(json.dumps(doc))
    cs = load_structure(path)
    ref = builtin_example("s_r4_lorentz")
    p = sample_points(cs, 1)[0]
    assert np.array_equal(riemann_at_point(cs, p).components, riemann_at_point(ref, p).components)


def test_structure_parameters():
    doc = example_document("flat_gff")
    doc["parameters"] = {"a": 2.0}
    doc["metric"][0][0] = "a"
    cs = structure_from_dict(doc)
    assert cs.metric_at([0, 0, 0]).components[0, 0] == 2.0


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.pop("metric"),
        lambda d: d.update(n=0),
        lambda d: d.update(eps=[1, 1]),
        lambda d: d.update(coordinates=["a", "a", "b"]),
        lambda d: d.update(domain=[[1, 0]] * 3),
        lambda d: d["phi"].pop(),
    ],
)
def test_bad_documents(mutate):
    doc = example_document("flat_gff")
    mutate(doc)
    with pytest.raises(ConfigError):
        structure_from_dict(doc)


def test_bad_expression_and_files(tmp_path):
    doc = example_document("flat_gff")
    doc["metric"][0][0] = "open('x')"
    with pytest.raises(ExpressionError):
        structure_from_dict(doc)
    with pytest.raises(ConfigError):
        load_structure(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ConfigError):
        load_structure(tmp_path / "bad.json")


def test_builtin_ids():
    for ex in BUILTIN_IDS:
        assert builtin_example(ex).dim >= 3
    with pytest.raises(UnknownExample):
        builtin_example("torus")
