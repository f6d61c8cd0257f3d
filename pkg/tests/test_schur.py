from pathlib import Path

import numpy as np
import pytest

from sverify.chart import ChartPoint, builtin_example, load_structure, sample_points
from sverify.errors import GateFailure
from sverify.gff import canonical_point_structure
from sverify.report import FAIL, NOT_APPLICABLE, PASS
from sverify.schur import (
    ScanReport,
    _fit_jets,
    c_constancy,
    contracted_bianchi_residual,
    contracted_bianchi_vector,
    erratum_guard,
    pointwise_phi_sectional,
    scan_eta_einstein,
    schur_h_constancy,
    sweep_params,
    verify_c_constancy,
    verify_spaceform_implies_eta_einstein,
)
from sverify.spaceform import CurvatureTensor, SpaceFormParams, build_space_form_curvature, c_from_h

WARPED = Path(__file__).resolve().parents[1] / "structures" / "sasaki_warped.json"


def synthetic(h_values, n=2):
    return ScanReport(
        points=[], h_values=list(h_values), k_values=[2 * n] * len(h_values), c_values=[],
        fit_residuals=[], spread_h=float(np.ptp(h_values)), spread_c=0.0, bianchi_residual=0.0,
    )


def test_lorentz_scan_h_zero():
    rep = scan_eta_einstein(builtin_example("s_r4_lorentz"), 10)
    assert len(rep.h_values) == 10
    assert max(abs(h) for h in rep.h_values) < 1e-6
    assert max(abs(k - 2) for k in rep.k_values) < 1e-6
    assert rep.xi_h < 1e-5 and rep.bianchi_residual < 1e-5


def test_r2ns_scan_constant_and_consistent():
    cs = builtin_example("s_r2ns", 2, 1, (1,))
    rep = scan_eta_einstein(cs, 10)
    assert rep.spread_h < 1e-6 and rep.spread_c < 1e-6
    assert schur_h_constancy(rep, 2).status == PASS
    c = float(np.mean(rep.c_values))
    assert c == pytest.approx(-3.0, abs=1e-9)
    assert c_from_h(rep.h_values[0], 2, 1) == pytest.approx(c, abs=1e-9)
    check = verify_c_constancy(cs, 10)
    assert check.status == PASS


def test_lorentz_c_zero():
    check = verify_c_constancy(builtin_example("s_r4_lorentz"), 10)
    assert check.status == NOT_APPLICABLE  # n = 1
    assert max(abs(check.detail["c_min"]), abs(check.detail["c_max"])) < 1e-6


def test_flat_gff_rejected():
    cs = builtin_example("flat_gff", 2, 1)
    with pytest.raises(GateFailure) as info:
        scan_eta_einstein(cs, 3)
    failed = {c.name for c in info.value.checks if c.status == FAIL}
    assert "gate.almost_s" in failed
    with pytest.raises(GateFailure):
        verify_c_constancy(cs, 3)
    with pytest.raises(GateFailure):
        contracted_bianchi_residual(cs, sample_points(cs, 1)[0])


@pytest.mark.parametrize("example,args", [("s_r4_lorentz", ()), ("s_r2ns", (2, 1, (1,)))])
def test_contracted_bianchi(example, args):
    cs = builtin_example(example, *args)
    for p in sample_points(cs, 3, seed=4):
        assert contracted_bianchi_residual(cs, p) < 1e-5


def test_nonhomogeneous_n1_structure():
    # a Sasakian 3-manifold over a non-flat conformal base: h varies, so the
    # Bianchi and xi(h) checks see a nonzero gradient
    cs = load_structure(WARPED)
    rep = scan_eta_einstein(cs, 10)
    assert rep.spread_h > 0.5
    p = rep.points[0]
    dh = _fit_jets(ChartPoint(cs, p, order=3))[0].parts[1]
    assert np.abs(dh).max() > 0.1
    assert rep.bianchi_residual < 1e-10
    assert rep.xi_h < 1e-10
    verdict = schur_h_constancy(rep, 1)
    assert verdict.status == NOT_APPLICABLE and verdict.passed
    assert max(rep.fit_residuals) < 1e-10


def test_bianchi_vector_detects_wrong_h_gradient():
    cs = load_structure(WARPED)
    cp = ChartPoint(cs, sample_points(cs, 1)[0], order=3)
    base = contracted_bianchi_vector(cp)
    h = _fit_jets(cp)[0]
    # dropping the gradient term leaves 2 div Ric = 2n dh, which is nonzero here
    assert np.abs(base - 2 * cs.n * h.parts[1]).max() > 0.1


def test_schur_verdicts_synthetic():
    assert schur_h_constancy(synthetic([1.0, 1.0 + 1e-9]), 2).status == PASS
    assert schur_h_constancy(synthetic([1.0, 1.0]), 1).status == NOT_APPLICABLE
    bad = schur_h_constancy(synthetic([1.0, 1.3, 1.1]), 2)
    assert bad.status == FAIL
    assert bad.residual == pytest.approx(0.3)


def test_pointwise_nonconstant_c_reported():
    p = SpaceFormParams(2, 1, (1,), 1.0)
    st_ = canonical_point_structure(2, 1, (1,))
    R = build_space_form_curvature(p, st_)
    # bump the curvature of planes meeting span{E_1, phi E_1}
    G = st_.G
    e1, pe1 = G @ np.eye(5)[0], G @ np.eye(5)[2]
    S = np.outer(e1, e1) + np.outer(pe1, pe1)
    kn = np.einsum("ac,bd->abcd", S, S) - np.einsum("bc,ad->abcd", S, S)
    bumped = CurvatureTensor(R.components + 0.2 * kn, st_.g)
    rng = np.random.default_rng(0)
    vals = pointwise_phi_sectional(bumped, st_, rng)
    check = c_constancy([float(vals.mean())], [float(np.ptp(vals))], 2)
    assert check.status == FAIL
    assert check.detail["reason"] == "not pointwise constant"
    ok = pointwise_phi_sectional(R, st_, rng)
    assert c_constancy([1.0, 1.0], [float(np.ptp(ok))] * 2, 2).status == PASS


def test_sweep_n2_n3_passes():
    checks = [verify_spaceform_implies_eta_einstein(p) for p in sweep_params(ns=(2, 3))]
    assert len(checks) == 2 * (2 + 4 + 8) * 4
    assert all(c.status == PASS for c in checks)


def test_u2_value_and_mixed_phi_signature():
    c = verify_spaceform_implies_eta_einstein(SpaceFormParams(1, 2, (1, -1), 4.0))
    assert c.status == PASS
    assert (c.detail["h"], c.detail["k"]) == pytest.approx((4.0, 2.0), abs=1e-12)
    c = verify_spaceform_implies_eta_einstein(SpaceFormParams(3, 2, (-1, -1), 1.0), phi_signature=(1, 2))
    assert c.status == PASS and "phi=1+2-" in c.name


def test_erratum_guard():
    ok, printed = erratum_guard(SpaceFormParams(2, 2, (1, 1), 1.0))
    assert ok.status == PASS and printed.status == PASS
    assert printed.detail["expected"] == pytest.approx(4.0)
    assert printed.detail["differs_from_c"]
    _, same = erratum_guard(SpaceFormParams(1, 2, (1, -1), 1.0))
    assert not same.detail["differs_from_c"]
