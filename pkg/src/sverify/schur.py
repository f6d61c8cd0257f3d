"""Schur-type checks: constancy of h and c, space form => eta-Einstein.

The per-point eta-Einstein coefficient h is obtained from the least-squares
normal equations evaluated in jet arithmetic, so its coordinate derivatives
(needed by the contracted Bianchi residual and by xi(h) = 0) are exact AD
derivatives of the fitted field.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import jet
from .chart import DEFAULT_POINTS, DEFAULT_SEED, ChartPoint, ChartStructure, sample_points
from .errors import GateFailure
from .gff import build_adapted_frame, canonical_point_structure
from .report import NOT_APPLICABLE, Check
from .spaceform import (
    COEFF_PRINTED,
    COEFF_RESOLVED,
    SpaceFormParams,
    build_space_form_curvature,
    eta_einstein_fit,
    h_closed_form,
    phi_sectional_curvatures,
    random_phi_unit_vectors,
    ricci_from_curvature,
    ricci_xi_residual,
    scalar_curvature,
    tau_closed_form,
)

GATE_TOL = 1e-7
DIFF_TOL = 1e-6
SCHUR_TOL = 1e-5
ALG_TOL = 1e-10
CLOSED_FORM_TOL = 1e-9
PHI_PLANES_PER_POINT = 16
# sampling certifies constancy on the chart box only
CHART_LOCAL = "chart-local constancy"


@dataclass
class ScanReport:
    points: list
    h_values: list
    k_values: list
    c_values: list
    fit_residuals: list
    spread_h: float
    spread_c: float
    bianchi_residual: float
    n: int = 0
    epsbar: int = 0
    pointwise_c_spread: float = 0.0
    xi_h: float = 0.0
    tau_residual: float = 0.0
    ricci_xi: float = 0.0
    gates: dict = field(default_factory=dict)


def gate_checks(cs: ChartStructure, points, tol=GATE_TOL) -> list[Check]:
    """Max over ``points`` of every field-level S-gate residual."""
    worst: dict[str, float] = {}
    for p in points:
        for key, val in ChartPoint(cs, p, order=1).gate_residuals().items():
            worst[key] = max(worst.get(key, 0.0), val)
    return [Check(f"gate.{key}", val, tol) for key, val in worst.items()]


def require_s_structure(cs: ChartStructure, points, tol=GATE_TOL) -> list[Check]:
    checks = gate_checks(cs, points, tol)
    failed = [c for c in checks if not c.passed]
    if failed:
        names = ", ".join(f"{c.name}={c.residual:.2e}" for c in failed)
        raise GateFailure(f"{cs.name} is not certified as an S-structure: {names}", checks)
    return checks


def _fit_jets(cp: ChartPoint):
    """(h, k) as order-1 jets from the normal equations of the fit."""
    ric = cp.ricci
    order = ric.order
    g = cp.fields["g"].truncate(order)
    phi = cp.fields["phi"].truncate(order)
    eta = cp.fields["eta"].truncate(order)
    eps = np.asarray(cp.cs.eps, dtype=float)
    gphi = jet.einsum("...ak,...kb->...ab", g, phi)
    A = jet.einsum("...ka,...kb->...ab", phi, gphi)
    eb = jet.einsum("...l,...lb->...b", eps, eta)
    B = jet.einsum("...a,...b->...ab", eb, eb)
    aa, ab, bb = (A * A).sum(), (A * B).sum(), (B * B).sum()
    ar, br = (A * ric).sum(), (B * ric).sum()
    det = aa * bb - ab * ab
    h = (ar * bb - br * ab) / det
    k = (aa * br - ab * ar) / det
    return h, k


def contracted_bianchi_vector(cp: ChartPoint) -> np.ndarray:
    """2n d_m h - 2 div(Ric)_m at the point, one entry per coordinate m."""
    h, _ = _fit_jets(cp)
    ric = cp.ricci
    R0, dR = ric.value, ric.parts[1]  # dR[j, k, m] = d_j Ric_km
    gam, ginv = cp.gamma.value, cp.ginv.value
    nabla = dR - np.einsum("ljk,lm->jkm", gam, R0) - np.einsum("ljm,kl->jkm", gam, R0)
    div = np.einsum("jk,jkm->m", ginv, nabla)
    return 2 * cp.cs.n * h.parts[1] - 2 * div


def contracted_bianchi_residual(cs: ChartStructure, p, tol=GATE_TOL) -> float:
    require_s_structure(cs, [p], tol)
    return float(np.abs(contracted_bianchi_vector(ChartPoint(cs, p, order=3))).max())


def pointwise_phi_sectional(R, st, rng, count=PHI_PLANES_PER_POINT):
    """phi-sectional curvatures over ``count`` random phi-planes at one point."""
    return phi_sectional_curvatures(R, st, [x for x, _ in random_phi_unit_vectors(st, count, rng)])


def scan_eta_einstein(
    cs: ChartStructure, npoints=DEFAULT_POINTS, seed=DEFAULT_SEED, gate_tol=GATE_TOL
) -> ScanReport:
    points = sample_points(cs, npoints, seed)
    gates = {c.name: c.residual for c in require_s_structure(cs, points, gate_tol)}
    rng = np.random.default_rng(seed + 1)
    hs, ks, cs_, res = [], [], [], []
    bianchi = xi_h = tau_res = ric_xi = c_spread = 0.0
    for p in points:
        cp = ChartPoint(cs, p, order=3)
        st = cp.point_structure()
        R = cp.curvature()
        frame = build_adapted_frame(st, seed=seed)
        ric = ricci_from_curvature(R, frame)
        fit = eta_einstein_fit(ric, st)
        hs.append(fit.h)
        ks.append(fit.k)
        res.append(fit.residual)
        cvals = pointwise_phi_sectional(R, st, rng)
        cs_.append(float(cvals.mean()))
        c_spread = max(c_spread, float(np.ptp(cvals)))
        h_jet, _ = _fit_jets(cp)
        xi_h = max(xi_h, float(np.abs(st.xi @ h_jet.parts[1]).max()))
        bianchi = max(bianchi, float(np.abs(contracted_bianchi_vector(cp)).max()))
        tau = scalar_curvature(ric, frame)
        tau_res = max(tau_res, abs(tau - tau_closed_form(fit.h, cs.n, st.epsbar)))
        ric_xi = max(ric_xi, ricci_xi_residual(ric, st))
    return ScanReport(
        points=[list(map(float, p)) for p in points],
        h_values=hs,
        k_values=ks,
        c_values=cs_,
        fit_residuals=res,
        spread_h=float(np.ptp(hs)),
        spread_c=float(np.ptp(cs_)),
        bianchi_residual=bianchi,
        n=cs.n,
        epsbar=int(sum(cs.eps)),
        pointwise_c_spread=c_spread,
        xi_h=xi_h,
        tau_residual=tau_res,
        ricci_xi=ric_xi,
        gates=gates,
    )


def schur_h_constancy(report: ScanReport, n, tol=SCHUR_TOL) -> Check:
    detail = {"n": n, "h_min": min(report.h_values), "h_max": max(report.h_values), "scope": CHART_LOCAL}
    if n < 2:
        detail["reason"] = "needs n >= 2"
        return Check("schur.h_constant", report.spread_h, tol, NOT_APPLICABLE, detail)
    return Check("schur.h_constant", report.spread_h, tol, detail=detail)


def c_constancy(c_per_point, pointwise_spreads, n, point_tol=DIFF_TOL, tol=SCHUR_TOL) -> Check:
    """Verdict on constancy of c given per-point values and per-point spreads."""
    worst = float(max(pointwise_spreads))
    spread = float(np.ptp(c_per_point))
    detail = {
        "n": n,
        "pointwise_spread": worst,
        "c_min": min(c_per_point),
        "c_max": max(c_per_point),
        "scope": CHART_LOCAL,
    }
    if worst >= point_tol:
        detail["reason"] = "not pointwise constant"
        return Check("schur.c_constant", worst, point_tol, "fail", detail)
    if n < 2:
        detail["reason"] = "needs n >= 2"
        return Check("schur.c_constant", spread, tol, NOT_APPLICABLE, detail)
    return Check("schur.c_constant", spread, tol, detail=detail)


def verify_c_constancy(cs: ChartStructure, npoints=DEFAULT_POINTS, seed=DEFAULT_SEED, tol=SCHUR_TOL):
    points = sample_points(cs, npoints, seed)
    require_s_structure(cs, points)
    rng = np.random.default_rng(seed + 1)
    cvals, spreads = [], []
    for p in points:
        cp = ChartPoint(cs, p, order=2)
        vals = pointwise_phi_sectional(cp.curvature(), cp.point_structure(), rng)
        cvals.append(float(vals.mean()))
        spreads.append(float(np.ptp(vals)))
    return c_constancy(cvals, spreads, cs.n, tol=tol)


def sign_patterns(s):
    return [tuple(p) for p in itertools.product((1, -1), repeat=s)]


def sweep_params(ns=(1, 2, 3), ss=(1, 2, 3), cs=(-2.0, 0.0, 1.0, 4.0)):
    for n, s, c in itertools.product(ns, ss, cs):
        for eps in sign_patterns(s):
            yield SpaceFormParams(n, s, eps, c)


def _label(p: SpaceFormParams, phi_signature=None):
    eps = "".join("+" if e > 0 else "-" for e in p.eps)
    tag = f"n={p.n},s={p.s},eps={eps},c={p.c:g}"
    if phi_signature is not None:
        tag += f",phi={phi_signature[0]}+{phi_signature[1]}-"
    return tag


def verify_spaceform_implies_eta_einstein(
    p: SpaceFormParams, phi_signature=None, tol=CLOSED_FORM_TOL, fit_tol=ALG_TOL, seed=DEFAULT_SEED
) -> Check:
    """Fit the space-form Ricci tensor and compare with (h closed form, 2n)."""
    st = canonical_point_structure(p.n, p.s, p.eps, phi_signature)
    R = build_space_form_curvature(p, st)
    frame = build_adapted_frame(st, seed=seed)
    ric = ricci_from_curvature(R, frame)
    fit = eta_einstein_fit(ric, st)
    h_expected = h_closed_form(p)
    delta = max(abs(fit.h - h_expected), abs(fit.k - 2 * p.n))
    detail = {
        "h": fit.h,
        "k": fit.k,
        "h_expected": h_expected,
        "k_expected": 2 * p.n,
        "fit_residual": fit.residual,
    }
    ok = delta < tol and fit.residual < fit_tol
    return Check(f"eta_einstein[{_label(p, phi_signature)}]", max(delta, fit.residual), tol, "pass" if ok else "fail", detail)


def erratum_guard(p: SpaceFormParams, samples=100, seed=DEFAULT_SEED, tol=CLOSED_FORM_TOL) -> list[Check]:
    """phi-sectional curvature under both Phi-term coefficients.

    The resolved coefficient must reproduce c; the printed one must give
    c + 3/2 eps, which differs from c whenever eps != 0.
    """
    st = canonical_point_structure(p.n, p.s, p.eps)
    rng = np.random.default_rng(seed)
    xs = [x for x, _ in random_phi_unit_vectors(st, samples, rng)]
    out = []
    for coeff, target in ((COEFF_RESOLVED, p.c), (COEFF_PRINTED, p.c + 1.5 * p.epsbar)):
        R = build_space_form_curvature(p, st, coefficient=coeff)
        vals = phi_sectional_curvatures(R, st, xs)
        err = float(np.abs(vals - target).max())
        detail = {"coefficient": coeff, "expected": target, "mean": float(vals.mean())}
        if coeff == COEFF_PRINTED:
            detail["differs_from_c"] = bool(abs(target - p.c) > tol)
        out.append(Check(f"erratum[{coeff},{_label(p)}]", err, tol, detail=detail))
    return out
