"""Command-line front end.

Exit status: 0 when every check passes, 1 when a verification check fails,
2 on invalid input (bad flags, bad config or structure file, unknown example).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .chart import (
    BUILTIN_IDS,
    DETA_CONVENTION,
    ChartPoint,
    builtin_example,
    load_structure,
    sample_points,
)
from .errors import ConfigError, GateFailure, SVerifyError
from .gff import (
    build_adapted_frame,
    canonical_point_structure,
    frame_gram_residual,
    validate_structure,
)
from .report import NOT_APPLICABLE, Check, VerificationReport
from .schur import (
    GATE_TOL,
    SCHUR_TOL,
    c_constancy,
    erratum_guard,
    gate_checks,
    require_s_structure,
    scan_eta_einstein,
    schur_h_constancy,
    sweep_params,
    verify_spaceform_implies_eta_einstein,
)
from .spaceform import (
    COEFF_RESOLVED,
    SpaceFormParams,
    build_space_form_curvature,
    characteristic_identity_residuals,
    eta_einstein_fit,
    h_closed_form,
    perturbed_ricci,
    phi_sectional_curvatures,
    random_phi_unit_vectors,
    ricci_from_curvature,
    ricci_xi_residual,
    scalar_curvature,
    space_form_components,
    symmetry_residuals,
    tau_closed_form,
)

DEFAULTS = {
    "n": None,
    "s": None,
    "eps": None,
    "c": None,
    "phi_signature": None,
    "phi_signs": None,
    "example": None,
    "structure": None,
    "points": 10,
    "seed": 42,
    "tol_alg": 1e-10,
    "tol_diff": 1e-6,
    "perturb": None,
    "sweep": False,
    "conjugate": False,
    "expect_h": None,
    "samples": 64,
    "phi_samples": 100,
}

# Known values for builtin examples.
EXPECTED_H = {"s_r4_lorentz": 0.0}


def parse_eps(value):
    """Parse a sign list: '+', '+-', '+,-', '1,-1' or a JSON list."""
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        items = list(value)
    else:
        text = str(value).strip()
        if "," in text or text.lstrip("+-").isdigit():
            items = [t for t in text.split(",") if t.strip()]
        else:
            items = list(text)
    out = []
    for item in items:
        token = str(item).strip()
        if token in ("+", "+1", "1"):
            out.append(1)
        elif token in ("-", "-1"):
            out.append(-1)
        else:
            raise ConfigError(f"cannot parse sign {token!r} in {value!r}")
    if not out:
        raise ConfigError("sign list is empty")
    return out


def parse_pair(value):
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        items = list(value)
    else:
        items = str(value).split(",")
    try:
        p, q = (int(v) for v in items)
    except ValueError:
        raise ConfigError(f"expected a pair 'p,q', got {value!r}") from None
    return p, q


def resolve_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None and val is not False:
            cfg[key] = val
    cfg["eps"] = parse_eps(cfg["eps"])
    cfg["phi_signs"] = parse_eps(cfg["phi_signs"])
    cfg["phi_signature"] = parse_pair(cfg["phi_signature"])
    for key in ("tol_alg", "tol_diff"):
        cfg[key] = float(cfg[key])
        if not cfg[key] > 0:
            raise ConfigError(f"{key} must be positive")
    cfg["points"] = int(cfg["points"])
    if cfg["points"] < 1:
        raise ConfigError("points must be >= 1")
    cfg["seed"] = int(cfg["seed"])
    if not 0 <= cfg["seed"] < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return cfg


def _require_nse(cfg, need_c=False):
    n, s, eps = cfg["n"], cfg["s"], cfg["eps"]
    if n is None or s is None:
        raise ConfigError("--n and --s are required")
    n, s = int(n), int(s)
    if n < 1:
        raise ConfigError("n must be >= 1")
    if s < 1:
        raise ConfigError("s must be >= 1 (the kernel of phi must be framed)")
    if eps is None:
        eps = [1] * s
    if len(eps) != s:
        raise ConfigError(f"eps has {len(eps)} signs but s = {s}")
    if need_c and cfg["c"] is None:
        raise ConfigError("--c is required")
    cfg.update(n=n, s=s, eps=eps)
    return n, s, tuple(eps)


def _chart_from_config(cfg):
    if cfg["structure"]:
        if cfg["example"]:
            raise ConfigError("give either --example or --structure, not both")
        return load_structure(cfg["structure"])
    if not cfg["example"]:
        raise ConfigError("--example or --structure is required")
    return builtin_example(cfg["example"], cfg["n"], cfg["s"], cfg["eps"], cfg["phi_signs"])


def conventions():
    return {
        "curvature_slots": "R(X,Y,Z,W) = g(R(Z,W)Y, X), R(Z,W) = [nabla_Z, nabla_W] - nabla_[Z,W]",
        "sectional": "K(x,y) = R(x,y,x,y) / (g(x,x) g(y,y) - g(x,y)^2)",
        "ricci": "Ric(X,Y) = sum_a eps_a R(X, e_a, Y, e_a)",
        "d_eta": DETA_CONVENTION,
        "space_form_phi_coefficient": COEFF_RESOLVED,
        "fundamental_form": "Phi(X,Y) = g(X, phi Y)",
    }


# commands -----------------------------------------------------------------


def cmd_verify_structure(cfg):
    tol = cfg["tol_alg"]
    checks = []
    if cfg["example"] or cfg["structure"]:
        cs = _chart_from_config(cfg)
        structures = [(f"p{i}", cs.point_structure(p)) for i, p in enumerate(sample_points(cs, cfg["points"], cfg["seed"]))]
        tol = max(tol, 1e-8)
    else:
        n, s, eps = _require_nse(cfg)
        st = canonical_point_structure(n, s, eps, cfg["phi_signature"])
        if cfg["conjugate"]:
            rng = np.random.default_rng(cfg["seed"])
            T = np.eye(st.dim) + 0.3 * rng.standard_normal((st.dim, st.dim))
            st = st.transformed(T)
        structures = [("point", st)]
    worst: dict[str, float] = {}
    for _, st in structures:
        for key, val in validate_structure(st).items():
            worst[key] = max(worst.get(key, 0.0), val)
        worst["phi_cubed"] = max(
            worst.get("phi_cubed", 0.0), float(np.abs(st.phi @ st.phi @ st.phi + st.phi).max())
        )
        frame = build_adapted_frame(st, seed=cfg["seed"])
        worst["adapted_frame"] = max(worst.get("adapted_frame", 0.0), frame_gram_residual(frame, st.g))
    checks += [Check(f"axiom.{k}", v, tol) for k, v in worst.items()]
    return checks


def _model_checks(p: SpaceFormParams, cfg, perturb=None):
    tol = cfg["tol_alg"]
    st = canonical_point_structure(p.n, p.s, p.eps, cfg["phi_signature"])
    R = build_space_form_curvature(p, st)
    frame = build_adapted_frame(st, seed=cfg["seed"])
    checks = [Check(f"symmetry.{k}", v, tol) for k, v in symmetry_residuals(R).items()]
    ident = characteristic_identity_residuals(R, st, samples=cfg["samples"], seed=cfg["seed"])
    checks += [Check(f"characteristic.{k}", v, tol) for k, v in ident.items()]
    rng = np.random.default_rng(cfg["seed"])
    xs = [x for x, _ in random_phi_unit_vectors(st, cfg["phi_samples"], rng)]
    vals = phi_sectional_curvatures(R, st, xs)
    checks.append(Check("phi_sectional", float(np.abs(vals - p.c).max()), 1e-9, detail={"c": p.c}))
    ric = ricci_from_curvature(R, frame)
    checks.append(Check("ricci_xi", ricci_xi_residual(ric, st), tol))
    if perturb:
        ric = perturbed_ricci(ric, frame, st.g, perturb)
    fit = eta_einstein_fit(ric, st)
    h_cf = h_closed_form(p)
    checks.append(
        Check("eta_einstein.fit_residual", fit.residual, tol, detail={"h": fit.h, "k": fit.k, "perturbation": perturb})
    )
    checks.append(Check("eta_einstein.k", abs(fit.k - 2 * p.n), 1e-9, detail={"k": fit.k, "expected": 2 * p.n}))
    checks.append(Check("eta_einstein.h", abs(fit.h - h_cf), 1e-9, detail={"h": fit.h, "expected": h_cf}))
    tau = scalar_curvature(ric, frame)
    tau_cf = tau_closed_form(fit.h, p.n, p.epsbar)
    checks.append(Check("scalar_curvature", abs(tau - tau_cf), 1e-9, detail={"tau": tau, "expected": tau_cf}))
    return checks


def cmd_verify_spaceform(cfg):
    if cfg["sweep"]:
        checks = [verify_spaceform_implies_eta_einstein(p, seed=cfg["seed"]) for p in sweep_params()]
        return checks
    n, s, eps = _require_nse(cfg, need_c=True)
    p = SpaceFormParams(n, s, eps, float(cfg["c"]))
    perturb = float(cfg["perturb"]) if cfg["perturb"] is not None else None
    return _model_checks(p, cfg, perturb)


def cmd_erratum_guard(cfg):
    n, s, eps = _require_nse(cfg, need_c=True)
    p = SpaceFormParams(n, s, eps, float(cfg["c"]))
    return erratum_guard(p, samples=cfg["phi_samples"], seed=cfg["seed"])


def _chart_scan_checks(cs, cfg, gates):
    tol_d = cfg["tol_diff"]
    rep = scan_eta_einstein(cs, cfg["points"], cfg["seed"])
    two_n = 2 * cs.n
    checks = [
        Check("scan.fit_residual", max(rep.fit_residuals), tol_d),
        Check("scan.k_equals_2n", max(abs(k - two_n) for k in rep.k_values), tol_d, detail={"k": rep.k_values}),
        Check("scan.ricci_xi", rep.ricci_xi, tol_d),
        Check("scan.scalar_curvature", rep.tau_residual, SCHUR_TOL),
        Check("scan.phi_sectional_pointwise", rep.pointwise_c_spread, tol_d, detail={"c": rep.c_values}),
    ]
    expect = cfg["expect_h"]
    if expect is None and cfg["example"] in EXPECTED_H:
        expect = EXPECTED_H[cfg["example"]]
    if expect is not None:
        dev = max(abs(h - float(expect)) for h in rep.h_values)
        checks.append(Check("scan.h_expected", dev, tol_d, detail={"expected": float(expect), "h": rep.h_values}))
    # chart curvature against the space-form model with the local c
    if rep.pointwise_c_spread < tol_d:
        worst = 0.0
        for p, c in zip(rep.points, rep.c_values):
            cp = ChartPoint(cs, p, order=2)
            model = space_form_components(c, cp.point_structure())
            worst = max(worst, float(np.abs(cp.curvature().components - model).max()))
        checks.append(Check("chart_vs_model", worst, 1e-7))
    else:
        reason = {"reason": "phi-sectional curvature not pointwise constant"}
        checks.append(Check("chart_vs_model", float("nan"), 1e-7, NOT_APPLICABLE, reason))
    return rep, checks


def cmd_verify_chart(cfg):
    cs = _chart_from_config(cfg)
    tol_d = cfg["tol_diff"]
    points = sample_points(cs, cfg["points"], cfg["seed"])
    gates = gate_checks(cs, points, GATE_TOL)
    mixed = tors = compat = 0.0
    for p in points:
        mixed = max(mixed, max(f.mixed_partial_residual(p) for f in cs.all_fields()))
        cp = ChartPoint(cs, p, order=2)
        tors = max(tors, cp.connection().torsion_residual())
        compat = max(compat, cp.metric_compatibility_residual())
    checks = [
        Check("ad.mixed_partials", mixed, cfg["tol_alg"]),
        Check("connection.torsion_free", tors, cfg["tol_alg"]),
        Check("connection.metric_compatible", compat, 1e-9),
    ] + gates
    if all(c.passed for c in gates):
        _, scan_checks = _chart_scan_checks(cs, cfg, gates)
        checks += scan_checks
    else:
        checks.append(Check("scan", float("nan"), tol_d, NOT_APPLICABLE, {"reason": "S-gates failed"}))
    return checks


def cmd_schur_scan(cfg):
    cs = _chart_from_config(cfg)
    points = sample_points(cs, cfg["points"], cfg["seed"])
    try:
        gates = require_s_structure(cs, points)
    except GateFailure as exc:
        return exc.checks
    rep = scan_eta_einstein(cs, cfg["points"], cfg["seed"])
    cvals = rep.c_values
    checks = gates + [
        schur_h_constancy(rep, cs.n, SCHUR_TOL),
        c_constancy(cvals, [rep.pointwise_c_spread], cs.n, point_tol=cfg["tol_diff"], tol=SCHUR_TOL),
        Check("schur.xi_h", rep.xi_h, SCHUR_TOL),
        Check("schur.contracted_bianchi", rep.bianchi_residual, SCHUR_TOL),
        Check("schur.k_equals_2n", max(abs(k - 2 * cs.n) for k in rep.k_values), cfg["tol_diff"]),
    ]
    checks[-5].detail["h"] = rep.h_values
    checks[-4].detail["c"] = cvals
    return checks


COMMANDS = {
    "verify-structure": cmd_verify_structure,
    "verify-spaceform": cmd_verify_spaceform,
    "verify-chart": cmd_verify_chart,
    "schur-scan": cmd_schur_scan,
    "erratum-guard": cmd_erratum_guard,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="sverify", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with the same keys as the flags")
    common.add_argument("--out", help="write the structured JSON report here")
    common.add_argument("--seed", type=int, help="RNG seed (default 42)")
    common.add_argument("--tol-alg", type=float, dest="tol_alg", help="algebraic tolerance (default 1e-10)")
    common.add_argument("--tol-diff", type=float, dest="tol_diff", help="differential tolerance (default 1e-6)")
    common.add_argument("-q", "--quiet", action="store_true", help="suppress the text report")
    sig = argparse.ArgumentParser(add_help=False)
    sig.add_argument("--n", type=int)
    sig.add_argument("--s", type=int)
    sig.add_argument("--eps", help="characteristic signs, e.g. '+-' or '1,-1'")
    chart_opts = argparse.ArgumentParser(add_help=False)
    chart_opts.add_argument("--example", help=f"builtin structure: {', '.join(BUILTIN_IDS)}")
    chart_opts.add_argument("--structure", help="JSON structure file")
    chart_opts.add_argument("--phi-signs", dest="phi_signs", help="signs of the phi-pairs for s_r2ns")
    chart_opts.add_argument("--points", type=int, help="number of sample points (default 10)")

    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("verify-structure", parents=[common, sig, chart_opts], help="pointwise g.f.f axioms")
    p.add_argument("--phi-signature", dest="phi_signature", help="'p,q' split of the phi-pairs")
    p.add_argument("--conjugate", action="store_true", help="apply a seeded random change of basis")
    p = sub.add_parser("verify-spaceform", parents=[common, sig], help="space-form curvature model")
    p.add_argument("--c", type=float, help="phi-sectional curvature")
    p.add_argument("--phi-signature", dest="phi_signature")
    p.add_argument("--perturb", type=float, help="add a symmetric Ricci perturbation of this size")
    p.add_argument("--sweep", action="store_true", help="run the full parameter sweep")
    sub.add_parser("verify-chart", parents=[common, sig, chart_opts], help="field-level S-gates and scans").add_argument(
        "--expect-h", type=float, dest="expect_h", help="expected eta-Einstein h"
    )
    sub.add_parser("schur-scan", parents=[common, sig, chart_opts], help="constancy of h and c")
    p = sub.add_parser("erratum-guard", parents=[common, sig], help="Phi-term coefficient check")
    p.add_argument("--c", type=float)
    return parser


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        checks = COMMANDS[args.command](cfg)
    except SVerifyError as exc:
        print(f"sverify: error: {exc}", file=sys.stderr)
        return 2
    report_cfg = {k: v for k, v in cfg.items() if v is not None and v is not False}
    report = VerificationReport(args.command, report_cfg, conventions(), checks)
    if not args.quiet:
        stdout.write(report.to_text())
    if args.out:
        Path(args.out).write_text(report.to_json(), encoding="utf-8")
    return 0 if report.passed else 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
