"""Pointwise curvature model of an indefinite S-space form and the eta-Einstein fit.

Curvature slot convention: ``R[a, b, c, d] = R(e_a, e_b, e_c, e_d)
= g(R(e_c, e_d) e_b, e_a)`` with ``R(Z, W) = [nabla_Z, nabla_W] - nabla_[Z,W]``.
Sectional curvature is ``R(x, y, x, y) / (g(x,x) g(y,y) - g(x,y)^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegeneratePlane,
    DimensionMismatch,
    FrameMismatch,
    LightlikeVector,
    NotInImagePhi,
    SingularDesign,
    StructureMismatch,
)
from .gff import AdaptedFrame, GffPointStructure, fundamental_form
from .tensor import MetricAtPoint, TensorAtPoint

ALG_TOL = 1e-10
DEFAULT_SAMPLES = 64
DEFAULT_SEED = 42

# Coefficient on the Phi-terms of the space-form curvature.
COEFF_RESOLVED = "(c-eps)/4"
COEFF_PRINTED = "(c+eps)/4"


@dataclass(frozen=True)
class SpaceFormParams:
    n: int
    s: int
    eps: tuple[int, ...]
    c: float
    epsbar: int = field(init=False)

    def __post_init__(self):
        eps = tuple(int(e) for e in self.eps)
        if self.n < 1 or self.s < 1:
            raise DimensionMismatch(f"need n >= 1 and s >= 1, got n={self.n}, s={self.s}")
        if len(eps) != self.s or any(e not in (1, -1) for e in eps):
            raise DimensionMismatch(f"eps must be {self.s} signs +-1, got {self.eps}")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "epsbar", int(sum(eps)))


@dataclass(frozen=True)
class CurvatureTensor:
    components: np.ndarray
    metric: MetricAtPoint

    def __post_init__(self):
        comp = np.asarray(self.components, dtype=float)
        d = self.metric.dim
        if comp.shape != (d, d, d, d):
            raise DimensionMismatch(f"curvature shape {comp.shape} vs metric dim {d}")
        object.__setattr__(self, "components", comp)

    @property
    def dim(self) -> int:
        return self.metric.dim

    def __call__(self, x, y, z, w) -> float:
        return float(np.asarray(x) @ (self.components @ w @ z @ y))


@dataclass(frozen=True)
class EtaEinsteinFit:
    h: float
    k: float
    residual: float

    def is_eta_einstein(self, tol=ALG_TOL) -> bool:
        return self.residual < tol


def symmetry_residuals(R: CurvatureTensor) -> dict[str, float]:
    """Algebraic Riemann symmetries and the first Bianchi identity."""
    T = R.components
    bianchi = T + np.einsum("abcd->acdb", T) + np.einsum("abcd->adbc", T)
    return {
        "antisym_12": float(np.abs(T + T.transpose(1, 0, 2, 3)).max()),
        "antisym_34": float(np.abs(T + T.transpose(0, 1, 3, 2)).max()),
        "pair_symmetry": float(np.abs(T - T.transpose(2, 3, 0, 1)).max()),
        "first_bianchi": float(np.abs(bianchi).max()),
    }


def _check_params(p: SpaceFormParams, st: GffPointStructure):
    if (p.n, p.s, p.eps) != (st.n, st.s, st.eps):
        raise StructureMismatch(
            f"params (n={p.n}, s={p.s}, eps={p.eps}) vs structure "
            f"(n={st.n}, s={st.s}, eps={st.eps})"
        )


def _kn(A, B):
    """A(X,Z)B(Y,W) - A(Y,Z)B(X,W) as a 4-index array."""
    return np.einsum("ac,bd->abcd", A, B) - np.einsum("bc,ad->abcd", A, B)


def space_form_components(c, st: GffPointStructure, coefficient=COEFF_RESOLVED):
    """Components of the space-form curvature at ``st``."""
    eps = st.epsbar
    A = st.gphiphi()
    Phi = fundamental_form(st).components
    eb = st.etabar
    a = (c + 3 * eps) / 4.0
    if coefficient == COEFF_RESOLVED:
        b = (c - eps) / 4.0
    elif coefficient == COEFF_PRINTED:
        b = (c + eps) / 4.0
    else:
        raise ValueError(f"unknown coefficient choice {coefficient!r}")
    EE = np.outer(eb, eb)
    phi_part = _kn(Phi, Phi) + 2.0 * np.einsum("ab,cd->abcd", Phi, Phi)
    # eta-bar terms: E(X,Z)A(Y,W) - E(Y,Z)A(X,W) + E(Y,W)A(X,Z) - E(X,W)A(Y,Z)
    eta_part = _kn(EE, A) + _kn(A, EE)
    return a * _kn(A, A) + b * phi_part + eta_part


def build_space_form_curvature(p: SpaceFormParams, st: GffPointStructure, coefficient=COEFF_RESOLVED):
    _check_params(p, st)
    return CurvatureTensor(space_form_components(p.c, st, coefficient), st.g)


def sectional_curvature(R: CurvatureTensor, x, y, tol=1e-10) -> float:
    G = R.metric.components
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    gx, gy = G @ x, G @ y
    delta = (x @ gx) * (y @ gy) - (x @ gy) ** 2
    scale = max((x @ x) * (y @ y), 1e-300)
    if abs(delta) <= tol * scale:
        raise DegeneratePlane(f"plane is degenerate: Delta = {delta:.3e}")
    return R(x, y, x, y) / delta


def phi_sectional_curvature(R: CurvatureTensor, st: GffPointStructure, x, tol=1e-9) -> float:
    x = np.asarray(x, dtype=float)
    scale = max(np.sqrt(x @ x), 1.0)
    r = st.phi_projector @ x - x
    if np.sqrt(r @ r) > tol * scale:
        raise NotInImagePhi("vector is not in Im(phi)")
    nx = x @ st.G @ x
    if abs(nx) <= tol * scale**2:
        raise LightlikeVector("phi-sectional curvature needs a non-lightlike vector")
    if abs(abs(nx) - 1.0) > 1e-8:
        raise ValueError(f"vector must be unit, g(x,x) = {nx}")
    return sectional_curvature(R, x, st.phi @ x)


def phi_sectional_curvatures(R: CurvatureTensor, st: GffPointStructure, xs, tol=1e-9) -> np.ndarray:
    """Vectorized :func:`phi_sectional_curvature` over the rows of ``xs``."""
    X = np.atleast_2d(np.asarray(xs, dtype=float))
    G = st.G
    scale = np.maximum(np.linalg.norm(X, axis=1), 1.0)
    if np.any(np.linalg.norm(X @ st.phi_projector.T - X, axis=1) > tol * scale):
        raise NotInImagePhi("vector is not in Im(phi)")
    nx = np.einsum("ia,ab,ib->i", X, G, X)
    if np.any(np.abs(nx) <= tol * scale**2):
        raise LightlikeVector("phi-sectional curvature needs a non-lightlike vector")
    if np.any(np.abs(np.abs(nx) - 1.0) > 1e-8):
        raise ValueError("vectors must be unit")
    Y = X @ st.phi.T
    delta = nx * np.einsum("ia,ab,ib->i", Y, G, Y) - np.einsum("ia,ab,ib->i", X, G, Y) ** 2
    if np.any(np.abs(delta) <= 1e-10 * np.einsum("i,i->i", (X * X).sum(1), (Y * Y).sum(1))):
        raise DegeneratePlane("a phi-plane is degenerate")
    t = np.einsum("abcd,id->iabc", R.components, Y)
    t = np.einsum("iabc,ic->iab", t, X)
    num = np.einsum("iab,ib,ia->i", t, Y, X)
    return num / delta


def _frame_mismatch(frame: AdaptedFrame, g: MetricAtPoint, tol):
    V = frame.vectors
    if V.shape[1] != g.dim:
        raise FrameMismatch(f"frame vectors have dim {V.shape[1]}, metric has {g.dim}")
    err = np.abs(V @ g.components @ V.T - np.diag(frame.signs)).max()
    if err > tol:
        raise FrameMismatch(f"frame is not orthonormal for this metric (residual {err:.2e})")


def ricci_from_curvature(R: CurvatureTensor, frame: AdaptedFrame, tol=1e-8) -> TensorAtPoint:
    """Ric(X,Y) = sum over the frame of sign * R(X, F, Y, F)."""
    _frame_mismatch(frame, R.metric, tol)
    V, sg = frame.vectors, frame.signs
    ric = np.einsum("abcd,f,fb,fd->ac", R.components, sg, V, V)
    return TensorAtPoint(ric, "dd")


def ricci_by_contraction(R: CurvatureTensor) -> TensorAtPoint:
    """Same trace as :func:`ricci_from_curvature`, via the inverse metric."""
    ginv = np.linalg.inv(R.metric.components)
    return TensorAtPoint(np.einsum("abcd,bd->ac", R.components, ginv), "dd")


def scalar_curvature(ric, frame: AdaptedFrame) -> float:
    comp = ric.components if isinstance(ric, TensorAtPoint) else np.asarray(ric)
    V, sg = frame.vectors, frame.signs
    return float(np.einsum("f,fa,fb,ab->", sg, V, V, comp))


def eta_einstein_fit(ric, st: GffPointStructure, rcond=1e-10) -> EtaEinsteinFit:
    """Least-squares (h, k) in Ric = h g(phi.,phi.) + k etabar (x) etabar."""
    comp = ric.components if isinstance(ric, TensorAtPoint) else np.asarray(ric)
    A = st.gphiphi()
    B = np.outer(st.etabar, st.etabar)
    design = np.column_stack([A.ravel(), B.ravel()])
    sv = np.linalg.svd(design, compute_uv=False)
    if sv[-1] <= rcond * sv[0]:
        raise SingularDesign("g(phi.,phi.) and etabar(x)etabar are linearly dependent")
    (h, k), *_ = np.linalg.lstsq(design, comp.ravel(), rcond=None)
    residual = np.abs(comp - h * A - k * B).max()
    return EtaEinsteinFit(float(h), float(k), float(residual))


def h_closed_form(p: SpaceFormParams) -> float:
    return 0.5 * (p.n * (p.c + 3 * p.epsbar) + p.c - p.epsbar)


def tau_closed_form(h, n, epsbar) -> float:
    return 2.0 * n * (h + epsbar)


def c_from_h(h, n, epsbar) -> float:
    """Invert the closed form for h."""
    return (2.0 * h - 3 * n * epsbar + epsbar) / (n + 1)


def characteristic_identity_residuals(
    R: CurvatureTensor, st: GffPointStructure, samples=DEFAULT_SAMPLES, seed=DEFAULT_SEED
) -> dict[str, float]:
    """Max residual of each of the five xi-curvature identities.

    Arguments are seeded Gaussian vectors (X, Y, Z) and, for the last item,
    random combinations U, V of the xi's; each identity is checked for every
    index combination of the characteristic fields.
    """
    rng = np.random.default_rng(seed)
    T, phi = R.components, st.phi
    eps = np.asarray(st.eps, dtype=float)
    eb = st.etabar
    A = st.gphiphi()
    xi = st.xi
    out = {f"item_{i}": 0.0 for i in range(1, 6)}
    d, s = st.dim, st.s

    def r4(a, b, c, e):
        return np.einsum("abcd,a,b,c,d->", T, a, b, c, e)

    for _ in range(samples):
        X, Y, Z = rng.standard_normal((3, d))
        U, V = rng.standard_normal((2, s)) @ xi
        for al in range(s):
            xa, ea = xi[al], eps[al]
            lhs = r4(X, Y, xa, Z)
            rhs = ea * ((eb @ X) * (Y @ A @ Z) - (eb @ Y) * (X @ A @ Z))
            out["item_1"] = max(out["item_1"], abs(lhs - rhs))
            out["item_4"] = max(out["item_4"], abs(r4(phi @ X, phi @ Y, xa, Z)))
            for be in range(s):
                lhs = r4(xi[be], Y, xa, Z)
                rhs = eps[be] * ea * (Y @ A @ Z)
                out["item_2"] = max(out["item_2"], abs(lhs - rhs))
                for ga in range(s):
                    out["item_3"] = max(out["item_3"], abs(r4(xi[be], xi[ga], xa, Z)))
        lhs = r4(U, Y, V, Z)
        rhs = (eb @ U) * (eb @ V) * (Y @ A @ Z)
        out["item_5"] = max(out["item_5"], abs(lhs - rhs))
    return {k: float(v) for k, v in out.items()}


def check_characteristic_identities(R, st, samples=DEFAULT_SAMPLES, seed=DEFAULT_SEED):
    return characteristic_identity_residuals(R, st, samples=samples, seed=seed)


def ricci_xi_residual(ric, st: GffPointStructure) -> float:
    """max |Ric(X, xi_a) - 2n eps_a etabar(X)| over basis X and all a."""
    comp = ric.components if isinstance(ric, TensorAtPoint) else np.asarray(ric)
    lhs = comp @ st.xi.T  # [X, a]
    rhs = 2 * st.n * np.outer(st.etabar, np.asarray(st.eps, dtype=float))
    return float(np.abs(lhs - rhs).max())


def random_phi_unit_vectors(st: GffPointStructure, count, rng, tol=0.05):
    """Random unit non-lightlike vectors in Im(phi), as (vector, causal sign) pairs.

    Draws with ``|g(v,v)| < tol * |v|^2 * |g|`` are rejected: near-null
    vectors blow up under unit normalization and cost digits in every
    curvature evaluation.
    """
    P = st.phi_projector
    gnorm = np.linalg.norm(st.G, 2)
    out = []
    while len(out) < count:
        v = P @ rng.standard_normal(st.dim)
        nv = st.g.inner(v, v)
        if abs(nv) < tol * (v @ v) * gnorm:
            continue
        out.append((v / np.sqrt(abs(nv)), 1 if nv > 0 else -1))
    return out


def perturbed_ricci(ric, frame: AdaptedFrame, g: MetricAtPoint, scale=0.1):
    """Add ``scale * (E1 (x) E2 + E2 (x) E1)`` (flat duals) to a Ricci tensor.

    Needs n >= 2; with n = 1 the pair (E1, phiE1) is used instead.
    """
    comp = ric.components if isinstance(ric, TensorAtPoint) else np.asarray(ric)
    e1 = frame.E[0]
    e2 = frame.E[1] if len(frame.E) > 1 else frame.phiE[0]
    a, b = g.components @ e1, g.components @ e2
    return TensorAtPoint(comp + scale * (np.outer(a, b) + np.outer(b, a)), "dd")
