"""Indefinite globally framed f-structures on a single tangent space.

Convention for array layouts used throughout the package:

* ``phi[k, b]`` is the k-th component of ``phi(e_b)``;
* ``xi[a]`` is the vector xi_a, ``eta[a]`` the covector eta^a (row);
* bilinear forms are matrices ``B[a, b] = B(e_a, e_b)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DegenerateSpan, DimensionMismatch
from .tensor import MetricAtPoint, TensorAtPoint, _pivot

DEFAULT_SEED = 42


@dataclass(frozen=True)
class GffPointStructure:
    n: int
    s: int
    g: MetricAtPoint
    phi: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    eps: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=float))
        object.__setattr__(self, "xi", np.atleast_2d(np.asarray(self.xi, dtype=float)))
        object.__setattr__(self, "eta", np.atleast_2d(np.asarray(self.eta, dtype=float)))
        object.__setattr__(self, "eps", tuple(int(e) for e in self.eps))
        if not isinstance(self.g, MetricAtPoint):
            object.__setattr__(self, "g", MetricAtPoint(self.g))
        d = 2 * self.n + self.s
        if self.n < 1 or self.s < 1:
            raise DimensionMismatch(f"need n >= 1 and s >= 1, got n={self.n}, s={self.s}")
        shapes = {
            "g": (self.g.dim, self.g.dim),
            "phi": self.phi.shape,
            "xi": self.xi.shape,
            "eta": self.eta.shape,
        }
        want = {"g": (d, d), "phi": (d, d), "xi": (self.s, d), "eta": (self.s, d)}
        for key, shape in shapes.items():
            if shape != want[key]:
                raise DimensionMismatch(f"{key} has shape {shape}, expected {want[key]}")
        if len(self.eps) != self.s or any(e not in (1, -1) for e in self.eps):
            raise DimensionMismatch(f"eps must be {self.s} signs, got {self.eps}")

    @property
    def dim(self) -> int:
        return 2 * self.n + self.s

    @property
    def G(self) -> np.ndarray:
        return self.g.components

    @property
    def epsbar(self) -> int:
        return int(sum(self.eps))

    @property
    def xibar(self) -> np.ndarray:
        return self.xi.sum(axis=0)

    @property
    def etabar(self) -> np.ndarray:
        return np.asarray(self.eps, dtype=float) @ self.eta

    @cached_property
    def phi_projector(self) -> np.ndarray:
        """``-phi^2``, the projector onto Im(phi) along span(xi)."""
        P = -self.phi @ self.phi
        P.setflags(write=False)
        return P

    def gphiphi(self) -> np.ndarray:
        """Matrix of g(phi X, phi Y)."""
        return self.phi.T @ self.G @ self.phi

    def transformed(self, T) -> "GffPointStructure":
        """Push the structure forward by the linear isomorphism ``T``."""
        T = np.asarray(T, dtype=float)
        Ti = np.linalg.inv(T)
        return GffPointStructure(
            n=self.n,
            s=self.s,
            g=MetricAtPoint(Ti.T @ self.G @ Ti),
            phi=T @ self.phi @ Ti,
            xi=self.xi @ T.T,
            eta=self.eta @ Ti,
            eps=self.eps,
        )


@dataclass(frozen=True)
class AdaptedFrame:
    E: np.ndarray
    phiE: np.ndarray
    xi: np.ndarray
    eps_i: tuple[int, ...]
    eps_alpha: tuple[int, ...]

    @property
    def vectors(self) -> np.ndarray:
        return np.vstack([self.E, self.phiE, self.xi])

    @property
    def signs(self) -> np.ndarray:
        return np.array(self.eps_i + self.eps_i + self.eps_alpha, dtype=float)


def validate_structure(st: GffPointStructure) -> dict[str, float]:
    """Residuals of the pointwise axioms, keyed by a stable name.

    Invalid structures are reported, not rejected: every entry is a max-abs
    residual and the structure is valid iff all of them are small.
    """
    d, s = st.dim, st.s
    G, phi, xi, eta = st.G, st.phi, st.xi, st.eta
    I = np.eye(d)
    eps = np.asarray(st.eps, dtype=float)
    frame_sum = xi.T @ eta  # sum_a xi_a (x) eta^a as a (1,1) tensor
    out = {}
    out["phi_squared"] = np.abs(phi @ phi - (-I + frame_sum)).max()
    out["eta_xi_duality"] = np.abs(eta @ xi.T - np.eye(s)).max()
    compat = phi.T @ G @ phi - (G - eta.T @ np.diag(eps) @ eta)
    out["metric_compatibility"] = np.abs(compat).max()
    out["xi_dual"] = np.abs(xi @ G - np.diag(eps) @ eta).max()
    out["phi_skew"] = np.abs(G @ phi + (G @ phi).T).max()
    out["phi_xi"] = np.abs(xi @ phi.T).max()
    out["eta_phi"] = np.abs(eta @ phi).max()
    out["xi_norms"] = np.abs(np.diag(xi @ G @ xi.T) - eps).max()
    sv = np.linalg.svd(phi, compute_uv=False)
    # rank(phi) = 2n: the 2n-th singular value is O(1), the rest vanish.
    out["phi_rank"] = float(sv[2 * st.n :].max(initial=0.0)) + max(
        0.0, 1e-3 - float(sv[2 * st.n - 1])
    )
    P = st.phi_projector
    out["image_orthogonal"] = np.abs(xi @ G @ P).max()
    return {k: float(v) for k, v in out.items()}


def is_valid(st: GffPointStructure, tol: float = 1e-10) -> bool:
    return all(v < tol for v in validate_structure(st).values())


def canonical_point_structure(n, s, eps, phi_signature=None) -> GffPointStructure:
    """Model structure on R^{2n+s} with basis (E_1..E_n, phiE_1..phiE_n, xi_1..xi_s).

    ``phi_signature = (p, q)`` makes the first p pairs spacelike and the last
    q timelike; default ``(n, 0)``.
    """
    eps = tuple(int(e) for e in eps)
    if len(eps) != s:
        raise DimensionMismatch(f"eps has {len(eps)} entries, expected s={s}")
    p, q = phi_signature if phi_signature is not None else (n, 0)
    if p + q != n or p < 0 or q < 0:
        raise DimensionMismatch(f"phi_signature {phi_signature} must split n={n}")
    sig_i = [1] * p + [-1] * q
    d = 2 * n + s
    G = np.diag(sig_i + sig_i + list(eps)).astype(float)
    phi = np.zeros((d, d))
    for i in range(n):
        phi[n + i, i] = 1.0
        phi[i, n + i] = -1.0
    xi = np.zeros((s, d))
    xi[:, 2 * n :] = np.eye(s)
    eta = xi.copy()
    return GffPointStructure(n=n, s=s, g=MetricAtPoint(G), phi=phi, xi=xi, eta=eta, eps=eps)


def fundamental_form(st: GffPointStructure) -> TensorAtPoint:
    """Phi(X, Y) = g(X, phi Y)."""
    return TensorAtPoint(st.G @ st.phi, "dd")


def _seed_vectors(st, seed):
    rng = np.random.default_rng(seed)
    P = st.phi_projector
    basis = [P @ e for e in np.eye(st.dim)]
    basis = [v for v in basis if np.linalg.norm(v) > 1e-8]
    extra = [P @ v for v in rng.standard_normal((2 * st.n, st.dim))]
    return basis + extra


def build_adapted_frame(st: GffPointStructure, seed: int = DEFAULT_SEED, tol: float = 1e-9):
    """Orthonormal frame (E_i, phi E_i, xi_alpha) with phi E_i = phi(E_i) exactly.

    Candidates live in Im(phi) (via the projector ``-phi^2``). Each step picks
    a well-conditioned unit x orthogonal to the previous pairs, sets
    ``E_i = x`` and ``phiE_i = phi x``, and projects the candidates off
    span{x, phi x}.
    """
    G, phi = st.G, st.phi
    cands = _seed_vectors(st, seed)
    E, phiE, signs = [], [], []
    for _ in range(st.n):
        cands = [c for c in cands if np.linalg.norm(c) > 1e-10]
        pick = _pivot(cands, G) if cands else None
        if pick is None or pick[2] <= tol:
            raise DegenerateSpan(f"Im(phi) degenerate after {len(E)} pairs")
        w, drop, _ = pick
        norm = w @ G @ w
        sign = 1 if norm > 0 else -1
        x = w / np.sqrt(abs(norm))
        px = phi @ x
        E.append(x)
        phiE.append(px)
        signs.append(sign)
        del cands[drop]
        cands = [
            c - sign * (c @ G @ x) * x - sign * (c @ G @ px) * px for c in cands
        ]
    xi = st.xi.copy()
    return AdaptedFrame(
        E=np.array(E), phiE=np.array(phiE), xi=xi, eps_i=tuple(signs), eps_alpha=st.eps
    )


def frame_gram_residual(frame: AdaptedFrame, g: MetricAtPoint) -> float:
    V = frame.vectors
    return float(np.abs(V @ g.components @ V.T - np.diag(frame.signs)).max())
