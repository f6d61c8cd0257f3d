"""Structure fields on a coordinate chart and their differential geometry.

All derivatives come from :mod:`sverify.jet` (exact forward-mode AD up to
third order); nothing here uses divided differences.

Array layouts at a point (``d`` coordinates, ``s`` characteristic fields)::

    g[a, b]            metric components
    phi[k, b]          k-th component of phi(d/dx^b)
    xi[al, k]          k-th component of xi_al
    eta[al, b]         eta^al(d/dx^b)
    gamma[k, i, j]     Christoffel symbol Gamma^k_ij
    R[a, b, c, d]      R(d_a, d_b, d_c, d_d) = g(R(d_c, d_d) d_b, d_a)

The exterior derivative uses the normalization
``d eta(X, Y) = 1/2 {X eta(Y) - Y eta(X) - eta([X, Y])}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from . import jet
from .errors import ConfigError, DegenerateMetric, UnknownExample
from .expr import Expression
from .gff import GffPointStructure, validate_structure
from .jet import Jet
from .spaceform import CurvatureTensor
from .tensor import MetricAtPoint, TensorAtPoint

DEFAULT_SEED = 42
DEFAULT_POINTS = 10
DETA_CONVENTION = "d eta(X,Y) = 1/2 {X eta(Y) - Y eta(X) - eta([X,Y])}"

BUILTIN_IDS = ("flat_gff", "s_r4_lorentz", "s_r2ns")


class ChartField:
    """A scalar component function of the chart coordinates."""

    def __init__(self, fn, arity, source=None):
        self.fn = fn
        self.arity = arity
        self.source = source

    @classmethod
    def from_expression(cls, source, coordinates, parameters=None):
        expr = Expression(source, coordinates, parameters)
        return cls(expr, len(coordinates), expr.source)

    def __call__(self, coords):
        return self.fn(coords)

    def jet(self, point, order=3) -> Jet:
        x = Jet.variables(point, order)
        out = self.fn([x[a] for a in range(self.arity)])
        if not isinstance(out, Jet):
            out = Jet.constant(out, self.arity, order)
        return out

    def mixed_partial_residual(self, point) -> float:
        """Largest asymmetry among the second and third AD partials."""
        j = self.jet(point, 3)
        h, t = j.parts[2], j.parts[3]
        res = np.abs(h - h.T).max()
        for perm in [(1, 0, 2), (0, 2, 1), (2, 1, 0), (1, 2, 0), (2, 0, 1)]:
            res = max(res, np.abs(t - t.transpose(perm)).max())
        return float(res)


def _stack_fields(fields, point, order):
    """Evaluate a nested list of ChartFields at ``point`` into one Jet."""
    d = len(point)
    x = Jet.variables(point, order)
    coords = [x[a] for a in range(d)]
    arr = np.array(fields, dtype=object)
    flat = []
    for f in arr.ravel():
        v = f(coords)
        flat.append(v if isinstance(v, Jet) else Jet.constant(v, d, order))
    st = jet.stack(flat, d, order)
    return Jet([p.reshape(p.shape[:k] + arr.shape) for k, p in enumerate(st.parts)])


def _stack_values(fields, point):
    arr = np.array(fields, dtype=object)
    vals = [float(f(list(point))) for f in arr.ravel()]
    return np.array(vals).reshape(arr.shape)


@dataclass(frozen=True)
class ChartMetric:
    """A metric given by component functions on a coordinate box."""

    name: str
    coordinates: tuple[str, ...]
    g: tuple
    domain: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.coordinates)

    def metric_jet(self, point, order=3) -> Jet:
        return _stack_fields(self.g, point, order)

    def metric_at(self, point) -> MetricAtPoint:
        return MetricAtPoint(_stack_values(self.g, point))

    def all_fields(self):
        return list(np.array(self.g, dtype=object).ravel())


@dataclass(frozen=True)
class ChartStructure(ChartMetric):
    """A metric g.f.f structure (phi, xi, eta, g) on a coordinate box."""

    n: int = 1
    s: int = 1
    eps: tuple[int, ...] = (1,)
    phi: tuple = ()
    xi: tuple = ()
    eta: tuple = ()

    def fields_jet(self, point, order=3) -> dict[str, Jet]:
        return {
            "g": _stack_fields(self.g, point, order),
            "phi": _stack_fields(self.phi, point, order),
            "xi": _stack_fields(self.xi, point, order),
            "eta": _stack_fields(self.eta, point, order),
        }

    def point_structure(self, point) -> GffPointStructure:
        return GffPointStructure(
            n=self.n,
            s=self.s,
            g=self.metric_at(point),
            phi=_stack_values(self.phi, point),
            xi=_stack_values(self.xi, point),
            eta=_stack_values(self.eta, point),
            eps=self.eps,
        )

    def all_fields(self):
        out = []
        for block in (self.g, self.phi, self.xi, self.eta):
            out.extend(np.array(block, dtype=object).ravel())
        return out


@dataclass(frozen=True)
class ConnectionAtPoint:
    gamma: np.ndarray

    def torsion_residual(self) -> float:
        return float(np.abs(self.gamma - self.gamma.transpose(0, 2, 1)).max())


class ChartPoint:
    """Lazily computed geometry of a chart at one point (order-3 jets)."""

    def __init__(self, cs: ChartMetric, point, order=3):
        self.cs = cs
        self.point = np.asarray(point, dtype=float)
        self.order = order
        if isinstance(cs, ChartStructure):
            self.fields = cs.fields_jet(self.point, order)
            self.g = self.fields["g"]
        else:
            self.fields = {}
            self.g = cs.metric_jet(self.point, order)
        gv = self.g.value
        if np.abs(gv - gv.T).max() > 1e-12 * max(1.0, np.abs(gv).max()):
            raise ConfigError(f"metric of {cs.name!r} is not symmetric at {self.point}")
        # raises DegenerateMetric on a degenerate point
        self.metric = MetricAtPoint(gv)

    @cached_property
    def ginv(self) -> Jet:
        return jet.inv(self.g)

    @cached_property
    def gamma(self) -> Jet:
        dg = self.g.grad()  # [l, i, j] = d_l g_ij
        T = dg.transpose(1, 0, 2) + dg.transpose(1, 2, 0) - dg
        return 0.5 * jet.einsum("...kl,...lij->...kij", self.ginv.truncate(T.order), T)

    @cached_property
    def riemann_op(self) -> Jet:
        """Rop[l, k, i, j]: component l of R(d_i, d_j) d_k."""
        G = self.gamma
        dG = G.grad()  # [a, k, i, j] = d_a Gamma^k_ij
        G1 = G.truncate(dG.order)
        quad = jet.einsum("...lim,...mjk->...lkij", G1, G1) - jet.einsum(
            "...ljm,...mik->...lkij", G1, G1
        )
        return dG.transpose(1, 3, 0, 2) - dG.transpose(1, 3, 2, 0) + quad

    @cached_property
    def riemann(self) -> Jet:
        Rop = self.riemann_op
        return jet.einsum("...al,...lbcd->...abcd", self.g.truncate(Rop.order), Rop)

    @cached_property
    def ricci(self) -> Jet:
        R = self.riemann
        return jet.einsum("...bd,...abcd->...ac", self.ginv.truncate(R.order), R)

    # pointwise values ----------------------------------------------------

    def connection(self) -> ConnectionAtPoint:
        return ConnectionAtPoint(self.gamma.value)

    def curvature(self) -> CurvatureTensor:
        return CurvatureTensor(self.riemann.value, self.metric)

    def point_structure(self) -> GffPointStructure:
        f = self.fields
        return GffPointStructure(
            n=self.cs.n,
            s=self.cs.s,
            g=self.metric,
            phi=f["phi"].value,
            xi=f["xi"].value,
            eta=f["eta"].value,
            eps=self.cs.eps,
        )

    # residuals -------------------------------------------------------------

    def metric_compatibility_residual(self) -> float:
        g, dg, gam = self.g.value, self.g.parts[1], self.gamma.value
        nab = dg - np.einsum("kca,kb->cab", gam, g) - np.einsum("kcb,ak->cab", gam, g)
        return float(np.abs(nab).max())

    def nijenhuis(self) -> np.ndarray:
        """N[k, a, b] = [phi,phi](d_a, d_b)^k + 2 sum_al d eta^al(d_a, d_b) xi_al^k."""
        phi, dphi = self.fields["phi"].value, self.fields["phi"].parts[1]
        xi = self.fields["xi"].value
        deta = self.fields["eta"].parts[1]  # [a, al, b] = d_a eta^al_b
        t1 = np.einsum("ja,jkb->kab", phi, dphi)
        t3 = np.einsum("kj,bja->kab", phi, dphi)
        bracket = t1 - t1.transpose(0, 2, 1) + t3 - t3.transpose(0, 2, 1)
        two_deta = deta.transpose(1, 0, 2) - deta.transpose(1, 2, 0)  # [al, a, b]
        return bracket + np.einsum("lk,lab->kab", xi, two_deta)

    def d_eta(self) -> np.ndarray:
        """[al, a, b] with the 1/2 normalization."""
        deta = self.fields["eta"].parts[1]
        return 0.5 * (deta.transpose(1, 0, 2) - deta.transpose(1, 2, 0))

    def fundamental_form(self) -> np.ndarray:
        return self.g.value @ self.fields["phi"].value

    def almost_s_residual(self) -> float:
        Phi = self.fundamental_form()
        return float(np.abs(self.d_eta() - Phi[None]).max())

    def nabla_phi(self) -> np.ndarray:
        """[a, k, b]: component k of (nabla_{d_a} phi)(d_b)."""
        phi, dphi = self.fields["phi"].value, self.fields["phi"].parts[1]
        gam = self.gamma.value
        return dphi + np.einsum("kaj,jb->akb", gam, phi) - np.einsum("kj,jab->akb", phi, gam)

    def nabla_phi_residual(self) -> float:
        ps = self.point_structure()
        A = ps.gphiphi()
        phi2 = ps.phi @ ps.phi
        rhs = np.einsum("ab,k->akb", A, ps.xibar) + np.einsum("b,ka->akb", ps.etabar, phi2)
        return float(np.abs(self.nabla_phi() - rhs).max())

    def nabla_xi(self) -> np.ndarray:
        """[al, a, k]: component k of nabla_{d_a} xi_al."""
        xi, dxi = self.fields["xi"].value, self.fields["xi"].parts[1]
        gam = self.gamma.value
        return dxi.transpose(1, 0, 2) + np.einsum("kaj,lj->lak", gam, xi)

    def nabla_xi_residual(self) -> float:
        nx = self.nabla_xi()
        phi, xi = self.fields["phi"].value, self.fields["xi"].value
        eps = np.asarray(self.cs.eps, dtype=float)
        target = -eps[:, None, None] * phi.T[None]  # [al, a, k] = -eps_al phi[k, a]
        res = np.abs(nx - target).max()
        # nabla_{xi_al} xi_be = 0
        along = np.einsum("la,bak->lbk", xi, nx)
        return float(max(res, np.abs(along).max()))

    def killing_residual(self) -> float:
        """Max |L_xi g| computed from the Lie derivative (no connection involved)."""
        g, dg = self.g.value, self.g.parts[1]
        xi, dxi = self.fields["xi"].value, self.fields["xi"].parts[1]
        lie = (
            np.einsum("lc,cab->lab", xi, dg)
            + np.einsum("alc,cb->lab", dxi, g)
            + np.einsum("blc,ac->lab", dxi, g)
        )
        return float(np.abs(lie).max())

    def structure_residuals(self) -> dict[str, float]:
        return validate_structure(self.point_structure())

    def gate_residuals(self) -> dict[str, float]:
        out = {"structure": max(self.structure_residuals().values())}
        out["normality"] = float(np.abs(self.nijenhuis()).max())
        out["almost_s"] = self.almost_s_residual()
        out["nabla_phi"] = self.nabla_phi_residual()
        out["nabla_xi"] = self.nabla_xi_residual()
        out["killing"] = self.killing_residual()
        return out


# module-level entry points ----------------------------------------------------


def christoffels(cs: ChartMetric, p) -> ConnectionAtPoint:
    return ChartPoint(cs, p, order=2).connection()


def riemann_at_point(cs: ChartMetric, p) -> CurvatureTensor:
    return ChartPoint(cs, p, order=2).curvature()


def nijenhuis_phi(cs: ChartStructure, p) -> TensorAtPoint:
    return TensorAtPoint(ChartPoint(cs, p, order=1).nijenhuis(), "udd")


def exterior_d_eta(cs: ChartStructure, p, alpha: int) -> TensorAtPoint:
    return TensorAtPoint(ChartPoint(cs, p, order=1).d_eta()[alpha], "dd")


def check_almost_s(cs, p) -> float:
    return ChartPoint(cs, p, order=1).almost_s_residual()


def check_nabla_phi(cs, p) -> float:
    return ChartPoint(cs, p, order=1).nabla_phi_residual()


def check_nabla_xi(cs, p) -> float:
    return ChartPoint(cs, p, order=1).nabla_xi_residual()


def check_killing(cs, p) -> float:
    return ChartPoint(cs, p, order=1).killing_residual()


def sample_points(cs: ChartMetric, npoints=DEFAULT_POINTS, seed=DEFAULT_SEED, max_tries=1000):
    """Seeded uniform points in the domain box, redrawing degenerate-metric points."""
    rng = np.random.default_rng(seed)
    lo, hi = cs.domain[:, 0], cs.domain[:, 1]
    pts = []
    tries = 0
    while len(pts) < npoints:
        tries += 1
        if tries > max_tries:
            raise DegenerateMetric(f"could not find {npoints} nondegenerate points in {cs.name}")
        p = lo + (hi - lo) * rng.random(cs.dim)
        try:
            cs.metric_at(p)
        except DegenerateMetric:
            continue
        pts.append(p)
    return pts


# builtins and files -------------------------------------------------------------


def _num(x):
    return repr(float(x))


def _join(terms):
    terms = [t for t in terms if t]
    return " + ".join(terms) if terms else "0"


def s_r2ns_document(n, s, eps, phi_signs=None):
    """Declarative document for the S-structure on R^{2n+s}.

    eta^al = 1/2 (dz^al - sum_i y^i dx^i), xi_al = 2 d/dz^al,
    g = 1/4 sum_i sig_i (dx^i dx^i + dy^i dy^i) + sum_al eps_al eta^al eta^al,
    phi(d/dx^i) = -sig_i d/dy^i, phi(d/dy^i) = sig_i (d/dx^i + y^i sum_al d/dz^al),
    where sig_i = +-1 is the causal character of the i-th phi-pair.
    """
    eps = [int(e) for e in eps]
    if len(eps) != s:
        raise ConfigError(f"eps has {len(eps)} entries, expected s={s}")
    sig = [1] * n if phi_signs is None else [int(v) for v in phi_signs]
    if len(sig) != n or any(v not in (1, -1) for v in sig):
        raise ConfigError(f"phi_signs must be {n} signs")
    epsbar = sum(eps)
    X = [f"x{i + 1}" for i in range(n)]
    Y = [f"y{i + 1}" for i in range(n)]
    Z = [f"z{a + 1}" for a in range(s)]
    coords = X + Y + Z
    d = len(coords)
    g = [["0"] * d for _ in range(d)]
    for i in range(n):
        for j in range(n):
            diag = _num(0.25 * sig[i]) if i == j else ""
            cross = f"{_num(0.25 * epsbar)}*{Y[i]}*{Y[j]}" if epsbar else ""
            g[i][j] = _join([diag, cross])
        g[n + i][n + i] = _num(0.25 * sig[i])
        for a in range(s):
            g[i][2 * n + a] = g[2 * n + a][i] = f"{_num(-0.25 * eps[a])}*{Y[i]}"
    for a in range(s):
        g[2 * n + a][2 * n + a] = _num(0.25 * eps[a])
    phi = [["0"] * d for _ in range(d)]
    for i in range(n):
        phi[n + i][i] = _num(-sig[i])
        phi[i][n + i] = _num(sig[i])
        for a in range(s):
            phi[2 * n + a][n + i] = f"{_num(sig[i])}*{Y[i]}"
    xi = [["0"] * d for _ in range(s)]
    eta = [["0"] * d for _ in range(s)]
    for a in range(s):
        xi[a][2 * n + a] = "2.0"
        eta[a][2 * n + a] = "0.5"
        for i in range(n):
            eta[a][i] = f"-0.5*{Y[i]}"
    sign = lambda v: "+" if v > 0 else "-"
    name = f"s_r2ns(n={n},s={s},eps={''.join(sign(e) for e in eps)}"
    if phi_signs is not None:
        name += f",phi={''.join(sign(v) for v in sig)}"
    name += ")"
    return {
        "name": name,
        "coordinates": coords,
        "n": n,
        "s": s,
        "eps": eps,
        "domain": [[-1.0, 1.0]] * d,
        "metric": g,
        "phi": phi,
        "xi": xi,
        "eta": eta,
    }


def flat_gff_document(n=1, s=1, eps=None, phi_signs=None):
    """Constant canonical structure with eta^al = dz^al: a g.f.f but not almost-S."""
    eps = [1] * s if eps is None else [int(e) for e in eps]
    sig = [1] * n if phi_signs is None else [int(v) for v in phi_signs]
    coords = [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)]
    coords += [f"z{a + 1}" for a in range(s)]
    d = len(coords)
    G = np.diag(sig + sig + eps).astype(float)
    phi = np.zeros((d, d))
    for i in range(n):
        phi[n + i, i] = 1.0
        phi[i, n + i] = -1.0
    xi = np.zeros((s, d))
    xi[:, 2 * n :] = np.eye(s)
    return {
        "name": f"flat_gff(n={n},s={s})",
        "coordinates": coords,
        "n": n,
        "s": s,
        "eps": eps,
        "domain": [[-1.0, 1.0]] * d,
        "metric": G.tolist(),
        "phi": phi.tolist(),
        "xi": xi.tolist(),
        "eta": xi.tolist(),
    }


def _fields(block, coords, params, shape, key):
    arr = np.array(block, dtype=object)
    if arr.shape != shape:
        raise ConfigError(f"{key!r} must have shape {shape}, got {arr.shape}")
    out = [ChartField.from_expression(v, coords, params) for v in arr.ravel()]
    return tuple(map(tuple, np.array(out, dtype=object).reshape(shape).tolist())) if len(
        shape
    ) == 2 else tuple(out)


def structure_from_dict(doc) -> ChartStructure:
    """Build a ChartStructure from the declarative document format."""
    try:
        coords = [str(c) for c in doc["coordinates"]]
        n, s = int(doc["n"]), int(doc["s"])
        eps = tuple(int(e) for e in doc["eps"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"structure document is missing or has a bad field: {exc}") from None
    d = len(coords)
    if len(set(coords)) != d:
        raise ConfigError("coordinate names must be distinct")
    if n < 1 or s < 1:
        raise ConfigError(f"need n >= 1 and s >= 1, got n={n}, s={s}")
    if d != 2 * n + s:
        raise ConfigError(f"{d} coordinates but 2n+s = {2 * n + s}")
    if len(eps) != s or any(e not in (1, -1) for e in eps):
        raise ConfigError(f"eps must be {s} signs +-1")
    params = {str(k): float(v) for k, v in doc.get("parameters", {}).items()}
    domain = np.asarray(doc.get("domain", [[-1.0, 1.0]] * d), dtype=float)
    if domain.shape != (d, 2) or np.any(domain[:, 0] > domain[:, 1]):
        raise ConfigError(f"domain must be {d} [lo, hi] pairs")
    for key in ("metric", "phi", "xi", "eta"):
        if key not in doc:
            raise ConfigError(f"structure document lacks {key!r}")
    return ChartStructure(
        name=str(doc.get("name", "structure")),
        coordinates=tuple(coords),
        g=_fields(doc["metric"], coords, params, (d, d), "metric"),
        domain=domain,
        n=n,
        s=s,
        eps=eps,
        phi=_fields(doc["phi"], coords, params, (d, d), "phi"),
        xi=_fields(doc["xi"], coords, params, (s, d), "xi"),
        eta=_fields(doc["eta"], coords, params, (s, d), "eta"),
    )


def load_structure(path) -> ChartStructure:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"structure file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"structure file {path} is not valid JSON: {exc}") from None
    return structure_from_dict(doc)


def example_document(example_id, n=None, s=None, eps=None, phi_signs=None):
    if example_id == "flat_gff":
        return flat_gff_document(n or 1, s or 1, eps, phi_signs)
    if example_id == "s_r4_lorentz":
        return s_r2ns_document(1, 2, (1, -1))
    if example_id == "s_r2ns":
        n = 1 if n is None else n
        s = 1 if s is None else s
        eps = [1] * s if eps is None else eps
        return s_r2ns_document(n, s, eps, phi_signs)
    raise UnknownExample(f"unknown example {example_id!r}; choose from {', '.join(BUILTIN_IDS)}")


def builtin_example(example_id, n=None, s=None, eps=None, phi_signs=None) -> ChartStructure:
    return structure_from_dict(example_document(example_id, n, s, eps, phi_signs))


def metric_from_expressions(name, coordinates, components, domain, parameters=None) -> ChartMetric:
    d = len(coordinates)
    return ChartMetric(
        name=name,
        coordinates=tuple(coordinates),
        g=_fields(components, list(coordinates), parameters or {}, (d, d), "metric"),
        domain=np.asarray(domain, dtype=float),
    )
