"""Dense multilinear algebra on a single tangent space with an indefinite metric.

Tensors are plain numpy arrays wrapped with their index placement. A slot is
either contravariant (``"u"``) or covariant (``"d"``); the ``indices`` string
of a :class:`TensorAtPoint` lists them in array-axis order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMetric, DegenerateSpan, DimensionMismatch, SlotOutOfRange

DEGENERACY_TOL = 1e-9
SYMMETRY_TOL = 1e-12


def _signature(components):
    eig = np.linalg.eigvalsh(components)
    return int(np.sum(eig > 0)), int(np.sum(eig < 0))


@dataclass(frozen=True)
class MetricAtPoint:
    """A symmetric nondegenerate bilinear form on R^dim.

    ``signature`` is derived from the eigenvalues when not given; an explicit
    value is checked against them.
    """

    components: np.ndarray
    signature: tuple[int, int] | None = None
    tol: float = DEGENERACY_TOL

    def __post_init__(self):
        comp = np.array(self.components, dtype=float)
        if comp.ndim != 2 or comp.shape[0] != comp.shape[1]:
            raise DimensionMismatch(f"metric must be square, got shape {comp.shape}")
        scale = max(np.abs(comp).max(), 1.0)
        if np.abs(comp - comp.T).max() > SYMMETRY_TOL * scale:
            raise ValueError("metric components are not symmetric")
        comp = 0.5 * (comp + comp.T)
        sv = np.linalg.svd(comp, compute_uv=False)
        if sv[-1] <= self.tol * sv[0]:
            raise DegenerateMetric(
                f"smallest singular value {sv[-1]:.3e} below {self.tol:g} x {sv[0]:.3e}"
            )
        sig = _signature(comp)
        if self.signature is not None and tuple(self.signature) != sig:
            raise ValueError(f"declared signature {self.signature} but eigenvalues give {sig}")
        comp.setflags(write=False)
        object.__setattr__(self, "components", comp)
        object.__setattr__(self, "signature", sig)

    @property
    def dim(self) -> int:
        return self.components.shape[0]

    def inner(self, x, y) -> float:
        return float(np.asarray(x) @ self.components @ np.asarray(y))

    def gram(self, vectors) -> np.ndarray:
        V = np.asarray(vectors, dtype=float)
        return V @ self.components @ V.T


@dataclass(frozen=True)
class TensorAtPoint:
    """Components of a tensor at a point together with their index placement."""

    components: np.ndarray
    indices: str = field(default="")

    def __post_init__(self):
        comp = np.asarray(self.components, dtype=float)
        if set(self.indices) - {"u", "d"}:
            raise ValueError(f"index string may only contain 'u'/'d', got {self.indices!r}")
        if comp.ndim != len(self.indices):
            raise DimensionMismatch(
                f"array rank {comp.ndim} does not match index string {self.indices!r}"
            )
        if comp.ndim and len(set(comp.shape)) != 1:
            raise DimensionMismatch(f"all slots must share one extent, got {comp.shape}")
        object.__setattr__(self, "components", comp)

    @property
    def valence(self) -> tuple[int, int]:
        return self.indices.count("u"), self.indices.count("d")

    @property
    def dim(self) -> int:
        return self.components.shape[0] if self.components.ndim else 0

    @property
    def rank(self) -> int:
        return self.components.ndim


def metric_inverse(g: MetricAtPoint) -> np.ndarray:
    # MetricAtPoint already rejects degenerate forms; re-check for raw arrays.
    if not isinstance(g, MetricAtPoint):
        g = MetricAtPoint(g)
    return np.linalg.inv(g.components)


def _check_slot(t, slot):
    if not 0 <= slot < t.rank:
        raise SlotOutOfRange(f"slot {slot} out of range for rank-{t.rank} tensor")


def _apply_to_slot(components, matrix, slot):
    moved = np.moveaxis(components, slot, 0)
    out = np.tensordot(matrix, moved, axes=(1, 0))
    return np.moveaxis(out, 0, slot)


def lower_index(t: TensorAtPoint, slot: int, g: MetricAtPoint) -> TensorAtPoint:
    """Lower a contravariant slot with ``g``; the slot keeps its position."""
    _check_slot(t, slot)
    if t.indices[slot] != "u":
        raise SlotOutOfRange(f"slot {slot} is already covariant")
    if t.dim != g.dim:
        raise DimensionMismatch(f"tensor dim {t.dim} vs metric dim {g.dim}")
    comp = _apply_to_slot(t.components, g.components, slot)
    idx = t.indices[:slot] + "d" + t.indices[slot + 1 :]
    return TensorAtPoint(comp, idx)


def raise_index(t: TensorAtPoint, slot: int, g: MetricAtPoint) -> TensorAtPoint:
    _check_slot(t, slot)
    if t.indices[slot] != "d":
        raise SlotOutOfRange(f"slot {slot} is already contravariant")
    if t.dim != g.dim:
        raise DimensionMismatch(f"tensor dim {t.dim} vs metric dim {g.dim}")
    comp = _apply_to_slot(t.components, metric_inverse(g), slot)
    idx = t.indices[:slot] + "u" + t.indices[slot + 1 :]
    return TensorAtPoint(comp, idx)


def contract(t: TensorAtPoint, slot_a: int, slot_b: int, g: MetricAtPoint) -> TensorAtPoint:
    """Metric trace over two slots.

    Two covariant slots are traced with the inverse metric, two contravariant
    slots with the metric, and a mixed pair directly. The signs of an
    orthonormal frame therefore enter automatically.
    """
    if slot_a == slot_b:
        raise SlotOutOfRange("contraction slots must be distinct")
    _check_slot(t, slot_a)
    _check_slot(t, slot_b)
    if t.dim != g.dim:
        raise DimensionMismatch(f"tensor dim {t.dim} vs metric dim {g.dim}")
    va, vb = t.indices[slot_a], t.indices[slot_b]
    if va == vb == "d":
        weight = metric_inverse(g)
    elif va == vb == "u":
        weight = g.components
    else:
        weight = np.eye(g.dim)
    comp = np.moveaxis(t.components, (slot_a, slot_b), (0, 1))
    out = np.tensordot(weight, comp, axes=([0, 1], [0, 1]))
    keep = [i for i in range(t.rank) if i not in (slot_a, slot_b)]
    return TensorAtPoint(out, "".join(t.indices[i] for i in keep))


def _pivot(candidates, G, pair_below=0.25):
    """Pick the candidate (or sum of two) with the largest normalized |g-norm|.

    Sums of two are only scanned when the best single scores below
    ``pair_below``. Returns ``(vector, drop_index, score)``; singles win ties.
    """
    best = None
    gscale = max(np.linalg.norm(G, 2), 1e-300)
    for i, w in enumerate(candidates):
        nw = w @ w
        if nw == 0.0:
            continue
        score = abs(w @ G @ w) / (nw * gscale)
        if best is None or score > best[2] * (1 + 1e-12):
            best = (w, i, score)
    if best is None or best[2] < pair_below:
        for i in range(len(candidates)):
            for j in range(i + 1, len(candidates)):
                w = candidates[i] + candidates[j]
                nw = w @ w
                if nw == 0.0:
                    continue
                score = abs(w @ G @ w) / (nw * gscale)
                if best is None or score > best[2] * (1 + 1e-12):
                    best = (w, i, score)
    return best


def orthonormalize_indefinite(vectors, g: MetricAtPoint, tol: float = DEGENERACY_TOL):
    """Gram-Schmidt for an indefinite metric with greedy pivoting.

    At each step the remaining vector with the largest normalized
    ``|g(w, w)|`` is taken; when every remaining vector is (nearly) null the
    best sum of two is used instead, which recovers e.g. a hyperbolic pair of
    null vectors. Returns the frame (list of arrays) and the list of signs.
    """
    G = g.components
    work = [np.array(v, dtype=float) for v in vectors]
    if any(w.shape != (g.dim,) for w in work):
        raise DimensionMismatch("vectors must have the metric's dimension")
    if work:
        A = np.array(work)
        sv = np.linalg.svd(A, compute_uv=False)
        if len(work) > g.dim or sv[-1] <= tol * sv[0]:
            raise DegenerateSpan("input vectors are linearly dependent")
    frame, signs = [], []
    while work:
        pick = _pivot(work, G)
        if pick is None or pick[2] <= tol:
            raise DegenerateSpan(
                f"remaining span is g-degenerate after {len(frame)} vectors"
            )
        w, drop, _ = pick
        norm = w @ G @ w
        sign = 1 if norm > 0 else -1
        e = w / np.sqrt(abs(norm))
        frame.append(e)
        signs.append(sign)
        del work[drop]
        work = [u - sign * (u @ G @ e) * e for u in work]
    return frame, signs
