"""Forward-mode automatic differentiation to third order.

A :class:`Jet` carries a value together with all of its partial derivatives
up to a fixed order with respect to the ``d`` chart coordinates::

    parts[0]            value,                    shape S
    parts[1][i]         d/dx^i,                   shape (d,) + S
    parts[2][i, j]      d^2/dx^i dx^j,            shape (d, d) + S
    parts[3][i, j, k]   d^3/dx^i dx^j dx^k,       shape (d, d, d) + S

Derivative axes come first so that numpy broadcasting against the trailing
component shape ``S`` does the right thing for any bilinear operation.
Products follow the Leibniz rule, univariate functions the Faa di Bruno
formula; this is the same algebra as three nested levels of dual numbers,
with all seed directions carried at once.
"""

from __future__ import annotations

import numpy as np

MAX_ORDER = 3


def _pad(a, k, ndim):
    """Insert singleton axes after the k derivative axes so S has ``ndim`` dims."""
    extra = ndim - (a.ndim - k)
    if extra <= 0:
        return a
    return a.reshape(a.shape[:k] + (1,) * extra + a.shape[k:])


class Jet:
    __slots__ = ("parts",)
    __array_priority__ = 100.0

    def __init__(self, parts):
        self.parts = tuple(np.asarray(p, dtype=float) for p in parts)

    # construction ---------------------------------------------------------

    @classmethod
    def variables(cls, point, order=MAX_ORDER):
        """Coordinate functions x^a at ``point`` as one vector-valued jet."""
        p = np.asarray(point, dtype=float)
        d = p.shape[0]
        parts = [p]
        if order >= 1:
            parts.append(np.eye(d))
        for k in range(2, order + 1):
            parts.append(np.zeros((d,) * (k + 1)))
        return cls(parts)

    @classmethod
    def constant(cls, value, d, order):
        v = np.asarray(value, dtype=float)
        return cls([v] + [np.zeros((d,) * k + v.shape) for k in range(1, order + 1)])

    # shape bookkeeping ----------------------------------------------------

    @property
    def order(self) -> int:
        return len(self.parts) - 1

    @property
    def d(self) -> int:
        return self.parts[1].shape[0] if self.order >= 1 else 0

    @property
    def shape(self):
        return self.parts[0].shape

    @property
    def value(self) -> np.ndarray:
        return self.parts[0]

    def truncate(self, order):
        return Jet(self.parts[: order + 1])

    def derivative(self, k):
        return self.parts[k]

    def grad(self) -> "Jet":
        """Coordinate gradient as a jet of one order less.

        The new component axis (the differentiation direction) is prepended
        to the component shape: ``J.grad()[l, ...]`` is ``d J[...] / dx^l``.
        """
        if self.order < 1:
            raise ValueError("cannot differentiate an order-0 jet")
        return Jet(self.parts[1:])

    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Jet([p[(slice(None),) * k + idx] for k, p in enumerate(self.parts)])

    def transpose(self, *axes):
        out = []
        for k, p in enumerate(self.parts):
            out.append(np.transpose(p, tuple(range(k)) + tuple(k + a for a in axes)))
        return Jet(out)

    @property
    def T(self):
        return self.transpose(*reversed(range(len(self.shape))))

    def sum(self, axis=None):
        n = len(self.shape)
        if axis is None:
            axis = tuple(range(n))
        elif isinstance(axis, int):
            axis = (axis,)
        axis = tuple(a % n for a in axis)
        return Jet([p.sum(axis=tuple(k + a for a in axis)) for k, p in enumerate(self.parts)])

    # arithmetic -----------------------------------------------------------

    def __neg__(self):
        return Jet([-p for p in self.parts])

    def __pos__(self):
        return self

    def __add__(self, other):
        o = _lift(other, self)
        order = min(self.order, o.order)
        out = []
        for k in range(order + 1):
            a, b = self.parts[k], o.parts[k]
            ndim = max(a.ndim, b.ndim) - k
            out.append(_pad(a, k, ndim) + _pad(b, k, ndim))
        return Jet(out)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            return bilinear(self, other, np.multiply)
        c = np.asarray(other, dtype=float)
        ndim = max(c.ndim, len(self.shape))
        return Jet([_pad(p, k, ndim) * c for k, p in enumerate(self.parts)])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, other):
        return power(self, other)

    def __rpow__(self, other):
        return exp(np.log(other) * self)

    def __matmul__(self, other):
        return einsum("...ij,...jk->...ik", self, other)

    def __repr__(self):
        return f"Jet(order={self.order}, shape={self.shape}, value={self.value!r})"


def _lift(x, like):
    if isinstance(x, Jet):
        return x
    return Jet.constant(x, like.d, like.order)


def bilinear(f: Jet, g: Jet, op, align=True) -> Jet:
    """Leibniz rule for a bilinear ``op`` that broadcasts over leading axes.

    ``align`` pads the component shapes to a common rank first, which
    elementwise ops need; ellipsis einsums must not be padded.
    """
    f = _lift(f, g)
    g = _lift(g, f)
    order = min(f.order, g.order)
    if align:
        ndim = max(f.parts[0].ndim, g.parts[0].ndim)
        F = [_pad(f.parts[k], k, ndim) for k in range(order + 1)]
        Gp = [_pad(g.parts[k], k, ndim) for k in range(order + 1)]
    else:
        F, Gp = list(f.parts[: order + 1]), list(g.parts[: order + 1])
    out = [op(F[0], Gp[0])]
    if order >= 1:
        out.append(op(F[1], Gp[0]) + op(F[0], Gp[1]))
    if order >= 2:
        cross = op(F[1][:, None], Gp[1][None, :])
        cross_t = op(F[1][None, :], Gp[1][:, None])
        out.append(op(F[2], Gp[0]) + cross + cross_t + op(F[0], Gp[2]))
    if order >= 3:
        f1, f2, g1, g2 = F[1], F[2], Gp[1], Gp[2]
        t = op(F[3], Gp[0]) + op(F[0], Gp[3])
        t = t + op(f2[:, :, None], g1[None, None, :])
        t = t + op(f2[:, None, :], g1[None, :, None])
        t = t + op(f2[None, :, :], g1[:, None, None])
        t = t + op(f1[:, None, None], g2[None, :, :])
        t = t + op(f1[None, :, None], g2[:, None, :])
        t = t + op(f1[None, None, :], g2[:, :, None])
        out.append(t)
    return Jet(out)


def einsum(subscripts: str, a, b):
    """Two-operand einsum over component axes. Subscripts must use a ``...`` prefix."""
    if not isinstance(a, Jet) and not isinstance(b, Jet):
        return np.einsum(subscripts, a, b)

    def op(x, y):
        return np.einsum(subscripts, x, y)

    if not isinstance(a, Jet):
        return Jet([op(a, p) for p in b.parts])
    if not isinstance(b, Jet):
        return Jet([op(p, b) for p in a.parts])
    return bilinear(a, b, op, align=False)


def compose(f: Jet, derivs) -> Jet:
    """Apply a scalar function elementwise given its derivatives at ``f.value``.

    ``derivs[m]`` is the m-th derivative of the function evaluated at the
    value part; at least ``f.order + 1`` entries are needed.
    """
    out = [derivs[0]]
    p = f.parts
    if f.order >= 1:
        out.append(derivs[1] * p[1])
    if f.order >= 2:
        out.append(derivs[2] * (p[1][:, None] * p[1][None, :]) + derivs[1] * p[2])
    if f.order >= 3:
        f1, f2 = p[1], p[2]
        triple = f1[:, None, None] * f1[None, :, None] * f1[None, None, :]
        mixed = (
            f2[:, :, None] * f1[None, None, :]
            + f2[:, None, :] * f1[None, :, None]
            + f2[None, :, :] * f1[:, None, None]
        )
        out.append(derivs[3] * triple + derivs[2] * mixed + derivs[1] * p[3])
    return Jet(out)


def _derivs_or_value(x, fn_derivs, fn_value):
    if isinstance(x, Jet):
        return compose(x, fn_derivs(x.value, x.order))
    return fn_value(x)


def sin(x):
    return _derivs_or_value(
        x,
        lambda v, k: [np.sin(v), np.cos(v), -np.sin(v), -np.cos(v)][: k + 1],
        np.sin,
    )


def cos(x):
    return _derivs_or_value(
        x,
        lambda v, k: [np.cos(v), -np.sin(v), -np.cos(v), np.sin(v)][: k + 1],
        np.cos,
    )


def exp(x):
    return _derivs_or_value(x, lambda v, k: [np.exp(v)] * (k + 1), np.exp)


def log(x):
    return _derivs_or_value(
        x,
        lambda v, k: [np.log(v), 1.0 / v, -1.0 / v**2, 2.0 / v**3][: k + 1],
        np.log,
    )


def sqrt(x):
    return power(x, 0.5)


def reciprocal(x):
    return _derivs_or_value(
        x,
        lambda v, k: [1.0 / v, -1.0 / v**2, 2.0 / v**3, -6.0 / v**4][: k + 1],
        lambda v: 1.0 / v,
    )


def power(x, p):
    """x**p; a jet exponent goes through exp(p log x)."""
    if isinstance(p, Jet):
        return exp(p * log(x))
    if not isinstance(x, Jet):
        return np.power(x, p)
    p = float(p)
    if p == int(p) and 0 <= p <= 3:
        out = Jet.constant(np.ones_like(x.value), x.d, x.order)
        for _ in range(int(p)):
            out = out * x
        return out

    def derivs(v, k):
        coeffs, e, c = [], p, 1.0
        for _ in range(k + 1):
            coeffs.append(c * np.power(v, e))
            c *= e
            e -= 1.0
        return coeffs

    return compose(x, derivs(x.value, x.order))


def inv(A: Jet) -> Jet:
    """Matrix inverse of a square-matrix-valued jet (last two axes).

    Writes A = A0 + D with D vanishing at the point and sums the finite
    Neumann series B0 (-D B0)^m, m <= order, which is exact to that order.
    """
    B0 = np.linalg.inv(A.value)
    D = Jet((np.zeros_like(A.value),) + A.parts[1:])
    term = Jet.constant(B0, A.d, A.order)
    total = term
    for _ in range(A.order):
        term = -einsum("...ij,...jk->...ik", term, einsum("...ij,...jk->...ik", D, B0))
        total = total + term
    return total


def stack(items, d, order):
    """Stack scalars/jets into one jet with a new leading component axis."""
    jets = [_lift(x, Jet.constant(0.0, d, order)) if not isinstance(x, Jet) else x for x in items]
    order = min(j.order for j in jets)
    shape = np.broadcast_shapes(*(j.shape for j in jets))
    parts = []
    for k in range(order + 1):
        parts.append(
            np.stack(
                [np.broadcast_to(j.parts[k], (d,) * k + shape) for j in jets], axis=k
            )
        )
    return Jet(parts)


def value_of(x):
    return x.value if isinstance(x, Jet) else np.asarray(x, dtype=float)
