import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sverify import jet
from sverify.errors import ExpressionError
from sverify.expr import Expression, parse
from sverify.jet import Jet

sp = pytest.importorskip("sympy")

SOURCES = [
    "x*y**2 + sin(x*z) - exp(y)/(1 + z**2)",
    "pow(x, 3) * cos(y - z) + x^2",
    "exp(sin(x) * y) / (2 + cos(z))",
    "pow(2 + x*x, y)",
]
POINT = [0.3, -0.7, 1.1]


def sympy_derivatives(source, point, order=3):
    x, y, z = syms = sp.symbols("x y z")
    f = sp.sympify(source.replace("^", "**"), locals={"pow": sp.Pow})
    sub = dict(zip(syms, point))
    out = [float(f.subs(sub))]
    for k in range(1, order + 1):
        arr = np.zeros((3,) * k)
        for idx in itertools.product(range(3), repeat=k):
            arr[idx] = float(sp.diff(f, *[syms[i] for i in idx]).subs(sub))
        out.append(arr)
    return out


@pytest.mark.parametrize("source", SOURCES)
def test_third_order_against_sympy(source):
    e = Expression(source, ["x", "y", "z"])
    j = e(list(Jet.variables(POINT, 3)[a] for a in range(3)))
    for got, want in zip(j.parts, sympy_derivatives(source, POINT)):
        assert np.abs(np.asarray(got) - want).max() < 1e-10


@pytest.mark.parametrize("source", SOURCES)
def test_gradient_against_finite_differences(source):
    e = Expression(source, ["x", "y", "z"])
    j = e([Jet.variables(POINT, 1)[a] for a in range(3)])
    h = 1e-6
    for a in range(3):
        up, dn = list(POINT), list(POINT)
        up[a] += h
        dn[a] -= h
        fd = (e(up) - e(dn)) / (2 * h)
        assert j.parts[1][a] == pytest.approx(fd, rel=1e-6, abs=1e-7)


def test_float_and_jet_values_agree():
    for source in SOURCES:
        e = Expression(source, ["x", "y", "z"])
        j = e([Jet.variables(POINT, 2)[a] for a in range(3)])
        assert float(j.value) == pytest.approx(e(POINT), rel=1e-14)


def test_matrix_inverse_jet():
    x = Jet.variables([0.4, -0.2], 3)
    rows = [[2 + x[0] * x[1], jet.sin(x[0])], [x[1] ** 2, 3 + jet.exp(x[1])]]
    A = jet.stack([jet.stack(r, 2, 3) for r in rows], 2, 3)
    Ai = jet.inv(A)
    prod = jet.einsum("...ij,...jk->...ik", A, Ai)
    assert np.abs(prod.value - np.eye(2)).max() < 1e-14
    for k in range(1, 4):
        assert np.abs(prod.parts[k]).max() < 1e-12


def test_grad_shifts_order():
    x = Jet.variables([1.0, 2.0], 3)
    f = x[0] ** 2 * x[1]
    g = f.grad()
    assert g.order == 2 and g.shape == (2,)
    assert np.allclose(g.value, [4.0, 1.0])
    assert np.allclose(g.parts[1], [[4.0, 2.0], [2.0, 0.0]])


def test_power_variants():
    x = Jet.variables([1.5], 3)[0]
    for p in (0, 1, 2, 3):
        assert np.allclose(jet.power(x, p).parts[1], [p * 1.5 ** (p - 1) if p else 0.0])
    half = jet.power(x, 0.5)
    assert half.parts[3][0, 0, 0] == pytest.approx(3 / 8 * 1.5**-2.5)


def test_constants_and_parameters():
    e = Expression("a*x + pi - e", ["x"], {"a": 2.0})
    assert e([1.0]) == pytest.approx(2 + math.pi - math.e)
    assert Expression(0.25, ["x"])([7.0]) == 0.25
    assert parse("x^2", ["x"])([3.0]) == 9.0


@pytest.mark.parametrize(
    "source",
    ["__import__('os')", "x.real", "x[0]", "x < 1", "tan(x)", "sin(x, x)", "w + 1", "1 +", "'a'", "True"],
)
def test_rejected_expressions(source):
    with pytest.raises(ExpressionError):
        Expression(source, ["x"])


def test_name_clash():
    with pytest.raises(ExpressionError):
        Expression("x", ["x"], {"x": 1.0})


@given(
    coeffs=st.lists(st.floats(-3, 3), min_size=4, max_size=4),
    pt=st.lists(st.floats(-2, 2), min_size=2, max_size=2),
)
def test_polynomial_hessian_closed_form(coeffs, pt):
    a, b, c, d = coeffs
    e = Expression(f"({a})*x*x + ({b})*x*y + ({c})*y**3 + ({d})", ["x", "y"])
    j = e([Jet.variables(pt, 2)[i] for i in range(2)])
    x, y = pt
    H = np.array([[2 * a, b], [b, 6 * c * y]])
    assert np.abs(j.parts[2] - H).max() < 1e-9 * (1 + np.abs(H).max())
