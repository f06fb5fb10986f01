import math

import numpy as np
import pytest

from nullfrenet.error import DerivativeOrderError
from nullfrenet.jet import (
    bell,
    CallbackField,
    compose,
    ConstantField,
    fd_weights,
    GridField,
    Jet,
    PolynomialField,
    WindowField,
    ZERO,
)


def test_arithmetic() -> None:
    x = Jet.variable(2.0, 3)
    assert np.allclose((x * x).terms, [4, 4, 2, 0])
    assert np.allclose((x * x * x).terms, [8, 12, 12, 6])
    assert np.allclose((3 - x).terms, [1, -1, 0, 0])
    assert np.allclose((x + Jet.constant(1.0, 1)).terms, [3, 1])
    assert (x * x).d.order == 2

    with pytest.raises(DerivativeOrderError):
        Jet.constant(1.0, 0).d
    with pytest.raises(DerivativeOrderError):
        x.truncate(4)


def test_vector_jets() -> None:
    s = Jet.variable(1.0, 2)
    v = Jet([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    product = s * v
    assert np.allclose(product.terms, [[1, 0], [1, 1], [0, 2]])
    assert np.allclose((v + 1.0).terms[0], [2, 1])


def test_bell() -> None:
    a, b, c = 2.0, 3.0, 5.0
    assert bell(3, 1, [a, b, c]) == c
    assert bell(3, 2, [a, b, c]) == 3 * a * b
    assert bell(3, 3, [a, b, c]) == a**3
    assert bell(4, 2, [a, b, c, 7.0]) == 4 * a * c + 3 * b**2


def test_compose() -> None:
    x0 = 0.3
    s, c = math.sin(x0), math.cos(x0)
    inner = Jet([s, c, -s, -c])
    e = math.exp(s)
    result = compose([e, e, e, e], inner)
    expected = [e, c * e, (c**2 - s) * e, (c**3 - 3 * s * c - c) * e]
    assert np.allclose(result.terms, expected)

    assert np.allclose(Jet.variable(4.0, 2).power(0.5).terms, [2, 0.25, -1 / 32])


def test_polynomial_field() -> None:
    f = PolynomialField([1.0, 0.0, 2.0])
    assert f(2.0) == 9.0
    assert f.derivative(2.0, 1) == 8.0
    assert f.derivative(2.0, 3) == 0.0
    assert (f * 2 + PolynomialField([0.0, 1.0]))(1.0) == 7.0
    assert np.allclose(f.jet(1.0, 2).terms, [3, 4, 4])

    assert ZERO.derivative(1.0, 3) == 0.0
    assert ConstantField(2.5).jet(0.0, 1).terms.tolist() == [2.5, 0.0]


def test_window_field() -> None:
    w = WindowField(0.2, 1.8, (1.0, 0.5))
    assert w.support == (0.2, 1.8)
    assert w(1.0) > 0
    for end in (0.2, 1.8):
        for k in range(5):
            assert abs(w.derivative(end, k)) < 1e-12
    assert w(0.1) == 0.0
    assert w.derivative(2.0, 3) == 0.0

    with pytest.raises(ValueError):
        WindowField(1.0, 1.0)


def test_callback_field() -> None:
    f = CallbackField(math.sin, math.cos)
    assert f.derivative(0.0, 1) == 1.0
    with pytest.raises(DerivativeOrderError):
        f.derivative(0.0, 2)


def test_fd_weights() -> None:
    weights = fd_weights(0.0, [-1.0, 0.0, 1.0], 2)
    assert np.allclose(weights[:, 0], [0, 1, 0])
    assert np.allclose(weights[:, 1], [-0.5, 0, 0.5])
    assert np.allclose(weights[:, 2], [1, -2, 1])


def test_grid_field() -> None:
    grid = np.linspace(0.0, 2.0, 21)
    f = GridField(0.0, 0.1, grid**3)
    assert abs(f(1.05) - 1.05**3) < 1e-9
    assert abs(f.derivative(1.0, 1) - 3.0) < 1e-9
    assert abs(f.derivative(0.0, 2)) < 1e-8
    assert abs(f.derivative(1.5, 2) - 9.0) < 1e-8

    with pytest.raises(DerivativeOrderError):
        GridField(0.0, 0.1, [1.0, 2.0, 3.0]).derivative(0.0, 2)
    with pytest.raises(ValueError):
        GridField(0.0, 0.0, [1.0])
