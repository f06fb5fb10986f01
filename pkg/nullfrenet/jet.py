"""
Truncated Taylor jets and scalar fields of σ.

A jet holds the value and the first few derivatives of a function at one
point. Jets add, multiply (Leibniz), differentiate (shift), and compose (Faà di
Bruno), which is all the calculus the frame and variation formulas need. Jet
entries are either scalars or vectors; products broadcast, so a scalar jet times
a vector jet is a vector jet.
"""
from __future__ import annotations
from abc import ABC, abstractmethod
from collections.abc import Callable, Sequence
from functools import cache
from math import comb
from typing import TypeAlias

import numpy as np
from numpy.polynomial import Polynomial
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import CubicSpline, PPoly, BPoly

from .error import DerivativeOrderError


__all__ = (
    'bell',
    'CallbackField',
    'compose',
    'ConstantField',
    'Field',
    'fd_weights',
    'GridField',
    'Jet',
    'PolynomialField',
    'SplineField',
    'WindowField',
    'ZERO',
)


Operand: TypeAlias = 'Jet | float | int | np.floating'


# ======================================================================================
# Jets


class Jet:
    """The derivatives f, f′, …, f⁽ⁿ⁾ of some function at one point."""

    __slots__ = ('_terms',)

    def __init__(self, terms: ArrayLike) -> None:
        self._terms: NDArray[np.float64] = np.array(terms, dtype=np.float64)
        if self._terms.ndim == 0 or len(self._terms) == 0:
            raise ValueError('a jet needs at least one term')

    @classmethod
    def constant(cls, value: float, order: int) -> Jet:
        terms = np.zeros(order + 1)
        terms[0] = value
        return cls(terms)

    @classmethod
    def variable(cls, value: float, order: int) -> Jet:
        """The jet of the identity function at the given value."""
        terms = np.zeros(order + 1)
        terms[0] = value
        if order >= 1:
            terms[1] = 1.0
        return cls(terms)

    @property
    def order(self) -> int:
        return len(self._terms) - 1

    @property
    def terms(self) -> NDArray[np.float64]:
        return self._terms

    @property
    def value(self) -> NDArray[np.float64] | float:
        v = self._terms[0]
        return float(v) if np.ndim(v) == 0 else v

    def __getitem__(self, k: int) -> NDArray[np.float64] | float:
        v = self._terms[k]
        return float(v) if np.ndim(v) == 0 else v

    def __len__(self) -> int:
        return len(self._terms)

    @property
    def d(self) -> Jet:
        """The jet of the derivative, one order shorter."""
        if self.order == 0:
            raise DerivativeOrderError('cannot differentiate a jet of order 0')
        return Jet(self._terms[1:])

    def truncate(self, order: int) -> Jet:
        if order > self.order:
            raise DerivativeOrderError(
                f'jet of order {self.order} cannot supply order {order}'
            )
        return Jet(self._terms[: order + 1])

    # ----------------------------------------------------------------------------------

    @staticmethod
    def _terms_of(other: Operand, order: int) -> NDArray[np.float64]:
        if isinstance(other, Jet):
            return other._terms[: order + 1]
        terms = np.zeros(order + 1)
        terms[0] = float(other)
        return terms

    def _common_order(self, other: Operand) -> int:
        return min(self.order, other.order) if isinstance(other, Jet) else self.order

    def __add__(self, other: Operand) -> Jet:
        n = self._common_order(other)
        return Jet(self._terms[: n + 1] + _column(Jet._terms_of(other, n), self._terms))

    __radd__ = __add__

    def __neg__(self) -> Jet:
        return Jet(-self._terms)

    def __sub__(self, other: Operand) -> Jet:
        return self + (-other)

    def __rsub__(self, other: Operand) -> Jet:
        return (-self) + other

    def __mul__(self, other: Operand) -> Jet:
        if not isinstance(other, Jet):
            return Jet(self._terms * float(other))

        n = min(self.order, other.order)
        a, b = self._terms, other._terms
        terms = [
            sum(comb(k, j) * _outer(a[j], b[k - j]) for j in range(k + 1))
            for k in range(n + 1)
        ]
        return Jet(np.array(terms))

    __rmul__ = __mul__

    def __truediv__(self, other: float) -> Jet:
        return Jet(self._terms / float(other))

    def dot(self, other: Jet, metric: Callable[[ArrayLike, ArrayLike], float]) -> Jet:
        """The jet of a bilinear form applied to two vector jets (Leibniz rule)."""
        n = min(self.order, other.order)
        a, b = self._terms, other._terms
        return Jet(
            [
                sum(comb(k, j) * metric(a[j], b[k - j]) for j in range(k + 1))
                for k in range(n + 1)
            ]
        )

    def power(self, p: float) -> Jet:
        """The jet of f**p, for a scalar jet with positive value."""
        f0 = float(self._terms[0])
        outer = [f0**p]
        coefficient = 1.0
        for k in range(1, self.order + 1):
            coefficient *= p - k + 1
            outer.append(coefficient * f0 ** (p - k))
        return compose(outer, self)

    def __repr__(self) -> str:
        return f'Jet({self._terms.tolist()})'


def _outer(a: NDArray[np.float64], b: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.multiply(a, b)


def _column(
    terms: NDArray[np.float64], like: NDArray[np.float64]
) -> NDArray[np.float64]:
    # Promote scalar terms so they add to vector jets componentwise.
    if terms.ndim < like.ndim:
        return terms.reshape(terms.shape + (1,) * (like.ndim - terms.ndim))
    return terms


# ======================================================================================
# Faà di Bruno


@cache
def _bell_table(n: int, k: int) -> tuple[tuple[int, tuple[int, ...]], ...]:
    # Partial Bell polynomial B(n, k) as (coefficient, exponents) monomials, where
    # exponents[i] is the power of the (i+1)-th derivative of the inner function.
    if n == 0 and k == 0:
        return ((1, ()),)
    if n == 0 or k == 0:
        return ()

    monomials: dict[tuple[int, ...], int] = {}
    for i in range(1, n - k + 2):
        for coefficient, exponents in _bell_table(n - i, k - 1):
            powers = list(exponents) + [0] * max(0, i - len(exponents))
            powers[i - 1] += 1
            key = tuple(powers)
            monomials[key] = monomials.get(key, 0) + comb(n - 1, i - 1) * coefficient
    return tuple((c, e) for e, c in sorted(monomials.items()))


def bell(n: int, k: int, inner: Sequence[float]) -> float:
    """
    Evaluate the partial Bell polynomial B(n, k) at inner[0] = g′, inner[1] = g″,
    and so on.
    """
    total = 0.0
    for coefficient, exponents in _bell_table(n, k):
        term = float(coefficient)
        for i, e in enumerate(exponents):
            if e:
                term *= inner[i] ** e
        total += term
    return total


def compose(outer: Sequence[ArrayLike], inner: Jet) -> Jet:
    """
    Compose jets. `outer[k]` is the k-th derivative of the outer function f,
    evaluated at the inner function's value; `inner` is the jet of g. The result
    is the jet of f∘g up to the smaller of both orders.
    """
    n = min(len(outer) - 1, inner.order)
    g = [float(t) for t in inner.terms[1:]]
    terms: list[ArrayLike] = [np.asarray(outer[0], dtype=np.float64)]
    for m in range(1, n + 1):
        terms.append(
            sum(
                np.asarray(outer[k], dtype=np.float64) * bell(m, k, g)
                for k in range(1, m + 1)
            )
        )
    return Jet(np.array(terms))


# ======================================================================================
# Fields


class Field(ABC):
    """A real function of σ that can be differentiated to some order."""

    @abstractmethod
    def derivative(self, sigma: float, order: int = 0) -> float:
        ...

    def __call__(self, sigma: float) -> float:
        return self.derivative(sigma, 0)

    def jet(self, sigma: float, order: int) -> Jet:
        return Jet([self.derivative(sigma, k) for k in range(order + 1)])


class ConstantField(Field):
    def __init__(self, value: float) -> None:
        self.value = float(value)

    def derivative(self, sigma: float, order: int = 0) -> float:
        return self.value if order == 0 else 0.0

    def __repr__(self) -> str:
        return f'ConstantField({self.value})'


ZERO = ConstantField(0.0)


class PolynomialField(Field):
    """A polynomial in σ with coefficients in ascending order."""

    def __init__(self, coefficients: Polynomial | Sequence[float]) -> None:
        self.polynomial = (
            coefficients
            if isinstance(coefficients, Polynomial)
            else Polynomial(list(coefficients))
        )
        self._derivatives = [self.polynomial]

    def _nth(self, order: int) -> Polynomial:
        while len(self._derivatives) <= order:
            self._derivatives.append(self._derivatives[-1].deriv())
        return self._derivatives[order]

    def derivative(self, sigma: float, order: int = 0) -> float:
        return float(self._nth(order)(sigma))

    def __mul__(self, factor: float) -> PolynomialField:
        return PolynomialField(self.polynomial * factor)

    def __add__(self, other: PolynomialField) -> PolynomialField:
        return PolynomialField(self.polynomial + other.polynomial)

    def __repr__(self) -> str:
        return f'PolynomialField({self.polynomial.coef.tolist()})'


class WindowField(Field):
    """
    A compactly supported bump (σ−a)^p (b−σ)^p · g(σ) on [a, b], zero outside.
    With power p, the field and its first p−1 derivatives vanish at both ends.
    """

    def __init__(
        self,
        a: float,
        b: float,
        shape: Sequence[float] = (1.0,),
        *,
        power: int = 5,
    ) -> None:
        if not a < b:
            raise ValueError(f'empty window [{a}, {b}]')
        self.a = float(a)
        self.b = float(b)
        self.power = power
        bump = Polynomial.fromroots([a] * power + [b] * power) * (-1) ** power
        self._field = PolynomialField(bump * Polynomial(list(shape)))

    @property
    def support(self) -> tuple[float, float]:
        return self.a, self.b

    def derivative(self, sigma: float, order: int = 0) -> float:
        if sigma < self.a or sigma > self.b:
            return 0.0
        return self._field.derivative(sigma, order)

    def __repr__(self) -> str:
        return f'WindowField({self.a}, {self.b}, power={self.power})'


class CallbackField(Field):
    """A field given by closed-form callbacks for f, f′, f″, and so on."""

    def __init__(self, *derivatives: Callable[[float], float]) -> None:
        if not derivatives:
            raise ValueError('a callback field needs at least its value callback')
        self._derivatives = derivatives

    def derivative(self, sigma: float, order: int = 0) -> float:
        if order >= len(self._derivatives):
            raise DerivativeOrderError(
                f'callback field supplies derivatives up to order '
                f'{len(self._derivatives) - 1}, not {order}'
            )
        return float(self._derivatives[order](sigma))


class SplineField(Field):
    """A field backed by a scipy piecewise polynomial."""

    def __init__(self, spline: PPoly | BPoly | CubicSpline) -> None:
        self.spline = spline

    @classmethod
    def from_samples(cls, sigma: ArrayLike, values: ArrayLike) -> SplineField:
        """Cubic interpolation of samples."""
        return cls(CubicSpline(np.asarray(sigma), np.asarray(values)))

    @classmethod
    def from_jets(cls, sigma: ArrayLike, jets: ArrayLike) -> SplineField:
        """
        Hermite interpolation of samples that carry derivatives, one row per
        sample and one column per derivative order.
        """
        return cls(BPoly.from_derivatives(np.asarray(sigma), np.asarray(jets)))

    def derivative(self, sigma: float, order: int = 0) -> float:
        return float(self.spline(sigma, nu=order))


# --------------------------------------------------------------------------------------


def fd_weights(z: float, x: ArrayLike, m: int) -> NDArray[np.float64]:
    """
    Finite-difference weights on the stencil x for all derivative orders up to
    m at the point z. Column k holds the weights for the k-th derivative.
    """
    xs = np.asarray(x, dtype=np.float64)
    n = len(xs)
    c = np.zeros((n, m + 1))
    c1 = 1.0
    c4 = xs[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = xs[i] - z
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


class GridField(Field):
    """
    A field sampled on a uniform grid. Derivatives at grid nodes come from
    fourth-order finite-difference stencils, centered in the interior and
    one-sided near the ends; between nodes they are cubically interpolated.
    """

    ACCURACY = 4

    def __init__(self, start: float, step: float, values: ArrayLike) -> None:
        self.values = np.asarray(values, dtype=np.float64)
        if step <= 0:
            raise ValueError(f'grid step {step} is not positive')
        self.grid = start + step * np.arange(len(self.values))
        self._splines: dict[int, CubicSpline] = {}

    def _nodal(self, order: int) -> NDArray[np.float64]:
        size = order + self.ACCURACY
        size += 1 - size % 2
        n = len(self.grid)
        if n < size:
            raise DerivativeOrderError(
                f'grid of {n} samples is too small for derivative order {order}'
            )
        half = size // 2
        out = np.empty(n)
        for i in range(n):
            lo = min(max(i - half, 0), n - size)
            stencil = self.grid[lo : lo + size]
            weights = fd_weights(self.grid[i], stencil, order)[:, order]
            out[i] = weights @ self.values[lo : lo + size]
        return out

    def derivative(self, sigma: float, order: int = 0) -> float:
        if order not in self._splines:
            nodal = self.values if order == 0 else self._nodal(order)
            self._splines[order] = CubicSpline(self.grid, nodal)
        return float(self._splines[order](sigma))
