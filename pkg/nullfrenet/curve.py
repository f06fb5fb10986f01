"""
Null curves, their pseudo-arclength, and their Frenet-Serret frames.

A curve source evaluates X(λ) and its λ-derivatives. The pseudo-arclength
density dσ/dλ = (−Ẍ·Ẍ)^¼ turns λ-derivatives into σ-derivatives, from which the
null frame and the two curvatures follow:

    e₊ = X′,  e₁ = X″,  κ₁ = ½ X‴·X‴,  e₋ = X‴ − κ₁ X′,
    κ₂ = √(−X⁗·X⁗ − (X‴·X‴)²),  e₂ = (X⁗ − κ₁′ X′ − 2κ₁ X″) / κ₂.

Where κ₂ vanishes, e₂ is completed so that ε(e₊, e₋, e₁, e₂) = +1.
"""
from __future__ import annotations
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import quad
from scipy.interpolate import make_interp_spline
from scipy.optimize import brentq

from .error import DegenerateCurveError, DerivativeOrderError, FrameExtractionError
from .jet import compose, Field, Jet
from .minkowski import (
    dot,
    FourVector,
    levi_civita,
    NullFrame,
    raise_index,
    standard_frame,
)


__all__ = (
    'ArclengthMap',
    'CurvaturePair',
    'CurveSource',
    'frame_at',
    'local_frame',
    'null_cubic',
    'PolynomialCurve',
    'pseudo_arclength_density',
    'ReparametrizedCurve',
    'reparametrize',
    'sigma_derivatives',
    'SplineCurve',
    'straight_ray',
    'Tolerances',
)


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances for frame extraction."""

    null: float = 1e-10
    frame: float = 1e-9
    k2: float = 1e-9
    radicand: float = 1e-9
    sampled: float = 1e-3

    def loosened(self) -> Tolerances:
        """The tolerances for spline-fitted sources."""
        return replace(
            self, null=self.sampled, frame=self.sampled, radicand=self.sampled
        )

    def for_source(self, src: CurveSource) -> Tolerances:
        return self.loosened() if src.sampled else self


class CurvaturePair(NamedTuple):
    kappa1: float
    kappa2: float = 0.0

    @classmethod
    def of(cls, kappa1: float, kappa2: float = 0.0) -> CurvaturePair:
        if kappa2 < 0:
            raise ValueError(f'second curvature {kappa2} is negative')
        return cls(float(kappa1), float(kappa2))


# ======================================================================================
# Sources


class CurveSource(ABC):
    """A curve X(λ) with derivatives up to `max_order` on [λ₀, λ₁]."""

    dimension: int
    domain: tuple[float, float]
    max_order: int
    sampled: bool = False

    @abstractmethod
    def _derivatives(self, lam: float, order: int) -> NDArray[np.float64]:
        ...

    def derivatives(self, lam: float, order: int) -> NDArray[np.float64]:
        """Rows X, Ẋ, Ẍ, … up to the given order."""
        if order > self.max_order:
            raise DerivativeOrderError(
                f'{type(self).__name__} supplies {self.max_order} derivatives, '
                f'not {order}'
            )
        return self._derivatives(lam, order)

    def __call__(self, lam: float) -> FourVector:
        return self.derivatives(lam, 0)[0]

    def jet(self, lam: float, order: int) -> Jet:
        return Jet(self.derivatives(lam, order))


class PolynomialCurve(CurveSource):
    """A curve with polynomial components, coefficients in ascending order."""

    max_order = 12

    def __init__(
        self, coefficients: ArrayLike, domain: tuple[float, float] = (0.0, 1.0)
    ) -> None:
        self.coefficients = np.atleast_2d(np.asarray(coefficients, dtype=np.float64))
        self.dimension = self.coefficients.shape[1]
        if self.dimension not in (3, 4):
            raise ValueError(f'curve must have 3 or 4 components, not {self.dimension}')
        self.domain = (float(domain[0]), float(domain[1]))

    def _derivatives(self, lam: float, order: int) -> NDArray[np.float64]:
        P = np.polynomial.polynomial
        rows = []
        for k in range(order + 1):
            c = P.polyder(self.coefficients, k, axis=0) if k else self.coefficients
            rows.append(P.polyval(lam, c) if len(c) else np.zeros(self.dimension))
        return np.array(rows)


def null_cubic(
    dimension: int = 4,
    frame: None | NullFrame = None,
    domain: tuple[float, float] = (0.0, 1.0),
) -> PolynomialCurve:
    """X(σ) = σ e₊ + σ²/2 e₁ + σ³/6 e₋, a curve with both curvatures zero."""
    f = standard_frame(dimension) if frame is None else frame
    zero = np.zeros(dimension)
    return PolynomialCurve([zero, f.e_plus, f.e1 / 2, f.e_minus / 6], domain)


def straight_ray(
    dimension: int = 4, domain: tuple[float, float] = (0.0, 1.0)
) -> PolynomialCurve:
    """X(λ) = λ e₊, a null curve without pseudo-arclength."""
    return PolynomialCurve(
        [np.zeros(dimension), standard_frame(dimension).e_plus], domain
    )


class SplineCurve(CurveSource):
    """
    A quintic spline through samples. Fourth and fifth derivatives of a spline
    amplify noise in the samples, so extraction on such sources runs with the
    loosened tolerances.
    """

    max_order = 5
    sampled = True

    def __init__(self, lams: ArrayLike, points: ArrayLike) -> None:
        ls = np.asarray(lams, dtype=np.float64)
        xs = np.asarray(points, dtype=np.float64)
        if len(ls) < 6:
            raise ValueError(f'a quintic spline needs 6 or more samples, not {len(ls)}')
        if xs.ndim != 2 or xs.shape[0] != len(ls) or xs.shape[1] not in (3, 4):
            raise ValueError(f'samples have shape {xs.shape}, not ({len(ls)}, 3 or 4)')
        if np.any(np.diff(ls) <= 0):
            raise ValueError('sample parameters are not strictly increasing')
        self.dimension = xs.shape[1]
        self.domain = (float(ls[0]), float(ls[-1]))
        self.spline = make_interp_spline(ls, xs, k=5, axis=0)

    def _derivatives(self, lam: float, order: int) -> NDArray[np.float64]:
        return np.array([self.spline(lam, nu=k) for k in range(order + 1)])


class ReparametrizedCurve(CurveSource):
    """The curve λ ↦ base(φ(λ)) for a monotone, smooth φ."""

    def __init__(
        self, base: CurveSource, phi: Field, domain: tuple[float, float]
    ) -> None:
        self.base = base
        self.phi = phi
        self.dimension = base.dimension
        self.domain = (float(domain[0]), float(domain[1]))
        self.max_order = base.max_order
        self.sampled = base.sampled

    def _derivatives(self, lam: float, order: int) -> NDArray[np.float64]:
        inner = self.phi.jet(lam, order)
        outer = self.base.derivatives(float(inner[0]), order)
        return compose(list(outer), inner).terms


# ======================================================================================
# Pseudo-arclength


def _acceleration_norm(src: CurveSource, lam: float, order: int) -> Jet:
    # The jet of q = −Ẍ·Ẍ up to the given order.
    rows = src.derivatives(lam, order + 2)
    acceleration = Jet(rows[2:])
    return -acceleration.dot(acceleration, dot)


def pseudo_arclength_density(src: CurveSource, lam: float) -> float:
    """Return dσ/dλ = (−Ẍ·Ẍ)^¼."""
    q = float(_acceleration_norm(src, lam, 0)[0])
    if not q > 0:
        raise DegenerateCurveError(
            f'pseudo-arclength undefined at λ={lam}: Ẍ·Ẍ = {-q} is not negative',
            lam=lam,
        )
    return float(q**0.25)


def sigma_derivatives(src: CurveSource, lam: float, order: int) -> list[FourVector]:
    """
    Return X′, X″, … up to the given order, with primes denoting derivatives by
    pseudo-arclength. With u = dλ/dσ = q^(−¼), the derivatives of λ(σ) follow
    from λ⁽ᵏ⁺¹⁾ = dᵏ/dσᵏ u(λ(σ)), and those of X from X∘λ, both by Faà di Bruno.
    """
    if not 1 <= order <= 4:
        raise ValueError(f'order {order} is outside 1…4')
    if src.max_order < order + 1:
        raise DerivativeOrderError(
            f'σ-derivatives of order {order} need {order + 1} λ-derivatives, '
            f'but {type(src).__name__} supplies {src.max_order}'
        )

    q = _acceleration_norm(src, lam, order - 1)
    if not q[0] > 0:
        raise DegenerateCurveError(
            f'pseudo-arclength undefined at λ={lam}: Ẍ·Ẍ = {-q[0]} is not negative',
            lam=lam,
        )
    u = q.power(-0.25)

    lam_terms = [lam, float(u[0])]
    for k in range(1, order):
        lam_terms.append(float(compose(list(u.terms[: k + 1]), Jet(lam_terms))[k]))

    outer = src.derivatives(lam, order)
    x = compose(list(outer), Jet(lam_terms))
    return [np.asarray(x[k]) for k in range(1, order + 1)]


class ArclengthMap:
    """
    The monotone map between λ and σ, with σ(λ₀) = 0. σ is computed by adaptive
    quadrature of the density from the nearest node; λ(σ) by bracketed root
    finding between nodes.
    """

    def __init__(self, src: CurveSource, nodes: int = 129) -> None:
        self.src = src
        lo, hi = src.domain
        self.lams = np.linspace(lo, hi, nodes)

        density = self.density
        for lam in self.lams:
            density(lam)

        sigmas = [0.0]
        for a, b in zip(self.lams[:-1], self.lams[1:]):
            sigmas.append(sigmas[-1] + self._integrate(a, b))
        self.sigmas = np.array(sigmas)
        if np.any(np.diff(self.sigmas) <= 0):
            raise DegenerateCurveError('pseudo-arclength is not strictly increasing')

    def density(self, lam: float) -> float:
        return pseudo_arclength_density(self.src, lam)

    def _integrate(self, a: float, b: float) -> float:
        value, _ = quad(self.density, a, b, epsabs=1e-14, epsrel=1e-13, limit=200)
        return float(value)

    @staticmethod
    def _interval(nodes: NDArray[np.float64], value: float) -> int:
        i = int(np.searchsorted(nodes, value, side='right')) - 1
        return min(max(i, 0), len(nodes) - 2)

    @property
    def total(self) -> float:
        return float(self.sigmas[-1])

    def sigma(self, lam: float) -> float:
        i = self._interval(self.lams, lam)
        return float(self.sigmas[i]) + self._integrate(float(self.lams[i]), lam)

    def parameter(self, sigma: float) -> float:
        if sigma <= 0:
            return float(self.lams[0])
        if sigma >= self.total:
            return float(self.lams[-1])
        i = self._interval(self.sigmas, sigma)
        a, b = float(self.lams[i]), float(self.lams[i + 1])
        scale = max(abs(a), abs(b), 1.0)
        return float(
            brentq(lambda lam: self.sigma(lam) - sigma, a, b, xtol=1e-15 * scale)
        )


def reparametrize(src: CurveSource, nodes: int = 129) -> ArclengthMap:
    return ArclengthMap(src, nodes)


# ======================================================================================
# Frame extraction


def _complete_by_orientation(
    e_plus: FourVector, e_minus: FourVector, e1: FourVector
) -> FourVector:
    # ε_μνρσ e₊^ν e₋^ρ e₁^σ, raised, is the e₂ of a positively oriented frame.
    return raise_index(
        np.einsum('mnrs,n,r,s->m', levi_civita(4), e_plus, e_minus, e1)
    )


def _magnitude(vector: NDArray[np.float64]) -> float:
    # Squared Euclidean norm, floored at one, for scaling absolute tolerances.
    return max(1.0, float(np.dot(vector, vector)))


def local_frame(
    src: CurveSource, lam: float, tolerances: None | Tolerances = None
) -> tuple[NullFrame, CurvaturePair]:
    """
    The null frame and curvatures at parameter value λ. The null, radicand, and
    Gram checks are relative to the squared Euclidean size of the vectors involved
    once that exceeds one.
    """
    tol = (tolerances or Tolerances()).for_source(src)

    velocity = src.derivatives(lam, 1)[1]
    if abs(dot(velocity, velocity)) > tol.null * _magnitude(velocity):
        raise DegenerateCurveError(
            f'curve is not null at λ={lam}: Ẋ·Ẋ = {dot(velocity, velocity)}', lam=lam
        )

    four = src.dimension == 4
    d = sigma_derivatives(src, lam, 4 if four else 3)
    x1, x2, x3 = d[0], d[1], d[2]

    x3x3 = dot(x3, x3)
    kappa1 = 0.5 * x3x3
    e_plus, e1 = x1, x2
    e_minus = x3 - kappa1 * x1

    if not four:
        frame = NullFrame.of(e_plus, e1, e_minus)
        pair = CurvaturePair(kappa1, 0.0)
    else:
        x4 = d[3]
        radicand = -dot(x4, x4) - x3x3**2
        slack = tol.radicand * max(_magnitude(x4), x3x3**2)
        if radicand < -slack:
            raise DegenerateCurveError(
                f'second curvature undefined at λ={lam}: radicand {radicand} < 0',
                lam=lam,
            )
        kappa2 = 0.0 if abs(radicand) <= slack else float(np.sqrt(radicand))
        if kappa2 > tol.k2:
            dkappa1 = dot(x3, x4)
            e2 = (x4 - dkappa1 * x1 - 2 * kappa1 * x2) / kappa2
        else:
            e2 = _complete_by_orientation(e_plus, e_minus, e1)
        frame = NullFrame.of(e_plus, e1, e_minus, e2)
        pair = CurvaturePair(kappa1, kappa2)

    residual = frame.residual()
    if residual > tol.frame * max(_magnitude(row) for row in frame.rows):
        raise FrameExtractionError(
            f'extracted frame at λ={lam} violates the Gram relations by {residual:.3e}'
        )
    return frame, pair


def frame_at(
    src: CurveSource,
    sigma: float,
    mapping: None | ArclengthMap = None,
    tolerances: None | Tolerances = None,
) -> tuple[NullFrame, CurvaturePair]:
    """The null frame and curvatures at pseudo-arclength σ from the start."""
    arclength = reparametrize(src) if mapping is None else mapping
    lam = arclength.parameter(sigma)
    try:
        return local_frame(src, lam, tolerances)
    except DegenerateCurveError as x:
        x.sigma = sigma
        raise
    except FrameExtractionError as x:
        x.sigma = sigma
        raise
