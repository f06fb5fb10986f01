"""
Geometric actions for null curves and the dynamics of their curvatures.

Three actions are supported:

  * PseudoArclength: S = 2α ∫ dσ, solved by null helices with κ₁ constant and
    κ₂ = 0.
  * LinearK1: S = 2 ∫ (α + βκ₁) dσ, whose curvatures move like a fictitious
    particle in a cubic potential (2+1) or a two-dimensional one (3+1).
  * LinearK2: S = 2λ₂ ∫ κ₂ dσ, whose equations close as a fifth-order system.

Solvers integrate the curvature equations with the fixed-step fourth-order
kernel of `reconstruct` and return the solution as Hermite-interpolated
curvature profiles.
"""
from __future__ import annotations
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, NamedTuple

import konsole
import numpy as np
from numpy.typing import NDArray
import pandas as pd
from scipy.integrate import cumulative_simpson, quad
from scipy.optimize import brentq

from .error import BlowUpError, DimensionError, ModelError
from .jet import Field, SplineField, ZERO
from .label import ModelKind
from .reconstruct import CurvatureProfile, grid_steps, rk4
from .schema import coerce, profile_schema


__all__ = (
    'energy_k1_4d',
    'eom_residual',
    'equilibrium_k1_3d',
    'equilibrium_k1_4d',
    'euler_lagrange',
    'first_integral_k1_3d',
    'first_integral_k1_3d_constants',
    'first_integral_k1_4d',
    'FirstIntegralConstants',
    'InitialData',
    'ModelSpec',
    'period_by_quadrature',
    'potential_k1_3d',
    'potential_k1_4d',
    'simulate',
    'Solution',
    'solve_arclength',
    'solve_k1_3d',
    'solve_k1_4d',
    'solve_k2',
    'turning_points',
)


Array = NDArray[np.float64]


@dataclass(frozen=True)
class ModelSpec:
    """An action with its couplings. `lambda2` is the coupling of LinearK2."""

    kind: ModelKind = ModelKind.PseudoArclength
    alpha: float = 1.0
    beta: float = 0.0
    lambda2: float = 0.0
    dimension: int = 4

    def __post_init__(self) -> None:
        if self.dimension not in (3, 4):
            raise DimensionError(f'dimension must be 3 or 4, not {self.dimension}')
        if self.kind is ModelKind.LinearK1 and self.beta == 0:
            raise ModelError('LinearK1 needs a nonzero β')
        if self.kind is ModelKind.LinearK2:
            if self.lambda2 == 0:
                raise ModelError('LinearK2 needs a nonzero λ₂')
            if self.dimension != 4:
                raise DimensionError('LinearK2 needs the second curvature of 3+1')

    def lagrangian(self, kappa1: float, kappa2: float = 0.0) -> float:
        match self.kind:
            case ModelKind.PseudoArclength:
                return 2 * self.alpha
            case ModelKind.LinearK1:
                return 2 * (self.alpha + self.beta * kappa1)
            case ModelKind.LinearK2:
                return 2 * self.lambda2 * kappa2
        raise AssertionError(f'unknown model kind {self.kind}')

    def partials(self) -> tuple[float, float]:
        """∂L/∂κ₁ and ∂L/∂κ₂, which are constant for all three actions."""
        match self.kind:
            case ModelKind.PseudoArclength:
                return 0.0, 0.0
            case ModelKind.LinearK1:
                return 2 * self.beta, 0.0
            case ModelKind.LinearK2:
                return 0.0, 2 * self.lambda2
        raise AssertionError(f'unknown model kind {self.kind}')


@dataclass(frozen=True)
class FirstIntegralConstants:
    gamma3: None | float = None
    E3: None | float = None
    gamma4: None | float = None
    E4: None | float = None

    def as_dict(self) -> dict[str, float]:
        return {k: v for k, v in vars(self).items() if v is not None}


@dataclass(frozen=True)
class InitialData:
    """
    Initial curvature data. Which entries matter depends on the model: κ₁ alone
    for PseudoArclength; κ₁, the sign of κ₁′, γ and E (or κ₁′ in place of E)
    for LinearK1 in 2+1; κ₁, κ₁′, κ₂, κ₂′ and γ for LinearK1 in 3+1; and
    κ₂, κ₂′, κ₂″, κ₁, κ₁′ for LinearK2.
    """

    kappa1: float = -0.5
    dkappa1: float = 0.0
    kappa2: float = 0.0
    dkappa2: float = 0.0
    ddkappa2: float = 0.0
    gamma: float = 0.0
    energy: None | float = None
    sign: int = 1


# ======================================================================================
# Equations of motion


def _k1(profile: CurvatureProfile, sigma: float, order: int) -> list[float]:
    return [profile.kappa1.derivative(sigma, k) for k in range(order + 1)]


def _k2(profile: CurvatureProfile, sigma: float, order: int) -> list[float]:
    return [profile.kappa2.derivative(sigma, k) for k in range(order + 1)]


def _em1(alpha: float, beta: float, k1: Array, k2: Array) -> Array:
    return (
        beta * k1[3]
        - 3 * beta * k1[0] * k1[1]
        - 2 * beta * k2[0] * k2[1]
        + alpha * k1[1]
    )


def _em2(alpha: float, beta: float, k1: Array, k2: Array) -> Array:
    return 2 * beta * k2[2] - beta * k1[0] * k2[0] + alpha * k2[0]


def _k21(k1: Array, k2: Array) -> Array:
    return k2[3] - 2 * k1[0] * k2[1] + k1[1] * k2[0]


def _k22(k1: Array, k2: Array) -> Array:
    return 2 * k1[2] + k2[0] ** 2


def eom_residual(model: ModelSpec, profile: CurvatureProfile, sigma: float) -> Array:
    """
    The left-hand sides of the equations of motion, which vanish exactly when
    the profile solves the model. In 2+1 the second entry is zero.
    """
    k1 = np.array(_k1(profile, sigma, 3))
    k2 = np.array(_k2(profile, sigma, 3))
    match model.kind:
        case ModelKind.PseudoArclength:
            return np.array([k1[1], k2[0]])
        case ModelKind.LinearK1:
            return np.array(
                [
                    _em1(model.alpha, model.beta, k1, k2),
                    _em2(model.alpha, model.beta, k1, k2),
                ]
            )
        case ModelKind.LinearK2:
            return model.lambda2 * np.array([_k21(k1, k2), _k22(k1, k2)])
    raise AssertionError(f'unknown model kind {model.kind}')


def euler_lagrange(
    model: ModelSpec, profile: CurvatureProfile, sigma: float
) -> tuple[float, float]:
    """
    The coefficients E₋ and E₂ of ε₋ and ε₂ in the first variation of the
    action, once all derivatives of the deformation have been integrated away.
    """
    r = eom_residual(model, profile, sigma)
    match model.kind:
        case ModelKind.PseudoArclength:
            return model.alpha * float(r[0]), model.alpha * float(r[1])
        case ModelKind.LinearK1:
            return float(r[0]), float(r[1])
        case ModelKind.LinearK2:
            return float(r[0]), -float(r[1])
    raise AssertionError(f'unknown model kind {model.kind}')


# ======================================================================================
# First integrals and potentials


def potential_k1_3d(alpha: float, beta: float, gamma3: float, kappa1: Any) -> Any:
    """The cubic potential U with ½βκ₁′² + U(κ₁) = E₃."""
    return -0.5 * beta * kappa1**3 + 0.5 * alpha * kappa1**2 - gamma3 * kappa1


def potential_k1_4d(
    alpha: float, beta: float, gamma4: float, kappa1: Any, kappa2: Any
) -> Any:
    """The potential V with ½βκ₁′² + 2βκ₂′² + V(κ₁, κ₂) = E₄."""
    return (
        -0.5 * beta * kappa1**3
        + 0.5 * alpha * kappa1**2
        - (gamma4 + beta * kappa2**2) * kappa1
        + alpha * kappa2**2
    )


def first_integral_k1_3d(
    profile: CurvatureProfile,
    alpha: float,
    beta: float,
    gamma3: float,
    energy3: float,
    sigma: float,
) -> float:
    k, dk = _k1(profile, sigma, 1)
    return float(
        0.5 * beta * dk**2 + potential_k1_3d(alpha, beta, gamma3, k) - energy3
    )


def first_integral_k1_3d_constants(
    kappa1: float, dkappa1: float, alpha: float, beta: float, gamma3: float
) -> float:
    """The E₃ that makes the given initial data satisfy the first integral."""
    return float(0.5 * beta * dkappa1**2 + potential_k1_3d(alpha, beta, gamma3, kappa1))


def first_integral_k1_4d(
    profile: CurvatureProfile, alpha: float, beta: float, gamma4: float, sigma: float
) -> float:
    k1 = _k1(profile, sigma, 2)
    k2 = profile.kappa2(sigma)
    return float(
        beta * k1[2] - 1.5 * beta * k1[0] ** 2 - beta * k2**2 + alpha * k1[0] - gamma4
    )


def _energy_4d(
    alpha: float, beta: float, gamma4: float, k1: Array, k2: Array
) -> Array:
    return (
        0.5 * beta * k1[1] ** 2
        + 2 * beta * k2[1] ** 2
        + potential_k1_4d(alpha, beta, gamma4, k1[0], k2[0])
    )


def energy_k1_4d(
    profile: CurvatureProfile,
    alpha: float,
    beta: float,
    gamma4: float,
    energy4: float,
    sigma: float,
) -> float:
    k1 = np.array(_k1(profile, sigma, 1))
    k2 = np.array(_k2(profile, sigma, 1))
    return float(_energy_4d(alpha, beta, gamma4, k1, k2) - energy4)


def equilibrium_k1_3d(
    alpha: float, beta: float, kappa1: float
) -> FirstIntegralConstants:
    """γ₃ and E₃ that keep κ₁ at rest at the given value."""
    gamma = -1.5 * beta * kappa1**2 + alpha * kappa1
    energy = potential_k1_3d(alpha, beta, gamma, kappa1)
    return FirstIntegralConstants(gamma3=gamma, E3=energy)


def equilibrium_k1_4d(
    alpha: float, beta: float, kappa2: float
) -> FirstIntegralConstants:
    """γ₄ and E₄ of the constant solution κ₁ = α/β, κ₂ = c."""
    if beta == 0:
        raise ModelError('the constant solution needs a nonzero β')
    gamma = -(alpha**2) / (2 * beta) - beta * kappa2**2
    energy = potential_k1_4d(alpha, beta, gamma, alpha / beta, kappa2)
    return FirstIntegralConstants(gamma4=gamma, E4=energy)


# --------------------------------------------------------------------------------------


def _radicand_coefficients(
    alpha: float, beta: float, gamma3: float, energy3: float
) -> Array:
    # κ₁′² = κ₁³ − (α/β)κ₁² + (2γ₃/β)κ₁ + 2E₃/β, as a monic cubic.
    if beta == 0:
        raise ModelError('LinearK1 needs a nonzero β')
    return np.array([1.0, -alpha / beta, 2 * gamma3 / beta, 2 * energy3 / beta])


def turning_points(
    alpha: float, beta: float, gamma3: float, energy3: float
) -> list[float]:
    """The real roots of κ₁′² as a function of κ₁, in increasing order."""
    coefficients = _radicand_coefficients(alpha, beta, gamma3, energy3)
    roots = np.roots(coefficients)
    scale = max(1.0, float(np.max(np.abs(roots))))
    return sorted(float(r.real) for r in roots if abs(r.imag) <= 1e-9 * scale)


def period_by_quadrature(
    alpha: float, beta: float, gamma3: float, energy3: float
) -> float:
    """
    The period of the bounded orbit between the two smallest turning points
    r₁ < r₂, as 2 ∫ dκ / √((κ − r₁)(r₂ − κ)(r₃ − κ)).
    """
    roots = turning_points(alpha, beta, gamma3, energy3)
    if len(roots) != 3 or not roots[0] < roots[1] < roots[2]:
        raise ModelError('the cubic potential has no bounded orbit for these constants')
    r1, r2, r3 = roots
    value, _ = quad(
        lambda k: 1 / np.sqrt(r3 - k),
        r1,
        r2,
        weight='alg',
        wvar=(-0.5, -0.5),
        epsabs=1e-14,
        epsrel=1e-13,
    )
    return 2 * float(value)


def _is_separatrix(alpha: float, beta: float, gamma3: float, energy3: float) -> bool:
    # A double root of κ₁′² where it has a minimum marks an unstable
    # equilibrium, i.e., an orbit that approaches it asymptotically.
    coefficients = _radicand_coefficients(alpha, beta, gamma3, energy3)
    roots = np.roots(coefficients)
    scale = max(1.0, float(np.max(np.abs(roots))))
    curvature = np.polyder(coefficients, 2)
    for i in range(3):
        for j in range(i + 1, 3):
            if abs(roots[i] - roots[j]) <= 1e-6 * scale:
                root = float(((roots[i] + roots[j]) / 2).real)
                if np.polyval(curvature, root) > 0:
                    return True
    return False


# ======================================================================================
# Solutions


def _field(sigma: Array, jets: Array) -> Field:
    return SplineField.from_jets(sigma, jets) if np.any(jets) else ZERO


@dataclass
class Solution:
    """
    Curvatures on a uniform grid, stored as jets (value and three derivatives)
    per grid point, together with the constants of motion.
    """

    model: ModelSpec
    sigma: Array
    kappa1: Array
    kappa2: Array
    constants: FirstIntegralConstants = field(default_factory=FirstIntegralConstants)
    drift: float = 0.0
    separatrix: bool = False
    extras: dict[str, float] = field(default_factory=dict)

    @property
    def h(self) -> float:
        return float(self.sigma[1] - self.sigma[0]) if len(self.sigma) > 1 else 0.0

    @cached_property
    def profile(self) -> CurvatureProfile:
        n = self.model.dimension
        k2 = ZERO if n == 3 else _field(self.sigma, self.kappa2)
        span = float(self.sigma[-1] - self.sigma[0]) or self.h or 1.0
        return CurvatureProfile(
            _field(self.sigma, self.kappa1), k2, n, span, signed=True
        )

    def residuals(self) -> dict[str, Array]:
        """Residual columns on the grid, computed from the jets."""
        k1, k2 = self.kappa1.T, self.kappa2.T
        m = self.model
        out: dict[str, Array] = {}
        match m.kind:
            case ModelKind.PseudoArclength:
                out['eom1'] = k1[1]
                out['eom2'] = k2[0]
            case ModelKind.LinearK1:
                out['eom1'] = _em1(m.alpha, m.beta, k1, k2)
                out['eom2'] = _em2(m.alpha, m.beta, k1, k2)
                c = self.constants
                if m.dimension == 3 and c.gamma3 is not None and c.E3 is not None:
                    out['first_integral'] = (
                        0.5 * m.beta * k1[1] ** 2
                        + potential_k1_3d(m.alpha, m.beta, c.gamma3, k1[0])
                        - c.E3
                    )
                if m.dimension == 4 and c.gamma4 is not None and c.E4 is not None:
                    out['first_integral'] = (
                        m.beta * k1[2]
                        - 1.5 * m.beta * k1[0] ** 2
                        - m.beta * k2[0] ** 2
                        + m.alpha * k1[0]
                        - c.gamma4
                    )
                    out['energy'] = _energy_4d(m.alpha, m.beta, c.gamma4, k1, k2) - c.E4
            case ModelKind.LinearK2:
                out['eom1'] = m.lambda2 * _k21(k1, k2)
                out['eom2'] = m.lambda2 * _k22(k1, k2)
        return out

    def residual_check(self, tolerance: float = 1e-7) -> dict[str, Any]:
        """
        The largest equation-of-motion residuals and the spread of each first
        integral, plus the residual between grid points for LinearK2, all held
        against the tolerance.
        """
        worst: dict[str, float] = {}
        for name, column in self.residuals().items():
            if name.startswith('eom'):
                worst[name] = float(np.max(np.abs(column)))
            else:
                worst[name] = float(np.ptp(column))
        if self.model.kind is ModelKind.LinearK2:
            worst['midpoint'] = self.drift
        ok = all(value <= tolerance for value in worst.values())
        return {**worst, 'tolerance': tolerance, 'ok': ok}

    def midpoint_residual(self, samples: int = 1000) -> float:
        """
        The largest equation-of-motion residual between grid points, where the
        interpolated profile is not pinned to the integrator's jets. At most
        the given number of evenly spread midpoints are checked.
        """
        if len(self.sigma) < 2:
            return 0.0
        stride = max(1, (len(self.sigma) - 1) // samples)
        midpoints = (self.sigma[:-1] + self.sigma[1:])[::stride] / 2
        profile = self.profile
        return max(
            float(np.max(np.abs(eom_residual(self.model, profile, s))))
            for s in midpoints
        )

    def to_frame(self) -> pd.DataFrame:
        data = {
            'sigma': self.sigma,
            'kappa1': self.kappa1[:, 0],
            'kappa2': self.kappa2[:, 0],
        }
        residuals = self.residuals()
        data.update(residuals)
        return coerce(pd.DataFrame(data), profile_schema(tuple(residuals)))

    def period_by_evolution(self) -> float:
        """The mean distance between successive maxima of κ₁."""
        slope = self.kappa1[:, 1]
        kappa1 = self.profile.kappa1
        maxima = []
        for i in np.nonzero((slope[:-1] > 0) & (slope[1:] <= 0))[0]:
            a, b = float(self.sigma[i]), float(self.sigma[i + 1])
            if slope[i + 1] == 0:
                maxima.append(b)
                continue
            maxima.append(
                brentq(lambda s: kappa1.derivative(s, 1), a, b, xtol=1e-14, rtol=1e-15)
            )
        if len(maxima) < 2:
            raise ModelError('κ₁ has fewer than two maxima on the solution')
        return (maxima[-1] - maxima[0]) / (len(maxima) - 1)


# --------------------------------------------------------------------------------------


class _Problem(NamedTuple):
    # Right-hand side, plus the map from grid states to curvature jets.
    rhs: Any
    jets: Any


def _run(
    problem: _Problem,
    y0: list[float],
    sigma_max: float,
    h: float,
) -> tuple[Array, Array, Array, None | BlowUpError]:
    steps = grid_steps(sigma_max, h)
    try:
        sigmas, states = rk4(problem.rhs, y0, h, steps)
        failure = None
    except BlowUpError as x:
        sigmas, states = x.partial
        failure = x
    k1, k2 = problem.jets(states)
    return sigmas, k1, k2, failure


def _finish(solution: Solution, failure: None | BlowUpError) -> Solution:
    if failure is not None:
        raise BlowUpError(failure.args[0], sigma=failure.sigma, partial=solution)
    return solution


def solve_arclength(
    alpha: float,
    kappa1: float,
    dimension: int = 4,
    sigma_max: float = 10.0,
    h: float = 1e-3,
) -> Solution:
    """The constant-curvature solution of the pseudo-arclength action."""
    model = ModelSpec(ModelKind.PseudoArclength, alpha, dimension=dimension)
    if kappa1 >= 0:
        konsole.warning(
            'Pseudo-arclength helix has non-positive mass M² = −2α²κ₁',
            detail={'alpha': alpha, 'kappa1': kappa1},
        )
    steps = grid_steps(sigma_max, h)
    sigma = h * np.arange(steps + 1)
    k1 = np.zeros((steps + 1, 4))
    k1[:, 0] = kappa1
    return Solution(model, sigma, k1, np.zeros((steps + 1, 4)))


def solve_k1_3d(
    alpha: float,
    beta: float,
    gamma3: float,
    energy3: float,
    kappa1: float,
    sign: int = 1,
    sigma_max: float = 10.0,
    h: float = 1e-3,
) -> Solution:
    """
    Solve the 2+1 LinearK1 dynamics from κ₁(0) and the sign of κ₁′(0), with the
    magnitude of κ₁′(0) fixed by the first integral. The solver integrates the
    equivalent second-order equation κ₁″ = (3/2)κ₁² − (α/β)κ₁ + γ₃/β, which has
    no trouble crossing turning points. Since the sign of κ₁′ is never switched
    by hand, there is no branch tolerance, and the solution cannot depend on
    one.
    """
    model = ModelSpec(ModelKind.LinearK1, alpha, beta, dimension=3)
    coefficients = _radicand_coefficients(alpha, beta, gamma3, energy3)
    radicand = float(np.polyval(coefficients, kappa1))
    scale = max(1.0, abs(kappa1) ** 3, abs(2 * energy3 / beta))
    if radicand < -1e-12 * scale:
        raise ModelError(
            f'κ₁(0)={kappa1} lies outside the region allowed by the first integral'
        )
    if sign not in (1, -1):
        raise ModelError(f'sign of κ₁′(0) must be ±1, not {sign}')

    separatrix = _is_separatrix(alpha, beta, gamma3, energy3)
    if separatrix:
        konsole.warning(
            'Orbit lies on a separatrix and approaches equilibrium asymptotically',
            detail={'gamma3': gamma3, 'E3': energy3},
        )

    ratio, offset = alpha / beta, gamma3 / beta

    def rhs(sigma: float, y: Array) -> Array:
        return np.array([y[1], 1.5 * y[0] ** 2 - ratio * y[0] + offset])

    def jets(states: Array) -> tuple[Array, Array]:
        k, dk = states[:, 0], states[:, 1]
        ddk = 1.5 * k**2 - ratio * k + offset
        dddk = 3 * k * dk - ratio * dk
        return np.column_stack([k, dk, ddk, dddk]), np.zeros((len(k), 4))

    y0 = [kappa1, sign * np.sqrt(max(radicand, 0.0))]
    sigma, k1, k2, failure = _run(_Problem(rhs, jets), y0, sigma_max, h)
    values = 0.5 * beta * k1[:, 1] ** 2 + potential_k1_3d(alpha, beta, gamma3, k1[:, 0])
    solution = Solution(
        model,
        sigma,
        k1,
        k2,
        FirstIntegralConstants(gamma3=gamma3, E3=energy3),
        drift=float(np.max(np.abs(values - energy3))),
        separatrix=separatrix,
    )
    return _finish(solution, failure)


def solve_k1_4d(
    alpha: float,
    beta: float,
    gamma4: float,
    initial: tuple[float, float, float, float],
    sigma_max: float = 10.0,
    h: float = 1e-3,
) -> Solution:
    """
    Solve the 3+1 LinearK1 dynamics from (κ₁, κ₁′, κ₂, κ₂′) at σ = 0. The
    energy E₄ follows from the initial data; its drift is reported.
    """
    model = ModelSpec(ModelKind.LinearK1, alpha, beta, dimension=4)

    def rhs(sigma: float, y: Array) -> Array:
        k1, dk1, k2, dk2 = y
        return np.array(
            [
                dk1,
                (gamma4 + 1.5 * beta * k1**2 + beta * k2**2 - alpha * k1) / beta,
                dk2,
                (beta * k1 * k2 - alpha * k2) / (2 * beta),
            ]
        )

    def jets(states: Array) -> tuple[Array, Array]:
        k1, dk1, k2, dk2 = states.T
        ddk1 = (gamma4 + 1.5 * beta * k1**2 + beta * k2**2 - alpha * k1) / beta
        dddk1 = (3 * beta * k1 * dk1 + 2 * beta * k2 * dk2 - alpha * dk1) / beta
        ddk2 = (beta * k1 * k2 - alpha * k2) / (2 * beta)
        dddk2 = (beta * (dk1 * k2 + k1 * dk2) - alpha * dk2) / (2 * beta)
        return (
            np.column_stack([k1, dk1, ddk1, dddk1]),
            np.column_stack([k2, dk2, ddk2, dddk2]),
        )

    sigma, k1, k2, failure = _run(_Problem(rhs, jets), list(initial), sigma_max, h)
    energy = _energy_4d(alpha, beta, gamma4, k1.T, k2.T)
    solution = Solution(
        model,
        sigma,
        k1,
        k2,
        FirstIntegralConstants(gamma4=gamma4, E4=float(energy[0])),
        drift=float(np.max(np.abs(energy - energy[0]))),
    )
    return _finish(solution, failure)


def solve_k2(
    lambda2: float,
    initial: tuple[float, float, float, float, float],
    sigma_max: float = 10.0,
    h: float = 1e-3,
    tolerance: float = 1e-9,
) -> Solution:
    """
    Solve the LinearK2 dynamics for the state (κ₂, κ₂′, κ₂″, κ₁, κ₁′) with

        κ₂‴ = 2κ₁κ₂′ − κ₁′κ₂,  κ₁″ = −κ₂²/2.

    The coupling cancels from both equations. Where κ₂ stays above the
    tolerance, the solution is also checked against the decoupled form
    κ₁ = −κ₂² (∫ κ₂‴/κ₂³ dσ + C), with C fixed at the start of that stretch.
    """
    model = ModelSpec(ModelKind.LinearK2, lambda2=lambda2, dimension=4)

    def rhs(sigma: float, y: Array) -> Array:
        k2, dk2, ddk2, k1, dk1 = y
        return np.array([dk2, ddk2, 2 * k1 * dk2 - dk1 * k2, dk1, -0.5 * k2**2])

    def jets(states: Array) -> tuple[Array, Array]:
        k2, dk2, ddk2, k1, dk1 = states.T
        dddk2 = 2 * k1 * dk2 - dk1 * k2
        return (
            np.column_stack([k1, dk1, -0.5 * k2**2, -k2 * dk2]),
            np.column_stack([k2, dk2, ddk2, dddk2]),
        )

    sigma, k1, k2, failure = _run(_Problem(rhs, jets), list(initial), sigma_max, h)
    solution = Solution(model, sigma, k1, k2)
    solution.drift = solution.midpoint_residual()
    if failure is None:
        decoupling = _decoupling_residual(sigma, k1, k2, tolerance)
        if decoupling is not None:
            solution.extras['decoupling_residual'] = decoupling
    return _finish(solution, failure)


def _decoupling_residual(
    sigma: Array, k1: Array, k2: Array, tolerance: float
) -> None | float:
    # The longest run of grid points with κ₂ above tolerance.
    above = k2[:, 0] > tolerance
    best: tuple[int, int] = (0, 0)
    start = None
    for i, flag in enumerate(np.append(above, False)):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            if i - start > best[1] - best[0]:
                best = (start, i)
            start = None
    lo, hi = best
    if hi - lo < 3:
        return None

    s = sigma[lo:hi]
    kappa2, kappa1 = k2[lo:hi, 0], k1[lo:hi, 0]
    integral = cumulative_simpson(k2[lo:hi, 3] / kappa2**3, x=s, initial=0.0)
    constant = -kappa1[0] / kappa2[0] ** 2
    predicted = -(kappa2**2) * (integral + constant)
    return float(np.max(np.abs(predicted - kappa1)))


# --------------------------------------------------------------------------------------


def simulate(
    model: ModelSpec,
    initial: InitialData,
    sigma_max: float = 10.0,
    h: float = 1e-3,
) -> Solution:
    """Solve the curvature dynamics of any model from the given initial data."""
    match model.kind:
        case ModelKind.PseudoArclength:
            return solve_arclength(
                model.alpha, initial.kappa1, model.dimension, sigma_max, h
            )
        case ModelKind.LinearK1 if model.dimension == 3:
            energy = initial.energy
            sign = initial.sign
            if energy is None:
                energy = first_integral_k1_3d_constants(
                    initial.kappa1,
                    initial.dkappa1,
                    model.alpha,
                    model.beta,
                    initial.gamma,
                )
                if initial.dkappa1 != 0:
                    sign = 1 if initial.dkappa1 > 0 else -1
            return solve_k1_3d(
                model.alpha,
                model.beta,
                initial.gamma,
                energy,
                initial.kappa1,
                sign,
                sigma_max,
                h,
            )
        case ModelKind.LinearK1:
            return solve_k1_4d(
                model.alpha,
                model.beta,
                initial.gamma,
                (initial.kappa1, initial.dkappa1, initial.kappa2, initial.dkappa2),
                sigma_max,
                h,
            )
        case ModelKind.LinearK2:
            return solve_k2(
                model.lambda2,
                (
                    initial.kappa2,
                    initial.dkappa2,
                    initial.ddkappa2,
                    initial.kappa1,
                    initial.dkappa1,
                ),
                sigma_max,
                h,
            )
    raise AssertionError(f'unknown model kind {model.kind}')
