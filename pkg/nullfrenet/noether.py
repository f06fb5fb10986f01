"""
Conserved charges of the geometric actions.

Poincaré invariance gives every action a conserved linear momentum P and
angular momentum M^μν. Both are computed from the frame, the curvatures and
their derivatives, never by differentiating X again. The Casimirs are M² = P·P
and, for spin, |M²|S² with the Pauli-Lubanski vector S in 3+1 and J·P in 2+1.
"""
from __future__ import annotations
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import konsole
import numpy as np
from numpy.typing import NDArray
import pandas as pd

from .error import DimensionError, ModelError
from .label import ModelKind
from .minkowski import (
    BiVector,
    dot,
    FourVector,
    levi_civita_contract4,
    levi_civita_dual3,
    norm2,
    wedge,
)
from .models import FirstIntegralConstants, ModelSpec
from .reconstruct import CurveState, Trajectory
from .schema import charge_schema, coerce, vector_columns, bivector_columns


__all__ = (
    'ChargeSet',
    'charges',
    'charges_along',
    'charges_arclength',
    'charges_k1_3d',
    'charges_k1_4d',
    'drift_report',
    'DriftReport',
    'identify_constants_3d',
    'identify_energy_4d',
)


class ChargeSet(NamedTuple):
    """
    The charges at one point. `spin` is S in 3+1 and J in 2+1. When the mass
    vanishes, S cannot be normalized and `spin` holds ½ε P M instead, with
    `normalized` false. `casimir2` is |M²|S² in 3+1 and J·P in 2+1.
    """

    P: FourVector
    M: BiVector
    mass2: float
    spin: FourVector
    casimir2: float
    normalized: bool = True
    constants: None | FirstIntegralConstants = None


def _charge_set(
    P: FourVector, M: BiVector, constants: None | FirstIntegralConstants = None
) -> ChargeSet:
    mass2 = dot(P, P)
    if len(P) == 3:
        J = levi_civita_dual3(M)
        return ChargeSet(P, M, mass2, J, dot(J, P), True, constants)

    W = levi_civita_contract4(P, M)
    casimir2 = 0.25 * norm2(W)
    if abs(mass2) > 1e-12:
        return ChargeSet(
            P, M, mass2, W / (2 * np.sqrt(abs(mass2))), casimir2, True, constants
        )
    konsole.warning(
        'Skipping Pauli-Lubanski normalization for vanishing mass',
        detail={'mass2': mass2},
    )
    return ChargeSet(P, M, mass2, 0.5 * W, casimir2, False, constants)


def charges_arclength(alpha: float, state: CurveState, kappa1: float) -> ChargeSet:
    """Charges of the pseudo-arclength action, with M² = −2α²κ₁."""
    f = state.frame
    P = alpha * (f.e_minus - kappa1 * f.e_plus)
    M = wedge(P, state.X) + alpha * wedge(f.e_plus, f.e1)
    return _charge_set(P, M)


def _linear_k1(
    alpha: float,
    beta: float,
    state: CurveState,
    kappa1: float,
    dkappa1: float,
    ddkappa1: float,
    kappa2: float = 0.0,
    dkappa2: float = 0.0,
) -> tuple[FourVector, BiVector]:
    if beta == 0:
        raise ModelError('LinearK1 charges need a nonzero β')
    f = state.frame
    P = (
        (-beta * ddkappa1 + beta * kappa1**2 - alpha * kappa1) * f.e_plus
        + beta * dkappa1 * f.e1
        + (alpha - beta * kappa1) * f.e_minus
    )
    if f.e2 is not None:
        P = P + 2 * beta * dkappa2 * f.e2
    M = (
        wedge(P, state.X)
        + 2 * beta * wedge(f.e_minus, f.e1)
        + (alpha + beta * kappa1) * wedge(f.e_plus, f.e1)
    )
    if f.e2 is not None:
        M = M + 2 * beta * kappa2 * wedge(f.e_plus, f.e2)
    return P, M


def charges_k1_3d(
    alpha: float,
    beta: float,
    state: CurveState,
    kappa1: float,
    dkappa1: float,
    ddkappa1: float,
) -> ChargeSet:
    """
    Charges of LinearK1 in 2+1, together with the constants γ₃ and E₃ of the
    first integral as identified from the two Casimirs.
    """
    if state.frame.dimension != 3:
        raise DimensionError('charges_k1_3d needs a 2+1 state')
    P, M = _linear_k1(alpha, beta, state, kappa1, dkappa1, ddkappa1)
    charges = _charge_set(P, M)
    return charges._replace(constants=identify_constants_3d(charges, alpha, beta))


def charges_k1_4d(
    alpha: float,
    beta: float,
    state: CurveState,
    kappa1: float,
    dkappa1: float,
    ddkappa1: float,
    kappa2: float,
    dkappa2: float,
) -> ChargeSet:
    """
    Charges of LinearK1 in 3+1, together with γ₄ from the first integral and
    the energy E₄ identified from the mass.
    """
    if state.frame.dimension != 4:
        raise DimensionError('charges_k1_4d needs a 3+1 state')
    P, M = _linear_k1(
        alpha, beta, state, kappa1, dkappa1, ddkappa1, kappa2, dkappa2
    )
    gamma4 = (
        beta * ddkappa1
        - 1.5 * beta * kappa1**2
        - beta * kappa2**2
        + alpha * kappa1
    )
    charges = _charge_set(P, M)
    energy4 = identify_energy_4d(charges, alpha, beta, gamma4)
    return charges._replace(
        constants=FirstIntegralConstants(gamma4=gamma4, E4=energy4)
    )


def identify_constants_3d(
    charges: ChargeSet, alpha: float, beta: float
) -> FirstIntegralConstants:
    """
    γ₃ = −(S + α²)/(2β) and E₃ = (α(S + α²) − βM²)/(2β²), with S = J·P.
    Equivalently, 2βE₃ = −M² − 2αγ₃.
    """
    if beta == 0:
        raise ModelError('identifying the constants needs a nonzero β')
    S = charges.casimir2
    gamma3 = -(S + alpha**2) / (2 * beta)
    energy3 = (alpha * (S + alpha**2) - beta * charges.mass2) / (2 * beta**2)
    return FirstIntegralConstants(gamma3=gamma3, E3=energy3)


def identify_energy_4d(
    charges: ChargeSet, alpha: float, beta: float, gamma4: float
) -> float:
    """E₄ from 2βE₄ = −M² − 2αγ₄."""
    if beta == 0:
        raise ModelError('identifying the energy needs a nonzero β')
    return (-charges.mass2 - 2 * alpha * gamma4) / (2 * beta)


# ======================================================================================


def charges(
    model: ModelSpec, state: CurveState, kappa1: NDArray[np.float64], kappa2: Any
) -> ChargeSet:
    """
    The charges of a model at a state, given the curvature jets κ₁, κ₁′, κ₁″
    and κ₂, κ₂′.
    """
    if not model.kind.has_charges:
        raise ModelError(f'{model.kind} has no charge formulas')
    match model.kind:
        case ModelKind.PseudoArclength:
            return charges_arclength(model.alpha, state, float(kappa1[0]))
        case ModelKind.LinearK1 if state.frame.dimension == 3:
            return charges_k1_3d(
                model.alpha, model.beta, state, *(float(k) for k in kappa1[:3])
            )
        case ModelKind.LinearK1:
            return charges_k1_4d(
                model.alpha,
                model.beta,
                state,
                *(float(k) for k in kappa1[:3]),
                float(kappa2[0]),
                float(kappa2[1]),
            )
    raise AssertionError(f'unknown model kind {model.kind}')


def charges_along(traj: Trajectory, model: ModelSpec) -> pd.DataFrame:
    """The charge log of a trajectory, one row per state."""
    if traj.profile is None:
        raise ModelError('trajectory does not carry its curvature profile')
    n = traj.dimension
    pairs = bivector_columns(n)
    rows = []
    for state in traj.states():
        k1, k2 = traj.profile.jets(state.sigma, 2)
        q = charges(model, state, k1.terms, k2.terms)
        rows.append(
            [
                state.sigma,
                *q.P,
                *(q.M[i, j] for i, j, _ in pairs),
                q.mass2,
                q.casimir2,
            ]
        )
    columns = ['sigma', *vector_columns('p', n), *(c for *_, c in pairs)]
    columns += ['mass2', 'casimir2']
    return coerce(pd.DataFrame(rows, columns=columns), charge_schema(n))


# ======================================================================================


@dataclass
class DriftReport:
    """
    Per-charge drift |Q(σ) − Q(0)| along a trajectory. A charge is flagged when
    its drift exceeds the threshold, scaled by |Q(0)| for charges above 1.
    """

    threshold: float
    charges: dict[str, dict[str, float]] = field(default_factory=dict)
    flagged: list[str] = field(default_factory=list)

    @property
    def max_drift(self) -> float:
        return max((c['max_abs_drift'] for c in self.charges.values()), default=0.0)

    @property
    def ok(self) -> bool:
        return not self.flagged

    def to_dict(self) -> dict[str, object]:
        return {
            'threshold': self.threshold,
            'charges': self.charges,
            'flagged': self.flagged,
            'max_drift': self.max_drift,
            'ok': self.ok,
        }


def drift_report(
    traj: Trajectory,
    model: ModelSpec,
    threshold: float = 1e-6,
    log: None | pd.DataFrame = None,
) -> DriftReport:
    """Monitor conservation of every charge in the charge log."""
    frame = charges_along(traj, model) if log is None else log
    report = DriftReport(threshold)
    for column in frame.columns:
        if column == 'sigma':
            continue
        values = frame[column].to_numpy()
        initial = float(values[0])
        drift = float(np.max(np.abs(values - initial)))
        report.charges[column] = {
            'initial': initial,
            'max_abs_drift': drift,
            'relative_drift': drift / abs(initial) if initial != 0 else drift,
        }
        if drift > threshold * max(1.0, abs(initial)):
            report.flagged.append(column)
    if report.flagged:
        konsole.warning(
            'Charges drift beyond threshold',
            detail={'flagged': report.flagged, 'threshold': threshold},
        )
    return report
