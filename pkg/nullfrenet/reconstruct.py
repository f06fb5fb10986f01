"""
Null curves from their curvatures.

The Frenet-Serret system for the frame rows F = (e₊, e₁, e₋, e₂) reads F′ = A F
with

    e₊′ = e₁,  e₁′ = κ₁ e₊ + e₋,  e₋′ = κ₁ e₁ + κ₂ e₂,  e₂′ = κ₂ e₊,

and the curve follows from X′ = e₊. Integration uses the classical fourth-order
Runge-Kutta method at a fixed step. Every so often the frame is projected back
onto the Gram relations, since the method conserves them only to its order.
"""
from __future__ import annotations
from abc import abstractmethod
from collections.abc import Callable, Iterator
from dataclasses import dataclass, field
from math import comb
from typing import NamedTuple

import konsole
import numpy as np
from numpy.typing import ArrayLike, NDArray
import pandas as pd
from scipy.linalg import expm

from .curve import CurvaturePair, CurveSource
from .error import BlowUpError, DimensionError, FrameExtractionError, RestorationError
from .jet import ConstantField, Field, Jet, SplineField, ZERO
from .minkowski import dot, FourVector, MINUS, NullFrame, ONE, PLUS, standard_frame, TWO
from .schema import coerce, trajectory_schema, vector_columns


__all__ = (
    'CurvatureProfile',
    'CurveState',
    'FrameCurve',
    'FrenetCurve',
    'fs_matrix',
    'grid_steps',
    'helix_closed_form',
    'helix_trajectory',
    'HelixCurve',
    'integrate',
    'restore_frame',
    'rk4',
    'rk4_step',
    'standard_state',
    'Trajectory',
)


Vector = NDArray[np.float64]
RightHandSide = Callable[[float, Vector], Vector]


# ======================================================================================
# Profiles and states


@dataclass(frozen=True)
class CurvatureProfile:
    """
    The curvatures as fields of σ on [0, σ_max]. By default κ₂ must not be
    negative. Solver outputs may set `signed` to admit negative κ₂, which
    describes the same curve with e₂ reversed.
    """

    kappa1: Field
    kappa2: Field = ZERO
    dimension: int = 4
    sigma_max: float = 10.0
    signed: bool = False

    def __post_init__(self) -> None:
        if self.dimension not in (3, 4):
            raise DimensionError(f'dimension must be 3 or 4, not {self.dimension}')
        if self.dimension == 3 and not (
            isinstance(self.kappa2, ConstantField) and self.kappa2.value == 0
        ):
            raise DimensionError('second curvature must vanish in 2+1 dimensions')
        if not self.sigma_max > 0:
            raise ValueError(f'σ_max {self.sigma_max} is not positive')

    @classmethod
    def constant(
        cls,
        kappa1: float,
        kappa2: float = 0.0,
        dimension: int = 4,
        sigma_max: float = 10.0,
    ) -> CurvatureProfile:
        k2: Field = ZERO if kappa2 == 0 else ConstantField(kappa2)
        return cls(ConstantField(kappa1), k2, dimension, sigma_max)

    @classmethod
    def from_samples(
        cls,
        sigma: ArrayLike,
        kappa1: ArrayLike,
        kappa2: None | ArrayLike = None,
        dimension: int = 4,
    ) -> CurvatureProfile:
        """Cubic interpolation of curvatures sampled on a uniform grid."""
        s = np.asarray(sigma, dtype=np.float64)
        if len(s) < 4:
            raise ValueError(f'a profile needs at least 4 samples, not {len(s)}')
        steps = np.diff(s)
        if s[0] != 0 or np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps[0]:
            raise ValueError('profile samples must start at σ=0 with uniform spacing')
        k2: Field = ZERO
        if kappa2 is not None:
            values = np.asarray(kappa2, dtype=np.float64)
            if np.any(values < 0):
                raise ValueError('second curvature has negative samples')
            if np.any(values != 0):
                k2 = SplineField.from_samples(s, values)
        return cls(SplineField.from_samples(s, kappa1), k2, dimension, float(s[-1]))

    def at(self, sigma: float) -> CurvaturePair:
        k2 = self.kappa2(sigma)
        if k2 < 0 and not self.signed:
            raise ValueError(f'second curvature {k2} at σ={sigma} is negative')
        return CurvaturePair(self.kappa1(sigma), k2)

    def jets(self, sigma: float, order: int) -> tuple[Jet, Jet]:
        return self.kappa1.jet(sigma, order), self.kappa2.jet(sigma, order)


class CurveState(NamedTuple):
    sigma: float
    X: FourVector
    frame: NullFrame


def standard_state(dimension: int = 4) -> CurveState:
    return CurveState(0.0, np.zeros(dimension), standard_frame(dimension))


# ======================================================================================
# The connection


def fs_matrix(
    kappa1: float, kappa2: float = 0.0, dimension: int = 4, *, constant: bool = True
) -> NDArray[np.float64]:
    """
    The connection A with F′ = A F for frame rows (e₊, e₁, e₋[, e₂]). Without
    the constant entries, the result is the σ-derivative of A for curvature
    derivatives passed in place of the curvatures.
    """
    if dimension not in (3, 4):
        raise DimensionError(f'dimension must be 3 or 4, not {dimension}')
    if dimension == 3 and kappa2 != 0:
        raise DimensionError('second curvature must vanish in 2+1 dimensions')

    A = np.zeros((dimension, dimension))
    if constant:
        A[PLUS, ONE] = 1.0
        A[ONE, MINUS] = 1.0
    A[ONE, PLUS] = kappa1
    A[MINUS, ONE] = kappa1
    if dimension == 4:
        A[MINUS, TWO] = kappa2
        A[TWO, PLUS] = kappa2
    return A


# ======================================================================================
# Fourth-order Runge-Kutta


RK4_A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0],
        [0.5, 0.0, 0.0, 0.0],
        [0.0, 0.5, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
    ]
)
RK4_B = np.array([1 / 6, 1 / 3, 1 / 3, 1 / 6])
RK4_C = np.array([0.0, 0.5, 0.5, 1.0])


def rk4_step(rhs: RightHandSide, sigma: float, y: Vector, h: float) -> Vector:
    stages: list[Vector] = []
    for a, c in zip(RK4_A, RK4_C):
        increment = sum((aj * k for aj, k in zip(a, stages) if aj), np.zeros_like(y))
        stages.append(rhs(sigma + c * h, y + h * increment))
    return y + h * sum(b * k for b, k in zip(RK4_B, stages))


def grid_steps(span: float, h: float) -> int:
    """The number of steps h that cover the span exactly."""
    if not h > 0:
        raise ValueError(f'step {h} is not positive')
    steps = int(round(span / h))
    if steps < 1 or abs(steps * h - span) > 1e-9 * max(1.0, abs(span)):
        raise ValueError(f'step {h} does not divide the span {span}')
    return steps


def rk4(
    rhs: RightHandSide, y0: ArrayLike, h: float, steps: int, sigma0: float = 0.0
) -> tuple[Vector, NDArray[np.float64]]:
    """
    Integrate y′ = rhs(σ, y) for the given number of fixed steps. Return the σ
    grid and the states, one row per grid point. A non-finite state raises a
    `BlowUpError` whose partial result is the (σ, states) pair up to the last
    good step.
    """
    if not h > 0:
        raise ValueError(f'step {h} is not positive')
    y = np.asarray(y0, dtype=np.float64)
    sigmas = sigma0 + h * np.arange(steps + 1)
    states = np.empty((steps + 1, len(y)))
    states[0] = y
    for k in range(steps):
        y = rk4_step(rhs, float(sigmas[k]), y, h)
        if not np.all(np.isfinite(y)):
            raise BlowUpError(
                f'integration blew up after σ={sigmas[k]:.6g}',
                sigma=float(sigmas[k]),
                partial=(sigmas[: k + 1], states[: k + 1]),
            )
        states[k + 1] = y
    return sigmas, states


def _frenet_rhs(profile: CurvatureProfile) -> RightHandSide:
    n = profile.dimension

    def rhs(sigma: float, y: Vector) -> Vector:
        F = y[n:].reshape(n, n)
        A = fs_matrix(*profile.at(sigma), n)
        return np.concatenate([F[PLUS], (A @ F).ravel()])

    return rhs


def _pack(state: CurveState) -> Vector:
    return np.concatenate([state.X, state.frame.rows.ravel()])


def _unpack(sigma: float, y: Vector, n: int) -> CurveState:
    return CurveState(sigma, y[:n].copy(), NullFrame(y[n:].reshape(n, n).copy()))


# ======================================================================================
# Frame restoration


def _orthogonal_to_null_pair(
    v: FourVector, e_plus: FourVector, e_minus: FourVector
) -> FourVector:
    # Remove the span of e₊ (null) and e₋ (only approximately null) from v.
    b = dot(v, e_plus) / dot(e_minus, e_plus)
    a = (dot(v, e_minus) - b * dot(e_minus, e_minus)) / dot(e_plus, e_minus)
    return v - a * e_plus - b * e_minus


def _unit_spacelike(v: FourVector, name: str) -> FourVector:
    n2 = dot(v, v)
    if not n2 < 0:
        raise RestorationError(f'{name} is not spacelike after projection')
    return v / np.sqrt(-n2)


def restore_frame(frame: NullFrame, limit: float = 0.1) -> NullFrame:
    """
    Project a slightly drifted frame back onto the Gram relations: make e₊
    null, make e₁ and then e₂ unit spacelike and orthogonal to everything
    before them, and finally solve for the null e₋ paired with e₊.
    """
    residual = frame.residual()
    if not residual <= limit:
        raise RestorationError(f'frame residual {residual:.3e} exceeds {limit}')

    t, spatial = frame.e_plus[0], frame.e_plus[1:]
    length = float(np.linalg.norm(spatial))
    if t == 0 or length == 0:
        raise RestorationError('e₊ has degenerated')
    e_plus = np.concatenate([[t], spatial * (abs(t) / length)])
    old_minus = frame.e_minus
    if dot(e_plus, old_minus) == 0:
        raise RestorationError('e₊ and e₋ have become orthogonal')

    e1 = _unit_spacelike(_orthogonal_to_null_pair(frame.e1, e_plus, old_minus), 'e₁')
    e2 = None
    if frame.dimension == 4:
        v = _orthogonal_to_null_pair(frame.rows[TWO], e_plus, old_minus)
        e2 = _unit_spacelike(v + dot(v, e1) * e1, 'e₂')

    w = old_minus + dot(old_minus, e1) * e1
    if e2 is not None:
        w = w + dot(w, e2) * e2
    pairing = dot(w, e_plus)
    if pairing == 0:
        raise RestorationError('cannot pair e₋ with e₊')
    w = w / pairing
    e_minus = w - 0.5 * dot(w, w) * e_plus

    return NullFrame.of(e_plus, e1, e_minus, e2)


# ======================================================================================
# Trajectories


@dataclass
class Trajectory:
    """States on a uniform σ grid, stored as arrays."""

    sigma: NDArray[np.float64]
    X: NDArray[np.float64]
    frames: NDArray[np.float64]
    kappa: NDArray[np.float64]
    residual: NDArray[np.float64]
    h: float
    renorm_every: int = 0
    max_residual: float = 0.0
    profile: None | CurvatureProfile = field(default=None, repr=False)

    @property
    def dimension(self) -> int:
        return int(self.X.shape[1])

    def __len__(self) -> int:
        return len(self.sigma)

    def state(self, index: int) -> CurveState:
        return CurveState(
            float(self.sigma[index]), self.X[index], NullFrame(self.frames[index])
        )

    def states(self) -> Iterator[CurveState]:
        for index in range(len(self)):
            yield self.state(index)

    @property
    def endpoint(self) -> CurveState:
        return self.state(len(self) - 1)

    def to_frame(self) -> pd.DataFrame:
        n = self.dimension
        data: dict[str, NDArray[np.float64]] = {'sigma': self.sigma}
        data.update(zip(vector_columns('x', n), self.X.T))
        names = ['e_plus', 'e1', 'e_minus', 'e2'][:n]
        for name, row in zip(names, (PLUS, ONE, MINUS, TWO)):
            data.update(zip(vector_columns(name, n), self.frames[:, row, :].T))
        data['kappa1'] = self.kappa[:, 0]
        data['kappa2'] = self.kappa[:, 1]
        data['gram_residual'] = self.residual
        return coerce(pd.DataFrame(data), trajectory_schema(n))


class _Recorder:
    def __init__(self, n: int, steps: int) -> None:
        self.sigma = np.empty(steps + 1)
        self.X = np.empty((steps + 1, n))
        self.frames = np.empty((steps + 1, n, n))
        self.kappa = np.empty((steps + 1, 2))
        self.residual = np.empty(steps + 1)
        self.count = 0

    def record(self, state: CurveState, pair: CurvaturePair) -> None:
        i = self.count
        self.sigma[i] = state.sigma
        self.X[i] = state.X
        self.frames[i] = state.frame.rows
        self.kappa[i] = pair
        self.residual[i] = state.frame.residual()
        self.count += 1

    def trajectory(
        self,
        h: float,
        renorm_every: int,
        max_residual: float,
        profile: CurvatureProfile,
    ) -> Trajectory:
        k = self.count
        return Trajectory(
            self.sigma[:k],
            self.X[:k],
            self.frames[:k],
            self.kappa[:k],
            self.residual[:k],
            h,
            renorm_every,
            max_residual,
            profile,
        )


def integrate(
    profile: CurvatureProfile,
    init: None | CurveState = None,
    h: float = 1e-3,
    renorm_every: int = 100,
    sigma_max: None | float = None,
) -> Trajectory:
    """
    Integrate the Frenet-Serret system together with X′ = e₊. The frame is
    restored every `renorm_every` steps; zero disables restoration. The
    trajectory's maximal residual is the largest one observed before any
    restoration.
    """
    n = profile.dimension
    state = standard_state(n) if init is None else init
    if state.frame.dimension != n or len(state.X) != n:
        raise DimensionError(f'initial state does not have dimension {n}')
    residual = state.frame.residual()
    if residual > 1e-12:
        raise FrameExtractionError(
            f'initial frame violates the Gram relations by {residual:.3e}',
            sigma=state.sigma,
        )

    span = profile.sigma_max if sigma_max is None else sigma_max
    steps = grid_steps(span, h)
    rhs = _frenet_rhs(profile)
    recorder = _Recorder(n, steps)
    recorder.record(state, profile.at(state.sigma))
    max_residual = recorder.residual[0]

    y = _pack(state)
    for k in range(1, steps + 1):
        sigma = state.sigma + k * h
        y = rk4_step(rhs, sigma - h, y, h)
        if not np.all(np.isfinite(y)):
            last = state.sigma + (k - 1) * h
            raise BlowUpError(
                f'frame transport blew up after σ={last:.6g}',
                sigma=last,
                partial=recorder.trajectory(h, renorm_every, max_residual, profile),
            )

        current = _unpack(sigma, y, n)
        drift = current.frame.residual()
        max_residual = max(max_residual, drift)
        if renorm_every and k % renorm_every == 0:
            if drift > 1e-6:
                konsole.warning(
                    'Restoring frame with large residual',
                    detail={'sigma': sigma, 'residual': drift},
                )
            current = CurveState(sigma, current.X, restore_frame(current.frame))
            y = _pack(current)
        recorder.record(current, profile.at(sigma))

    return recorder.trajectory(h, renorm_every, max_residual, profile)


# ======================================================================================
# Helices


def _transport_matrix(pair: CurvaturePair, dimension: int) -> NDArray[np.float64]:
    # The generator acting on the stacked rows (X, e₊, e₁, e₋[, e₂]).
    B = np.zeros((dimension + 1, dimension + 1))
    B[0, 1 + PLUS] = 1.0
    B[1:, 1:] = fs_matrix(pair.kappa1, pair.kappa2, dimension)
    return B


def helix_closed_form(
    kappa1: float,
    kappa2: float = 0.0,
    init: None | CurveState = None,
    sigma: float = 0.0,
    dimension: None | int = None,
) -> CurveState:
    """The state at σ of the null helix with constant curvatures."""
    n = dimension or (4 if init is None else init.frame.dimension)
    state = standard_state(n) if init is None else init
    pair = CurvaturePair(kappa1, kappa2)
    Y = np.vstack([state.X, state.frame.rows])
    Y = expm((sigma - state.sigma) * _transport_matrix(pair, n)) @ Y
    return CurveState(sigma, Y[0], NullFrame(Y[1:]))


def helix_trajectory(
    kappa1: float,
    kappa2: float = 0.0,
    init: None | CurveState = None,
    h: float = 1e-3,
    sigma_max: float = 10.0,
    dimension: int = 4,
) -> Trajectory:
    """A trajectory of exact helix states on a uniform grid."""
    state = standard_state(dimension) if init is None else init
    n = state.frame.dimension
    profile = CurvatureProfile.constant(kappa1, kappa2, n, sigma_max)
    steps = grid_steps(sigma_max, h)
    recorder = _Recorder(n, steps)
    for k in range(steps + 1):
        recorder.record(
            helix_closed_form(kappa1, kappa2, state, state.sigma + k * h),
            CurvaturePair(kappa1, kappa2),
        )
    return recorder.trajectory(h, 0, float(np.max(recorder.residual)), profile)


# ======================================================================================
# Curves carried with their frames


class FrameCurve(CurveSource):
    """
    A σ-parametrized curve that knows its frame and curvatures, so that
    derivatives follow from the Frenet-Serret recursion

        F⁽ᵐ⁺¹⁾ = Σⱼ C(m, j) A⁽ʲ⁾ F⁽ᵐ⁻ʲ⁾,  X⁽ᵏ⁾ = e₊⁽ᵏ⁻¹⁾.
    """

    max_order = 7
    profile: CurvatureProfile

    @abstractmethod
    def state_at(self, sigma: float) -> CurveState:
        ...

    def frame_jet(self, sigma: float, order: int) -> NDArray[np.float64]:
        """F, F′, …, F⁽ᵒʳᵈᵉʳ⁾ stacked along the first axis."""
        n = self.dimension
        k1, k2 = self.profile.jets(sigma, max(order - 1, 0))
        connection = [fs_matrix(k1[0], k2[0], n)] + [
            fs_matrix(k1[j], k2[j], n, constant=False) for j in range(1, order)
        ]
        jets = [self.state_at(sigma).frame.rows]
        for m in range(order):
            jets.append(
                sum(comb(m, j) * connection[j] @ jets[m - j] for j in range(m + 1))
            )
        return np.array(jets)

    def _derivatives(self, lam: float, order: int) -> NDArray[np.float64]:
        X = self.state_at(lam).X
        if order == 0:
            return np.array([X])
        frames = self.frame_jet(lam, order - 1)
        return np.vstack([X, frames[:, PLUS, :]])


class HelixCurve(FrameCurve):
    """The null helix with constant curvatures, evaluated in closed form."""

    max_order = 12

    def __init__(
        self,
        kappa1: float,
        kappa2: float = 0.0,
        init: None | CurveState = None,
        sigma_max: float = 10.0,
        dimension: int = 4,
    ) -> None:
        self.init = standard_state(dimension) if init is None else init
        self.dimension = self.init.frame.dimension
        self.pair = CurvaturePair.of(kappa1, kappa2)
        self.profile = CurvatureProfile.constant(
            kappa1, kappa2, self.dimension, sigma_max
        )
        self.domain = (self.init.sigma, self.init.sigma + sigma_max)

    def state_at(self, sigma: float) -> CurveState:
        return helix_closed_form(*self.pair, self.init, sigma)


class FrenetCurve(FrameCurve):
    """
    The curve generated by a curvature profile. States between grid points
    come from one partial Runge-Kutta step off the nearest grid point below.
    """

    def __init__(
        self,
        profile: CurvatureProfile,
        init: None | CurveState = None,
        h: float = 1e-3,
        renorm_every: int = 100,
    ) -> None:
        self.profile = profile
        self.dimension = profile.dimension
        self.trajectory = integrate(profile, init, h, renorm_every)
        start = float(self.trajectory.sigma[0])
        self.domain = (start, float(self.trajectory.sigma[-1]))
        self._rhs = _frenet_rhs(profile)

    def state_at(self, sigma: float) -> CurveState:
        traj = self.trajectory
        steps = np.floor((sigma - self.domain[0]) / traj.h)
        index = int(np.clip(steps, 0, len(traj) - 1))
        base = traj.state(index)
        offset = sigma - base.sigma
        if abs(offset) <= 1e-15 * max(1.0, abs(sigma)):
            return base
        y = rk4_step(self._rhs, base.sigma, _pack(base), offset)
        return _unpack(sigma, y, self.dimension)
