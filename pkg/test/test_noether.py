import math

import numpy as np
import pandas as pd
import pytest

from nullfrenet.error import DimensionError, ModelError
from nullfrenet.label import ModelKind
from nullfrenet.minkowski import boost, norm2, rotation
from nullfrenet.models import InitialData, ModelSpec, simulate, solve_k1_4d
from nullfrenet.noether import (
    charges,
    charges_along,
    charges_arclength,
    charges_k1_3d,
    drift_report,
)
from nullfrenet.reconstruct import (
    CurvatureProfile,
    CurveState,
    helix_closed_form,
    integrate,
    standard_state,
)
from nullfrenet.schema import charge_schema, validate


def test_arclength_casimirs() -> None:
    q = charges_arclength(1.0, standard_state(4), -0.5)
    assert q.mass2 == pytest.approx(1.0, abs=1e-15)
    assert q.normalized
    assert abs(q.casimir2 + 0.25) <= 1e-10
    assert abs(abs(q.mass2) * norm2(q.spin) + 0.25) <= 1e-10

    for alpha in (0.5, 2.0):
        q = charges_arclength(alpha, helix_closed_form(-0.5, sigma=1.3), -0.5)
        assert q.mass2 == pytest.approx(alpha**2)
        assert q.casimir2 == pytest.approx(-(alpha**4) / 4)

    q = charges_arclength(1.0, helix_closed_form(-0.5, sigma=2.0, dimension=3), -0.5)
    assert abs(q.mass2 - 1.0) <= 1e-10
    assert abs(q.casimir2 + 1.0) <= 1e-10


def test_casimirs_are_lorentz_invariant() -> None:
    L = boost(0.8, 1, 4) @ rotation(1.1, 1, 3, 4)
    state = helix_closed_form(-0.5, sigma=0.7)
    moved = CurveState(state.sigma, L @ state.X, state.frame.transform(L))

    q = charges_arclength(1.0, state, -0.5)
    r = charges_arclength(1.0, moved, -0.5)
    assert math.isclose(q.mass2, r.mass2, rel_tol=1e-12)
    assert math.isclose(q.casimir2, r.casimir2, rel_tol=1e-10)
    assert np.allclose(L @ q.P, r.P)


def test_massless_charges() -> None:
    q = charges_arclength(1.0, standard_state(4), 0.0)
    assert q.mass2 == pytest.approx(0.0, abs=1e-15)
    assert not q.normalized
    assert np.all(np.isfinite(q.spin))


def test_arclength_conservation() -> None:
    profile = CurvatureProfile.constant(-0.5, 0.0, 4, 10.0)
    traj = integrate(profile, h=1e-3)
    model = ModelSpec(alpha=1.0)

    log = charges_along(traj, model)
    validate(log, charge_schema(4))
    assert len(log) == len(traj)
    assert np.max(np.abs(log['mass2'] - 1.0)) <= 1e-9

    report = drift_report(traj, model, 1e-6, log)
    assert report.ok
    assert report.charges['casimir2']['initial'] == pytest.approx(-0.25)


def test_k1_3d_identification() -> None:
    model = ModelSpec(ModelKind.LinearK1, 0.0, 1.0, dimension=3)
    solution = simulate(
        model, InitialData(kappa1=-1.5, dkappa1=0.4, gamma=-3.5), 3.0, 1e-3
    )
    traj = integrate(solution.profile, standard_state(3), h=1e-3)
    expected = solution.constants

    for index in (0, 1000, 3000):
        state = traj.state(index)
        k1, k2 = traj.profile.jets(state.sigma, 2)
        q = charges(model, state, k1.terms, k2.terms)
        assert q.constants is not None
        assert abs(q.constants.gamma3 - expected.gamma3) <= 1e-7
        assert abs(q.constants.E3 - expected.E3) <= 1e-7

    assert drift_report(traj, model).ok

    with pytest.raises(DimensionError):
        charges_k1_3d(0.0, 1.0, standard_state(4), -1.5, 0.4, 0.0)


def test_k1_3d_identification_with_alpha() -> None:
    # κ₁ at rest at −1 for α = 1, β = −1: γ₃ = ½, E₃ = ½
    model = ModelSpec(ModelKind.LinearK1, 1.0, -1.0, dimension=3)
    state = helix_closed_form(-1.0, sigma=0.4, dimension=3)
    q = charges(model, state, [-1, 0, 0], [0])
    assert q.constants is not None
    assert q.constants.gamma3 == pytest.approx(0.5)
    assert q.constants.E3 == pytest.approx(0.5)


def test_k1_4d_identification() -> None:
    model = ModelSpec(ModelKind.LinearK1, 0.0, 1.0, dimension=4)
    solution = solve_k1_4d(0.0, 1.0, -3.5, (-2.0, 0.0, 0.3, 0.0), 3.0)
    traj = integrate(solution.profile, h=1e-3)

    for index in (0, 1500, 3000):
        state = traj.state(index)
        k1, k2 = traj.profile.jets(state.sigma, 2)
        q = charges(model, state, k1.terms, k2.terms)
        assert q.constants is not None
        assert abs(q.constants.gamma4 + 3.5) <= 1e-7
        assert abs(q.constants.E4 - solution.constants.E4) <= 1e-7

    report = drift_report(traj, model)
    assert report.ok, report.flagged


def test_k2_has_no_charges() -> None:
    model = ModelSpec(ModelKind.LinearK2, lambda2=1.0)
    with pytest.raises(ModelError):
        charges(model, standard_state(4), [0, 0, 0], [1, 0])


def test_drift_flags() -> None:
    log = pd.DataFrame(
        {
            'sigma': [0.0, 1.0, 2.0],
            'mass2': [1.0, 1.0 + 1e-9, 1.0 - 1e-9],
            'casimir2': [100.0, 100.0 + 2e-4, 100.0],
        }
    )
    report = drift_report(None, ModelSpec(), 1e-6, log)  # type: ignore[arg-type]
    assert report.flagged == ['casimir2']
    assert not report.ok
    assert report.max_drift == pytest.approx(2e-4)
    assert report.to_dict()['ok'] is False
