import numpy as np
import pytest
from scipy.integrate import quad

from nullfrenet.curve import local_frame
from nullfrenet.error import BoundaryTermError, DimensionError
from nullfrenet.jet import PolynomialField, WindowField, ZERO
from nullfrenet.label import Matching, ModelKind
from nullfrenet.minkowski import dot, standard_frame
from nullfrenet.models import (
    euler_lagrange,
    ModelSpec,
    solve_k1_3d,
    solve_k1_4d,
    solve_k2,
)
from nullfrenet.reconstruct import CurvatureProfile, FrenetCurve, HelixCurve
from nullfrenet.variation import (
    DeformationField,
    DeformedCurve,
    delta_e_1,
    delta_e_plus,
    delta_kappa1,
    delta_kappa2,
    fd_check,
    first_variation_action,
    omega,
    ORDER_SLACK,
)


FLAT = CurvatureProfile.constant(0.0, 0.0, 4, 2.0)
BUMP = WindowField(0.2, 1.8, (1.0, 0.5))
NARROW = WindowField(0.4, 1.6, (0.5,))


def monomial(power: int, scale: float = 1.0) -> PolynomialField:
    return PolynomialField([0.0] * power + [scale])


def test_formulas_on_flat_profile() -> None:
    assert omega(DeformationField(monomial(3)), FLAT, 0.7) == pytest.approx(-3.0)
    assert delta_kappa1(DeformationField(monomial(5)), FLAT, 0.7) == pytest.approx(60)

    twist = DeformationField(monomial(0, 0.0), monomial(4))
    assert delta_kappa2(twist, FLAT, 0.7) == pytest.approx(24)

    frame = standard_frame(4)
    bend = DeformationField(monomial(2, 0.5))
    assert np.allclose(delta_e_1(bend, FLAT, frame, 0.3), -frame.e_minus)
    assert np.allclose(delta_e_plus(bend, FLAT, frame, 0.3), -frame.e1)


def test_formulas_are_linear() -> None:
    profile = CurvatureProfile(
        PolynomialField([-1.0, 0.3]), PolynomialField([1.0, 0.2])
    )
    e1, e2 = PolynomialField([0.0, 1.0, 0.0, 2.0]), PolynomialField([1.0, 0.0, -1.0])
    f1, f2 = PolynomialField([0.5, 0.5]), PolynomialField([0.0, 0.0, 0.0, 1.0])
    d1, d2 = DeformationField(e1, f1), DeformationField(e2, f2)
    both = DeformationField(e1 * 2.0 + e2, f1 * 2.0 + f2)

    for formula in (delta_kappa1, delta_kappa2, omega):
        expected = 2 * formula(d1, profile, 0.6) + formula(d2, profile, 0.6)
        assert formula(both, profile, 0.6) == pytest.approx(expected)

    frame = HelixCurve(-1.0, 1.0).state_at(0.6).frame
    for vector in (delta_e_plus, delta_e_1):
        expected = 2 * vector(d1, profile, frame, 0.6) + vector(
            d2, profile, frame, 0.6
        )
        assert np.allclose(vector(both, profile, frame, 0.6), expected)

    # δe₊ stays orthogonal to e₊
    assert abs(dot(delta_e_plus(both, profile, frame, 0.6), frame.e_plus)) < 1e-12


def test_deformation_field() -> None:
    d = DeformationField(BUMP, NARROW)
    assert d.support == (0.2, 1.8)
    assert d.eps_1(1.0) == -BUMP.derivative(1.0, 1)
    assert DeformationField(monomial(2)).support is None

    with pytest.raises(DimensionError):
        DeformationField(BUMP, NARROW, dimension=3)
    planar = CurvatureProfile.constant(-1.0, 0.0, 3)
    with pytest.raises(DimensionError):
        delta_kappa2(DeformationField(BUMP, dimension=3), planar, 1.0)

    grid = np.linspace(0.0, 2.0, 201)
    sampled = DeformationField.from_samples(0.0, 0.01, [BUMP(s) for s in grid])
    assert sampled.eps_minus(1.0) == pytest.approx(BUMP(1.0))
    assert sampled.eps_1(1.0) == pytest.approx(-BUMP.derivative(1.0, 1), rel=1e-4)


def test_boundary_terms() -> None:
    helix = HelixCurve(-0.5, 0.0, sigma_max=2.0)
    loose = DeformationField(monomial(2))
    with pytest.raises(BoundaryTermError):
        first_variation_action(ModelSpec(), helix.profile, loose, (0.0, 2.0))


def test_stationarity() -> None:
    rng = np.random.default_rng(11)
    cases = [
        (ModelSpec(alpha=1.0), HelixCurve(-0.5, 0.0, sigma_max=3.0)),
        (
            ModelSpec(ModelKind.LinearK1, 1.0, -1.0),
            HelixCurve(-1.0, 1.0, sigma_max=3.0),
        ),
    ]
    for model, helix in cases:
        for _ in range(5):
            a, b = sorted(rng.uniform(0.1, 2.8, 2))
            d = DeformationField(
                WindowField(a, b + 0.1, rng.uniform(-1.0, 1.0, 3)),
                WindowField(a, b + 0.1, rng.uniform(-1.0, 1.0, 2)),
            )
            value = first_variation_action(model, helix.profile, d, helix.domain)
            assert abs(value) <= 1e-5


def test_solver_outputs_are_stationary() -> None:
    rng = np.random.default_rng(13)
    solutions = (
        solve_k1_3d(0.0, 1.0, -3.5, -3.0, -2.0, sigma_max=5.0),
        solve_k1_4d(0.0, 1.0, -3.5, (-2.0, 0.0, 0.3, 0.0), sigma_max=5.0),
        solve_k2(0.5, (1.0, 0.0, 0.0, 0.0, 0.0), sigma_max=2.0),
    )
    for solution in solutions:
        profile = solution.profile
        n, span = profile.dimension, profile.sigma_max

        # The lifted curve carries the solved curvatures
        curve = FrenetCurve(profile, h=solution.h)
        for sigma in (0.3 * span, 0.6 * span, 0.9 * span):
            _, pair = local_frame(curve, sigma)
            k1, k2 = profile.kappa1(sigma), abs(profile.kappa2(sigma))
            assert abs(pair.kappa1 - k1) <= 1e-6 * max(1.0, abs(k1))
            assert abs(pair.kappa2 - k2) <= 1e-6 * max(1.0, k2)

        for _ in range(20):
            a = rng.uniform(0.05, 0.5) * span
            b = a + rng.uniform(0.2, 0.45) * span
            d = DeformationField(
                WindowField(a, b, rng.uniform(-1.0, 1.0, 3)),
                WindowField(a, b, rng.uniform(-1.0, 1.0, 2)) if n == 4 else ZERO,
                dimension=n,
            )
            value = first_variation_action(solution.model, profile, d, (0.0, span))
            assert abs(value) <= 1e-5


def test_first_variation_is_euler_lagrange() -> None:
    profile = CurvatureProfile(
        PolynomialField([0.2, 0.3, -0.1]), PolynomialField([1.0, 0.1]), 4, 2.0
    )
    d = DeformationField(BUMP, NARROW)
    for model in (
        ModelSpec(alpha=1.5),
        ModelSpec(ModelKind.LinearK1, 0.7, -1.2),
        ModelSpec(ModelKind.LinearK2, lambda2=0.5),
    ):
        def integrand(s: float) -> float:
            e_minus, e_2 = euler_lagrange(model, profile, s)
            return e_minus * d.eps_minus(s) + e_2 * d.eps_2(s)

        expected, _ = quad(integrand, 0.2, 1.8, epsabs=1e-13, epsrel=1e-12, limit=200)
        actual = first_variation_action(model, profile, d, (0.0, 2.0))
        assert actual == pytest.approx(expected, rel=1e-8, abs=1e-10)


def test_deformed_curve() -> None:
    helix = HelixCurve(-1.0, 1.0, sigma_max=2.0)
    d = DeformationField(BUMP, NARROW)
    assert np.allclose(
        DeformedCurve(helix, d, 0.0).derivatives(1.0, 3), helix.derivatives(1.0, 3)
    )

    moved = DeformedCurve(helix, d, 1e-3)
    shift = moved(1.0) - helix(1.0)
    frame = helix.state_at(1.0).frame
    expected = (
        d.eps_1(1.0) * frame.e1
        + d.eps_minus(1.0) * frame.e_minus
        + d.eps_2(1.0) * frame.e2
    )
    assert np.allclose(shift, 1e-3 * expected)

    with pytest.raises(DimensionError):
        DeformedCurve(helix, DeformationField(BUMP, dimension=3), 1e-3)


def within_order(order: float, expected: int) -> bool:
    lo, hi = ORDER_SLACK
    return expected + lo <= order <= expected + hi


def test_fd_check_on_helix() -> None:
    helix = HelixCurve(-1.0, 1.0, sigma_max=2.0)
    report = fd_check(helix, DeformationField(BUMP, NARROW))
    assert report.passed, report.to_dict()
    assert set(report.checks) == {
        'omega',
        'delta_e_plus',
        'delta_e_1',
        'delta_kappa1',
        'delta_kappa2',
    }
    for name in ('omega', 'delta_kappa1', 'delta_kappa2'):
        check = report.checks[name]
        assert check.passed
        if max(check.error) > 1e-8:
            assert within_order(check.order_estimate, 1)

    assert report.null_violation is not None
    assert within_order(report.null_violation.order_estimate, 2)


def test_fd_check_on_null_cubic() -> None:
    cubic = HelixCurve(0.0, 0.0, sigma_max=1.0, dimension=3)
    bump = PolynomialField([0.0, 0.0, 1.0, -2.0, 1.0])
    report = fd_check(cubic, DeformationField(bump, dimension=3), points=3)
    assert report.passed, report.to_dict()
    assert 'delta_kappa2' in report.skipped
    assert 'delta_kappa2' not in report.checks


def test_fd_check_negative_control() -> None:
    helix = HelixCurve(-1.0, 1.0, sigma_max=2.0)
    report = fd_check(
        helix,
        DeformationField(BUMP, NARROW),
        quantities=('delta_kappa1',),
        formulas={'delta_kappa1': lambda d, p, _, s: -delta_kappa1(d, p, s)},
        points=3,
    )
    assert not report.checks['delta_kappa1'].passed
    assert not report.passed


def test_fd_check_action() -> None:
    helix = HelixCurve(-1.0, 0.5, sigma_max=2.0)
    report = fd_check(
        helix,
        DeformationField(BUMP, NARROW),
        ModelSpec(ModelKind.LinearK1, 1.0, -1.0),
        quantities=(),
        points=3,
    )
    assert set(report.checks) == {'action'}
    assert report.passed, report.to_dict()


def test_fd_check_fixed_fraction() -> None:
    cubic = HelixCurve(0.0, 0.0, sigma_max=1.0)
    bump = PolynomialField([0.0, 0.0, 1.0, -2.0, 1.0])
    report = fd_check(
        cubic,
        DeformationField(bump),
        t_list=(1e-3,),
        points=2,
        quantities=('delta_kappa1',),
        matchings=(Matching.FIXED_LAMBDA, Matching.FIXED_FRACTION),
    )
    assert 'delta_kappa1' in report.fixed_fraction
    assert report.to_dict()['fixed_fraction']['delta_kappa1']['t'] == [1e-3]


def test_fd_check_rejects_bad_steps() -> None:
    helix = HelixCurve(-1.0, 1.0, sigma_max=2.0)
    with pytest.raises(ValueError):
        fd_check(helix, DeformationField(BUMP), t_list=(1e-4, 1e-3))
    with pytest.raises(ValueError):
        fd_check(helix, DeformationField(BUMP), t_list=())
