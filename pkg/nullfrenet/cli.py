"""
The run modes. Each command turns a validated configuration into its products
and returns the process exit code.
"""
from __future__ import annotations
from collections.abc import Callable, Mapping
from concurrent.futures import ProcessPoolExecutor
from enum import IntEnum
import json
from pathlib import Path
from typing import Any

import konsole
import numpy as np
import pandas as pd
from tabulate import tabulate

from .config import load_config, load_curve, load_profile, RunConfig
from .curve import ArclengthMap, local_frame
from .error import (
    BlowUpError,
    ConfigError,
    DegenerateCurveError,
    FrameExtractionError,
    NullFrenetError,
)
from .jet import PolynomialField, WindowField, ZERO
from .label import ModelKind, RunMode
from .models import ModelSpec, simulate, Solution, solve_k1_3d, solve_k1_4d, solve_k2
from .noether import charges_along, drift_report
from .output import write_csv, write_json
from .reconstruct import (
    CurvatureProfile,
    helix_trajectory,
    HelixCurve,
    integrate,
    Trajectory,
)
from .schema import coerce, profile_schema
from .variation import (
    DeformationField,
    fd_check,
    FdReport,
    first_variation_action,
    Formula,
)


__all__ = (
    'cmd_extract',
    'cmd_helix',
    'cmd_reconstruct',
    'cmd_simulate',
    'cmd_verify',
    'exit_code',
    'ExitCode',
    'run',
    'sweep',
)


class ExitCode(IntEnum):
    OK = 0
    CONFIG = 1
    FAILED = 2
    BLOWUP = 3
    INTERRUPTED = 130


def exit_code(x: BaseException) -> ExitCode:
    """The exit code for an exception escaping a run."""
    match x:
        case KeyboardInterrupt():
            return ExitCode.INTERRUPTED
        case BlowUpError():
            return ExitCode.BLOWUP
        case DegenerateCurveError() | FrameExtractionError():
            return ExitCode.FAILED
    return ExitCode.CONFIG


class _Products:
    """The writer for one run's products, honoring the configured formats."""

    def __init__(self, config: RunConfig) -> None:
        self.config = config

    def csv(self, name: str, frame: pd.DataFrame) -> None:
        if 'csv' in self.config.io.formats:
            path = self.config.output(f'{name}.csv')
            write_csv(path, frame, self.config.sha256)

    def json(self, name: str, report: Mapping[str, Any]) -> None:
        if 'json' in self.config.io.formats:
            path = self.config.output(f'{name}.json')
            write_json(path, report, self.config.sha256)


# ======================================================================================
# extract


def cmd_extract(config: RunConfig) -> int:
    """
    Extract the frame and curvatures of the input curve on a uniform
    pseudo-arclength grid with spacing h.
    """
    if config.io.input is None:
        raise ConfigError('extract needs "io.input", the curve input file')
    path = config.resolve(config.io.input)
    try:
        with open(path, mode='r', encoding='utf8') as file:
            document = json.load(file)
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as x:
        raise ConfigError(f'cannot read curve input "{path}": {x}') from x

    src = load_curve(document)
    if src.dimension != config.dimension:
        raise ConfigError(
            f'curve has dimension {src.dimension}, configuration {config.dimension}'
        )
    arclength = ArclengthMap(src)
    h = config.integrator.h
    sigmas = h * np.arange(int(np.floor(arclength.total / h + 1e-9)) + 1)

    n = src.dimension
    tolerances = config.tolerances
    lams = np.empty(len(sigmas))
    X = np.empty((len(sigmas), n))
    frames = np.empty((len(sigmas), n, n))
    kappa = np.empty((len(sigmas), 2))
    residual = np.empty(len(sigmas))
    completed = 0
    for i, sigma in enumerate(sigmas):
        lam = arclength.parameter(sigma)
        try:
            frame, pair = local_frame(src, lam, tolerances)
        except (DegenerateCurveError, FrameExtractionError) as x:
            x.sigma = float(sigma)
            raise
        lams[i] = lam
        X[i] = src(lam)
        frames[i] = frame.rows
        kappa[i] = pair
        residual[i] = frame.residual()
        if n == 4 and pair.kappa2 <= tolerances.for_source(src).k2:
            completed += 1

    if completed:
        konsole.warning(
            'Completed e₂ by orientation where κ₂ vanishes',
            detail={'samples': completed, 'of': len(sigmas)},
        )

    traj = Trajectory(sigmas, X, frames, kappa, residual, h)
    profile = pd.DataFrame(
        {
            'sigma': sigmas,
            'kappa1': kappa[:, 0],
            'kappa2': kappa[:, 1],
            'lambda': lams,
        }
    )

    products = _Products(config)
    products.csv('profile', coerce(profile, profile_schema(('lambda',))))
    products.csv('trajectory', traj.to_frame())
    products.json(
        'summary',
        {
            'mode': RunMode.extract,
            'samples': len(sigmas),
            'total_sigma': arclength.total,
            'max_gram_residual': float(np.max(residual)),
            'completed_by_orientation': completed,
            'tolerances': vars(tolerances.for_source(src)),
        },
    )
    return ExitCode.OK


# ======================================================================================
# reconstruct and helix


def _trajectory_summary(traj: Trajectory) -> dict[str, Any]:
    return {
        'steps': len(traj) - 1,
        'h': traj.h,
        'renorm_every': traj.renorm_every,
        'sigma_max': float(traj.sigma[-1]),
        'max_gram_residual': traj.max_residual,
        'final_gram_residual': float(traj.residual[-1]),
    }


def cmd_reconstruct(config: RunConfig) -> int:
    """Integrate the curve of a curvature profile from the standard frame."""
    profile = load_profile(config)
    products = _Products(config)
    g = config.integrator
    try:
        traj = integrate(profile, None, g.h, g.renorm_every)
    except BlowUpError as x:
        products.csv('trajectory', x.partial.to_frame())
        raise

    products.csv('trajectory', traj.to_frame())
    products.json(
        'summary', {'mode': RunMode.reconstruct, **_trajectory_summary(traj)}
    )
    return ExitCode.OK


def _charge_products(
    products: _Products, traj: Trajectory, model: ModelSpec, threshold: float
) -> bool:
    log = charges_along(traj, model)
    products.csv('charges', log)
    report = drift_report(traj, model, threshold, log=log)
    products.json('drift', report.to_dict())
    return report.ok


def cmd_helix(config: RunConfig) -> int:
    """
    The exact null helix of the configured curvatures. With vanishing κ₂, the
    helix solves the pseudo-arclength model, whose charges are logged too.
    """
    kappa1, kappa2 = config.helix
    g = config.integrator
    traj = helix_trajectory(kappa1, kappa2, None, g.h, g.sigma_max, config.dimension)

    products = _Products(config)
    products.csv('trajectory', traj.to_frame())
    ok = True
    if kappa2 == 0:
        alpha = 1.0
        if config.model.kind is ModelKind.PseudoArclength:
            alpha = config.model.alpha
        model = ModelSpec(ModelKind.PseudoArclength, alpha, dimension=config.dimension)
        ok = _charge_products(products, traj, model, config.drift)
    products.json('summary', {'mode': RunMode.helix, **_trajectory_summary(traj)})
    return ExitCode.OK if ok else ExitCode.FAILED


# ======================================================================================
# simulate


def _solution_summary(solution: Solution) -> dict[str, Any]:
    return {
        'mode': RunMode.simulate,
        'model': solution.model.kind,
        'steps': len(solution.sigma) - 1,
        'constants': solution.constants.as_dict(),
        'solver_drift': solution.drift,
        'separatrix': solution.separatrix,
        **solution.extras,
    }


def cmd_simulate(config: RunConfig) -> int:
    """
    Solve the curvature dynamics of the configured model, lift the solution to
    a spacetime trajectory, and hold its residuals and, where the model has
    them, its charges against the configured tolerances.
    """
    products = _Products(config)
    g = config.integrator
    try:
        solution = simulate(config.model, config.initial, g.sigma_max, g.h)
    except BlowUpError as x:
        products.csv('profile', x.partial.to_frame())
        products.json('summary', _solution_summary(x.partial))
        raise
    products.csv('profile', solution.to_frame())

    try:
        traj = integrate(solution.profile, None, g.h, g.renorm_every)
    except BlowUpError as x:
        products.csv('trajectory', x.partial.to_frame())
        raise
    products.csv('trajectory', traj.to_frame())

    check = solution.residual_check(config.residual)
    if not check['ok']:
        konsole.error('Solution residuals exceed the tolerance', detail=check)
    ok: bool = check['ok']
    if config.model.kind.has_charges:
        ok = _charge_products(products, traj, config.model, config.drift) and ok
    products.json('summary', {**_solution_summary(solution), 'residuals': check})
    return ExitCode.OK if ok else ExitCode.FAILED


# ======================================================================================
# verify


def _battery(dimension: int) -> list[tuple[str, HelixCurve, DeformationField]]:
    four = dimension == 4
    cubic = HelixCurve(0.0, 0.0, sigma_max=1.0, dimension=dimension)
    helix = HelixCurve(-1.0, 1.0 if four else 0.0, sigma_max=2.0, dimension=dimension)
    return [
        (
            'null_cubic',
            cubic,
            DeformationField(
                PolynomialField([0.0, 0.0, 1.0, -2.0, 1.0]),
                PolynomialField([0.0, 0.0, 1.0, -1.0]) if four else ZERO,
                dimension=dimension,
            ),
        ),
        (
            'helix',
            helix,
            DeformationField(
                WindowField(0.2, 1.8, (1.0, 0.5)),
                WindowField(0.4, 1.6, (0.5,)) if four else ZERO,
                dimension=dimension,
            ),
        ),
    ]


# Windows as fractions of the span, with the shapes of ε₋ and ε₂.
_WINDOWS = (
    (0.15, 0.85, (1.0, -0.3), (0.4,)),
    (0.1, 0.5, (0.5, 1.0), (-1.0, 0.3)),
    (0.45, 0.95, (-1.0,), (1.0, -1.0)),
    (0.3, 0.7, (0.2, -0.5, 1.0), (0.7,)),
)


def _stationary_cases(
    dimension: int,
) -> list[tuple[str, ModelSpec, CurvatureProfile, float]]:
    # Helices solve the pseudo-arclength model when κ₂ vanishes and LinearK1
    # with α = 1, β = −1 when κ₁ = α/β. Solver outputs are only as stationary
    # as their integration is accurate.
    four = dimension == 4
    planar = HelixCurve(-0.5, 0.0, sigma_max=3.0, dimension=dimension)
    twisted = HelixCurve(-1.0, 1.0 if four else 0.0, sigma_max=3.0, dimension=dimension)
    cases = [
        ('PseudoArclength', ModelSpec(dimension=dimension), planar.profile, 1e-8),
        (
            'LinearK1',
            ModelSpec(ModelKind.LinearK1, 1.0, -1.0, dimension=dimension),
            twisted.profile,
            1e-8,
        ),
    ]
    if four:
        solutions = {
            'LinearK1 solution': solve_k1_4d(
                0.0, 1.0, -3.5, (-2.0, 0.0, 0.3, 0.0), sigma_max=3.0
            ),
            'LinearK2 solution': solve_k2(0.5, (1.0, 0.0, 0.0, 0.0, 0.0), 2.0),
        }
    else:
        solutions = {
            'LinearK1 solution': solve_k1_3d(0.0, 1.0, -3.5, -3.0, -2.0, sigma_max=3.0)
        }
    for name, solution in solutions.items():
        cases.append((name, solution.model, solution.profile, 1e-5))
    return cases


def _stationarity(dimension: int) -> dict[str, Any]:
    results = {}
    for name, model, profile, threshold in _stationary_cases(dimension):
        span = profile.sigma_max
        values = []
        for lo, hi, minus, two in _WINDOWS:
            a, b = lo * span, hi * span
            deformation = DeformationField(
                WindowField(a, b, minus),
                WindowField(a, b, two) if dimension == 4 else ZERO,
                dimension=dimension,
            )
            values.append(
                first_variation_action(model, profile, deformation, (0.0, span))
            )
        worst = max(abs(v) for v in values)
        results[name] = {
            'first_variation': values,
            'threshold': threshold,
            'passed': worst <= threshold,
        }
    return results


def _summary_table(reports: Mapping[str, FdReport]) -> str:
    rows = []
    for case, result in reports.items():
        checks = list(result.checks.values())
        if result.null_violation is not None:
            checks.append(result.null_violation)
        for check in checks:
            rows.append(
                (
                    case,
                    check.name,
                    check.order_estimate,
                    max(check.error, default=float('nan')),
                    'ok' if check.passed else 'FAIL',
                )
            )
    return tabulate(
        rows,
        headers=('case', 'quantity', 'order', 'max error', ''),
        floatfmt='.3g',
    )


def cmd_verify(config: RunConfig, formulas: None | Mapping[str, Formula] = None) -> int:
    """
    Run the finite-difference battery for the variational formulas, the action
    check on a curve that is not stationary, and the stationarity check on
    known solutions. Formulas may be replaced to exercise the battery itself.
    """
    n = config.dimension
    v = config.verify
    report: dict[str, Any] = {'mode': RunMode.verify, 'dimension': n}

    passed = True
    reports: dict[str, FdReport] = {}
    for name, curve, deformation in _battery(n):
        result = fd_check(
            curve,
            deformation,
            None,
            v.t,
            points=v.points,
            formulas=formulas,
            matchings=v.matchings,
        )
        reports[name] = result
        report[name] = result.to_dict()
        passed = passed and result.passed

    _, helix, deformation = _battery(n)[1]
    action = fd_check(
        helix,
        deformation,
        ModelSpec(dimension=n),
        v.t,
        points=v.points,
        quantities=(),
        formulas=formulas,
    )
    reports['action'] = action
    report['action'] = action.to_dict()
    passed = passed and action.passed

    stationarity = _stationarity(n)
    report['stationarity'] = stationarity
    passed = passed and all(s['passed'] for s in stationarity.values())

    report['passed'] = passed
    _Products(config).json('verify', report)
    konsole.info('Verification summary\n%s', _summary_table(reports))
    if not passed:
        konsole.error('Verification failed')
    return ExitCode.OK if passed else ExitCode.FAILED


# ======================================================================================


COMMANDS: Mapping[RunMode, Callable[[RunConfig], int]] = {
    RunMode.extract: cmd_extract,
    RunMode.reconstruct: cmd_reconstruct,
    RunMode.simulate: cmd_simulate,
    RunMode.verify: cmd_verify,
    RunMode.helix: cmd_helix,
}


def run(config: RunConfig) -> int:
    """Run one configuration, mapping domain errors to exit codes."""
    konsole.info(
        'Running with configuration',
        detail={'config_sha256': config.sha256, **config.document},
    )
    try:
        code = COMMANDS[config.mode](config)
    except (DegenerateCurveError, FrameExtractionError) as x:
        konsole.error(x.args[0], detail={'sigma': x.sigma})
        return ExitCode.FAILED
    except BlowUpError as x:
        konsole.error(x.args[0], detail={'sigma': x.sigma})
        return ExitCode.BLOWUP
    konsole.info('Finished run', detail={'mode': config.mode, 'exit_code': int(code)})
    return code


def _run_file(path: Path, mode: None | str) -> int:
    try:
        return run(load_config(path, mode=mode, output_dir=path.stem))
    except NullFrenetError as x:
        konsole.error(x.args[0], detail={'config': str(path)})
        return exit_code(x)


def sweep(
    directory: str | Path, mode: None | str = None, workers: None | int = None
) -> int:
    """
    Run every configuration in the directory in a pool of processes, each
    writing to a subdirectory named after its file. The exit code is the
    largest of the individual exit codes.
    """
    paths = sorted(Path(directory).glob('*.json'))
    if not paths:
        raise ConfigError(f'sweep directory "{directory}" has no configurations')
    with ProcessPoolExecutor(max_workers=workers) as pool:
        codes = list(pool.map(_run_file, paths, [mode] * len(paths)))
    for path, code in zip(paths, codes):
        konsole.info(
            'Swept configuration', detail={'config': str(path), 'exit_code': code}
        )
    return max(codes)
