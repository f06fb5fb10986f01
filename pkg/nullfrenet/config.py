"""
Run configurations.

A run is described by a single JSON document. Validation fills in defaults,
rejects unknown keys and ill-typed values with the offending dotted path, and
happens before any computation. The SHA-256 of the validated document in
canonical form identifies the run in every product it writes.
"""
from __future__ import annotations
from collections.abc import Mapping
import copy
from dataclasses import dataclass, field
import hashlib
import json
import math
import os
from pathlib import Path
from typing import Any

import numpy as np

from .curve import CurveSource, null_cubic, SplineCurve, Tolerances
from .error import ConfigError, DimensionError, ModelError
from .jet import ConstantField, Field, PolynomialField, ZERO
from .label import Matching, ModelKind, RunMode
from .models import InitialData, ModelSpec
from .output import read_csv
from .reconstruct import CurvatureProfile, grid_steps, HelixCurve
from .schema import CONFIG_SCHEMA, Option


__all__ = (
    'config_hash',
    'IntegratorConfig',
    'IoConfig',
    'load_config',
    'load_curve',
    'load_profile',
    'parse_config',
    'RunConfig',
    'validate_document',
    'VerifyConfig',
)


# ======================================================================================
# Validation


def _value(path: str, value: Any, option: Option) -> Any:
    if isinstance(value, bool) or not isinstance(value, option.types):
        expected = ', '.join(t.__name__ for t in option.types)
        raise ConfigError(f'"{path}" has value {value!r}, expected one of {expected}')
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigError(f'"{path}" is not finite')
    if isinstance(value, list):
        for index, item in enumerate(value):
            if isinstance(item, bool) or (
                isinstance(item, float) and not math.isfinite(item)
            ):
                raise ConfigError(f'"{path}[{index}]" has invalid value {item!r}')
            if option.choices is not None and item not in option.choices:
                raise ConfigError(
                    f'"{path}[{index}]" is {item!r}, not one of {list(option.choices)}'
                )
    elif option.choices is not None and value is not None:
        if value not in option.choices:
            raise ConfigError(
                f'"{path}" is {value!r}, not one of {[str(c) for c in option.choices]}'
            )
    return value


def validate_document(
    document: Any, *, mode: None | str = None, output_dir: None | str = None
) -> dict[str, Any]:
    """
    Validate a configuration document and fill in defaults. A mode or output
    directory given on the command line overrides the document's.
    """
    if not isinstance(document, Mapping):
        raise ConfigError('configuration must be a JSON object')
    for key in document:
        if key not in CONFIG_SCHEMA:
            raise ConfigError(f'unknown configuration key "{key}"')

    result: dict[str, Any] = {}
    for key, spec in CONFIG_SCHEMA.items():
        if isinstance(spec, Option):
            result[key] = _value(key, document.get(key, spec.default), spec)
            continue

        section = document.get(key, {})
        if not isinstance(section, Mapping):
            raise ConfigError(f'"{key}" must be a JSON object')
        for name in section:
            if name not in spec:
                raise ConfigError(f'unknown configuration key "{key}.{name}"')
        result[key] = {
            name: _value(
                f'{key}.{name}',
                section.get(name, copy.deepcopy(option.default)),
                option,
            )
            for name, option in spec.items()
        }

    if mode is not None:
        result['mode'] = _value('mode', mode, CONFIG_SCHEMA['mode'])  # type: ignore
    if result['mode'] is None:
        raise ConfigError('"mode" is required, in the configuration or as argument')
    if output_dir is not None:
        result['io']['output_dir'] = output_dir
    return result


def config_hash(document: Mapping[str, Any]) -> str:
    """The SHA-256 of the document's canonical JSON form."""
    canonical = json.dumps(
        document, sort_keys=True, separators=(',', ':'), allow_nan=False
    )
    return hashlib.sha256(canonical.encode('utf8')).hexdigest()


# ======================================================================================
# Configuration objects


@dataclass(frozen=True)
class IntegratorConfig:
    h: float = 1e-3
    sigma_max: float = 10.0
    renorm_every: int = 100


@dataclass(frozen=True)
class IoConfig:
    input: None | Path = None
    output_dir: Path = Path('.')
    formats: tuple[str, ...] = ('csv', 'json')


@dataclass(frozen=True)
class VerifyConfig:
    t: tuple[float, ...] = (1e-3, 5e-4, 2.5e-4)
    points: int = 5
    matchings: tuple[Matching, ...] = (Matching.FIXED_LAMBDA,)


@dataclass(frozen=True)
class RunConfig:
    """A validated run configuration."""

    mode: RunMode
    dimension: int
    model: ModelSpec
    initial: InitialData
    profile: Mapping[str, Any]
    helix: tuple[float, float]
    integrator: IntegratorConfig
    io: IoConfig
    tolerances: Tolerances
    drift: float
    residual: float
    verify: VerifyConfig
    base: Path = Path('.')
    document: Mapping[str, Any] = field(default_factory=dict, repr=False)
    sha256: str = ''

    def resolve(self, path: str | os.PathLike[str]) -> Path:
        """Resolve a path relative to the configuration file's directory."""
        return self.base / path

    def output(self, name: str) -> Path:
        return self.resolve(self.io.output_dir) / name


def _positive(path: str, value: float) -> float:
    if not value > 0:
        raise ConfigError(f'"{path}" must be positive, not {value}')
    return float(value)


def parse_config(
    document: Any,
    *,
    mode: None | str = None,
    output_dir: None | str = None,
    base: None | Path = None,
) -> RunConfig:
    doc = validate_document(document, mode=mode, output_dir=output_dir)
    dimension = doc['dimension']

    m = doc['model']
    try:
        model = ModelSpec(
            ModelKind(m['kind']),
            float(m['alpha']),
            float(m['beta']),
            float(m['lambda2']),
            dimension,
        )
    except (DimensionError, ModelError) as x:
        raise ConfigError(f'"model": {x}') from x

    i = doc['initial']
    initial = InitialData(
        float(i['kappa1']),
        float(i['dkappa1']),
        float(i['kappa2']),
        float(i['dkappa2']),
        float(i['ddkappa2']),
        float(i['gamma']),
        None if i['energy'] is None else float(i['energy']),
        int(i['sign']),
    )

    g = doc['integrator']
    if g['renorm_every'] < 0:
        raise ConfigError('"integrator.renorm_every" must not be negative')
    integrator = IntegratorConfig(
        _positive('integrator.h', g['h']),
        _positive('integrator.sigma_max', g['sigma_max']),
        g['renorm_every'],
    )
    try:
        grid_steps(integrator.sigma_max, integrator.h)
    except ValueError as x:
        raise ConfigError(f'"integrator": {x}') from x

    t = doc['tolerances']
    for name, value in t.items():
        _positive(f'tolerances.{name}', value)
    tolerances = Tolerances(
        float(t['null']),
        float(t['frame']),
        float(t['k2']),
        float(t['radicand']),
        float(t['sampled']),
    )

    v = doc['verify']
    if not all(isinstance(x, (int, float)) for x in v['t']):
        raise ConfigError('"verify.t" must be a list of numbers')
    ts = tuple(float(x) for x in v['t'])
    if not ts or any(x <= 0 for x in ts) or any(a <= b for a, b in zip(ts, ts[1:])):
        raise ConfigError('"verify.t" must be positive and strictly decreasing')
    if v['points'] < 1:
        raise ConfigError('"verify.points" must be positive')
    verify = VerifyConfig(ts, v['points'], tuple(Matching(x) for x in v['matchings']))

    helix = (float(doc['helix']['kappa1']), float(doc['helix']['kappa2']))
    if helix[1] < 0:
        raise ConfigError('"helix.kappa2" must not be negative')
    if dimension == 3 and helix[1] != 0:
        raise ConfigError('"helix.kappa2" must vanish in 2+1 dimensions')

    io = doc['io']
    return RunConfig(
        mode=RunMode(doc['mode']),
        dimension=dimension,
        model=model,
        initial=initial,
        profile=doc['profile'],
        helix=helix,
        integrator=integrator,
        io=IoConfig(
            None if io['input'] is None else Path(io['input']),
            Path(io['output_dir']),
            tuple(io['formats']),
        ),
        tolerances=tolerances,
        drift=float(t['drift']),
        residual=float(t['residual']),
        verify=verify,
        base=Path('.') if base is None else base,
        document=doc,
        sha256=config_hash(doc),
    )


def load_config(
    path: str | os.PathLike[str],
    *,
    mode: None | str = None,
    output_dir: None | str = None,
) -> RunConfig:
    """Read and validate the configuration file with the given path."""
    try:
        with open(path, mode='r', encoding='utf8') as file:
            document = json.load(file)
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as x:
        raise ConfigError(f'cannot read configuration "{path}": {x}') from x
    return parse_config(
        document, mode=mode, output_dir=output_dir, base=Path(path).parent
    )


# ======================================================================================
# Inputs


def _field(path: str, value: Any) -> Field:
    if value is None:
        return ZERO
    if isinstance(value, list):
        if not value or not all(isinstance(c, (int, float)) for c in value):
            raise ConfigError(f'"{path}" must be a non-empty list of coefficients')
        return PolynomialField([float(c) for c in value])
    return ZERO if value == 0 else ConstantField(float(value))


def load_profile(config: RunConfig) -> CurvatureProfile:
    """
    The curvature profile of a reconstruct run, either from closed-form
    polynomial coefficients or from a CSV of uniformly spaced samples.
    """
    spec = config.profile
    try:
        if spec['input'] is not None:
            _, frame = read_csv(config.resolve(spec['input']))
            kappa2 = frame['kappa2'].to_numpy() if 'kappa2' in frame else None
            return CurvatureProfile.from_samples(
                frame['sigma'].to_numpy(),
                frame['kappa1'].to_numpy(),
                kappa2,
                config.dimension,
            )
        if spec['kappa1'] is None:
            raise ConfigError('"profile" needs either "input" or "kappa1"')
        return CurvatureProfile(
            _field('profile.kappa1', spec['kappa1']),
            _field('profile.kappa2', spec['kappa2']),
            config.dimension,
            config.integrator.sigma_max,
        )
    except (OSError, KeyError, ValueError, DimensionError) as x:
        raise ConfigError(f'invalid curvature profile: {x}') from x


def load_curve(document: Any) -> CurveSource:
    """
    Build a curve source from a curve input document, which is either a list
    of samples {"lambda": λ, "x": [...]} or a builtin curve with parameters.
    """
    if not isinstance(document, Mapping):
        raise ConfigError('curve input must be a JSON object')
    dimension = document.get('dimension', 4)
    if dimension not in (3, 4):
        raise ConfigError(f'"dimension" must be 3 or 4, not {dimension!r}')

    match document.get('kind'):
        case 'samples':
            samples = document.get('samples')
            if not isinstance(samples, list) or not samples:
                raise ConfigError('"samples" must be a non-empty list')
            try:
                lams = [float(s['lambda']) for s in samples]
                points = np.array([s['x'] for s in samples], dtype=np.float64)
            except (KeyError, TypeError, ValueError) as x:
                raise ConfigError(f'malformed curve sample: {x}') from x
            if points.ndim != 2 or points.shape[1] != dimension:
                raise ConfigError(
                    f'samples must have {dimension} components, '
                    f'not shape {points.shape}'
                )
            try:
                return SplineCurve(lams, points)
            except ValueError as x:
                raise ConfigError(f'invalid curve samples: {x}') from x

        case 'builtin':
            builtin = document.get('builtin')
            if not isinstance(builtin, Mapping):
                raise ConfigError('"builtin" must be a JSON object')
            params = dict(builtin.get('params', {}))
            match builtin.get('name'):
                case 'null_cubic':
                    domain = params.pop('domain', [0.0, 1.0])
                    if params:
                        raise ConfigError(
                            f'unknown null_cubic parameters {list(params)}'
                        )
                    try:
                        lo, hi = (float(d) for d in domain)
                    except (TypeError, ValueError) as x:
                        raise ConfigError(f'invalid null_cubic domain: {x}') from x
                    if not lo < hi:
                        raise ConfigError(f'null_cubic domain [{lo}, {hi}] is empty')
                    return null_cubic(dimension, domain=(lo, hi))
                case 'helix':
                    try:
                        kappa1 = float(params.pop('kappa1', -0.5))
                        kappa2 = float(params.pop('kappa2', 0.0))
                        sigma_max = float(params.pop('sigma_max', 10.0))
                        if params:
                            raise ValueError(f'unknown parameters {list(params)}')
                        return HelixCurve(
                            kappa1, kappa2, sigma_max=sigma_max, dimension=dimension
                        )
                    except (TypeError, ValueError, DimensionError) as x:
                        raise ConfigError(f'invalid helix parameters: {x}') from x
                case name:
                    raise ConfigError(f'unknown builtin curve {name!r}')

    raise ConfigError(f'unknown curve kind {document.get("kind")!r}')
