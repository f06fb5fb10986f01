"""
Column schemas of the CSV products and the schema of run configurations.

Every product is a table of float64 columns. Vector columns are named by a
prefix and the coordinate, e.g. `x_t`, `x_x`, `x_y`, `x_z`, and the angular
momentum's independent components by coordinate pairs, e.g. `m_tx`.
"""
from types import MappingProxyType
from typing import Any, NamedTuple, TypeAlias

import numpy as np
import pandas as pd

from .label import Matching, ModelKind, RunMode


Float64Dtype = np.dtype(float)

COMPONENTS = ('t', 'x', 'y', 'z')
FRAME_NAMES = ('e_plus', 'e1', 'e_minus', 'e2')

Schema: TypeAlias = MappingProxyType[str, np.dtype[Any]]


def vector_columns(prefix: str, dimension: int) -> list[str]:
    return [f'{prefix}_{c}' for c in COMPONENTS[:dimension]]


def bivector_columns(dimension: int) -> list[tuple[int, int, str]]:
    """The upper-triangle index pairs of a bivector with their column names."""
    return [
        (i, j, f'm_{COMPONENTS[i]}{COMPONENTS[j]}')
        for i in range(dimension)
        for j in range(i + 1, dimension)
    ]


def _floats(*columns: str) -> Schema:
    return MappingProxyType({c: Float64Dtype for c in columns})


def trajectory_schema(dimension: int) -> Schema:
    columns = ['sigma', *vector_columns('x', dimension)]
    for name in FRAME_NAMES[:dimension]:
        columns.extend(vector_columns(name, dimension))
    columns.extend(('kappa1', 'kappa2', 'gram_residual'))
    return _floats(*columns)


PROFILE_COLUMNS = ('sigma', 'kappa1', 'kappa2')


def profile_schema(extra: tuple[str, ...] = ()) -> Schema:
    """
    The curvature profile, followed by any residual or bookkeeping columns,
    e.g. `eom1`, `eom2`, `first_integral`, `energy`, or `lambda`.
    """
    return _floats(*PROFILE_COLUMNS, *extra)


def charge_schema(dimension: int) -> Schema:
    return _floats(
        'sigma',
        *vector_columns('p', dimension),
        *(name for *_, name in bivector_columns(dimension)),
        'mass2',
        'casimir2',
    )


def coerce(data: pd.DataFrame, schema: Schema) -> pd.DataFrame:
    """Coerce the dataframe to the schema, in the schema's column order."""
    return data[list(schema)].astype(dict(schema))


def validate(df: pd.DataFrame, schema: Schema) -> None:
    """
    Validate the given dataframe. This function checks that the dataframe has
    exactly the expected columns with the expected types and that no column
    contains null values.
    """
    # ----------------------------------------------------------------------------------
    # No extra or missing columns

    columns = list(df.columns)
    missing = [c for c in schema if c not in columns]
    extras = [c for c in columns if c not in schema]
    if missing or extras:
        raise ValueError(
            f'dataframe is missing columns {missing} and has extra columns {extras}'
        )

    # ----------------------------------------------------------------------------------
    # Columns have expected types

    maltyped = [
        f'{column} has type {df.dtypes[column]} instead of {dtype}'
        for column, dtype in schema.items()
        if df.dtypes[column] != dtype
    ]
    if maltyped:
        raise ValueError('; '.join(maltyped))

    # ----------------------------------------------------------------------------------
    # Columns contain no nulls

    for column in schema:
        nulls = df[column].isna().sum()
        if nulls != 0:
            raise ValueError(
                f'column "{column}" unexpectedly contains '
                f'{nulls} null{"s" if nulls != 1 else ""}'
            )


# ======================================================================================
# Run configuration


class Option(NamedTuple):
    """One configuration key: its acceptable types, default, and choices."""

    types: tuple[type, ...]
    default: Any = None
    choices: None | tuple[Any, ...] = None


_NUMBER = (int, float)
_OPTIONAL_NUMBER = (int, float, type(None))
_COEFFICIENTS = (int, float, list, type(None))

Section: TypeAlias = MappingProxyType[str, Option]

CONFIG_SCHEMA: MappingProxyType[str, Option | Section] = MappingProxyType(
    {
        "mode": Option((str, type(None)), None, tuple(RunMode)),
        "dimension": Option((int,), 4, (3, 4)),
        "model": MappingProxyType(
            {
                "kind": Option((str,), 'PseudoArclength', tuple(ModelKind)),
                "alpha": Option(_NUMBER, 1.0),
                "beta": Option(_NUMBER, 0.0),
                "lambda2": Option(_NUMBER, 0.0),
            }
        ),
        "initial": MappingProxyType(
            {
                "kappa1": Option(_NUMBER, -0.5),
                "dkappa1": Option(_NUMBER, 0.0),
                "kappa2": Option(_NUMBER, 0.0),
                "dkappa2": Option(_NUMBER, 0.0),
                "ddkappa2": Option(_NUMBER, 0.0),
                "gamma": Option(_NUMBER, 0.0),
                "energy": Option(_OPTIONAL_NUMBER, None),
                "sign": Option((int,), 1, (1, -1)),
            }
        ),
        "profile": MappingProxyType(
            {
                # Polynomial coefficients in ascending order, or a constant
                "kappa1": Option(_COEFFICIENTS, None),
                "kappa2": Option(_COEFFICIENTS, None),
                # CSV with columns sigma, kappa1, kappa2 on a uniform grid
                "input": Option((str, type(None)), None),
            }
        ),
        "helix": MappingProxyType(
            {
                "kappa1": Option(_NUMBER, -0.5),
                "kappa2": Option(_NUMBER, 0.0),
            }
        ),
        "integrator": MappingProxyType(
            {
                "h": Option(_NUMBER, 1e-3),
                "sigma_max": Option(_NUMBER, 10.0),
                "renorm_every": Option((int,), 100),
            }
        ),
        "io": MappingProxyType(
            {
                "input": Option((str, type(None)), None),
                "output_dir": Option((str,), '.'),
                "formats": Option((list,), ['csv', 'json'], ('csv', 'json')),
            }
        ),
        "tolerances": MappingProxyType(
            {
                "null": Option(_NUMBER, 1e-10),
                "frame": Option(_NUMBER, 1e-9),
                "k2": Option(_NUMBER, 1e-9),
                "radicand": Option(_NUMBER, 1e-9),
                "sampled": Option(_NUMBER, 1e-3),
                "drift": Option(_NUMBER, 1e-6),
                "residual": Option(_NUMBER, 1e-7),
            }
        ),
        "verify": MappingProxyType(
            {
                "t": Option((list,), [1e-3, 5e-4, 2.5e-4]),
                "points": Option((int,), 5),
                "matchings": Option(
                    (list,), [str(Matching.FIXED_LAMBDA)], tuple(Matching)
                ),
            }
        ),
    }
)
