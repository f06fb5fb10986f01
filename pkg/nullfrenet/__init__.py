__all__ = (
    '__version__',
    'ChargeSet',
    'charges',
    'CurvatureProfile',
    'DeformationField',
    'fd_check',
    'first_variation_action',
    'FrameCurve',
    'helix_trajectory',
    'HelixCurve',
    'integrate',
    'load_config',
    'local_frame',
    'ModelKind',
    'ModelSpec',
    'null_cubic',
    'NullFrame',
    'PolynomialCurve',
    'RunMode',
    'simulate',
    'SplineCurve',
    'Tolerances',
)

__version__ = "0.1.0"

from .config import load_config
from .curve import local_frame, null_cubic, PolynomialCurve, SplineCurve, Tolerances
from .label import ModelKind, RunMode
from .minkowski import NullFrame
from .models import ModelSpec, simulate
from .noether import charges, ChargeSet
from .reconstruct import (
    CurvatureProfile,
    FrameCurve,
    helix_trajectory,
    HelixCurve,
    integrate,
)
from .variation import DeformationField, fd_check, first_variation_action
