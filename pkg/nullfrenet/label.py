from __future__ import annotations
from enum import auto, Enum


class EnumLabel(str, Enum):
    """
    The base class of enumerated labels. Thanks to it subclassing from `str` and
    its value being the string representation, labels serialize to JSON and CSV
    as their plain names and parse back with `Label(value)`.
    """

    @staticmethod
    def _generate_next_value_(
        name: str, _start: int, _count: int, _last_values: list[str]
    ) -> str:
        return name

    def __str__(self) -> str:
        return self.value


class ModelKind(EnumLabel):
    """The geometric action in force."""

    PseudoArclength = auto()
    LinearK1 = auto()
    LinearK2 = auto()

    @property
    def has_charges(self) -> bool:
        return self is not ModelKind.LinearK2


class RunMode(EnumLabel):
    """The command-line mode."""

    extract = auto()
    reconstruct = auto()
    simulate = auto()
    verify = auto()
    helix = auto()


class Matching(EnumLabel):
    """
    How fd_check pairs points of the deformed curve with points of the original
    one: at the same parameter value, or at the same fraction of total σ.
    """

    FIXED_LAMBDA = "fixed_lambda"
    FIXED_FRACTION = "fixed_fraction"
