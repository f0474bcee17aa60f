"""Named example maps used throughout the tests and the command line."""

from __future__ import annotations

import numpy as np

from .cpmaps import CPMap, from_action
from .numerics import InvalidInputError, matrix_units

__all__ = ["ex_a", "ex_b", "ex_id", "ex_tr", "ex_zero", "FIXTURE_NAMES", "get_fixture"]


def _corner_map(scale: float) -> CPMap:
    images = np.zeros((4, 2, 2))
    images[0, 0, 0] = scale
    return from_action(images)


def ex_a() -> CPMap:
    """``a -> diag(a_11, 0)`` on ``M_2``: contractive, not unital."""
    return _corner_map(1.0)


def ex_b() -> CPMap:
    """``a -> diag(2 a_11, 0)``: completely positive but not contractive."""
    return _corner_map(2.0)


def ex_id(n: int = 2) -> CPMap:
    return from_action(matrix_units(n, n))


def ex_tr() -> CPMap:
    """``a -> tr(a) I_2 / 2``, the completely depolarizing channel."""
    return from_action([np.trace(e) * np.eye(2) / 2 for e in matrix_units(2, 2)])


def ex_zero(n: int = 2, h: int | None = None) -> CPMap:
    h = n if h is None else h
    return from_action(np.zeros((n * n, h, h)))


FIXTURE_NAMES = ("EX-A", "EX-B", "EX-ID", "EX-TR", "EX-0")


def get_fixture(name: str, n: int | None = None) -> CPMap:
    key = name.upper()
    if key == "EX-A":
        return ex_a()
    if key == "EX-B":
        return ex_b()
    if key == "EX-TR":
        return ex_tr()
    if key == "EX-ID":
        return ex_id(2 if n is None else n)
    if key in ("EX-0", "EX-ZERO"):
        return ex_zero(2 if n is None else n)
    raise InvalidInputError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURE_NAMES)}")
