"""Scalar helpers shared by the exact (rational) and floating code paths.

Exact quantities are ``fractions.Fraction`` held in numpy object arrays;
floating quantities are plain float64 arrays.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Iterable

import numpy as np

Number = int | float | Fraction


def to_fraction(x) -> Fraction:
    """Convert ``x`` to a Fraction without going through binary rounding for strings."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r} has no rational form")
        # repr gives the shortest decimal that round-trips, so 0.1 -> 1/10
        return Fraction(repr(float(x)))
    # flint.fmpq and friends
    if hasattr(x, "p") and hasattr(x, "q"):
        return Fraction(int(x.p), int(x.q))
    return Fraction(x)


def frac_array(values: Iterable) -> np.ndarray:
    return np.array([to_fraction(v) for v in values] or [], dtype=object)


def float_array(values: Iterable) -> np.ndarray:
    return np.array([float(v) for v in values], dtype=float)


def as_mode(values: Iterable, exact: bool) -> np.ndarray:
    return frac_array(values) if exact else float_array(values)


def zeros(n: int, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(n, dtype=object)
        out[:] = Fraction(0)
        return out
    return np.zeros(n)


def is_exact(arr: np.ndarray) -> bool:
    return arr.dtype == object


def fmt_number(x, exact: bool) -> str:
    """Canonical text form: ``p/q`` for rationals, 17 significant digits for floats."""
    if exact:
        f = to_fraction(x)
        return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"
    return format(float(x), ".17g")


def parse_number(text: str, exact: bool):
    f = Fraction(text.strip())
    return f if exact else float(f)


def scaled_ints(values: np.ndarray) -> tuple[np.ndarray, int]:
    """Rescale an array of Fractions to integers with a common denominator.

    Returns ``(ints, scale)`` with ``values == ints / scale``. The result is
    int64 when that cannot overflow in the callers' sums, otherwise object
    (Python int). Callers combine at most a few thousand products, so the
    headroom kept below 2**62 is generous.
    """
    fr = [to_fraction(v) for v in values]
    scale = 1
    for f in fr:
        scale = math.lcm(scale, f.denominator)
    ints = [f.numerator * (scale // f.denominator) for f in fr]
    big = max((abs(i) for i in ints), default=0)
    if big < 2**24:
        return np.array(ints, dtype=np.int64), scale
    return np.array(ints, dtype=object), scale
