"""Small numeric helpers shared by the modules: exact/float scalars, log-domain
sums and seeded random streams."""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Union

import numpy as np

Number = Union[int, float, Fraction]

GENERATOR_NAME = f"numpy-{np.__version__}/Philox4x64+SeedSequence"


def is_exact(*values) -> bool:
    return all(isinstance(v, Rational) for v in values)


def to_exact(x: Number) -> Number:
    """Ints become Fractions; floats are kept as they are."""
    if isinstance(x, Rational):
        return Fraction(x)
    return x


def exact_sum(values: Iterable[Number]) -> Number:
    """Sum that stays exact for rationals and uses fsum as soon as a float shows up."""
    vals = list(values)
    if all(isinstance(v, Rational) for v in vals):
        return sum(vals, Fraction(0))
    return math.fsum(float(v) for v in vals)


def sqrt_exact(x: Fraction) -> Fraction | None:
    """Square root of a nonnegative rational if it is rational, else None."""
    x = Fraction(x)
    if x < 0:
        raise ValueError("negative argument")
    p, q = x.numerator, x.denominator
    rp, rq = math.isqrt(p), math.isqrt(q)
    if rp * rp == p and rq * rq == q:
        return Fraction(rp, rq)
    return None


def sqrt_number(x: Number) -> Number:
    if isinstance(x, Rational):
        r = sqrt_exact(Fraction(x))
        if r is not None:
            return r
    return math.sqrt(float(x))


def pow_sqrt(sq: Number, k: int) -> Number:
    """(sqrt(sq))**k, exact whenever k is even or sq is a rational square."""
    if isinstance(sq, Rational):
        if k % 2 == 0:
            return Fraction(sq) ** (k // 2)
        r = sqrt_exact(Fraction(sq))
        if r is not None:
            return r**k
    return math.sqrt(float(sq)) ** k


def safe_log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def logsumexp(logs: Iterable[float]) -> float:
    vals = [v for v in logs if v != -math.inf]
    if not vals:
        return -math.inf
    m = max(vals)
    if m == math.inf:
        return math.inf
    return m + math.log(math.fsum(math.exp(v - m) for v in vals))


def exp_or_inf(logv: float) -> float:
    if logv > 709.0:
        return math.inf
    return math.exp(logv)


def parse_number(text: str) -> Number:
    """Parse '3', '1/4', '0.25', '1e6'. Integers and ratios stay exact."""
    s = str(text).strip()
    if "/" in s:
        return Fraction(s)
    try:
        return int(s)
    except ValueError:
        pass
    v = float(s)
    if v.is_integer() and abs(v) < 2**53 and ("e" in s.lower()):
        return int(v)
    return v


def format_number(x: Number) -> str:
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else str(x.numerator)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator for a given seed and stream index.

    The same (seed, stream) pair always gives the same numbers, independent of
    how many other streams were drawn before, so every batch element can be
    reproduced on its own.
    """
    ss = np.random.SeedSequence(int(seed) % 2**64, spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))
