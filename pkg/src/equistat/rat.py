"""Exact rational scalars and points with the componentwise lattice order."""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

Rat = Fraction
Point = tuple  # tuple[Fraction, ...]


def rat(x) -> Fraction:
    """Parse an int, Fraction or string ("3", "-1/2", "0.25") exactly.

    Floats are accepted only when they are integral, to keep the arithmetic
    honest; everything else should come in as a string.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if x != int(x):
            raise ValueError(f"inexact float {x!r}; pass it as a string")
        return Fraction(int(x))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except ValueError as exc:
            raise ValueError(f"not a rational: {x!r}") from exc
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


def point(xs: Iterable) -> Point:
    return tuple(rat(x) for x in xs)


def fmt(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def fmt_point(p: Sequence[Fraction]) -> list[str]:
    return [fmt(x) for x in p]


def _check_dims(p: Sequence, q: Sequence) -> None:
    if len(p) != len(q):
        raise ValueError(f"dimension mismatch: {len(p)} vs {len(q)}")


def meet(p: Point, q: Point) -> Point:
    _check_dims(p, q)
    return tuple(min(a, b) for a, b in zip(p, q))


def join(p: Point, q: Point) -> Point:
    _check_dims(p, q)
    return tuple(max(a, b) for a, b in zip(p, q))


def lattice_ops(p: Point, q: Point) -> tuple[Point, Point]:
    return meet(p, q), join(p, q)


def leq(p: Point, q: Point) -> bool:
    return all(a <= b for a, b in zip(p, q))


def lt_strict_somewhere(p: Point, q: Point) -> bool:
    """p <= q and p != q."""
    return leq(p, q) and p != q


def dot(k: Sequence[Fraction], q: Sequence[Fraction]) -> Fraction:
    return sum((a * b for a, b in zip(k, q)), Fraction(0))


def add(p: Point, q: Point) -> Point:
    return tuple(a + b for a, b in zip(p, q))


def sub(p: Point, q: Point) -> Point:
    return tuple(a - b for a, b in zip(p, q))


def scale(c: Fraction, p: Point) -> Point:
    return tuple(c * a for a in p)
