"""Measure-preserving self-maps of [0,1) used by product systems and skew products."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Rotation:
    """Circle rotation x -> x + theta (mod 1); invertible."""

    theta: float

    def __call__(self, x: float) -> float:
        return (x + self.theta) % 1.0

    def inverse(self, x: float) -> float:
        return (x - self.theta) % 1.0


def iterate_map(m, x: float, n: int) -> float:
    """Apply m (or its inverse for n < 0) |n| times.

    Negative n requires m to expose an ``inverse`` callable.
    """
    if n >= 0:
        for _ in range(n):
            x = m(x)
        return x
    inv = getattr(m, "inverse", None)
    if inv is None:
        raise ValueError("negative iteration count needs an invertible map")
    for _ in range(-n):
        x = inv(x)
    return x
