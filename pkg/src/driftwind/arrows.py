"""Up-right arrow fields on Z^2 and the lattice walks they generate.

An arrow field assigns Right or Up to every integer cell.  All field
variants are pure: the arrow at (i, j) is a function of the spec alone,
so unbounded fields are queried lazily with no global state.  The
RunSchedule variant reproduces the corridor phenomenon (long same-arrow
stretches with rapidly growing lengths) deterministically; it is neither
stationary nor weakly mixing and does not pretend to be.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Sequence

from .maps import iterate_map
from .rng import uniform01


class Arrow(Enum):
    RIGHT = "r"
    UP = "u"

    @property
    def vector(self) -> tuple[int, int]:
        return (1, 0) if self is Arrow.RIGHT else (0, 1)


def double_exponential_lengths(k: int) -> int:
    """Run-length rule L_k = 2**(2**k): 2, 4, 16, 256, 65536, ..."""
    return 2 ** (2**k)


@dataclass(frozen=True)
class Constant:
    arrow: Arrow


@dataclass(frozen=True)
class IID:
    """Independent arrows, P(Right) = p_right, keyed by (seed, i, j)."""

    p_right: float
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.p_right <= 1.0:
            raise ValueError(f"p_right must be in [0,1], got {self.p_right}")


@dataclass(frozen=True)
class RunSchedule:
    """Deterministic anti-diagonal runs.

    The arrow at (i, j) depends only on the level n = i + j.  Levels
    m = n - phase >= 0 are partitioned into consecutive runs of lengths
    lengths(0), lengths(1), ... with alternating arrows, run 0 = Right.
    Levels with m < 0 (before the schedule origin) are Right.
    """

    lengths: Callable[[int], int]
    phase: int = 0
    _boundaries: list = field(default_factory=lambda: [0], repr=False, compare=False)

    def run_index(self, m: int) -> int:
        """Index k of the run containing schedule level m >= 0."""
        if m < 0:
            raise ValueError("run_index needs m >= 0")
        b = self._boundaries
        while b[-1] <= m:
            k = len(b) - 1
            length = self.lengths(k)
            if length < 1:
                raise ValueError(f"run length L_{k} = {length} is not positive")
            b.append(b[-1] + length)
        lo, hi = 0, len(b) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if b[mid] <= m:
                lo = mid
            else:
                hi = mid
        return lo


@dataclass(frozen=True)
class ProductSystem:
    """Arrow field driven by the product of two self-maps of [0,1).

    arrow(i, j) = classifier(map1^i(point_x), map2^j(point_y)).  Negative
    coordinates need maps exposing an ``inverse`` callable.  No mixing
    property of the surrogate maps is claimed or relied upon.
    """

    point_x: float
    point_y: float
    map1: Callable[[float], float]
    map2: Callable[[float], float]
    classifier: Callable[[float, float], Arrow]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def _iterate(self, axis: int, n: int) -> float:
        key = (axis, n)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        m = self.map1 if axis == 0 else self.map2
        x0 = self.point_x if axis == 0 else self.point_y
        x = iterate_map(m, x0, n)
        self._cache[key] = x
        return x


ArrowFieldSpec = Constant | IID | RunSchedule | ProductSystem


def arrow_at(spec: ArrowFieldSpec, i: int, j: int) -> Arrow:
    """Arrow of the field at cell (i, j); pure and random-access."""
    if isinstance(spec, Constant):
        return spec.arrow
    if isinstance(spec, IID):
        return Arrow.RIGHT if uniform01(spec.seed, i, j) < spec.p_right else Arrow.UP
    if isinstance(spec, RunSchedule):
        m = i + j - spec.phase
        if m < 0:
            return Arrow.RIGHT
        return Arrow.RIGHT if spec.run_index(m) % 2 == 0 else Arrow.UP
    if isinstance(spec, ProductSystem):
        return spec.classifier(spec._iterate(0, i), spec._iterate(1, j))
    raise TypeError(f"unknown arrow field spec {spec!r}")


@dataclass(frozen=True)
class LatticeWalk:
    start: tuple[int, int]
    steps: tuple[Arrow, ...]
    positions: tuple[tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.steps)


def walk(spec: ArrowFieldSpec, z: tuple[int, int], n: int) -> LatticeWalk:
    """Follow the arrows for n steps starting from z."""
    if n < 0:
        raise ValueError("step count must be >= 0")
    i, j = int(z[0]), int(z[1])
    positions = [(i, j)]
    steps = []
    for _ in range(n):
        a = arrow_at(spec, i, j)
        di, dj = a.vector
        i, j = i + di, j + dj
        steps.append(a)
        positions.append((i, j))
    return LatticeWalk(start=(int(z[0]), int(z[1])), steps=tuple(steps), positions=tuple(positions))


@dataclass(frozen=True)
class CoalescenceReport:
    merged: tuple  # (start_a, start_b, meeting point) triples
    unresolved: tuple  # (start_a, start_b) pairs

    @property
    def all_merged(self) -> bool:
        return not self.unresolved


def coalescence_check(
    spec: ArrowFieldSpec, starts: Sequence[tuple[int, int]], max_steps: int
) -> CoalescenceReport:
    """Look for pairwise meeting points within max_steps steps of each walk.

    "Unresolved" is an honest finite-horizon answer, not an error: walks
    that have not met within the horizon may still coalesce later.
    """
    if not starts:
        raise ValueError("starts must be nonempty")
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    visits = []
    for z in starts:
        w = walk(spec, z, max_steps)
        first_seen: dict[tuple[int, int], int] = {}
        for idx, p in enumerate(w.positions):
            first_seen.setdefault(p, idx)
        visits.append(first_seen)
    merged, unresolved = [], []
    for a in range(len(starts)):
        for b in range(a + 1, len(starts)):
            common = visits[a].keys() & visits[b].keys()
            if common:
                meet = min(common, key=lambda p: (visits[a][p] + visits[b][p], p))
                merged.append((tuple(starts[a]), tuple(starts[b]), meet))
            else:
                unresolved.append((tuple(starts[a]), tuple(starts[b])))
    return CoalescenceReport(merged=tuple(merged), unresolved=tuple(unresolved))


def slope_extremes_walk(w: LatticeWalk, burn_in: int = 0) -> tuple[Fraction, Fraction]:
    """Exact rational (min, max) of position_y / position_x over n >= burn_in.

    The n = burn_in position is included, matching direct enumeration of
    the constant-field case (walk from (1,1): slopes 1/(1+n), max 1 at n=0).
    """
    lo = hi = None
    for n in range(burn_in, len(w.positions)):
        x, y = w.positions[n]
        if x == 0:
            raise ZeroDivisionError(
                f"walk position {n} has x = 0; shift the start into the open quadrant"
            )
        s = Fraction(y, x)
        lo = s if lo is None or s < lo else lo
        hi = s if hi is None or s > hi else hi
    if lo is None:
        raise ValueError("no positions at or beyond burn_in")
    return lo, hi
