"""Poisson point processes, the gap-profile warp, and skew-product orbits.

The warp acts componentwise: each axis has a point process realized from
seeded exponential gaps grown outward from 0 (indexing convention
... < a_{-1} < a_0 <= 0 < a_1 < ...), and maps the gap [a_i, a_{i+1})
onto [i, i+1) through a smooth density profile.  The profile family
phi_gap(t) = exp(-A * g(t / gap)) is 1 near both gap ends, has unit
integral over the gap (A solved per gap), and varies continuously with
the gap length, so the warp is a smooth increasing bijection of the line
sending a_i to i exactly.

Point processes extend their realized window lazily; extension never
changes previously realized points (counter-based draws).
"""

from __future__ import annotations

import bisect
import io
import threading
from dataclasses import dataclass, field
from math import cos, exp, floor, pi
from typing import Callable

import numpy as np

from .maps import iterate_map
from .rng import exponential

__all__ = [
    "GapProfile",
    "LatticeProcess",
    "PointProcess",
    "WarpMap",
    "DeformedField",
    "sample_process",
    "solve_tilt",
    "warp_eval",
    "warp_jacobian",
    "warp_inverse",
    "deformed_eval",
    "skew_orbit",
    "two_point_jump_process",
    "SkewState",
]


# ---------------------------------------------------------------------------
# point processes


class PointProcess:
    """Seeded Poisson-type process on the line with lazy window growth.

    a(i) follows the convention a_0 <= 0 < a_1; count_signed(x) is the
    number of points in (0, x], negated for x < 0.
    """

    def __init__(self, intensity: float, seed: int, window: tuple[float, float] = (-1.0, 1.0)):
        if intensity <= 0:
            raise ValueError("intensity must be positive")
        if not window[0] <= 0.0 <= window[1]:
            raise ValueError("window must contain 0")
        self.intensity = float(intensity)
        self.seed = int(seed)
        self._right: list[float] = []  # a_1, a_2, ...
        self._left: list[float] = []  # a_0, a_{-1}, ...
        self._lock = threading.Lock()
        self.ensure_window(window[0], window[1])

    def _gap(self, direction: int, k: int) -> float:
        return exponential(self.intensity, self.seed, direction, k)

    def ensure_window(self, lo: float, hi: float) -> None:
        """Realize points covering [lo, hi]; previously realized points keep."""
        with self._lock:
            while not self._right or self._right[-1] <= hi:
                prev = self._right[-1] if self._right else 0.0
                self._right.append(prev + self._gap(1, len(self._right)))
            while not self._left or self._left[-1] >= lo:
                prev = self._left[-1] if self._left else 0.0
                self._left.append(prev - self._gap(0, len(self._left)))

    @property
    def window(self) -> tuple[float, float]:
        return (self._left[-1], self._right[-1])

    def point(self, i: int) -> float:
        """a_i; realizes lazily for any integer index."""
        if i >= 1:
            with self._lock:
                while len(self._right) < i:
                    prev = self._right[-1] if self._right else 0.0
                    self._right.append(prev + self._gap(1, len(self._right)))
            return self._right[i - 1]
        with self._lock:
            while len(self._left) < 1 - i:
                prev = self._left[-1] if self._left else 0.0
                self._left.append(prev - self._gap(0, len(self._left)))
        return self._left[-i]

    def gap_index(self, x: float) -> int:
        """Index i with a_i <= x < a_{i+1} (lower point uses <=, upper strict >)."""
        x = float(x)
        self.ensure_window(min(x, -1e-9), max(x, 1e-9))
        if x >= self._right[0]:
            # bisect_right gives #points <= x among the right points
            return bisect.bisect_right(self._right, x)
        lefts_desc = self._left  # a_0 > a_{-1} > ...
        lo, hi = 0, len(lefts_desc)
        while lefts_desc[-1] > x:
            self.ensure_window(x - 1.0, 0.0)
        # find smallest m with a_{-m} <= x
        m = 0
        while lefts_desc[m] > x:
            m += 1
        return -m

    def count_signed(self, x: float) -> int:
        """Points in (0, x], with a minus sign if x < 0."""
        if x >= 0:
            return self.gap_index(x)
        # points in (x, 0] counted negatively: those are a_0, ..., a_{gap+1}
        return self.gap_index(x)

    def points_in(self, lo: float, hi: float) -> list[float]:
        self.ensure_window(lo, hi)
        pts = [p for p in reversed(self._left) if lo <= p <= hi]
        pts += [p for p in self._right if lo <= p <= hi]
        return pts

    def to_csv(self) -> str:
        """Sorted CSV of realized points with a seed/intensity header."""
        buf = io.StringIO()
        buf.write(f"# intensity={self.intensity!r} seed={self.seed}\n")
        buf.write("index,point\n")
        lo_i = -(len(self._left) - 1)
        hi_i = len(self._right)
        for i in range(lo_i, hi_i + 1):
            buf.write(f"{i},{self.point(i)!r}\n")
        return buf.getvalue()


class LatticeProcess(PointProcess):
    """Integer-lattice test hook: a_i = i exactly, so the warp is the identity."""

    def __init__(self):
        super().__init__(intensity=1.0, seed=0, window=(-2.0, 2.0))

    def _gap(self, direction: int, k: int) -> float:
        # the first left "gap" is zero so that a_0 = 0 exactly
        return 0.0 if (direction == 0 and k == 0) else 1.0


class ExplicitProcess(PointProcess):
    """Test hook with a fixed point list (must satisfy a_0 <= 0 < a_1)."""

    def __init__(self, points: list[float]):
        pts = sorted(float(p) for p in points)
        if not any(p <= 0 for p in pts) or not any(p > 0 for p in pts):
            raise ValueError("need points on both sides of 0")
        self._pts = pts
        self._zero_pos = max(k for k, p in enumerate(pts) if p <= 0.0)
        super().__init__(intensity=1.0, seed=0, window=(pts[0], pts[-1]))

    def _gap(self, direction: int, k: int) -> float:
        if direction == 1:
            idx = self._zero_pos + 1 + k
            prev = self._pts[idx - 1] if k > 0 else 0.0
            if idx < len(self._pts):
                return self._pts[idx] - prev
        else:
            idx = self._zero_pos - k
            prev = self._pts[idx + 1] if k > 0 else 0.0
            if idx >= 0:
                return prev - self._pts[idx]
        return 1.0  # pad beyond the explicit list with unit gaps


def sample_process(intensity: float, seed: int, window: tuple[float, float]) -> PointProcess:
    return PointProcess(intensity, seed, window)


# ---------------------------------------------------------------------------
# gap profile


_ETA0 = 1.0 / 8.0


def _smooth_ramp(s: float) -> float:
    """C-infinity 0 -> 1 ramp on [0, 1]."""
    if s <= 0.0:
        return 0.0
    if s >= 1.0:
        return 1.0
    a = exp(-1.0 / s)
    b = exp(-1.0 / (1.0 - s))
    return a / (a + b)


def profile_margin(gap: float) -> float:
    """Collar fraction eta(gap) = min(1/8, 1/(4*gap))."""
    return min(_ETA0, 1.0 / (4.0 * gap))


def _plateau_bump(u: float, eta: float) -> float:
    """g: 0 on [0,eta] and [1-eta,1], 1 on [2*eta, 1-2*eta], smooth joins."""
    if u < eta:
        return 0.0
    if u < 2 * eta:
        return _smooth_ramp((u - eta) / eta)
    if u <= 1 - 2 * eta:
        return 1.0
    if u < 1 - eta:
        return _smooth_ramp((1 - eta - u) / eta)
    return 0.0


_CHEB_N = 64
_CHEB_NODES = np.cos(np.arange(_CHEB_N + 1) * pi / _CHEB_N)  # 1 .. -1


def _cheb_fit(f: Callable[[float], float], a: float, b: float) -> np.ndarray:
    x = 0.5 * (a + b) + 0.5 * (b - a) * _CHEB_NODES
    y = np.array([f(v) for v in x])
    # type-I DCT by direct cosine sums (N is small)
    n = _CHEB_N
    j = np.arange(n + 1)
    coef = np.empty(n + 1)
    for k in range(n + 1):
        w = np.ones(n + 1)
        w[0] = w[-1] = 0.5
        coef[k] = (2.0 / n) * np.sum(w * y * np.cos(pi * k * j / n))
    coef[0] *= 0.5
    coef[-1] *= 0.5
    return coef


def _cheb_eval(coef: np.ndarray, a: float, b: float, x: float) -> float:
    t = (2.0 * x - a - b) / (b - a)
    b1 = b2 = 0.0
    for c in coef[:0:-1]:
        b1, b2 = 2.0 * t * b1 - b2 + c, b1
    return t * b1 - b2 + coef[0]


def _cheb_antideriv(coef: np.ndarray, a: float, b: float) -> np.ndarray:
    """Coefficients of the antiderivative vanishing at a.

    coef[0] is stored unhalved (plain T_0 weight), so the k = 1 term is
    coef[0] - coef[2]/2 rather than the halved-convention formula.
    """
    n = len(coef) - 1
    out = np.zeros(n + 2)
    out[1] = coef[0] - (coef[2] if n >= 2 else 0.0) / 2.0
    for k in range(2, n):
        out[k] = (coef[k - 1] - coef[k + 1]) / (2.0 * k)
    out[n] = coef[n - 1] / (2.0 * n)
    out[n + 1] = coef[n] / (2.0 * (n + 1))
    out *= 0.5 * (b - a)
    # fix the constant so the value at a (t = -1) is 0
    t = -1.0
    b1 = b2 = 0.0
    for c in out[:0:-1]:
        b1, b2 = 2.0 * t * b1 - b2 + c, b1
    out[0] = -(t * b1 - b2)
    return out


@dataclass(frozen=True)
class GapProfile:
    """The family phi_gap(t) = exp(-tilt(gap) * g(t / gap)) on [0, gap]."""

    eta0: float = _ETA0

    def margin(self, gap: float) -> float:
        return profile_margin(gap)

    def tilt_integral(self, gap: float, tilt: float) -> float:
        """integral_0^gap exp(-tilt * g(t/gap)) dt, to near machine accuracy."""
        eta = self.margin(gap)
        join = _cheb_fit(lambda u: exp(-tilt * _plateau_bump(u, eta)), eta, 2 * eta)
        anti = _cheb_antideriv(join, eta, 2 * eta)
        join_mass = _cheb_eval(anti, eta, 2 * eta, 2 * eta)
        return gap * (2 * eta + (1 - 4 * eta) * exp(-tilt) + 2 * join_mass)

    def density(self, gap: float, tilt: float, t: float) -> float:
        eta = self.margin(gap)
        return exp(-tilt * _plateau_bump(t / gap, eta))


def solve_tilt(profile: GapProfile, gap: float, tol: float = 1e-13) -> float:
    """Unique tilt A with integral_0^gap phi_gap = 1.

    Monotone bisection bracket plus Newton polish; |residual| <= 1e-12.
    A < 0 for gap < 1, A = 0 for gap = 1, A > 0 for gap > 1.
    """
    if gap <= 0:
        raise ValueError("gap must be positive")
    if gap == 1.0:
        return 0.0

    def resid(a: float) -> float:
        return profile.tilt_integral(gap, a) - 1.0

    lo, hi = -1.0, 1.0
    while resid(lo) < 0.0:
        lo *= 2.0
        if lo < -800:
            raise RuntimeError("tilt bracket failed (gap too small)")
    while resid(hi) > 0.0:
        hi *= 2.0
        if hi > 800:
            raise RuntimeError("tilt bracket failed (gap too large)")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        r = resid(mid)
        if abs(r) <= tol * 0.5:
            return mid
        if r > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, abs(mid)):
            return 0.5 * (lo + hi)
    return 0.5 * (lo + hi)


class _GapWarp:
    """Cached normalized cumulative of phi_gap on one realized gap."""

    def __init__(self, profile: GapProfile, gap: float):
        self.gap = gap
        self.eta = profile.margin(gap)
        self.tilt = solve_tilt(profile, gap)
        eta, gap_, tilt = self.eta, gap, self.tilt
        b = [0.0, eta * gap_, 2 * eta * gap_, (1 - 2 * eta) * gap_, (1 - eta) * gap_, gap_]
        join1 = _cheb_fit(lambda t: profile.density(gap_, tilt, t), b[1], b[2])
        join2 = _cheb_fit(lambda t: profile.density(gap_, tilt, t), b[3], b[4])
        self._j1 = _cheb_antideriv(join1, b[1], b[2])
        self._j2 = _cheb_antideriv(join2, b[3], b[4])
        self._b = b
        c1 = b[1]  # mass of the first collar (density 1)
        c2 = c1 + _cheb_eval(self._j1, b[1], b[2], b[2])
        c3 = c2 + exp(-tilt) * (b[3] - b[2])
        c4 = c3 + _cheb_eval(self._j2, b[3], b[4], b[4])
        total = c4 + (b[5] - b[4])
        self._c = (0.0, c1, c2, c3, c4)
        self.total = total  # = 1 up to the tilt solver residual
        self._profile = profile

    def cumulative(self, s: float) -> float:
        """Normalized cumulative mass on [0, s]; exactly 0 at 0 and 1 at gap."""
        b, c = self._b, self._c
        if s <= 0.0:
            return 0.0
        if s >= self.gap:
            return 1.0
        if s < b[1]:
            raw = s
        elif s < b[2]:
            raw = c[1] + _cheb_eval(self._j1, b[1], b[2], s)
        elif s < b[3]:
            raw = c[2] + exp(-self.tilt) * (s - b[2])
        elif s < b[4]:
            raw = c[3] + _cheb_eval(self._j2, b[3], b[4], s)
        else:
            raw = c[4] + (s - b[4])
        return raw / self.total

    def density_at(self, s: float) -> float:
        """phi_gap(s) itself (unnormalized; equals 1 exactly in the collars)."""
        return self._profile.density(self.gap, self.tilt, s)

    def invert(self, frac: float) -> float:
        """s with cumulative(s) = frac, frac in [0, 1)."""
        lo, hi = 0.0, self.gap
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            r = self.cumulative(mid) - frac
            if abs(r) < 1e-15:
                return mid
            if r < 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-15 * self.gap:
                break
        return 0.5 * (lo + hi)


class _WarpAxis:
    def __init__(self, process: PointProcess, profile: GapProfile):
        self.process = process
        self.profile = profile
        self._gaps: dict[int, _GapWarp] = {}
        self._lock = threading.Lock()

    def _gap_warp(self, i: int) -> tuple[float, _GapWarp]:
        a_i = self.process.point(i)
        with self._lock:
            gw = self._gaps.get(i)
            if gw is None:
                gap = self.process.point(i + 1) - a_i
                gw = _GapWarp(self.profile, gap)
                self._gaps[i] = gw
        return a_i, gw

    def value(self, x: float) -> float:
        i = self.process.gap_index(x)
        a_i, gw = self._gap_warp(i)
        return i + gw.cumulative(x - a_i)

    def derivative(self, x: float) -> float:
        i = self.process.gap_index(x)
        a_i, gw = self._gap_warp(i)
        return gw.density_at(x - a_i)

    def inverse(self, val: float) -> float:
        i = floor(val)
        a_i, gw = self._gap_warp(i)
        return a_i + gw.invert(val - i)


@dataclass
class WarpMap:
    """Componentwise smooth increasing bijection sending (a_i, b_j) to (i, j)."""

    mu: PointProcess
    nu: PointProcess
    profile: GapProfile = field(default_factory=GapProfile)

    def __post_init__(self):
        self._ax = _WarpAxis(self.mu, self.profile)
        self._ay = _WarpAxis(self.nu, self.profile)


def warp_eval(w: WarpMap, x: float, y: float) -> np.ndarray:
    return np.array([w._ax.value(x), w._ay.value(y)])


def warp_jacobian(w: WarpMap, x: float, y: float) -> tuple[float, float]:
    """Diagonal of the Jacobian; both entries positive, 1 in gap collars."""
    return (w._ax.derivative(x), w._ay.derivative(y))


def warp_inverse(w: WarpMap, X: float, Y: float) -> np.ndarray:
    return np.array([w._ax.inverse(X), w._ay.inverse(Y)])


@dataclass(frozen=True)
class DeformedField:
    """Pullback of a plane field through the warp: field(warp(p)) / jacobian."""

    warp: WarpMap
    psi: object  # evaluable plane field

    def eval(self, p) -> np.ndarray:
        x, y = float(p[0]), float(p[1])
        q = warp_eval(self.warp, x, y)
        d1, d2 = warp_jacobian(self.warp, x, y)
        f = self.psi.eval if hasattr(self.psi, "eval") else self.psi
        v = np.asarray(f(q), dtype=float)
        return np.array([v[0] / d1, v[1] / d2])

    def __call__(self, p) -> np.ndarray:
        return self.eval(p)


def deformed_eval(f: DeformedField, p) -> np.ndarray:
    return f.eval(p)


# ---------------------------------------------------------------------------
# skew products


@dataclass(frozen=True)
class SkewState:
    shift: float
    jump_count: int
    x: float


def skew_orbit(map1, mu: PointProcess, x0: float, v: float) -> SkewState:
    """Base point after the signed number of jumps recorded by mu on (0, v]."""
    if not 0.0 <= x0 < 1.0:
        raise ValueError("x0 must lie in [0, 1)")
    count = mu.count_signed(v)
    return SkewState(shift=v, jump_count=count, x=iterate_map(map1, x0, count))


def two_point_jump_process(
    map1,
    mu: PointProcess,
    mu_prime: PointProcess,
    x0: float,
    x0p: float,
    horizon: float,
) -> list[tuple[float, float, float]]:
    """Piecewise-constant path of the paired jump process on [0, horizon].

    Returns (time, x, x') rows: the state from that time until the next
    row.  Jumps at points of mu act on the first coordinate; jumps at
    points of mu_prime act on the second, in merged time order.
    """
    if not (0.0 <= x0 < 1.0 and 0.0 <= x0p < 1.0):
        raise ValueError("start must lie in [0,1)^2")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    jumps = [(t, 0) for t in mu.points_in(0.0, horizon) if t > 0.0]
    jumps += [(t, 1) for t in mu_prime.points_in(0.0, horizon) if t > 0.0]
    jumps.sort()
    path = [(0.0, x0, x0p)]
    x, xp = x0, x0p
    for t, which in jumps:
        if which == 0:
            x = map1(x)
        else:
            xp = map1(xp)
        path.append((t, x, xp))
    return path
