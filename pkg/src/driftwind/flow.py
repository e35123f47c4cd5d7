"""Trajectory integration with lattice-crossing events.

Fixed-step classical RK4 over any evaluable planar field; integer-line
crossings are located by bisection on a cubic Hermite interpolant of the
step, so the reported cell sequence is insensitive to the step size.
The space-time construction maps a plane field to a scalar velocity in
[u0, u1] through the shear matrix [[1, 1], [u0, u1]].
"""

from __future__ import annotations

from dataclasses import dataclass
from math import floor, isfinite

import numpy as np

from .arrows import Arrow, ArrowFieldSpec, arrow_at, walk

__all__ = [
    "FlowError",
    "IntegratorSpec",
    "Trajectory",
    "SpaceTimeField",
    "ScalarPath",
    "integrate",
    "visited_cells",
    "in_regular_region",
    "is_regular",
    "spacetime_eval",
    "spacetime_integrate",
]


class FlowError(RuntimeError):
    """Non-finite state during integration; carries the last good (t, point)."""

    def __init__(self, message: str, t: float, point):
        super().__init__(message)
        self.t = t
        self.point = tuple(point)


@dataclass(frozen=True)
class IntegratorSpec:
    """RK4 on a fixed output grid with local substep refinement.

    Smooth stretches advance in single steps of size `step`.  Where the
    velocity varies strongly within a step (detected by the cheap stage
    spread pre-filter `refine_trigger`), the step is checked against two
    half steps and subdivided until the Richardson difference falls
    below `refine_tol`.  Warped fields concentrate huge velocity
    gradients in tiny gap collars that a bare kilostep overruns, so
    plain fixed-step RK4 cannot reach trajectory tolerances there; the
    refinement is local and leaves smooth-field costs unchanged.
    """

    step: float = 1e-3
    crossing_tol: float = 1e-10
    max_time: float = 50.0
    sample_stride: int = 10  # store every K-th step (plus all events)
    refine_trigger: float = 5e-5  # on h * (spread of RK4 stage velocities)
    refine_tol: float = 1e-9  # on the one-step vs two-half-steps gap
    max_refine_depth: int = 16

    def __post_init__(self):
        if self.step <= 0 or self.crossing_tol <= 0 or self.max_time <= 0:
            raise ValueError("step, crossing_tol and max_time must be positive")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")
        if self.refine_trigger <= 0 or self.refine_tol <= 0:
            raise ValueError("refinement thresholds must be positive")


@dataclass(frozen=True)
class CrossingEvent:
    time: float
    axis: str  # 'x' for a line x = const, 'y' for y = const
    line: int  # the integer line crossed
    cell: tuple[int, int]  # cell entered


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    points: np.ndarray  # (n, 2)
    events: tuple[CrossingEvent, ...]

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]


def _hermite(p0, v0, p1, v1, h, s):
    """Cubic Hermite value at fraction s of a step of size h."""
    s2, s3 = s * s, s * s * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    return h00 * p0 + (h10 * h) * v0 + h01 * p1 + (h11 * h) * v1


def integrate(field, z, spec: IntegratorSpec) -> Trajectory:
    """RK4 path of dp/dt = field(p) from z up to max_time.

    field: callable point -> length-2 array, bounded and smooth (up to
    localized sharp features handled by substep refinement).
    """
    f = field.eval if hasattr(field, "eval") else field

    def rk4(p, v1, h):
        k2 = np.asarray(f(p + 0.5 * h * v1), dtype=float)
        k3 = np.asarray(f(p + 0.5 * h * k2), dtype=float)
        k4 = np.asarray(f(p + h * k3), dtype=float)
        spread = float(
            max(
                max(v1[0], k2[0], k3[0], k4[0]) - min(v1[0], k2[0], k3[0], k4[0]),
                max(v1[1], k2[1], k3[1], k4[1]) - min(v1[1], k2[1], k3[1], k4[1]),
            )
        )
        return p + (h / 6.0) * (v1 + 2 * k2 + 2 * k3 + k4), spread

    events: list[CrossingEvent] = []

    def advance(p, v_here, t, h, depth):
        """One (possibly refined) step; returns (p_new, v_new)."""
        p1, spread = rk4(p, v_here, h)
        if h * spread <= spec.refine_trigger or depth >= spec.max_refine_depth:
            if not (isfinite(p1[0]) and isfinite(p1[1])):
                raise FlowError(f"non-finite state at t={t + h}", t, p)
            v1 = np.asarray(f(p1), dtype=float)
            _collect_crossings(events, p, v_here, p1, v1, t, h, spec.crossing_tol)
            return p1, v1
        # sharp feature inside the step: compare with two half steps
        hm = 0.5 * h
        pa, _ = rk4(p, v_here, hm)
        va = np.asarray(f(pa), dtype=float)
        pb, _ = rk4(pa, va, hm)
        if float(np.max(np.abs(pb - p1))) <= spec.refine_tol:
            if not (isfinite(pb[0]) and isfinite(pb[1])):
                raise FlowError(f"non-finite state at t={t + h}", t, p)
            vb = np.asarray(f(pb), dtype=float)
            _collect_crossings(events, p, v_here, pa, va, t, hm, spec.crossing_tol)
            _collect_crossings(events, pa, va, pb, vb, t + hm, hm, spec.crossing_tol)
            return pb, vb
        pa, va = advance(p, v_here, t, hm, depth + 1)
        return advance(pa, va, t + hm, hm, depth + 1)

    h = spec.step
    n_steps = int(round(spec.max_time / h))
    p = np.array([float(z[0]), float(z[1])])
    t = 0.0
    times = [0.0]
    pts = [p.copy()]
    v_here = np.asarray(f(p), dtype=float)
    for k in range(n_steps):
        p, v_here = advance(p, v_here, t, h, 0)
        t += h
        if (k + 1) % spec.sample_stride == 0 or k == n_steps - 1:
            times.append(t)
            pts.append(p.copy())
    return Trajectory(times=np.array(times), points=np.array(pts), events=tuple(events))


def _collect_crossings(events, p0, v0, p1, v1, t0, h, tol):
    """Integer-line crossings inside one step, refined on the Hermite interpolant."""
    found = []
    for axis, idx in (("x", 0), ("y", 1)):
        lo_line = floor(min(p0[idx], p1[idx]))
        hi_line = floor(max(p0[idx], p1[idx]))
        for line in range(lo_line + 1, hi_line + 1):
            s = _bisect_crossing(p0[idx], v0[idx], p1[idx], v1[idx], h, float(line), tol)
            if s is not None:
                found.append((t0 + s * h, axis, line, s))
    found.sort()
    for t_cross, axis, line, s in found:
        px = _hermite(p0[0], v0[0], p1[0], v1[0], h, s)
        py = _hermite(p0[1], v0[1], p1[1], v1[1], h, s)
        if axis == "x":
            cell = (line if p1[0] > p0[0] else line - 1, floor(py))
        else:
            cell = (floor(px), line if p1[1] > p0[1] else line - 1)
        events.append(CrossingEvent(time=t_cross, axis=axis, line=line, cell=cell))


def _bisect_crossing(x0, v0, x1, v1, h, line, tol):
    g0 = x0 - line
    g1 = x1 - line
    if g0 == 0.0:
        return 0.0
    if g0 * g1 > 0:
        return None
    lo, hi = 0.0, 1.0
    glo = g0
    while (hi - lo) * max(abs(x1 - x0), 1.0) > tol:
        mid = 0.5 * (lo + hi)
        gm = _hermite(x0, v0, x1, v1, h, mid) - line
        if gm == 0.0:
            return mid
        if glo * gm < 0:
            hi = mid
        else:
            lo, glo = mid, gm
    return 0.5 * (lo + hi)


def visited_cells(traj: Trajectory) -> list[tuple[int, int]]:
    """Lattice cells in visit order: start cell then event cells, deduplicated."""
    cells = [(floor(traj.points[0][0]), floor(traj.points[0][1]))]
    for ev in traj.events:
        if ev.cell != cells[-1]:
            cells.append(ev.cell)
    return cells


def in_regular_region(p, spec: ArrowFieldSpec, delta: float) -> bool:
    """Membership in the trapping region of the containing cell.

    Right cells trap y - j <= 2/3 - delta; up cells trap x - i <= 2/3 - delta.
    """
    x, y = float(p[0]), float(p[1])
    i, j = floor(x), floor(y)
    if arrow_at(spec, i, j) is Arrow.RIGHT:
        return y - j <= 2.0 / 3.0 - delta
    return x - i <= 2.0 / 3.0 - delta


def is_regular(traj: Trajectory, spec: ArrowFieldSpec) -> bool:
    """True iff the trajectory's cell sequence equals the lattice walk's."""
    cells = visited_cells(traj)
    if len(cells) < 2:
        raise ValueError("trajectory visits fewer than 2 cells")
    w = walk(spec, cells[0], len(cells) - 1)
    return list(w.positions) == cells


# ---------------------------------------------------------------------------
# space-time construction


@dataclass(frozen=True)
class SpaceTimeField:
    """Scalar velocity u(t, x) in [u0, u1] from a plane field.

    The plane trajectory maps to space-time through A = [[1, 1], [u0, u1]];
    the resulting velocity is the slope of the pushforward,
    (u0 w1 + u1 w2) / (w1 + w2) with w the plane field at A^{-1} (t, x).
    """

    base: object  # evaluable plane field (callable or .eval)
    u0: float
    u1: float

    def __post_init__(self):
        if not 0 <= self.u0 < self.u1:
            raise ValueError("need 0 <= u0 < u1")

    def plane_point(self, t: float, x: float) -> np.ndarray:
        det = self.u1 - self.u0
        return np.array([(self.u1 * t - x) / det, (x - self.u0 * t) / det])

    def eval(self, t: float, x: float) -> float:
        f = self.base.eval if hasattr(self.base, "eval") else self.base
        w = np.asarray(f(self.plane_point(t, x)), dtype=float)
        s = w[0] + w[1]
        if s <= 0:
            raise FlowError(f"degenerate field sum {s} at (t={t}, x={x})", t, (t, x))
        # the underlying field is componentwise nonnegative; clip the
        # cached-grid interpolation wiggle so u stays a convex combination
        w0 = max(w[0], 0.0)
        w1 = max(w[1], 0.0)
        return float((self.u0 * w0 + self.u1 * w1) / (w0 + w1))


def spacetime_eval(f: SpaceTimeField, t: float, x: float) -> float:
    return f.eval(t, x)


@dataclass(frozen=True)
class ScalarPath:
    times: np.ndarray
    xs: np.ndarray

    def running_average(self) -> np.ndarray:
        """(x(t) - x0) / (t - t0) at the sampled times after the start."""
        dt = self.times[1:] - self.times[0]
        return (self.xs[1:] - self.xs[0]) / dt


def spacetime_integrate(
    f: SpaceTimeField, t0: float, x0: float, horizon: float, spec: IntegratorSpec
) -> ScalarPath:
    """Scalar RK4 path of dx/dt = u(t, x) on [t0, t0 + horizon]."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    h = spec.step
    n_steps = int(round(horizon / h))
    t, x = float(t0), float(x0)
    times = [t]
    xs = [x]
    for k in range(n_steps):
        k1 = f.eval(t, x)
        k2 = f.eval(t + 0.5 * h, x + 0.5 * h * k1)
        k3 = f.eval(t + 0.5 * h, x + 0.5 * h * k2)
        k4 = f.eval(t + h, x + h * k3)
        x_new = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not isfinite(x_new):
            raise FlowError(f"non-finite state at t={t + h}", t, (t, x))
        t += h
        x = x_new
        if (k + 1) % spec.sample_stride == 0 or k == n_steps - 1:
            times.append(t)
            xs.append(x)
    return ScalarPath(times=np.array(times), xs=np.array(xs))
