import math

import numpy as np
import pytest

from driftwind.arrows import (
    Arrow,
    Constant,
    RunSchedule,
    double_exponential_lengths,
    walk,
)
from driftwind.flow import (
    FlowError,
    IntegratorSpec,
    ScalarPath,
    SpaceTimeField,
    integrate,
    in_regular_region,
    is_regular,
    spacetime_eval,
    spacetime_integrate,
    visited_cells,
)
from driftwind.mollify import TiledField
from driftwind.poisson import DeformedField, WarpMap, sample_process

DELTA = 1.0 / 16.0


@pytest.fixture(scope="module")
def psi_right(cached_pair):
    vr, vu = cached_pair
    return TiledField(spec=Constant(Arrow.RIGHT), vr=vr, vu=vu)


@pytest.fixture(scope="module")
def psi_schedule(cached_pair):
    vr, vu = cached_pair
    return TiledField(
        spec=RunSchedule(double_exponential_lengths, phase=-20), vr=vr, vu=vu
    )


# ---------------------------------------------------------------------------
# basic integration


def test_constant_field_linear_motion_and_events():
    spec = IntegratorSpec(step=1e-3, crossing_tol=1e-10, max_time=1.0)
    traj = integrate(lambda p: np.array([2.0, 0.0]), (0.5, 0.5), spec)
    assert np.allclose(traj.end, [2.5, 0.5], atol=1e-10)
    lines = [(ev.axis, ev.line) for ev in traj.events]
    assert lines == [("x", 1), ("x", 2)]
    assert traj.events[0].time == pytest.approx(0.25, abs=1e-9)
    assert traj.events[1].time == pytest.approx(0.75, abs=1e-9)
    assert traj.events[0].cell == (1, 0)


def test_strip_start_moves_straight_right(psi_right):
    start_y = 2.0 / 3.0 - 1.5 * DELTA
    spec = IntegratorSpec(step=1e-3, max_time=2.0)
    traj = integrate(psi_right, (0.5, start_y), spec)
    assert traj.end[0] == pytest.approx(0.5 + 2.0 * 2.0, abs=1e-4)
    assert abs(traj.end[1] - start_y) < 1e-6  # stays in the strip at speed (2, 0)
    ys = traj.points[:, 1]
    assert np.max(np.abs(ys - start_y)) < 1e-6


def test_rk4_order_on_rotation_field():
    """Halving the step shrinks the endpoint error ~16x on a smooth field."""

    def rot(p):
        return np.array([p[1], -p[0]])

    exact = np.array([math.cos(-1.0), math.sin(-1.0)])  # start (1,0), time 1

    def endpoint_err(h):
        spec = IntegratorSpec(step=h, max_time=1.0, sample_stride=1000000)
        traj = integrate(rot, (1.0, 0.0), spec)
        return float(np.linalg.norm(traj.end - exact))

    e1 = endpoint_err(4e-3)
    e2 = endpoint_err(2e-3)
    assert 12.0 <= e1 / e2 <= 20.0


def test_non_finite_field_raises_with_last_state():
    def bad(p):
        if p[0] > 1.0:
            return np.array([float("nan"), 0.0])
        return np.array([2.0, 0.0])

    spec = IntegratorSpec(step=1e-2, max_time=2.0)
    with pytest.raises(FlowError) as ei:
        integrate(bad, (0.5, 0.5), spec)
    assert ei.value.point[0] <= 1.1


def test_integrator_spec_validation():
    with pytest.raises(ValueError):
        IntegratorSpec(step=0.0)
    with pytest.raises(ValueError):
        IntegratorSpec(step=1e-3, crossing_tol=-1.0)
    with pytest.raises(ValueError):
        IntegratorSpec(step=1e-3, sample_stride=0)


# ---------------------------------------------------------------------------
# cells and regularity


def test_visited_cells_constant_field():
    spec = IntegratorSpec(step=1e-3, max_time=1.0)
    traj = integrate(lambda p: np.array([2.0, 0.0]), (0.5, 0.5), spec)
    assert visited_cells(traj) == [(0, 0), (1, 0), (2, 0)]


def test_visited_cells_up_column(cached_pair):
    vr, vu = cached_pair
    f = TiledField(spec=Constant(Arrow.UP), vr=vr, vu=vu)
    spec = IntegratorSpec(step=1e-3, max_time=2.0)
    traj = integrate(f, (0.5, 0.1), spec)
    cells = visited_cells(traj)
    assert cells[0] == (0, 0)
    assert all(c[0] == 0 for c in cells)
    assert [c[1] for c in cells] == list(range(len(cells)))


def test_in_regular_region_examples():
    spec = Constant(Arrow.RIGHT)
    assert in_regular_region((0.5, 0.6), spec, DELTA)  # 0.6 <= 2/3 - 1/16
    assert not in_regular_region((0.5, 0.95), spec, DELTA)
    up = Constant(Arrow.UP)
    assert not in_regular_region((0.95, 0.5), up, DELTA)
    assert in_regular_region((0.6, 0.95), up, DELTA)


def test_constant_right_trajectory_is_regular(psi_right):
    spec = IntegratorSpec(step=1e-3, max_time=3.0)
    traj = integrate(psi_right, (0.5, 0.5), spec)
    assert is_regular(traj, Constant(Arrow.RIGHT))


def test_regular_tracking_run_schedule(psi_schedule):
    """A start inside the trapping region follows the walk cell for cell."""
    field_spec = psi_schedule.spec
    assert in_regular_region((0.1, 0.1), field_spec, DELTA)
    spec = IntegratorSpec(step=2e-3, max_time=30.0)
    traj = integrate(psi_schedule, (0.1, 0.1), spec)
    cells = visited_cells(traj)
    assert len(cells) >= 50
    assert is_regular(traj, field_spec)
    w = walk(field_spec, cells[0], len(cells) - 1)
    assert list(w.positions) == cells


def test_regularity_propagates_at_transit_times(psi_schedule):
    field_spec = psi_schedule.spec
    spec = IntegratorSpec(step=2e-3, max_time=20.0)
    traj = integrate(psi_schedule, (0.1, 0.1), spec)
    assert len(traj.events) > 20
    for ev in traj.events:
        # just after entering a cell the point sits in its trapping region
        i, j = ev.cell
        if ev.axis == "x":
            p = (ev.line + 1e-9, _event_other_coord(traj, ev))
        else:
            p = (_event_other_coord(traj, ev), ev.line + 1e-9)
        assert in_regular_region(p, field_spec, DELTA)


def _event_other_coord(traj, ev):
    # nearest stored sample to the event time gives the other coordinate
    idx = int(np.argmin(np.abs(traj.times - ev.time)))
    return traj.points[idx][1 if ev.axis == "x" else 0]


def test_nonregular_start_above_strip_fixture(psi_schedule):
    """Start above the trapping band; recorded outcome, no regularity claim."""
    spec = IntegratorSpec(step=2e-3, max_time=10.0)
    traj = integrate(psi_schedule, (0.5, 0.95), spec)
    cells = visited_cells(traj)
    assert len(cells) >= 10  # it still escapes up-right
    dp = np.diff(traj.points, axis=0)
    assert dp.min() > -1e-6


def test_monotone_flow_and_escape(psi_schedule):
    spec = IntegratorSpec(step=2e-3, max_time=20.0)
    traj = integrate(psi_schedule, (0.1, 0.1), spec)
    dp = np.diff(traj.points, axis=0)
    # nondecreasing up to the cached-grid wiggle where a component vanishes
    assert dp.min() > -1e-6
    T = traj.times[-1]
    c = 2.0  # measured nondegeneracy constant: min of the component sum
    assert np.linalg.norm(traj.end) >= c * T / 2.0


# ---------------------------------------------------------------------------
# pushforward conjugacy


def test_pushforward_conjugacy_short_horizon(cached_pair):
    vr, vu = cached_pair
    psi = TiledField(spec=RunSchedule(double_exponential_lengths, phase=-20), vr=vr, vu=vu)
    warp = WarpMap(
        sample_process(1.0, 101, (-5.0, 40.0)), sample_process(1.0, 102, (-5.0, 40.0))
    )
    phi = DeformedField(warp=warp, psi=psi)
    from driftwind.poisson import warp_eval

    z0 = np.array([0.1, 0.1])
    spec = IntegratorSpec(step=1e-3, max_time=5.0, sample_stride=10)
    traj_phi = integrate(phi, z0, spec)
    traj_psi = integrate(psi, warp_eval(warp, *z0), spec)
    assert np.array_equal(traj_phi.times, traj_psi.times)
    worst = 0.0
    for p, q in zip(traj_phi.points, traj_psi.points):
        img = warp_eval(warp, p[0], p[1])
        worst = max(worst, float(np.max(np.abs(img - q))))
    assert worst < 1e-4


# ---------------------------------------------------------------------------
# space-time field


def test_spacetime_eval_limits():
    f = SpaceTimeField(base=lambda p: np.array([1.0, 0.0]), u0=0.25, u1=0.75)
    assert spacetime_eval(f, 0.3, 0.9) == pytest.approx(0.25)
    f2 = SpaceTimeField(base=lambda p: np.array([0.0, 1.0]), u0=0.25, u1=0.75)
    assert spacetime_eval(f2, 0.3, 0.9) == pytest.approx(0.75)
    f3 = SpaceTimeField(base=lambda p: np.array([1.0, 1.0]), u0=0.0, u1=1.0)
    assert spacetime_eval(f3, 1.0, 2.0) == pytest.approx(0.5)


def test_spacetime_requires_ordered_bounds():
    with pytest.raises(ValueError):
        SpaceTimeField(base=lambda p: np.array([1.0, 0.0]), u0=0.5, u1=0.5)


def test_spacetime_degenerate_sum_raises():
    f = SpaceTimeField(base=lambda p: np.array([0.0, 0.0]), u0=0.0, u1=1.0)
    with pytest.raises(FlowError):
        f.eval(0.0, 0.0)


def test_spacetime_running_average_within_bounds(psi_schedule):
    f = SpaceTimeField(base=psi_schedule, u0=0.0, u1=1.0)
    spec = IntegratorSpec(step=2e-3, max_time=40.0, sample_stride=20)
    path = spacetime_integrate(f, 0.2, 0.1, 40.0, spec)
    avg = path.running_average()
    assert avg.min() >= -1e-12
    assert avg.max() <= 1.0 + 1e-12


def test_spacetime_near_degenerate_band_stays_bounded(psi_right):
    f = SpaceTimeField(base=psi_right, u0=0.999, u1=1.0)
    spec = IntegratorSpec(step=1e-3, max_time=5.0)
    path = spacetime_integrate(f, 0.0, 0.0, 5.0, spec)
    avg = path.running_average()
    assert np.all(avg >= 0.999 - 1e-12)
    assert np.all(avg <= 1.0 + 1e-12)


def test_spacetime_strip_dominated_velocity(psi_right):
    """Over a Right corridor stretch the speed sits at u0."""
    f = SpaceTimeField(base=psi_right, u0=0.0, u1=1.0)
    # start matching the plane point (0.5, strip height)
    y0 = 2.0 / 3.0 - 1.5 * DELTA
    t0 = 0.5 + y0
    x0 = y0
    spec = IntegratorSpec(step=1e-3, max_time=3.0)
    path = spacetime_integrate(f, t0, x0, 3.0, spec)
    avg = path.running_average()
    assert abs(avg[-1] - 0.0) < 1e-6  # pure right drift: velocity u0 = 0
