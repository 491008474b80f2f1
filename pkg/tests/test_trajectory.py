"""Velocity profile recurrence, caps, and CSV round trip."""

import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tetherperch.trajectory import (
    CommandTrajectory,
    WaypointPath,
    compute_velocity_profile,
    export_trajectory,
    import_trajectory,
    required_speed,
)


def straight_path(n: int, gap: float = 0.2) -> WaypointPath:
    pts = np.zeros((n, 3))
    pts[:, 0] = np.arange(n) * gap
    return WaypointPath(pts)


class TestVelocityProfile:
    def test_ramp_then_plateau(self):
        traj = compute_velocity_profile(straight_path(8), a_max=40.0, v_req=3.0)
        assert traj.speeds[:6] == pytest.approx([0.0, 0.8, 1.6, 2.4, 3.0, 3.0], abs=1e-12)

    def test_final_speed_capped_by_stopping_distance(self):
        # long ramp reaches 7.2 m/s, then a 0.1 m final gap forces the cap
        pts = np.zeros((11, 3))
        pts[:, 0] = np.arange(11) * 1.0
        pts[10, 0] = 9.1
        traj = compute_velocity_profile(WaypointPath(pts), a_max=40.0, v_req=10.0)
        assert traj.speeds[-2] == pytest.approx(7.2, abs=1e-12)
        assert traj.speeds[-1] <= math.sqrt(2.0 * 40.0 * 0.1) + 1e-12
        assert traj.speeds[-1] == pytest.approx(math.sqrt(8.0), abs=1e-9)

    def test_tiny_required_speed_keeps_everything_near_zero(self):
        traj = compute_velocity_profile(straight_path(2), a_max=40.0, v_req=1e-9)
        assert np.all(traj.speeds <= 1e-9)

    def test_first_speed_is_zero(self):
        traj = compute_velocity_profile(straight_path(5), a_max=5.0, v_req=2.0)
        assert traj.speeds[0] == 0.0

    def test_extending_the_path_keeps_interior_speeds(self):
        short = compute_velocity_profile(straight_path(6), a_max=40.0, v_req=3.0)
        longer = compute_velocity_profile(straight_path(7), a_max=40.0, v_req=3.0)
        # all speeds before the old stop cap are unchanged
        assert longer.speeds[:5] == pytest.approx(short.speeds[:5], abs=1e-12)

    @given(
        n=st.integers(2, 30),
        a_max=st.floats(0.5, 60.0),
        v_req=st.floats(0.01, 8.0),
        gap=st.floats(0.01, 1.0),
    )
    @settings(max_examples=150, deadline=None)
    def test_feasibility_invariants(self, n, a_max, v_req, gap):
        path = straight_path(n, gap)
        traj = compute_velocity_profile(path, a_max=a_max, v_req=v_req)
        dv = np.diff(traj.speeds)
        assert np.all(dv <= a_max * path.control_period + 1e-12)
        assert np.all(traj.speeds <= v_req + 1e-12)
        assert np.all(traj.speeds >= 0.0)

    def test_rejects_degenerate_paths(self):
        with pytest.raises(ValueError):
            WaypointPath(np.zeros((1, 3)))
        with pytest.raises(ValueError):
            WaypointPath(np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]))

    def test_required_speed_energy_rule(self):
        assert required_speed(1.0, gravity=9.81, margin=1.1) == pytest.approx(
            math.sqrt(2.0 * 9.81) * 1.1, abs=1e-12
        )
        with pytest.raises(ValueError):
            required_speed(0.0)


class TestExport:
    def test_round_trip_lossless(self):
        traj = compute_velocity_profile(straight_path(5), a_max=40.0, v_req=3.0)
        buf = io.StringIO()
        export_trajectory(traj, buf)
        buf.seek(0)
        back = import_trajectory(buf)
        assert np.array_equal(back.positions, traj.positions)
        assert np.array_equal(back.speeds, traj.speeds)

    def test_row_count_and_header(self):
        traj = compute_velocity_profile(straight_path(5), a_max=40.0, v_req=3.0)
        buf = io.StringIO()
        export_trajectory(traj, buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "index,x,y,z,speed"
        assert len(lines) == 6

    def test_speeds_column_non_negative(self):
        traj = compute_velocity_profile(straight_path(9), a_max=12.0, v_req=2.5)
        buf = io.StringIO()
        export_trajectory(traj, buf)
        buf.seek(0)
        rows = buf.getvalue().strip().splitlines()[1:]
        assert all(float(r.split(",")[4]) >= 0.0 for r in rows)

    def test_import_rejects_bad_header(self):
        with pytest.raises(ValueError):
            import_trajectory(io.StringIO("a,b,c\n"))
