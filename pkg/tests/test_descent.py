"""Descent law oracles: tilt, thrust schedule, tension, termination."""

import io
import math

import pytest

from tetherperch.descent import (
    CONTINUE,
    DISARM,
    DescentConfig,
    DescentTracker,
    descent_terminated,
    estimate_tension,
    thrust_schedule,
    tilt_setpoint,
    write_descent_log,
)

G = 9.81
CFG = DescentConfig()
MASS = 2.3 / G  # vehicle weighing 2.3 N


class TestTiltSetpoint:
    def test_zero_when_thrust_covers_residual_weight(self):
        # F_ref = mg - T makes the arccos argument exactly 1
        t = 1.61
        f_ref = 2.3 - t
        assert tilt_setpoint(f_ref, t, MASS, G) == pytest.approx(0.0, abs=1e-12)

    def test_clamps_at_tilt_limit(self):
        phi = tilt_setpoint(0.9, 1.61, MASS, G)
        unclamped = math.acos((2.3 - 0.9) / 1.61)
        assert math.degrees(unclamped) > 25.0
        assert phi == pytest.approx(math.radians(25.0), abs=1e-9)

    def test_exact_boundary_hits_the_limit(self):
        t = 1.0
        f_ref = 2.3 - t * math.cos(math.radians(25.0))
        assert tilt_setpoint(f_ref, t, MASS, G) == pytest.approx(math.radians(25.0), abs=1e-9)

    def test_unreachable_tension_folds_to_zero(self):
        # negative reference tension pushes the arccos argument above 1
        assert tilt_setpoint(-5.0, 1.0, MASS, G) == 0.0

    def test_round_trip_with_tension_estimate(self):
        # pairs picked so neither the arccos fold nor the 25 degree clamp fires
        cases = [(2.0, 0.35), (2.0, 0.45), (2.2, 0.25), (2.3, 0.15), (1.8, 0.62)]
        for t, f_ref in cases:
            arg = (2.3 - f_ref) / t
            assert math.cos(math.radians(25.0)) < arg < 1.0
            phi = tilt_setpoint(f_ref, t, MASS, G)
            assert estimate_tension(t, phi, MASS, G) == pytest.approx(f_ref, abs=1e-9)

    def test_requires_positive_thrust(self):
        with pytest.raises(ValueError):
            tilt_setpoint(0.5, 0.0, MASS, G)


class TestThrustSchedule:
    def test_hold_phase(self):
        assert thrust_schedule(2.0, CFG) == pytest.approx(0.70 * CFG.hover_thrust, abs=1e-12)

    def test_mid_ramp(self):
        assert thrust_schedule(5.0, CFG) == pytest.approx(0.50 * CFG.hover_thrust, abs=1e-12)

    def test_plateau(self):
        assert thrust_schedule(10.0, CFG) == pytest.approx(0.30 * CFG.hover_thrust, abs=1e-12)

    def test_continuous_non_increasing_and_bounded(self):
        ts = [i * 0.01 for i in range(1200)]
        vals = [thrust_schedule(t, CFG) for t in ts]
        lo = 0.30 * CFG.hover_thrust
        hi = 0.70 * CFG.hover_thrust
        assert all(lo - 1e-12 <= v <= hi + 1e-12 for v in vals)
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))
        # continuity: steps of 10 ms never jump more than the ramp slope allows
        max_slope = (hi - lo) / CFG.ramp_duration
        assert all(abs(a - b) <= max_slope * 0.01 + 1e-12 for a, b in zip(vals, vals[1:]))

    def test_breakpoints_are_at_hold_and_ramp_end(self):
        eps = 1e-9
        hi = 0.70 * CFG.hover_thrust
        lo = 0.30 * CFG.hover_thrust
        assert thrust_schedule(3.0 - eps, CFG) == pytest.approx(hi, abs=1e-6)
        assert thrust_schedule(3.0, CFG) == pytest.approx(hi, abs=1e-12)
        assert thrust_schedule(7.0, CFG) == pytest.approx(lo, abs=1e-12)
        # strictly between the breakpoints the schedule is strictly decreasing
        assert thrust_schedule(4.0, CFG) < hi
        assert thrust_schedule(6.9, CFG) > lo


class TestTensionEstimate:
    def test_hover_upright_is_zero(self):
        assert estimate_tension(2.3, 0.0, MASS, G) == pytest.approx(0.0, abs=1e-12)

    def test_tilted_partial_thrust(self):
        f = estimate_tension(1.61, math.radians(20.0), MASS, G)
        assert f == pytest.approx(2.3 - 1.61 * math.cos(math.radians(20.0)), abs=1e-12)
        assert f == pytest.approx(0.7871, abs=1e-4)

    def test_no_thrust_means_full_weight(self):
        assert estimate_tension(0.0, 0.5, MASS, G) == pytest.approx(2.3, abs=1e-12)


class TestTermination:
    def test_low_clearance_disarms(self):
        assert descent_terminated(0.25, 0.0, CFG) == DISARM

    def test_short_low_thrust_continues(self):
        assert descent_terminated(1.0, 0.4, CFG) == CONTINUE

    def test_sustained_low_thrust_disarms(self):
        assert descent_terminated(1.0, 0.6, CFG) == DISARM

    def test_tracker_accumulates_low_thrust_time(self):
        tracker = DescentTracker()
        low = 0.17 * CFG.hover_thrust
        for _ in range(4):  # 0.4 s: not yet
            decision = tracker.update(0.1, low, 1.0)
        assert decision == CONTINUE
        for _ in range(2):  # 0.6 s total
            decision = tracker.update(0.1, low, 1.0)
        assert decision == DISARM

    def test_tracker_timer_resets_when_thrust_recovers(self):
        tracker = DescentTracker()
        low = 0.17 * CFG.hover_thrust
        ok = 0.5 * CFG.hover_thrust
        for _ in range(4):
            tracker.update(0.1, low, 1.0)
        tracker.update(0.1, ok, 1.0)
        for _ in range(4):
            decision = tracker.update(0.1, low, 1.0)
        assert decision == CONTINUE

    def test_decision_latches(self):
        tracker = DescentTracker()
        assert tracker.update(0.1, 2.0, 0.1) == DISARM
        # recovery of clearance does not re-arm
        assert tracker.update(0.1, 2.0, 5.0) == DISARM

    def test_synthetic_descent_time_series(self):
        # clearance shrinks linearly; the clearance rule fires before the
        # thrust schedule ever reaches the low-thrust region
        tracker = DescentTracker()
        dt = 0.01
        t = 0.0
        decision = CONTINUE
        while decision == CONTINUE and t < 20.0:
            t += dt
            clearance = 0.9 - 0.1 * t
            decision = tracker.update(dt, thrust_schedule(t, CFG), clearance)
        assert decision == DISARM
        assert t == pytest.approx(6.0, abs=0.05)

    def test_config_fraction_ordering_enforced(self):
        with pytest.raises(ValueError):
            DescentConfig(thrust_start_fraction=0.2, thrust_end_fraction=0.3)


class TestDescentLog:
    def test_csv_header_and_rows(self):
        buf = io.StringIO()
        rows = [
            (0.0, 1.61, 0.0, 0.69, 0.9, CONTINUE),
            (0.1, 1.61, 0.1, 0.72, 0.88, CONTINUE),
        ]
        write_descent_log(buf, rows)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "t,thrust,tilt,tension,clearance,decision"
        assert len(lines) == 3
