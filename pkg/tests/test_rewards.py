"""Reward term oracles: closed-form values, tier boundaries, composition."""

import io
import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tetherperch.rewards import (
    GridSpec,
    RewardConstants,
    RewardInputs,
    approach_reward,
    collision_penalty,
    emit_heatmap,
    endwaypoint_reward,
    hang_reward,
    phase_of,
    proximity_reward,
    tether_contact_reward,
    total_reward,
    wrap_reward,
    zone_penalty,
)
from tetherperch.world import BranchGeometry

K = RewardConstants()
CENTER = np.array([0.0, 0.0, 2.0])


def make_inputs(**kw) -> RewardInputs:
    base = dict(
        quad_position=np.array([2.0, 0.0, 2.0]),
        target_center=CENTER,
        target_distance=2.0,
        branch_distance=2.0,
        tail_branch_distance=0.1,
        contact=False,
        contact_streak=0,
        wrap=0.0,
        quad_speed=0.0,
    )
    base.update(kw)
    return RewardInputs(**base)


class TestProximity:
    def test_both_terms_vanish(self):
        assert proximity_reward(1.0, 2.0, K) == pytest.approx(0.0, abs=1e-12)

    def test_close_branch_and_on_waypoint(self):
        # -0.5 + tanh(1)
        value = proximity_reward(0.5, 0.0, K)
        assert value == pytest.approx(-0.5 + math.tanh(1.0), abs=1e-12)
        assert value == pytest.approx(0.2615942, abs=1e-7)

    def test_touching_branch_far_from_waypoint(self):
        # -1 + tanh(-1), with the crowding term saturated
        value = proximity_reward(0.0, 4.0, K)
        assert value == pytest.approx(-1.0 + math.tanh(-1.0), abs=1e-12)
        assert value == pytest.approx(-1.7615942, abs=1e-7)

    def test_crowding_term_clamps_to_unit_interval(self):
        assert proximity_reward(10.0, 2.0, K) == pytest.approx(0.0, abs=1e-12)


class TestEndWaypointTiers:
    @pytest.mark.parametrize(
        "d,expected",
        [
            (0.04, 1.0),
            (0.30, 0.25),
            (1.00, 0.0),
            (0.0, 1.0),
            (0.05, 0.75),
            (0.10, 0.5),
            (0.25, 0.25),
            (0.50, 0.1),
            (0.99, 0.1),
            (7.0, 0.0),
        ],
    )
    def test_tier_table(self, d, expected):
        assert endwaypoint_reward(d) == expected

    def test_non_increasing(self):
        ds = np.linspace(0.0, 2.0, 400)
        vals = [endwaypoint_reward(d) for d in ds]
        assert all(a >= b for a, b in zip(vals, vals[1:]))


class TestTetherContact:
    def test_mid_streak(self):
        assert tether_contact_reward(True, 10, 0.1, K) == pytest.approx(1.5)

    def test_streak_cap(self):
        assert tether_contact_reward(True, 1000, 0.1, K) == pytest.approx(2.0)

    def test_no_contact_far_tail(self):
        assert tether_contact_reward(False, 0, 2.1, K) == pytest.approx(-1.0)

    def test_streak_ignored_without_contact(self):
        assert tether_contact_reward(False, 50, 0.1, K) == pytest.approx(1.0)


class TestZonePenalty:
    def test_below_branch_inside_lower_arc(self):
        quad = CENTER + np.array([0.0, 0.0, -0.3])
        assert zone_penalty(quad, CENTER, K) == pytest.approx(-0.2)

    def test_inside_upper_arc(self):
        upper = CENTER + np.array([0.0, 0.0, K.upper_arc_offset])
        quad = upper + np.array([0.0, 0.0, 0.2])
        assert zone_penalty(quad, CENTER, K) == pytest.approx(-0.3)

    def test_outside_both_arcs(self):
        quad = CENTER + np.array([2.0, 0.0, 0.0])
        assert zone_penalty(quad, CENTER, K) == 0.0

    def test_directly_above_branch_is_not_in_lower_arc(self):
        quad = CENTER + np.array([0.0, 0.0, 0.3])
        assert zone_penalty(quad, CENTER, K) == 0.0

    def test_lower_arc_angular_edges(self):
        # just inside the 10 degree edge counts, just past it does not
        r = 0.4
        inside = CENTER + r * np.array([math.cos(math.radians(9.5)), 0.0, math.sin(math.radians(9.5))])
        outside = CENTER + r * np.array([math.cos(math.radians(10.5)), 0.0, math.sin(math.radians(10.5))])
        assert zone_penalty(inside, CENTER, K) == pytest.approx(r - 0.5)
        assert zone_penalty(outside, CENTER, K) == 0.0
        # same check at the 170 degree edge
        inside = CENTER + r * np.array([math.cos(math.radians(170.5)), 0.0, math.sin(math.radians(170.5))])
        outside = CENTER + r * np.array([math.cos(math.radians(169.5)), 0.0, math.sin(math.radians(169.5))])
        assert zone_penalty(inside, CENTER, K) == pytest.approx(r - 0.5)
        assert zone_penalty(outside, CENTER, K) == 0.0

    @given(
        x=st.floats(-4.0, 4.0),
        z=st.floats(-4.0, 4.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_never_positive(self, x, z):
        quad = CENTER + np.array([x, 0.0, z])
        assert zone_penalty(quad, CENTER, K) <= 0.0


class TestApproach:
    def test_zero_sum(self):
        inputs = make_inputs(branch_distance=1.0, target_distance=2.0, tail_branch_distance=1.1)
        # proximity 0, tier 0, tether contact 0, zone 0
        assert approach_reward(inputs, K) == pytest.approx(0.0, abs=1e-12)

    def test_known_sum(self):
        # tether term alone contributes 1.5: streak 10 with tail at the offset
        inputs = make_inputs(
            branch_distance=1.0,
            target_distance=2.0,
            contact=True,
            contact_streak=10,
            tail_branch_distance=0.1,
            quad_position=CENTER + np.array([2.0, 0.0, 0.0]),
        )
        assert approach_reward(inputs, K) == pytest.approx(math.tanh(1.5), abs=1e-12)
        assert approach_reward(inputs, K) == pytest.approx(0.9051483, abs=1e-7)

    @given(
        d_t=st.floats(0.0, 8.0),
        d_b=st.floats(0.0, 8.0),
        d_tb=st.floats(0.0, 8.0),
        streak=st.integers(0, 500),
        contact=st.booleans(),
        x=st.floats(-4.0, 4.0),
        z=st.floats(-4.0, 4.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_bounded_open_unit_interval(self, d_t, d_b, d_tb, streak, contact, x, z):
        inputs = make_inputs(
            target_distance=d_t,
            branch_distance=d_b,
            tail_branch_distance=d_tb,
            contact_streak=streak,
            contact=contact,
            quad_position=CENTER + np.array([x, 0.0, z]),
        )
        assert -1.0 < approach_reward(inputs, K) < 1.0


class TestWrap:
    def test_center_point(self):
        assert wrap_reward(1.0) == pytest.approx(0.5, abs=1e-12)

    def test_zero_wrap(self):
        assert wrap_reward(0.0) == pytest.approx(0.5 * (1.0 + math.tanh(-2.0)), abs=1e-12)
        assert wrap_reward(0.0) == pytest.approx(0.0179862, abs=1e-7)

    def test_two_wraps(self):
        assert wrap_reward(2.0) == pytest.approx(0.5 * (1.0 + math.tanh(2.0)), abs=1e-12)
        assert wrap_reward(2.0) == pytest.approx(0.9820138, abs=1e-7)

    @given(st.floats(0.0, 5.0))
    @settings(max_examples=200, deadline=None)
    def test_bounded_open_interval(self, w):
        assert 0.0 < wrap_reward(w) < 1.0

    def test_strictly_increasing(self):
        ws = np.linspace(0.0, 3.0, 301)
        vals = [wrap_reward(w) for w in ws]
        assert all(a < b for a, b in zip(vals, vals[1:]))


class TestHangZone:
    BRANCH = BranchGeometry(center=CENTER, axis=np.array([0.0, 1.0, 0.0]))

    def test_resting_below_in_zone(self):
        quad = CENTER + np.array([0.0, 0.0, -0.6])
        assert hang_reward(quad, 0.0, self.BRANCH, 1.0) == 1.0

    def test_above_branch(self):
        quad = CENTER + np.array([0.0, 0.0, 0.6])
        assert hang_reward(quad, 0.0, self.BRANCH, 1.0) == 0.0

    def test_moving_too_fast(self):
        quad = CENTER + np.array([0.0, 0.0, -0.6])
        assert hang_reward(quad, 1.0, self.BRANCH, 1.0) == 0.0

    def test_radial_band_scales_with_tether_length(self):
        quad = CENTER + np.array([0.0, 0.0, -0.6])
        assert hang_reward(quad, 0.0, self.BRANCH, 1.0) == 1.0
        # same point is outside the band for a much shorter tether
        assert hang_reward(quad, 0.0, self.BRANCH, 0.5) == 0.0

    def test_axial_offset_does_not_leave_zone(self):
        quad = CENTER + np.array([0.0, 3.0, -0.6])
        assert hang_reward(quad, 0.0, self.BRANCH, 1.0) == 1.0


class TestCollisionPenalty:
    def test_crowding(self):
        assert collision_penalty(0.05, 0.02) == -1.0

    def test_clear(self):
        assert collision_penalty(0.5, 0.02) == 0.0

    def test_boundary_is_exclusive(self):
        threshold = 0.02 + 0.1
        assert collision_penalty(threshold, 0.02) == 0.0
        assert collision_penalty(threshold - 1e-12, 0.02) == -1.0


class TestTotalReward:
    def test_phase_boundaries(self):
        assert phase_of(0.0) == "I"
        assert phase_of(0.5) == "I"
        assert phase_of(0.5 + 1e-9) == "II"
        assert phase_of(1.0 - 1e-9) == "II"
        assert phase_of(1.0) == "IV"

    def test_phase_one_composition(self):
        inputs = make_inputs(branch_distance=1.0, target_distance=2.0, tail_branch_distance=1.1, wrap=0.0)
        assert total_reward(inputs, K) == pytest.approx(0.0179862, abs=1e-7)

    def test_phase_two_composition(self):
        inputs = make_inputs(wrap=0.75)
        expected = 2.0 + 2.0 * 0.5 * (1.0 + math.tanh(-0.5))
        assert total_reward(inputs, K) == pytest.approx(expected, abs=1e-12)
        assert total_reward(inputs, K) == pytest.approx(2.5378828, abs=1e-7)

    def test_phase_four_with_hang_bonus(self):
        inputs = make_inputs(
            wrap=1.2,
            quad_position=CENTER + np.array([0.0, 0.0, -0.6]),
            branch_distance=0.6,
        )
        # branch_distance 0.6 stays outside the collision margin
        expected = 2.0 + 2.0 * 0.5 * (1.0 + math.tanh(0.4)) + 1.0
        assert total_reward(inputs, K) == pytest.approx(expected, abs=1e-12)
        assert total_reward(inputs, K) == pytest.approx(4.3799490, abs=1e-7)

    def test_phase_two_collision_applies(self):
        inputs = make_inputs(wrap=0.75, branch_distance=0.05)
        expected = 2.0 + 2.0 * 0.5 * (1.0 + math.tanh(-0.5)) - 1.0
        assert total_reward(inputs, K) == pytest.approx(expected, abs=1e-12)

    def test_phase_boundary_jump_is_the_documented_amount(self):
        lo = make_inputs(wrap=0.5, branch_distance=1.0, target_distance=2.0, tail_branch_distance=1.1)
        hi = make_inputs(wrap=0.5 + 1e-12, branch_distance=1.0, target_distance=2.0, tail_branch_distance=1.1)
        jump = total_reward(hi, K) - total_reward(lo, K)
        expected = (2.0 + 2.0 * wrap_reward(0.5) + 0.0) - (
            2.0 * approach_reward(lo, K) + wrap_reward(0.5)
        )
        assert jump == pytest.approx(expected, abs=1e-9)

    def test_phase_one_total_bounds(self):
        rng = np.random.default_rng(0)
        for _ in range(300):
            inputs = make_inputs(
                target_distance=float(rng.uniform(0, 6)),
                branch_distance=float(rng.uniform(0, 6)),
                tail_branch_distance=float(rng.uniform(0, 6)),
                contact=bool(rng.integers(2)),
                contact_streak=int(rng.integers(0, 400)),
                wrap=float(rng.uniform(0, 0.5)),
                quad_position=CENTER + rng.uniform(-4, 4, 3),
            )
            assert -2.0 < total_reward(inputs, K) < 3.0

    def test_scale_free_under_identical_geometric_inputs(self):
        # changing the tether length while holding every geometric input
        # fixed must not change phase I or II rewards
        for wrap in (0.2, 0.75):
            a = make_inputs(wrap=wrap, tether_length=1.0)
            b = make_inputs(wrap=wrap, tether_length=2.5)
            assert total_reward(a, K) == total_reward(b, K)


class TestDeterminismAndSpeed:
    def test_repeatable_and_fast_over_random_inputs(self):
        rng = np.random.default_rng(42)
        batches = []
        for _ in range(10_000):
            batches.append(
                make_inputs(
                    target_distance=float(rng.uniform(0, 6)),
                    branch_distance=float(rng.uniform(0, 6)),
                    tail_branch_distance=float(rng.uniform(0, 6)),
                    contact=bool(rng.integers(2)),
                    contact_streak=int(rng.integers(0, 400)),
                    wrap=float(rng.uniform(0, 2.5)),
                    quad_speed=float(rng.uniform(0, 2)),
                    quad_position=CENTER + rng.uniform(-4, 4, 3),
                )
            )
        t0 = time.time()
        first = [total_reward(i, K) for i in batches]
        second = [total_reward(i, K) for i in batches]
        elapsed = time.time() - t0
        assert elapsed < 5.0
        assert all(abs(a - b) <= 1e-9 for a, b in zip(first, second))


class TestHeatmap:
    def test_argmax_at_end_waypoint_cell(self):
        k = K.with_end_waypoint([1.0, 0.0, 1.0])
        grid = GridSpec(x_range=(-2.0, 2.0), z_range=(0.0, 4.0), resolution=(41, 41))
        values = emit_heatmap(k, grid, CENTER)
        xs, zs = grid.axes()
        i, j = np.unravel_index(np.argmax(values), values.shape)
        assert xs[j] == pytest.approx(1.0, abs=(xs[1] - xs[0]) / 2)
        assert zs[i] == pytest.approx(1.0, abs=(zs[1] - zs[0]) / 2)

    def test_restricted_cell_below_branch_scores_lower_than_mirror(self):
        k = K.with_end_waypoint([0.0, 0.0, 2.0])
        grid = GridSpec(x_range=(-1.0, 1.0), z_range=(1.0, 3.0), resolution=(81, 81))
        values = emit_heatmap(k, grid, CENTER)
        xs, zs = grid.axes()
        j0 = int(np.argmin(np.abs(xs - 0.0)))
        below = int(np.argmin(np.abs(zs - (2.0 - 0.3))))
        side = int(np.argmin(np.abs(xs - 0.3)))
        mid = int(np.argmin(np.abs(zs - 2.0)))
        # same distance from the branch, one inside the lower arc, one outside it
        assert values[below, j0] < values[mid, side]

    def test_values_bounded_before_clamping(self):
        grid = GridSpec(x_range=(-2.0, 2.0), z_range=(0.0, 4.0), resolution=(21, 21))
        values = emit_heatmap(K, grid, CENTER)
        assert np.all(values > -1.0)
        assert np.all(values < 1.0)

    def test_outside_workspace_clamped_to_grid_minimum(self):
        grid = GridSpec(x_range=(-7.0, 7.0), z_range=(0.0, 4.0), resolution=(29, 5))
        values = emit_heatmap(K, grid, CENTER)
        xs, zs = grid.axes()
        outside_cols = np.abs(xs) > 5.0
        assert outside_cols.any()
        assert np.all(values[:, outside_cols] == values.min())

    def test_csv_round_trip(self):
        grid = GridSpec(x_range=(-1.0, 1.0), z_range=(1.0, 3.0), resolution=(5, 4))
        buf = io.StringIO()
        values = emit_heatmap(K, grid, CENTER, csv_out=buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "x,z,value"
        assert len(lines) == 1 + 4 * 5
        x, z, v = lines[1].split(",")
        assert float(x) == pytest.approx(-1.0)
        assert float(z) == pytest.approx(1.0)
        assert float(v) == pytest.approx(values[0, 0], abs=1e-8)

    def test_resolution_must_be_at_least_two(self):
        with pytest.raises(ValueError):
            GridSpec(resolution=(1, 5))
