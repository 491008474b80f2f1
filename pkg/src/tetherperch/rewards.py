"""Reward terms for the perching task and their phase-gated composition.

Every function here is pure; the contact streak counter and wrap estimate are
owned by the environment and passed in.  Angles follow one convention
throughout: measured in the X-Z plane around a center point, 0 degrees along
+X, counterclockwise, reported in [0, 360).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import IO

import numpy as np

from .world import BranchGeometry

__all__ = [
    "GridSpec",
    "RewardConstants",
    "RewardInputs",
    "approach_reward",
    "collision_penalty",
    "emit_heatmap",
    "endwaypoint_reward",
    "hang_reward",
    "phase_of",
    "proximity_reward",
    "tether_contact_reward",
    "total_reward",
    "wrap_reward",
    "zone_penalty",
]

WORKSPACE_HALF_EXTENT = 5.0


@dataclass(frozen=True)
class RewardConstants:
    """Tuning constants shared by the reward terms.

    ``safe_distance`` is the proximity threshold in meters; the remaining
    scalars keep each term O(1) so the tanh composition stays responsive.
    ``upper_arc_offset`` places the overshoot-discouraging arc center that
    far above the perching target.
    """

    safe_distance: float = 1.0
    distance_scale: float = 1.0
    contact_streak_cap: float = 1.0
    contact_streak_increment: float = 0.05
    contact_distance_offset: float = 0.1
    restricted_zone_radius: float = 0.5
    upper_arc_offset: float = 1.8
    end_waypoint: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        for name in (
            "safe_distance",
            "distance_scale",
            "contact_streak_cap",
            "contact_streak_increment",
            "contact_distance_offset",
            "restricted_zone_radius",
            "upper_arc_offset",
        ):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")

    def with_end_waypoint(self, point) -> "RewardConstants":
        p = np.asarray(point, dtype=float)
        return replace(self, end_waypoint=(float(p[0]), float(p[1]), float(p[2])))


def _planar_angle_deg(point, center) -> float:
    """Angle of ``point`` around ``center`` in the X-Z plane, degrees [0, 360)."""
    ang = math.degrees(math.atan2(point[2] - center[2], point[0] - center[0]))
    return ang % 360.0


@dataclass(frozen=True)
class RewardInputs:
    """Everything the reward composition needs for one evaluation.

    ``target_distance`` is quad-to-end-waypoint, ``branch_distance`` is
    quad-to-branch-center, ``tail_branch_distance`` is the closest approach
    of the weight-end third of the chain to the branch center.
    ``tether_length`` and ``branch_radius`` carry world geometry so the
    hang and collision terms need no extra context.
    """

    quad_position: np.ndarray
    target_center: np.ndarray
    target_distance: float
    branch_distance: float
    tail_branch_distance: float
    contact: bool
    contact_streak: int
    wrap: float
    quad_speed: float
    tether_length: float = 1.0
    branch_radius: float = 0.02
    branch_axis: tuple[float, float, float] = (0.0, 1.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "quad_position", np.asarray(self.quad_position, dtype=float))
        object.__setattr__(self, "target_center", np.asarray(self.target_center, dtype=float))
        for name in ("target_distance", "branch_distance", "tail_branch_distance"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative")
        if self.contact_streak < 0:
            raise ValueError("contact_streak must be non-negative")

    @property
    def branch_angle_deg(self) -> float:
        """Angle of the quad around the branch center, X-Z plane, [0, 360)."""
        return _planar_angle_deg(self.quad_position, self.target_center)

    def upper_arc_center(self, constants: RewardConstants) -> np.ndarray:
        c = self.target_center.copy()
        c[2] += constants.upper_arc_offset
        return c

    def upper_arc_angle_deg(self, constants: RewardConstants) -> float:
        return _planar_angle_deg(self.quad_position, self.upper_arc_center(constants))

    def upper_arc_distance(self, constants: RewardConstants) -> float:
        return float(np.linalg.norm(self.quad_position - self.upper_arc_center(constants)))


def proximity_reward(branch_distance: float, target_distance: float, constants: RewardConstants) -> float:
    """Penalty for crowding the branch plus a shaped pull toward the waypoint."""
    crowding = (branch_distance - constants.safe_distance) / constants.distance_scale
    return max(-1.0, min(0.0, crowding)) + math.tanh(1.0 - target_distance / 2.0)


def endwaypoint_reward(target_distance: float) -> float:
    """Tiered bonus that sharpens as the quad closes on the end waypoint."""
    for bound, value in ((0.05, 1.0), (0.10, 0.75), (0.25, 0.5), (0.50, 0.25), (1.00, 0.1)):
        if target_distance < bound:
            return value
    return 0.0


def tether_contact_reward(
    contact: bool, contact_streak: int, tail_branch_distance: float, constants: RewardConstants
) -> float:
    """Reward sustained branch contact and a close weight-end of the chain.

    The streak counter is environment state: it increments while contact
    holds and clears to 0 the moment contact breaks.
    """
    streak_term = min(constants.contact_streak_cap, contact_streak * constants.contact_streak_increment)
    slack = max(0.0, tail_branch_distance - constants.contact_distance_offset)
    return (1.0 if contact else 0.0) * streak_term + (1.0 - slack / constants.distance_scale)


def zone_penalty(quad_position, target_center, constants: RewardConstants) -> float:
    """Negative cost inside two restricted arcs, zero elsewhere.

    The lower arc hugs the near-underside of the branch (angles in
    [170, 360] or [0, 10] degrees); the upper arc covers the half-plane
    above a center ``upper_arc_offset`` meters over the target.  Both
    ramp linearly from 0 at the zone radius to -radius at the center.
    """
    quad_position = np.asarray(quad_position, dtype=float)
    target_center = np.asarray(target_center, dtype=float)
    safe = constants.restricted_zone_radius

    branch_dist = float(np.linalg.norm(quad_position - target_center))
    ang = _planar_angle_deg(quad_position, target_center)
    if (ang >= 170.0 or ang <= 10.0) and branch_dist <= safe:
        return branch_dist - safe

    upper = target_center.copy()
    upper[2] += constants.upper_arc_offset
    upper_dist = float(np.linalg.norm(quad_position - upper))
    upper_ang = _planar_angle_deg(quad_position, upper)
    if upper_ang <= 180.0 and upper_dist <= safe:
        return -(safe - upper_dist)
    return 0.0


def approach_reward(inputs: RewardInputs, constants: RewardConstants) -> float:
    """Squashed sum of the four approach-phase factors, strictly in (-1, 1)."""
    total = (
        proximity_reward(inputs.branch_distance, inputs.target_distance, constants)
        + endwaypoint_reward(inputs.target_distance)
        + tether_contact_reward(
            inputs.contact, inputs.contact_streak, inputs.tail_branch_distance, constants
        )
        + zone_penalty(inputs.quad_position, inputs.target_center, constants)
    )
    return math.tanh(total)


def wrap_reward(wrap: float) -> float:
    """Sigmoid centered at one full wrap, rising from ~0 to ~1."""
    return 0.5 * (1.0 + math.tanh(2.0 * (wrap - 1.0)))


def hang_reward(quad_position, quad_speed: float, branch: BranchGeometry, tether_length: float) -> float:
    """1 inside the ideal hanging zone, else 0.

    The zone is below the branch height, at a radial distance from the
    branch axis between 30% and 90% of the tether length, with the quad
    nearly at rest (< 0.2 m/s).
    """
    p = np.asarray(quad_position, dtype=float)
    if p[2] >= branch.center[2]:
        return 0.0
    rel = p - branch.center
    radial = rel - float(rel @ branch.axis) * branch.axis
    r = float(np.linalg.norm(radial))
    if not (0.3 * tether_length <= r <= 0.9 * tether_length):
        return 0.0
    if quad_speed >= 0.2:
        return 0.0
    return 1.0


def collision_penalty(branch_distance: float, branch_radius: float) -> float:
    """-1 when the quad body crowds the branch, 0 at or beyond the margin."""
    return -1.0 if branch_distance < branch_radius + 0.1 else 0.0


def phase_of(wrap: float) -> str:
    """Task phase from the wrap estimate; the w == 0.5 boundary is phase I."""
    if wrap <= 0.5:
        return "I"
    if wrap < 1.0:
        return "II"
    return "IV"


def total_reward(inputs: RewardInputs, constants: RewardConstants) -> float:
    """Phase-gated composition of all terms."""
    phase = phase_of(inputs.wrap)
    if phase == "I":
        return 2.0 * approach_reward(inputs, constants) + wrap_reward(inputs.wrap)
    base = 2.0 + 2.0 * wrap_reward(inputs.wrap) + collision_penalty(
        inputs.branch_distance, inputs.branch_radius
    )
    if phase == "II":
        return base
    branch = BranchGeometry(
        center=inputs.target_center,
        axis=np.asarray(inputs.branch_axis, dtype=float),
        radius=inputs.branch_radius,
    )
    return base + hang_reward(inputs.quad_position, inputs.quad_speed, branch, inputs.tether_length)


@dataclass(frozen=True)
class GridSpec:
    """Rectangular X-Z evaluation grid; at least 2 samples per axis."""

    x_range: tuple[float, float] = (-2.0, 2.0)
    z_range: tuple[float, float] = (0.0, 4.0)
    resolution: tuple[int, int] = (41, 41)

    def __post_init__(self):
        nx, nz = self.resolution
        if nx < 2 or nz < 2:
            raise ValueError("grid resolution must be at least 2 per axis")

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        nx, nz = self.resolution
        return np.linspace(*self.x_range, nx), np.linspace(*self.z_range, nz)


def emit_heatmap(
    constants: RewardConstants,
    grid: GridSpec,
    target_center,
    *,
    tail_branch_distance: float = 1.0,
    contact: bool = False,
    contact_streak: int = 0,
    csv_out: str | IO[str] | None = None,
) -> np.ndarray:
    """Approach reward over an X-Z grid with frozen non-spatial inputs.

    The quad's y coordinate is fixed to the branch plane.  Cells outside
    the 5 m workspace are clamped to the grid minimum so the plot keeps a
    single darkest level.  Returns values shaped (nz, nx); optionally
    writes (x, z, value) rows as CSV.
    """
    target_center = np.asarray(target_center, dtype=float)
    xs, zs = grid.axes()
    values = np.empty((len(zs), len(xs)))
    end_wp = np.asarray(constants.end_waypoint, dtype=float)
    for i, z in enumerate(zs):
        for j, x in enumerate(xs):
            quad = np.array([x, target_center[1], z])
            inputs = RewardInputs(
                quad_position=quad,
                target_center=target_center,
                target_distance=float(np.linalg.norm(quad - end_wp)),
                branch_distance=float(np.linalg.norm(quad - target_center)),
                tail_branch_distance=tail_branch_distance,
                contact=contact,
                contact_streak=contact_streak,
                wrap=0.0,
                quad_speed=0.0,
            )
            values[i, j] = approach_reward(inputs, constants)

    outside = (np.abs(xs)[None, :] > WORKSPACE_HALF_EXTENT) | (
        np.abs(zs)[:, None] > WORKSPACE_HALF_EXTENT
    )
    if outside.any():
        values = np.where(outside, values.min(), values)

    if csv_out is not None:
        close = False
        if isinstance(csv_out, str):
            handle = open(csv_out, "w", newline="")
            close = True
        else:
            handle = csv_out
        try:
            writer = csv.writer(handle)
            writer.writerow(["x", "z", "value"])
            for i, z in enumerate(zs):
                for j, x in enumerate(xs):
                    writer.writerow([f"{x:.6f}", f"{z:.6f}", f"{values[i, j]:.9f}"])
        finally:
            if close:
                handle.close()
    return values
