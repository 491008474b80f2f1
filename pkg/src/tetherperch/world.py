"""Fixed-timestep world: vehicle point mass, chain tether, weight, branch.

The vehicle is a PD-controlled, gravity-compensated point mass that tracks a
commanded waypoint.  The tether is a chain of equal-length segments solved by
mass-weighted distance projection; the perching weight is the last chain
point.  The branch is an infinite cylinder with friction contact.

Heavy per-step work lives in :mod:`tetherperch.kernels`; this module owns the
types, parameter packing, and the standalone geometry helpers that tests and
the reward layer call directly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .geometry import unit
from .kernels.layout import (
    N_OUT,
    N_PARAMS,
    O_AXIS_FALLBACK,
    O_CONTACT,
    O_DIVERGED,
    O_MAX_VIOLATION,
    O_MIN_RADIAL,
    P_AX,
    P_AY,
    P_AZ,
    P_CONTACT_EPS,
    P_CX,
    P_CY,
    P_CZ,
    P_DT,
    P_EXIT_TOL,
    P_FRICTION,
    P_GRAVITY,
    P_KD,
    P_KP,
    P_MAX_ACCEL,
    P_MAX_ITERS,
    P_MAX_SPEED,
    P_MIN_ITERS,
    P_QUAD_MASS,
    P_RADIUS,
    P_SEG_LEN,
    P_TETHER_K,
)

log = logging.getLogger(__name__)

GRAVITY = 9.81


@dataclass(frozen=True)
class BranchGeometry:
    """Cylindrical perching target."""

    center: np.ndarray
    axis: np.ndarray
    radius: float = 0.02

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))
        object.__setattr__(self, "axis", unit(np.asarray(self.axis, dtype=np.float64)))
        if not self.radius > 0.0:
            raise ValueError("branch radius must be positive")


def default_branch(center=(0.0, 0.0, 2.0)) -> BranchGeometry:
    return BranchGeometry(center=np.asarray(center, dtype=np.float64), axis=np.array([0.0, 1.0, 0.0]))


@dataclass(frozen=True)
class TetherSpec:
    """Chain discretization of the tether plus the end weight."""

    total_length: float = 1.0
    n_segments: int = 20
    chain_mass: float = 0.002
    weight_mass: float = 0.010

    def __post_init__(self) -> None:
        if self.n_segments < 2:
            raise ValueError("need at least 2 segments")
        if self.total_length <= 0.0 or self.chain_mass <= 0.0 or self.weight_mass <= 0.0:
            raise ValueError("lengths and masses must be positive")

    @property
    def segment_length(self) -> float:
        return self.total_length / self.n_segments

    @property
    def n_points(self) -> int:
        return self.n_segments + 1

    def inverse_masses(self) -> np.ndarray:
        """Point 0 is pinned; chain mass is spread evenly, weight added at the end."""
        per_link = self.chain_mass / self.n_segments
        masses = np.full(self.n_points, per_link, dtype=np.float64)
        masses[-1] += self.weight_mass
        inv = 1.0 / masses
        inv[0] = 0.0
        return inv


@dataclass(frozen=True)
class SimConfig:
    """Integration and contact parameters."""

    dt: float = 1.0 / 240.0
    gravity: float = GRAVITY
    constraint_iterations: int = 20
    max_constraint_iterations: int = 800
    constraint_exit_tol: float = 1e-5
    tether_friction: float = 0.9
    kp: float = 20.0
    kd: float = 9.0
    max_speed: float = 5.0
    max_accel: float = 40.0
    quad_mass: float = 0.230
    tether_stiffness: float = 700.0
    contact_eps: float = 1e-3

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.constraint_iterations < 1:
            raise ValueError("need at least one constraint iteration")
        if self.max_accel <= 0.0:
            raise ValueError("max_accel must be positive")


@dataclass
class WorldState:
    """Mutable simulation state; arrays are float64 and owned by the state."""

    quad_position: np.ndarray
    quad_velocity: np.ndarray
    link_positions: np.ndarray
    link_velocities: np.ndarray
    time: float = 0.0

    def copy(self) -> "WorldState":
        return WorldState(
            quad_position=self.quad_position.copy(),
            quad_velocity=self.quad_velocity.copy(),
            link_positions=self.link_positions.copy(),
            link_velocities=self.link_velocities.copy(),
            time=self.time,
        )

    @property
    def weight_position(self) -> np.ndarray:
        return self.link_positions[-1]

    @property
    def weight_velocity(self) -> np.ndarray:
        return self.link_velocities[-1]


@dataclass(frozen=True)
class StepInfo:
    """Per-step diagnostics reported by the kernel."""

    contact: bool
    max_violation: float
    min_radial: float
    diverged: bool
    axis_fallback: bool


@dataclass(frozen=True)
class World:
    """Immutable bundle of everything needed to step a :class:`WorldState`."""

    branch: BranchGeometry = field(default_factory=default_branch)
    tether: TetherSpec = field(default_factory=TetherSpec)
    config: SimConfig = field(default_factory=SimConfig)

    def packed_params(self) -> np.ndarray:
        p = np.zeros(N_PARAMS, dtype=np.float64)
        cfg = self.config
        p[P_DT] = cfg.dt
        p[P_GRAVITY] = cfg.gravity
        p[P_KP] = cfg.kp
        p[P_KD] = cfg.kd
        p[P_MAX_SPEED] = cfg.max_speed
        p[P_MAX_ACCEL] = cfg.max_accel
        p[P_QUAD_MASS] = cfg.quad_mass
        p[P_TETHER_K] = cfg.tether_stiffness
        p[P_SEG_LEN] = self.tether.segment_length
        p[P_MIN_ITERS] = float(cfg.constraint_iterations)
        p[P_MAX_ITERS] = float(cfg.max_constraint_iterations)
        p[P_EXIT_TOL] = cfg.constraint_exit_tol
        p[P_CX], p[P_CY], p[P_CZ] = self.branch.center
        p[P_AX], p[P_AY], p[P_AZ] = self.branch.axis
        p[P_RADIUS] = self.branch.radius
        p[P_FRICTION] = cfg.tether_friction
        p[P_CONTACT_EPS] = cfg.contact_eps
        return p

    def initial_state(self, quad_position) -> WorldState:
        """Vehicle hovering, chain hanging straight down, everything at rest."""
        qp = np.asarray(quad_position, dtype=np.float64).copy()
        n = self.tether.n_points
        seg = self.tether.segment_length
        links = np.tile(qp, (n, 1))
        links[:, 2] -= seg * np.arange(n)
        return WorldState(
            quad_position=qp,
            quad_velocity=np.zeros(3),
            link_positions=links,
            link_velocities=np.zeros((n, 3)),
        )


def step_physics(
    state: WorldState,
    waypoint,
    world: World,
    *,
    params: np.ndarray | None = None,
    inv_mass: np.ndarray | None = None,
    out: np.ndarray | None = None,
) -> StepInfo:
    """Advance ``state`` in place by one substep of ``world.config.dt``.

    ``params``/``inv_mass``/``out`` may be passed in to avoid re-packing in
    tight loops; they must come from the same ``world``.
    """
    if params is None:
        params = world.packed_params()
    if inv_mass is None:
        inv_mass = world.tether.inverse_masses()
    if out is None:
        out = np.zeros(N_OUT, dtype=np.float64)
    wp = np.asarray(waypoint, dtype=np.float64)
    kernels.step_world(
        state.quad_position,
        state.quad_velocity,
        state.link_positions,
        state.link_velocities,
        inv_mass,
        wp,
        params,
        out,
    )
    state.time += world.config.dt
    info = StepInfo(
        contact=bool(out[O_CONTACT] > 0.5),
        max_violation=float(out[O_MAX_VIOLATION]),
        min_radial=float(out[O_MIN_RADIAL]),
        diverged=bool(out[O_DIVERGED] > 0.5),
        axis_fallback=bool(out[O_AXIS_FALLBACK] > 0.5),
    )
    if info.axis_fallback:
        log.warning("degenerate on-axis contact at t=%.4f s, used +Z fallback normal", state.time)
    return info


def solve_tether_constraints(
    link_positions: np.ndarray,
    inv_mass: np.ndarray,
    anchor,
    segment_length: float,
    iterations: int,
) -> float:
    """Pin point 0 to ``anchor`` and project all segment lengths in place.

    Runs up to ``iterations`` mass-weighted projection passes (each solves the
    linearized segment system directly, so convergence does not degrade with
    heavy end points) and returns the largest remaining violation in meters.
    """
    if iterations < 1:
        raise ValueError("need at least one iteration")
    anchor = np.asarray(anchor, dtype=np.float64)
    return float(
        kernels.project_chain(link_positions, inv_mass, anchor, float(segment_length), int(iterations))
    )


def collide_cylinder(point, velocity, branch: BranchGeometry, friction: float):
    """Project a point out of the branch cylinder and respond to the contact.

    Returns (position, velocity).  Outside the cylinder both are returned
    unchanged.  Inside, the point moves to the surface along the radial
    normal, the normal velocity component is removed, and the remainder is
    scaled by ``friction``.  A point exactly on the axis uses a +Z fallback
    normal and logs a warning.
    """
    p = np.asarray(point, dtype=np.float64).copy()
    v = np.asarray(velocity, dtype=np.float64).copy()
    rel = p - branch.center
    along = float(rel @ branch.axis)
    radial = rel - along * branch.axis
    dist = float(np.linalg.norm(radial))
    if dist >= branch.radius:
        return p, v
    if dist < 1e-12:
        normal = np.array([0.0, 0.0, 1.0])
        log.warning("point exactly on branch axis, projecting along +Z")
    else:
        normal = radial / dist
    p = p + normal * (branch.radius - dist)
    v = v - float(v @ normal) * normal
    v = v * friction
    return p, v


def last_third_branch_distance(link_positions: np.ndarray, branch: BranchGeometry) -> float:
    """Distance from the weight-end third of the chain to the branch center.

    The ideal contact region is the final third of the chain; the minimum
    point-to-center distance over that region feeds the contact reward.
    """
    n_pts = link_positions.shape[0]
    count = max(1, math.ceil(n_pts / 3.0))
    tail = link_positions[n_pts - count:]
    return float(np.min(np.linalg.norm(tail - branch.center, axis=1)))


def chain_energy(state: WorldState, tether: TetherSpec, gravity: float = GRAVITY) -> float:
    """Total mechanical energy of the chain points (pinned point excluded)."""
    per_link = tether.chain_mass / tether.n_segments
    masses = np.full(tether.n_points, per_link)
    masses[-1] += tether.weight_mass
    m = masses[1:]
    v2 = np.sum(state.link_velocities[1:] ** 2, axis=1)
    z = state.link_positions[1:, 2]
    return float(np.sum(0.5 * m * v2 + m * gravity * z))


def scale_tether(world: World, length_scale: float = 1.0, weight_scale: float = 1.0) -> World:
    """New world with tether length and weight mass scaled (sweep support)."""
    t = world.tether
    new_weight = max(t.weight_mass * weight_scale, 1e-6)
    new_length = t.total_length * length_scale
    if new_length <= 0.0:
        raise ValueError("scaled tether length must stay positive")
    return replace(world, tether=replace(t, total_length=new_length, weight_mass=new_weight))
