"""Controlled-descent laws and termination logic for the post-wrap phase.

The vehicle hangs from the wrapped tether; thrust is held then ramped down
while the tilt set-point regulates cable tension.  Pure functions carry the
laws; :class:`DescentTracker` owns the tiny bit of sequential state
(elapsed time and the low-thrust timer).
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import IO

log = logging.getLogger(__name__)

__all__ = [
    "DescentConfig",
    "DescentTracker",
    "descent_terminated",
    "estimate_tension",
    "thrust_schedule",
    "tilt_setpoint",
    "write_descent_log",
]

CONTINUE = "continue"
DISARM = "disarm"


@dataclass(frozen=True)
class DescentConfig:
    vehicle_weight_newtons: float = 2.3
    hover_thrust: float = 2.3
    thrust_start_fraction: float = 0.70
    thrust_end_fraction: float = 0.30
    hold_duration: float = 3.0
    ramp_duration: float = 4.0
    tilt_limit_deg: float = 25.0
    clearance_threshold: float = 0.3
    low_thrust_fraction: float = 0.18
    low_thrust_duration: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.thrust_end_fraction < self.thrust_start_fraction <= 1.0):
            raise ValueError("need 0 < end fraction < start fraction <= 1")


def tilt_setpoint(tension_ref: float, thrust: float, mass: float, gravity: float = 9.81,
                  tilt_limit_deg: float = 25.0) -> float:
    """Tilt angle [rad] that makes the vertical thrust component deliver
    the requested cable tension; arccos argument and output both clamped.

    Returns 0 when the requested tension is unreachable (argument above 1),
    which callers may treat as a flagged degenerate case.
    """
    if thrust <= 0.0:
        raise ValueError("thrust must be positive")
    arg = (mass * gravity - tension_ref) / thrust
    if arg > 1.0:
        log.warning("requested tension %.3f N unreachable at thrust %.3f N", tension_ref, thrust)
        arg = 1.0
    arg = max(-1.0, arg)
    phi = math.acos(arg)
    return min(phi, math.radians(tilt_limit_deg))


def thrust_schedule(elapsed: float, cfg: DescentConfig) -> float:
    """Hold at the start fraction, ramp linearly, plateau at the end fraction."""
    if elapsed < 0.0:
        raise ValueError("elapsed must be non-negative")
    hi = cfg.thrust_start_fraction * cfg.hover_thrust
    lo = cfg.thrust_end_fraction * cfg.hover_thrust
    if elapsed < cfg.hold_duration:
        return hi
    into_ramp = elapsed - cfg.hold_duration
    if into_ramp < cfg.ramp_duration:
        return hi + (lo - hi) * into_ramp / cfg.ramp_duration
    return lo


def estimate_tension(thrust: float, tilt: float, mass: float, gravity: float = 9.81) -> float:
    """Cable tension implied by force balance: weight minus vertical thrust."""
    return mass * gravity - thrust * math.cos(tilt)


@dataclass
class DescentTracker:
    """Sequential termination state; decision is latched once disarmed."""

    cfg: DescentConfig = field(default_factory=DescentConfig)
    elapsed: float = 0.0
    low_thrust_timer: float = 0.0
    decision: str = CONTINUE

    def update(self, dt: float, thrust: float, branch_clearance: float) -> str:
        if self.decision == DISARM:
            return DISARM
        self.elapsed += dt
        if thrust < self.cfg.low_thrust_fraction * self.cfg.hover_thrust:
            self.low_thrust_timer += dt
        else:
            self.low_thrust_timer = 0.0
        self.decision = descent_terminated(
            branch_clearance, self.low_thrust_timer, self.cfg
        )
        return self.decision


def descent_terminated(branch_clearance: float, low_thrust_elapsed: float,
                       cfg: DescentConfig) -> str:
    """Disarm on low clearance or on sustained low thrust; else continue."""
    if branch_clearance < cfg.clearance_threshold:
        return DISARM
    if low_thrust_elapsed >= cfg.low_thrust_duration:
        return DISARM
    return CONTINUE


def write_descent_log(out: str | IO[str], rows) -> None:
    """Rows of (t, thrust, tilt_setpoint, tension_estimate, clearance, decision)."""
    close = False
    if isinstance(out, str):
        handle = open(out, "w", newline="")
        close = True
    else:
        handle = out
    try:
        writer = csv.writer(handle)
        writer.writerow(["t", "thrust", "tilt", "tension", "clearance", "decision"])
        for row in rows:
            writer.writerow(list(row))
    finally:
        if close:
            handle.close()
