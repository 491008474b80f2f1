"""Waypoint paths to rate-limited position+speed command streams."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import IO

import numpy as np

__all__ = [
    "CommandTrajectory",
    "WaypointPath",
    "compute_velocity_profile",
    "export_trajectory",
    "import_trajectory",
    "required_speed",
]

CONTROL_PERIOD = 0.02


@dataclass(frozen=True)
class WaypointPath:
    """Ordered waypoint list with the command period between samples."""

    waypoints: np.ndarray
    control_period: float = CONTROL_PERIOD

    def __post_init__(self):
        pts = np.asarray(self.waypoints, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 2:
            raise ValueError("need at least two 3-D waypoints")
        gaps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(gaps < 1e-12):
            raise ValueError("consecutive waypoints must be distinct")
        if self.control_period <= 0.0:
            raise ValueError("control_period must be positive")
        object.__setattr__(self, "waypoints", pts)


@dataclass(frozen=True)
class CommandTrajectory:
    positions: np.ndarray
    speeds: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        spd = np.asarray(self.speeds, dtype=float)
        if pos.shape[0] != spd.shape[0]:
            raise ValueError("positions and speeds must align")
        if spd.shape[0] and spd[0] != 0.0:
            raise ValueError("first speed setpoint must be zero")
        if np.any(spd < 0.0):
            raise ValueError("speed setpoints must be non-negative")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "speeds", spd)

    def __len__(self) -> int:
        return self.positions.shape[0]


def required_speed(tether_length: float, gravity: float = 9.81, margin: float = 1.1) -> float:
    """Speed whose kinetic energy lets the hanging weight clear the branch.

    Energy heuristic: the weight must gain one tether length of height, so
    the commanded speed is sqrt(2 g l) with a safety margin.
    """
    if tether_length <= 0.0:
        raise ValueError("tether_length must be positive")
    return math.sqrt(2.0 * gravity * tether_length) * margin


def compute_velocity_profile(path: WaypointPath, a_max: float, v_req: float) -> CommandTrajectory:
    """Ramp-limited speed per waypoint: start at rest, stop softly at the end.

    v_0 = 0, v_i = min(v_{i-1} + a_max * dt, v_req); the final speed is
    additionally capped by sqrt(2 * a_max * last_gap) so the vehicle can
    brake to rest inside the last segment.
    """
    if a_max <= 0.0:
        raise ValueError("a_max must be positive")
    if v_req <= 0.0:
        raise ValueError("v_req must be positive")
    pts = path.waypoints
    n = pts.shape[0]
    speeds = np.zeros(n)
    for i in range(1, n):
        speeds[i] = min(speeds[i - 1] + a_max * path.control_period, v_req)
    last_gap = float(np.linalg.norm(pts[-1] - pts[-2]))
    speeds[-1] = min(speeds[-1], math.sqrt(2.0 * a_max * last_gap))
    return CommandTrajectory(positions=pts.copy(), speeds=speeds)


def export_trajectory(traj: CommandTrajectory, out: str | IO[str]) -> None:
    """CSV rows (index, x, y, z, speed); import_trajectory reverses this."""
    close = False
    if isinstance(out, str):
        handle = open(out, "w", newline="")
        close = True
    else:
        handle = out
    try:
        writer = csv.writer(handle)
        writer.writerow(["index", "x", "y", "z", "speed"])
        for i in range(len(traj)):
            x, y, z = traj.positions[i]
            writer.writerow([i, repr(float(x)), repr(float(y)), repr(float(z)), repr(float(traj.speeds[i]))])
    finally:
        if close:
            handle.close()


def import_trajectory(src: str | IO[str]) -> CommandTrajectory:
    close = False
    if isinstance(src, str):
        handle = open(src, newline="")
        close = True
    else:
        handle = src
    try:
        reader = csv.reader(handle)
        header = next(reader)
        if header != ["index", "x", "y", "z", "speed"]:
            raise ValueError(f"unexpected trajectory header: {header}")
        positions = []
        speeds = []
        for row in reader:
            positions.append([float(row[1]), float(row[2]), float(row[3])])
            speeds.append(float(row[4]))
    finally:
        if close:
            handle.close()
    return CommandTrajectory(positions=np.array(positions), speeds=np.array(speeds))
