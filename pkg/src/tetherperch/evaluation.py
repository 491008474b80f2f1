"""Trajectory error metrics, episode success rules, and robustness sweeps.

Three loosely coupled tool sets used by the command-line front end:

* error tables comparing a measured quad trajectory against a reference,
* success classification for perching episodes plus the batch sweep over
  tether-length / payload-mass perturbations with its tolerance summary,
* learning-curve smoothing and steps-to-threshold aggregation.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from typing import IO, Callable, Iterable, Mapping, Sequence

import numpy as np

from .env import EpisodeConfig, Observation, PerchEnv
from .world import World, scale_tether

log = logging.getLogger(__name__)

SELF_STRIKE_DISTANCE = 0.05
PROMISING_SUCCESSES = 4
EPISODES_PER_POINT = 5


# ---------------------------------------------------------------------------
# Trajectory error metrics


@dataclass(frozen=True)
class AxisMetrics:
    """Bias, absolute, and squared error statistics for one scalar series."""

    mbe: float
    mae: float
    rmse: float
    mse: float

    @staticmethod
    def from_errors(errors: np.ndarray) -> "AxisMetrics":
        e = np.asarray(errors, dtype=float).ravel()
        mse = float(np.mean(e * e))
        return AxisMetrics(
            mbe=float(np.mean(e)),
            mae=float(np.mean(np.abs(e))),
            rmse=math.sqrt(mse),
            mse=mse,
        )


@dataclass(frozen=True)
class ErrorReport:
    """Per-axis metrics plus two aggregate conventions.

    ``total_magnitude`` evaluates the metrics over the per-sample 3-D error
    norms; magnitudes are non-negative, so its bias is unsigned and equals
    its absolute error. ``total_axis_mean`` pools the signed per-axis errors
    into one scalar sample set: its MBE/MAE/MSE are the means of the axis
    values and its RMSE is the root of that pooled MSE. Both are reported
    because published summary rows rarely state which is meant.
    """

    x: AxisMetrics
    y: AxisMetrics
    z: AxisMetrics
    total_magnitude: AxisMetrics
    total_axis_mean: AxisMetrics

    def axis(self, name: str) -> AxisMetrics:
        return {"x": self.x, "y": self.y, "z": self.z}[name]


def trajectory_errors(reference, measured) -> ErrorReport:
    """Error report for two aligned position sequences.

    Errors are signed as measured minus reference. Both inputs must be
    (n, 3) with the same n >= 1.
    """
    ref = np.asarray(reference, dtype=float)
    mea = np.asarray(measured, dtype=float)
    if ref.ndim != 2 or ref.shape[1] != 3 or mea.shape != ref.shape:
        raise ValueError(
            f"expected matching (n, 3) sequences, got {ref.shape} and {mea.shape}"
        )
    if ref.shape[0] < 1:
        raise ValueError("need at least one sample")
    err = mea - ref
    return ErrorReport(
        x=AxisMetrics.from_errors(err[:, 0]),
        y=AxisMetrics.from_errors(err[:, 1]),
        z=AxisMetrics.from_errors(err[:, 2]),
        total_magnitude=AxisMetrics.from_errors(np.linalg.norm(err, axis=1)),
        total_axis_mean=AxisMetrics.from_errors(err),
    )


# ---------------------------------------------------------------------------
# Episode logs and success classification


@dataclass
class EpisodeLog:
    """Per-step record of one rollout, enough to judge perching success."""

    wrap_history: list[float] = field(default_factory=list)
    phases: list[str] = field(default_factory=list)
    payload_quad_distance: list[float] = field(default_factory=list)
    payload_upper_tether_distance: list[float] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    done: bool = False

    @property
    def final_wrap(self) -> float:
        if not self.wrap_history:
            raise ValueError("empty episode log")
        return self.wrap_history[-1]


@dataclass(frozen=True)
class ClassificationResult:
    success: bool
    reclassified: bool
    final_wrap: float


def _check_complete(logrec: EpisodeLog) -> None:
    n = len(logrec.wrap_history)
    if n == 0:
        raise ValueError("empty episode log")
    if not logrec.done:
        raise ValueError("truncated episode log: episode did not terminate")
    if not (
        len(logrec.phases)
        == len(logrec.payload_quad_distance)
        == len(logrec.payload_upper_tether_distance)
        == n
    ):
        raise ValueError("truncated episode log: per-step series lengths differ")


def classify_success(logrec: EpisodeLog) -> ClassificationResult:
    """Success iff the final wrap count reached one full revolution.

    Episodes that fall short because the payload struck the vehicle or the
    upper part of the tether during the wrapping phase are reclassified as
    successes; the flag records when that rule fired.
    """
    _check_complete(logrec)
    w = logrec.final_wrap
    if w >= 1.0:
        return ClassificationResult(success=True, reclassified=False, final_wrap=w)
    strike = any(
        phase == "II"
        and (dq < SELF_STRIKE_DISTANCE or dt < SELF_STRIKE_DISTANCE)
        for phase, dq, dt in zip(
            logrec.phases,
            logrec.payload_quad_distance,
            logrec.payload_upper_tether_distance,
        )
    )
    return ClassificationResult(success=strike, reclassified=strike, final_wrap=w)


def _upper_tether_count(n_points: int) -> int:
    return max(1, math.ceil(n_points / 3))


def run_episode(
    env: PerchEnv,
    policy: Callable[[Observation], np.ndarray],
    seed: int | None = None,
    max_steps: int | None = None,
) -> EpisodeLog:
    """Roll one episode and collect the log needed by classify_success."""
    obs = env.reset(seed)
    logrec = EpisodeLog()
    limit = max_steps if max_steps is not None else env.episode.max_steps
    for _ in range(limit):
        transition = env.step(policy(obs))
        obs = transition.next_observation
        payload = env.state.weight_position
        upper = env.state.link_positions[: _upper_tether_count(env.state.link_positions.shape[0])]
        logrec.wrap_history.append(obs.wrap_count)
        logrec.phases.append(transition.phase)
        logrec.payload_quad_distance.append(
            float(np.linalg.norm(payload - env.state.quad_position))
        )
        logrec.payload_upper_tether_distance.append(
            float(np.min(np.linalg.norm(upper - payload, axis=1)))
        )
        logrec.rewards.append(transition.reward)
        if transition.done:
            logrec.done = True
            break
    return logrec


# ---------------------------------------------------------------------------
# Robustness sweep


def two_tier_axis(extended_max_pct: float = 100.0) -> tuple[float, ...]:
    """Perturbation percentages: 5% steps in [-100, 100], then 20% steps up.

    ``extended_max_pct`` bounds the coarse upper tier and must be >= 100;
    at exactly 100 the axis is just the fine tier.
    """
    if extended_max_pct < 100.0:
        raise ValueError("extended_max_pct must be >= 100")
    fine = [float(v) for v in range(-100, 101, 5)]
    coarse = [float(v) for v in range(120, int(extended_max_pct) + 1, 20)]
    return tuple(fine + coarse)


def sweep_points(
    tether_extended_max_pct: float = 100.0,
    mass_extended_max_pct: float = 300.0,
) -> list[tuple[float, float]]:
    """Cross-pattern grid: each axis swept with the other held at nominal."""
    points = [(dl, 0.0) for dl in two_tier_axis(tether_extended_max_pct)]
    points += [
        (0.0, dm) for dm in two_tier_axis(mass_extended_max_pct) if dm != 0.0
    ]
    return points


@dataclass(frozen=True)
class SweepEntry:
    dl_pct: float
    dm_pct: float
    successes: int


@dataclass
class SweepReport:
    """Success counts over the perturbation grid for one agent."""

    entries: list[SweepEntry]
    skipped: list[tuple[float, float]] = field(default_factory=list)
    episodes_per_point: int = EPISODES_PER_POINT
    promising_threshold: int = PROMISING_SUCCESSES

    def _axis_interval(
        self, selector: Callable[[SweepEntry], bool], key: Callable[[SweepEntry], float]
    ) -> tuple[float, float] | None:
        line = sorted((e for e in self.entries if selector(e)), key=key)
        pcts = [key(e) for e in line]
        if 0.0 not in pcts:
            return None
        i0 = pcts.index(0.0)
        promising = [e.successes >= self.promising_threshold for e in line]
        if not promising[i0]:
            return None
        lo = i0
        while lo > 0 and promising[lo - 1]:
            lo -= 1
        hi = i0
        while hi + 1 < len(line) and promising[hi + 1]:
            hi += 1
        return (pcts[lo], pcts[hi])

    def tolerance_intervals(self) -> dict[str, tuple[float, float] | None]:
        """Maximal contiguous promising range through nominal, per axis."""
        return {
            "tether_pct": self._axis_interval(
                lambda e: e.dm_pct == 0.0, lambda e: e.dl_pct
            ),
            "mass_pct": self._axis_interval(
                lambda e: e.dl_pct == 0.0, lambda e: e.dm_pct
            ),
        }


def robustness_sweep(
    policy: Callable[[Observation], np.ndarray],
    base_world: World | None = None,
    *,
    episode: EpisodeConfig | None = None,
    constants=None,
    points: Sequence[tuple[float, float]] | None = None,
    episodes: int = EPISODES_PER_POINT,
    promising_threshold: int = PROMISING_SUCCESSES,
    seed: int = 0,
    map_fn: Callable = map,
) -> SweepReport:
    """Run the episode batches over the perturbation grid.

    Episodes within a point's batch differ by seeded start jitter, so the
    default episode config enables a small jitter radius. A 100% tether
    shortening leaves no tether to simulate; those points are recorded as
    skipped rather than scored. Grid points are independent; pass an
    executor's ``map`` as ``map_fn`` to spread them over workers.
    """
    world = base_world if base_world is not None else World()
    epconf = episode if episode is not None else EpisodeConfig(start_jitter=0.05)
    grid = list(points) if points is not None else sweep_points()

    def eval_point(indexed: tuple[int, tuple[float, float]]) -> SweepEntry:
        idx, (dl, dm) = indexed
        scaled = scale_tether(world, 1.0 + dl / 100.0, 1.0 + dm / 100.0)
        env = PerchEnv(scaled, epconf, constants)
        wins = 0
        for k in range(episodes):
            logrec = run_episode(env, policy, seed=seed + 1000 * idx + k)
            wins += int(classify_success(logrec).success)
        return SweepEntry(dl_pct=dl, dm_pct=dm, successes=wins)

    active = [(i, p) for i, p in enumerate(grid) if p[0] > -100.0]
    skipped = [p for p in grid if p[0] <= -100.0]
    for dl, dm in skipped:
        log.warning("skipping degenerate grid point dl=%s%% dm=%s%%", dl, dm)
    entries = list(map_fn(eval_point, active))
    return SweepReport(
        entries=entries,
        skipped=skipped,
        episodes_per_point=episodes,
        promising_threshold=promising_threshold,
    )


def write_sweep_csv(report: SweepReport, out: str | IO[str]) -> None:
    if isinstance(out, str):
        with open(out, "w", newline="") as fh:
            write_sweep_csv(report, fh)
        return
    writer = csv.writer(out)
    writer.writerow(["dl_pct", "dm_pct", "successes"])
    for e in report.entries:
        writer.writerow([repr(e.dl_pct), repr(e.dm_pct), e.successes])


def read_sweep_csv(src: str | IO[str]) -> SweepReport:
    if isinstance(src, str):
        with open(src, newline="") as fh:
            return read_sweep_csv(fh)
    reader = csv.reader(src)
    header = next(reader, None)
    if header != ["dl_pct", "dm_pct", "successes"]:
        raise ValueError(f"unexpected sweep CSV header: {header}")
    entries = [
        SweepEntry(dl_pct=float(r[0]), dm_pct=float(r[1]), successes=int(r[2]))
        for r in reader
        if r
    ]
    return SweepReport(entries=entries)


def write_sweep_summary(report: SweepReport, out: str | IO[str]) -> None:
    """JSON summary in the tolerance-interval form used by the range figure."""
    intervals = report.tolerance_intervals()
    payload = {
        "episodes_per_point": report.episodes_per_point,
        "promising_threshold": report.promising_threshold,
        "tolerance_pct": {
            axis: list(rng) if rng is not None else None
            for axis, rng in intervals.items()
        },
        "skipped": [list(p) for p in report.skipped],
    }
    if isinstance(out, str):
        with open(out, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    else:
        json.dump(payload, out, indent=2)
        out.write("\n")


# ---------------------------------------------------------------------------
# Learning-curve aggregation


@dataclass(frozen=True)
class RunLog:
    """Reward trace of one training run (one agent, one seed)."""

    agent: str
    seed: int
    env_steps: np.ndarray
    rewards: np.ndarray

    def __post_init__(self):
        steps = np.asarray(self.env_steps, dtype=float)
        rew = np.asarray(self.rewards, dtype=float)
        if steps.shape != rew.shape or steps.ndim != 1:
            raise ValueError("env_steps and rewards must be equal-length 1-D")
        object.__setattr__(self, "env_steps", steps)
        object.__setattr__(self, "rewards", rew)


def moving_average(values, window: int) -> np.ndarray:
    """Trailing mean over ``window`` samples; shorter prefixes use what exists."""
    if window < 1:
        raise ValueError("window must be >= 1")
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return v.copy()
    cums = np.cumsum(v)
    out = np.empty_like(v)
    head = min(window, v.size)
    out[:head] = cums[:head] / np.arange(1, head + 1)
    if v.size > window:
        out[window:] = (cums[window:] - cums[:-window]) / window
    return out


def steps_to_threshold(
    env_steps, rewards, threshold: float, window: int = 1
) -> float | None:
    """First env step whose smoothed reward reaches the threshold, else None."""
    steps = np.asarray(env_steps, dtype=float)
    smooth = moving_average(rewards, window)
    hits = np.nonzero(smooth >= threshold)[0]
    if hits.size == 0:
        return None
    return float(steps[hits[0]])


@dataclass
class CurveSummary:
    smoothed: dict[str, list[RunLog]]
    median_steps_to_threshold: dict[str, float | None]
    threshold: float | None
    window: int


def aggregate_curves(
    logs: Mapping[str, Sequence[RunLog]] | Iterable[RunLog],
    window: int = 1,
    threshold: float | None = None,
) -> CurveSummary:
    """Smooth per-seed curves and take the median steps to a reward threshold.

    Seeds that never reach the threshold count as unbounded, so a majority of
    non-reaching seeds yields None for that agent. Empty logs are dropped
    with a warning.
    """
    if not isinstance(logs, Mapping):
        grouped: dict[str, list[RunLog]] = {}
        for run in logs:
            grouped.setdefault(run.agent, []).append(run)
        logs = grouped
    smoothed: dict[str, list[RunLog]] = {}
    medians: dict[str, float | None] = {}
    for agent, runs in logs.items():
        kept = []
        for run in runs:
            if run.env_steps.size == 0:
                log.warning("excluding empty run log: agent=%s seed=%d", agent, run.seed)
                continue
            kept.append(run)
        if not kept:
            continue
        smoothed[agent] = [
            RunLog(run.agent, run.seed, run.env_steps, moving_average(run.rewards, window))
            for run in kept
        ]
        if threshold is not None:
            reach = [
                steps_to_threshold(run.env_steps, run.rewards, threshold, window)
                for run in kept
            ]
            med = float(np.median([math.inf if s is None else s for s in reach]))
            medians[agent] = None if math.isinf(med) else med
    return CurveSummary(
        smoothed=smoothed,
        median_steps_to_threshold=medians,
        threshold=threshold,
        window=window,
    )


def write_curves_csv(summary: CurveSummary, out: str | IO[str]) -> None:
    if isinstance(out, str):
        with open(out, "w", newline="") as fh:
            write_curves_csv(summary, fh)
        return
    writer = csv.writer(out)
    writer.writerow(["agent", "seed", "env_step", "reward"])
    for agent, runs in summary.smoothed.items():
        for run in runs:
            for step, reward in zip(run.env_steps, run.rewards):
                writer.writerow([agent, run.seed, repr(float(step)), repr(float(reward))])
