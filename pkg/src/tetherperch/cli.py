"""Command-line front end tying the modules into reproducible runs.

Every subcommand resolves one RunConfig (file values overridden by
flags), writes its artifacts under the output directory, and drops a
``config.yaml`` snapshot beside them so the run can be repeated from
disk alone. Exit codes: 0 success, 2 usage, 3 configuration problem,
4 runtime fault.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import kernels
from .agent import SACAgent, SACConfig, TrainingDivergence, load_agent
from .config import (
    AGENT_LABELS,
    ConfigError,
    RunConfig,
    load_run_config,
    resolve_output_dir,
    run_config_hash,
    save_run_config,
)
from .demos import (
    AGENT_DEMO_KINDS,
    SET_SIZES,
    load_demo_set,
    load_transitions,
    make_demo_set,
    save_demo_set,
    sim_config_hash,
)
from .descent import DescentTracker, estimate_tension, thrust_schedule, tilt_setpoint, write_descent_log
from .env import PerchEnv
from .evaluation import (
    classify_success,
    robustness_sweep,
    run_episode,
    write_sweep_csv,
    write_sweep_summary,
)
from .rewards import GridSpec, RewardConstants, emit_heatmap
from .trajectory import WaypointPath, compute_velocity_profile, export_trajectory, required_speed

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_FAULT = 4


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML run configuration file")
    parser.add_argument("--output", help="output directory (overrides the file)")
    parser.add_argument("--seed", type=int, help="override the first seed")
    parser.add_argument("--agent", choices=sorted(AGENT_LABELS), help="agent label override")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tetherperch",
        description="Tethered tensile perching: demos, training, and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-demos", help="generate scripted demonstration files")
    _add_common(p)
    p.add_argument("--kind", choices=["A", "A-", "F", "all"], default="all")

    p = sub.add_parser("train", help="train an agent, logging curve and checkpoint")
    _add_common(p)
    p.add_argument("--demos", action="append", default=[], help="demo JSONL file (repeatable)")
    p.add_argument("--steps", type=int, help="override run.train_steps")

    p = sub.add_parser("evaluate", help="roll deterministic episodes from a checkpoint")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episodes", type=int, default=5)

    p = sub.add_parser("sweep", help="tether-length / payload-mass robustness sweep")
    _add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episodes", type=int, default=None, help="episodes per grid point")

    p = sub.add_parser("heatmap", help="approach-reward heatmap CSV over the X-Z plane")
    _add_common(p)

    p = sub.add_parser("trajopt", help="ramp-limited velocity profile for a waypoint path")
    _add_common(p)
    p.add_argument("--waypoints", help="CSV of x,y,z rows; default is a simple approach path")

    p = sub.add_parser("descent-sim", help="drive the descent laws over a synthetic profile")
    _add_common(p)
    p.add_argument("--duration", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=0.1)

    p = sub.add_parser("replay", help="re-execute stored demo actions and verify rewards")
    _add_common(p)
    p.add_argument("--demos", required=True, help="demo JSONL file to replay")

    return parser


def _resolve_config(args) -> RunConfig:
    cfg = load_run_config(args.config) if args.config else RunConfig()
    updates = {}
    if getattr(args, "output", None):
        updates["output_dir"] = args.output
    if getattr(args, "seed", None) is not None:
        updates["seeds"] = (args.seed, *cfg.seeds[1:])
    if getattr(args, "agent", None):
        updates["agent"] = args.agent
    if getattr(args, "steps", None) is not None:
        updates["train_steps"] = args.steps
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _prepare_output(cfg: RunConfig, subdir: str) -> Path:
    out = resolve_output_dir(cfg.output_dir) / subdir
    out.mkdir(parents=True, exist_ok=True)
    save_run_config(cfg, out / "config.yaml")
    return out


# ---------------------------------------------------------------------------
# subcommands


def _cmd_gen_demos(args) -> int:
    cfg = _resolve_config(args)
    out = _prepare_output(cfg, "demos")
    kinds = ["A", "A-", "F"] if args.kind == "all" else [args.kind]
    seed = cfg.seeds[0]
    for kind in kinds:
        demo_set = make_demo_set(kind, cfg.build_env(), seed=seed)
        path = out / f"{kind}.jsonl"
        lines = save_demo_set(demo_set, str(path))
        print(f"wrote {path} ({len(demo_set.trajectories)} trajectories, {lines} lines)")
    return EXIT_OK


def _load_demo_files(cfg: RunConfig, paths: list[str], env: PerchEnv):
    """Validate labels against the agent and pool the transitions."""
    allowed = AGENT_DEMO_KINDS[cfg.agent]
    expected_hash = sim_config_hash(env)
    pools = []
    for path in paths:
        demo_set = load_demo_set(path)
        if demo_set.label not in allowed:
            raise ConfigError(
                f"run.agent: agent {cfg.agent!r} does not take {demo_set.label!r} "
                f"demonstrations (allowed: {list(allowed) or 'none'})"
            )
        if demo_set.config_hash != expected_hash:
            raise ConfigError(
                f"demos: {path} was recorded under config {demo_set.config_hash}, "
                f"but this run uses {expected_hash}"
            )
        pools.append(path)
    return load_transitions(pools, expected_config_hash=expected_hash) if pools else None


def _cmd_train(args) -> int:
    cfg = _resolve_config(args)
    out = _prepare_output(cfg, f"train-{cfg.agent}")
    env = cfg.build_env()
    val_env = cfg.build_env()
    demos = _load_demo_files(cfg, args.demos, env)

    seed = cfg.seeds[0]
    agent = SACAgent(
        obs_dim=5,
        action_dim=3,
        box_center=env.world.branch.center,
        box_half=[env.episode.workspace_half_extent] * 3,
        config=cfg.learner,
        seed=seed,
    )
    if demos is not None:
        agent.load_demos(demos)
        agent.pretrain(cfg.learner.pretrain_steps, seed=seed)

    log_path = out / "train_log.csv"
    with open(log_path, "w", newline="") as stream:
        result = agent.train(
            env,
            cfg.train_steps,
            seed=seed,
            log_stream=stream,
            checkpoint_path=out / "checkpoint.json",
            divergence_dump_path=out / "diverged.json",
            validation_env=val_env,
        )
    summary = {
        "agent": cfg.agent,
        "seed": seed,
        "config_hash": run_config_hash(cfg),
        "env_steps": result.total_env_steps,
        "updates": result.updates,
        "episodes": len(result.episode_rewards),
        "best_validation": agent.best_validation,
    }
    (out / "train_summary.json").write_text(json.dumps(summary, indent=2))
    print(f"trained {cfg.agent} for {result.total_env_steps} steps; artifacts in {out}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    cfg = _resolve_config(args)
    out = _prepare_output(cfg, "evaluate")
    env = cfg.build_env()
    agent = load_agent(args.checkpoint)
    policy = agent.policy(deterministic=True)

    rows = []
    for k in range(args.episodes):
        episode_log = run_episode(env, policy, seed=cfg.seeds[0] + k)
        verdict = classify_success(episode_log)
        rows.append(
            {
                "episode": k,
                "return": sum(episode_log.rewards),
                "final_wrap": verdict.final_wrap,
                "success": verdict.success,
                "reclassified": verdict.reclassified,
            }
        )
    path = out / "episodes.csv"
    with open(path, "w", newline="") as fh:
        import csv as _csv

        writer = _csv.DictWriter(
            fh, fieldnames=["episode", "return", "final_wrap", "success", "reclassified"]
        )
        writer.writeheader()
        writer.writerows(rows)
    successes = sum(r["success"] for r in rows)
    (out / "evaluate_summary.json").write_text(
        json.dumps({"episodes": args.episodes, "successes": successes}, indent=2)
    )
    print(f"{successes}/{args.episodes} successful episodes; details in {path}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _resolve_config(args)
    out = _prepare_output(cfg, "sweep")
    agent = load_agent(args.checkpoint)
    kwargs = {"seed": cfg.seeds[0]}
    if args.episodes is not None:
        kwargs["episodes"] = args.episodes
    report = robustness_sweep(
        agent.policy(deterministic=True),
        base_world=cfg.world,
        episode=cfg.episode,
        constants=cfg.rewards,
        **kwargs,
    )
    write_sweep_csv(report, str(out / "sweep.csv"))
    write_sweep_summary(report, str(out / "sweep_summary.json"))
    print(f"swept {len(report.entries)} grid points; artifacts in {out}")
    return EXIT_OK


def _cmd_heatmap(args) -> int:
    cfg = _resolve_config(args)
    out = _prepare_output(cfg, "heatmap")
    constants = cfg.rewards
    if constants is None:
        constants = RewardConstants().with_end_waypoint(
            cfg.world.branch.center + np.array([0.35, 0.0, 0.35])
        )
    path = out / "heatmap.csv"
    # 0.05 m cells put the default end waypoint exactly on a grid node
    grid = GridSpec(resolution=(81, 81))
    emit_heatmap(constants, grid, cfg.world.branch.center, csv_out=str(path))
    print(f"wrote {path}")
    return EXIT_OK


def _default_waypoint_path(cfg: RunConfig) -> WaypointPath:
    start = np.asarray(cfg.episode.start_position, dtype=float)
    center = cfg.world.branch.center
    scale = cfg.world.tether.total_length
    stops = np.stack(
        [
            start,
            center + np.array([1.0, 0.0, -0.3]) * scale,
            center + np.array([-0.8, 0.0, 0.2]) * scale,
            center + np.array([-0.8, 0.0, 1.3]) * scale,
        ]
    )
    return WaypointPath(waypoints=stops)


def _cmd_trajopt(args) -> int:
    cfg = _resolve_config(args)
    out = _prepare_output(cfg, "trajopt")
    if args.waypoints:
        pts = np.loadtxt(args.waypoints, delimiter=",", ndmin=2)
        path = WaypointPath(waypoints=pts)
    else:
        path = _default_waypoint_path(cfg)
    v_req = required_speed(cfg.world.tether.total_length, cfg.world.config.gravity)
    traj = compute_velocity_profile(path, cfg.world.config.max_accel, v_req)
    dest = out / "trajectory.csv"
    export_trajectory(traj, str(dest))
    print(f"wrote {dest} ({len(traj)} samples, v_req={v_req:.2f} m/s)")
    return EXIT_OK


def _cmd_descent_sim(args) -> int:
    cfg = _resolve_config(args)
    out = _prepare_output(cfg, "descent-sim")
    dcfg = cfg.descent
    mass = dcfg.vehicle_weight_newtons / cfg.world.config.gravity
    tracker = DescentTracker(cfg=dcfg)
    # synthetic geometry: clearance shrinks as the ramp sheds thrust
    start_clearance = 2.0
    rows = []
    t = 0.0
    while t <= args.duration:
        thrust = thrust_schedule(t, dcfg)
        tension_ref = dcfg.vehicle_weight_newtons - thrust * 0.8
        tilt = tilt_setpoint(
            max(tension_ref, 0.0), thrust, mass, cfg.world.config.gravity, dcfg.tilt_limit_deg
        )
        tension = estimate_tension(thrust, tilt, mass, cfg.world.config.gravity)
        frac = thrust / dcfg.hover_thrust
        clearance = start_clearance * (frac - dcfg.thrust_end_fraction) / (
            dcfg.thrust_start_fraction - dcfg.thrust_end_fraction
        )
        decision = tracker.update(args.dt, thrust, clearance)
        rows.append(
            (
                f"{t:.3f}",
                f"{thrust:.6f}",
                f"{tilt:.6f}",
                f"{tension:.6f}",
                f"{clearance:.6f}",
                decision,
            )
        )
        if decision != "continue":
            break
        t += args.dt
    dest = out / "descent_log.csv"
    write_descent_log(str(dest), rows)
    print(f"wrote {dest} ({len(rows)} samples, final decision {rows[-1][-1]})")
    return EXIT_OK


def _cmd_replay(args) -> int:
    cfg = _resolve_config(args)
    out = _prepare_output(cfg, "replay")
    env = cfg.build_env()
    demo_set = load_demo_set(args.demos)
    expected = sim_config_hash(env)
    if demo_set.config_hash != expected:
        raise ConfigError(
            f"demos: {args.demos} was recorded under config {demo_set.config_hash}, "
            f"but this run uses {expected}"
        )
    worst = 0.0
    for traj, seed in zip(demo_set.trajectories, demo_set.seeds):
        env.reset(seed)
        for stored in traj:
            redone = env.step(stored.action)
            worst = max(worst, abs(redone.reward - stored.reward))
    identical = worst == 0.0
    report = {
        "file": str(args.demos),
        "trajectories": len(demo_set.trajectories),
        "max_reward_delta": worst,
        "identical": identical,
    }
    (out / "replay_report.json").write_text(json.dumps(report, indent=2))
    if not identical:
        print(f"replay drift: max reward delta {worst:.3e}", file=sys.stderr)
        return EXIT_FAULT
    print(f"replayed {len(demo_set.trajectories)} trajectories bit-identically")
    return EXIT_OK


_COMMANDS = {
    "gen-demos": _cmd_gen_demos,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "sweep": _cmd_sweep,
    "heatmap": _cmd_heatmap,
    "trajopt": _cmd_trajopt,
    "descent-sim": _cmd_descent_sim,
    "replay": _cmd_replay,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code or 0)
    log.info("kernel backend: %s", kernels.BACKEND)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"configuration error: missing file {exc.filename}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, KeyError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingDivergence as exc:
        print(f"runtime fault: {exc}", file=sys.stderr)
        return EXIT_FAULT
    except RuntimeError as exc:
        print(f"runtime fault: {exc}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
