"""Deterministic closed-loop scenario runner.

Three nested rates drive the run: plant integration at ``sim_dt`` (100 Hz
by default), velocity feedback at the tracker rate (10 Hz), and MPC
replanning every ``replan_period`` seconds (0.8 s, i.e. once per two gait
steps) warm-started from the shifted previous plan. The reduced-order
robot realizes commands through a first-order lag plus seeded Gaussian
noise; feet and pelvis height ride the active step reference
kinematically. Every tick is logged; faults never abort a run, they end
it with a partial trace.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import Infeasible, NoFoothold, OutOfBounds, PlanExpired
from .geometry import Pose3, wrap_angle, world_from_frame_xy
from .lip import GaitParams, Se2Velocity
from .modulation import generate_step_reference
from .mpc import MpcConfig, NavState, Plan, nav_step, obstacle_h, solve_mpc
from .reference import StepContext, StepReference, assemble_nominal_step
from .rewards import TrackingObjective, clf_reward_terms
from .terrain import Terrain, TerrainSpec, generate_terrain, height_at
from .tracking import (
    TrackerConfig,
    interpolate_plan,
    plan_feedforward_world,
    velocity_feedback,
)

GOAL_REACHED = "GoalReached"
TIME_LIMIT = "TimeLimit"
FAULT = "Fault"


@dataclass(frozen=True)
class Scenario:
    terrain: TerrainSpec
    goal: NavState
    start: NavState = NavState()
    obstacles: tuple = ()
    gait: GaitParams = GaitParams()
    mpc: MpcConfig = MpcConfig()
    tracker: TrackerConfig = TrackerConfig()
    lag_tau: float = 0.3
    noise_std: tuple[float, float, float] = (0.02, 0.02, 0.02)
    seed: int = 0
    max_time: float = 60.0
    goal_tol_xy: float = 0.15
    goal_tol_theta: float = 0.2
    sim_dt: float = 0.01
    replan_period: float = 0.8
    modulate: bool = True

    def __post_init__(self):
        if self.max_time <= 0 or self.sim_dt <= 0 or self.replan_period <= 0:
            raise ValueError("max_time, sim_dt and replan_period must be positive")
        if self.goal_tol_xy <= 0 or self.goal_tol_theta <= 0:
            raise ValueError("goal tolerances must be positive")
        if self.lag_tau < 0 or min(self.noise_std) < 0:
            raise ValueError("lag and noise parameters must be nonnegative")


@dataclass(frozen=True)
class RobotState:
    nav: NavState
    vel: Se2Velocity
    stance_pose: Pose3
    swing_pose: Pose3
    stance_parity: int
    phase: float
    com_z: float


@dataclass(eq=False)
class Trace:
    header: list
    rows: list = field(default_factory=list)
    events: list = field(default_factory=list)
    footsteps: list = field(default_factory=list)  # (t, x, y, z, valid)
    summary: dict = field(default_factory=dict)
    config_hash: str = ""
    seed: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.array([r[0] for r in self.rows])

    def column(self, name: str) -> np.ndarray:
        i = self.header.index(name)
        return np.array([r[i] for r in self.rows])


def scenario_hash(scn: Scenario) -> str:
    from .cli import scenario_to_dict

    doc = json.dumps(scenario_to_dict(scn), sort_keys=True)
    return hashlib.sha256(doc.encode()).hexdigest()[:12]


def initial_robot_state(scn: Scenario, terrain: Terrain) -> RobotState:
    """Feet straddle the start pose laterally by half the step width, on the
    terrain surface; the pelvis starts over the period-2 lateral orbit."""
    w = scn.gait.step_width
    nav = scn.start
    stance_xy = world_from_frame_xy(
        Pose3(x=nav.x, y=nav.y, yaw=nav.theta), (0.0, -w / 2)
    )
    swing_xy = world_from_frame_xy(
        Pose3(x=nav.x, y=nav.y, yaw=nav.theta), (0.0, w / 2)
    )
    stance = Pose3(
        x=stance_xy[0],
        y=stance_xy[1],
        z=height_at(terrain, *stance_xy),
        yaw=nav.theta,
    )
    swing = Pose3(
        x=swing_xy[0], y=swing_xy[1], z=height_at(terrain, *swing_xy), yaw=nav.theta
    )
    return RobotState(
        nav=nav,
        vel=Se2Velocity(),
        stance_pose=stance,
        swing_pose=swing,
        stance_parity=1,
        phase=0.0,
        com_z=scn.gait.com_height + stance.z,
    )


def advance_robot(
    state: RobotState,
    cmd: Se2Velocity,
    terrain: Terrain,
    params: GaitParams,
    dt_sim: float,
    rng: np.random.Generator,
    step_ref: StepReference,
    lag_tau: float = 0.3,
    noise_std=(0.0, 0.0, 0.0),
) -> tuple[RobotState, bool]:
    """One plant tick: lagged noisy velocity, kinematic integration, gait
    phase advance with stance/swing exchange at the step boundary."""
    if dt_sim <= 0:
        raise ValueError("dt_sim must be positive")
    if lag_tau > 1e-9:
        decay = math.exp(-dt_sim / lag_tau)
    else:
        decay = 0.0
    noise = rng.standard_normal(3)
    vel = Se2Velocity(
        vx=cmd.vx + (state.vel.vx - cmd.vx) * decay + noise_std[0] * noise[0],
        vy=cmd.vy + (state.vel.vy - cmd.vy) * decay + noise_std[1] * noise[1],
        wz=cmd.wz + (state.vel.wz - cmd.wz) * decay + noise_std[2] * noise[2],
    )
    nav = nav_step(state.nav, _as_nav_input(vel), dt_sim)
    if not terrain.in_bounds(nav.x, nav.y):
        raise OutOfBounds(f"robot left the terrain at ({nav.x:.2f}, {nav.y:.2f})")
    T = params.period
    phase = state.phase + dt_sim
    stepped = phase >= T - 1e-12
    if stepped:
        target = step_ref.footstep_target
        if not terrain.in_bounds(target.x, target.y):
            raise OutOfBounds(f"footstep target off terrain ({target.x:.2f}, {target.y:.2f})")
        new_state = RobotState(
            nav=nav,
            vel=vel,
            stance_pose=target,
            swing_pose=state.stance_pose,
            stance_parity=2 if state.stance_parity == 1 else 1,
            phase=phase - T,
            com_z=step_ref.com(T).z,
        )
    else:
        new_state = RobotState(
            nav=nav,
            vel=vel,
            stance_pose=state.stance_pose,
            swing_pose=step_ref.swing(phase),
            stance_parity=state.stance_parity,
            phase=phase,
            com_z=step_ref.com(phase).z,
        )
    return new_state, stepped


def _as_nav_input(v: Se2Velocity):
    from .mpc import NavInput

    return NavInput(v_par=v.vx, v_perp=v.vy, omega=v.wz)


def _make_step_ref(scn: Scenario, terrain: Terrain, state: RobotState, cmd: Se2Velocity):
    ctx = StepContext(
        stance_pose=state.stance_pose,
        swing_start=state.swing_pose,
        stance_parity=state.stance_parity,
        cmd=cmd,
    )
    if scn.modulate:
        return generate_step_reference(ctx, terrain, scn.gait)
    return assemble_nominal_step(ctx, scn.gait)


def _goal_reached(nav: NavState, goal: NavState, scn: Scenario) -> bool:
    return (
        math.hypot(nav.x - goal.x, nav.y - goal.y) <= scn.goal_tol_xy
        and abs(wrap_angle(nav.theta - goal.theta)) <= scn.goal_tol_theta
    )


def _trace_header(n_obstacles: int) -> list:
    cols = [
        "t", "x", "y", "theta",
        "vx_real", "vy_real", "wz_real",
        "cmd_vx", "cmd_vy", "cmd_wz",
        "phase", "parity",
        "stance_x", "stance_y", "stance_z", "stance_yaw",
        "swing_ref_x", "swing_ref_y", "swing_ref_z", "swing_ref_yaw",
        "com_ref_x", "com_ref_y", "com_ref_z", "com_ref_yaw",
        "com_z", "arm_left", "arm_right", "plan_id",
    ]
    cols += [f"h_{i}" for i in range(n_obstacles)]
    cols += ["V_com", "r_com_v", "r_com_vdot", "r_com_total"]
    return cols


def run_scenario(scn: Scenario) -> Trace:
    """Run the full loop until the goal, the time limit, or a fault."""
    terrain = generate_terrain(scn.terrain)
    rng = np.random.default_rng(scn.seed)
    state = initial_robot_state(scn, terrain)
    trace = Trace(
        header=_trace_header(len(scn.obstacles)),
        config_hash=scenario_hash(scn),
        seed=scn.seed,
    )
    com_objective = TrackingObjective(name="com", P=np.eye(3))

    mpc_every = max(1, round(scn.replan_period / scn.sim_dt))
    track_every = max(1, round(1.0 / scn.tracker.rate / scn.sim_dt))
    n_ticks = int(round(scn.max_time / scn.sim_dt))
    warm_shift = max(1, round(scn.replan_period / scn.mpc.dt))

    cmd = Se2Velocity()
    plan: Plan | None = None
    plan_id = -1
    t_plan = 0.0
    ref: StepReference | None = None
    status = TIME_LIMIT
    time_to_goal = math.nan
    prev_v = 0.0
    n_replans = 0
    n_steps = 0
    fault_detail = ""
    pending_events: list = []

    for tick in range(n_ticks):
        t = tick * scn.sim_dt
        events = pending_events
        pending_events = []
        try:
            if tick % mpc_every == 0:
                plan = solve_mpc(
                    state.nav,
                    scn.goal,
                    scn.obstacles,
                    scn.mpc,
                    warm_start=plan,
                    warm_shift=warm_shift,
                )
                plan_id += 1
                t_plan = t
                n_replans += 1
                events.append("replan")
            if tick % track_every == 0:
                try:
                    z_ref, v_ff = interpolate_plan(plan, t - t_plan)
                    cmd = velocity_feedback(
                        z_ref, plan_feedforward_world(z_ref, v_ff), state.nav, scn.tracker
                    )
                except PlanExpired:
                    cmd = Se2Velocity()
                    events.append("plan_expired")
            if ref is None:
                ref = _make_step_ref(scn, terrain, state, cmd)
                valid = any(
                    p.contains_xy(ref.footstep_target.x, ref.footstep_target.y, tol=1e-7)
                    for p in terrain.polygons
                )
                trace.footsteps.append(
                    (t, ref.footstep_target.x, ref.footstep_target.y,
                     ref.footstep_target.z, valid)
                )
                events.append("new_step_ref")
        except (NoFoothold, Infeasible, OutOfBounds) as e:
            status = FAULT
            fault_detail = f"{type(e).__name__}: {e}"
            events.append(f"fault_{type(e).__name__}")
            _record(trace, t, state, cmd, ref, plan_id, scn, None, events)
            break

        com_ref = ref.com(state.phase)
        err = np.array(
            [state.nav.x - com_ref.x, state.nav.y - com_ref.y, state.com_z - com_ref.z]
        )
        v_com = float(err @ err)
        v_dot = 0.0 if not trace.rows else (v_com - prev_v) / scn.sim_dt
        sample = clf_reward_terms(v_com, v_dot, com_objective, t=t)
        prev_v = v_com
        _record(trace, t, state, cmd, ref, plan_id, scn, sample, events)

        if _goal_reached(state.nav, scn.goal, scn):
            status = GOAL_REACHED
            time_to_goal = t
            break

        try:
            state, stepped = advance_robot(
                state, cmd, terrain, scn.gait, scn.sim_dt, rng, ref,
                lag_tau=scn.lag_tau, noise_std=scn.noise_std,
            )
        except (OutOfBounds, NoFoothold) as e:
            status = FAULT
            fault_detail = f"{type(e).__name__}: {e}"
            tag = f"fault_{type(e).__name__}"
            trace.events[-1] = f"{trace.events[-1]}|{tag}" if trace.events[-1] else tag
            break
        if stepped:
            n_steps += 1
            ref = None
            pending_events.append("step")

    h_cols = (
        [trace.column(f"h_{i}") for i in range(len(scn.obstacles))]
        if trace.rows
        else []
    )
    min_barrier = float(min(c.min() for c in h_cols)) if h_cols else math.nan
    r_totals = trace.column("r_com_total") if trace.rows else np.array([math.nan])
    valid_steps = [f for f in trace.footsteps if f[4]]
    trace.summary = {
        "status": status,
        "fault": fault_detail,
        "time_to_goal": time_to_goal,
        "sim_time": trace.rows[-1][0] if trace.rows else 0.0,
        "min_barrier": min_barrier,
        "n_steps": n_steps,
        "n_replans": n_replans,
        "foothold_validity_rate": (
            len(valid_steps) / len(trace.footsteps) if trace.footsteps else math.nan
        ),
        "mean_r_com_total": float(np.nanmean(r_totals)) if trace.rows else math.nan,
        "config_hash": trace.config_hash,
        "seed": scn.seed,
    }
    return trace


def _record(trace, t, state, cmd, ref, plan_id, scn, sample, events):
    if ref is not None:
        swing = ref.swing(state.phase)
        com = ref.com(state.phase)
        arms = ref.arms(state.phase)
    else:
        swing = state.swing_pose
        com = Pose3(x=state.nav.x, y=state.nav.y, z=state.com_z, yaw=state.nav.theta)
        arms = (0.0, 0.0)
    row = [
        t, state.nav.x, state.nav.y, state.nav.theta,
        state.vel.vx, state.vel.vy, state.vel.wz,
        cmd.vx, cmd.vy, cmd.wz,
        state.phase, float(state.stance_parity),
        state.stance_pose.x, state.stance_pose.y, state.stance_pose.z,
        state.stance_pose.yaw,
        swing.x, swing.y, swing.z, swing.yaw,
        com.x, com.y, com.z, com.yaw,
        state.com_z, arms[0], arms[1], float(plan_id),
    ]
    for obs in scn.obstacles:
        row.append(obstacle_h(obs, state.nav.as_array()))
    if sample is None:
        row += [math.nan, math.nan, math.nan, math.nan]
    else:
        row += [sample.v, sample.r_v, sample.r_vdot, sample.r_total]
    trace.rows.append(row)
    trace.events.append("|".join(events))


# ---------------------------------------------------------------------------
# trace io

def write_trace_csv(trace: Trace, path):
    with open(path, "w") as f:
        f.write(f"# config_hash={trace.config_hash} seed={trace.seed}\n")
        f.write(",".join(trace.header) + ",events\n")
        for row, ev in zip(trace.rows, trace.events):
            f.write(",".join(f"{v:.17g}" for v in row) + f",{ev}\n")


def write_summary_json(trace: Trace, path):
    with open(path, "w") as f:
        json.dump(trace.summary, f, indent=2, sort_keys=True)


def read_trace_csv(path) -> Trace:
    header = None
    rows = []
    events = []
    config_hash = ""
    seed = 0
    with open(path) as f:
        for line in f:
            line = line.rstrip("\n")
            if line.startswith("#"):
                for part in line[1:].split():
                    if part.startswith("config_hash="):
                        config_hash = part.split("=", 1)[1]
                    elif part.startswith("seed="):
                        seed = int(part.split("=", 1)[1])
                continue
            if header is None:
                header = line.split(",")[:-1]
                continue
            parts = line.split(",")
            rows.append([float(v) for v in parts[: len(header)]])
            events.append(parts[len(header)] if len(parts) > len(header) else "")
    if header is None:
        header = _trace_header(0)
    return Trace(
        header=header, rows=rows, events=events, config_hash=config_hash, seed=seed
    )
