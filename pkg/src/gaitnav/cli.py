"""Command-line interface: scenario files in, CSV/JSON/PFM artifacts out.

Subcommands: gen-terrain, gen-ref, plan, render-depth, sim, eval. Every
output embeds the config hash and seed it was produced under (PFM images
get a sidecar .meta.json since the format has no header room).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys

import numpy as np
import yaml

from .depth import (
    CameraIntrinsics,
    DepthNoise,
    apply_noise,
    box_mesh,
    chest_camera_pose,
    heightfield_mesh,
    raycast_depth,
    write_depth_csv,
    write_pfm,
)
from .errors import Infeasible, ParseError, ValidationError
from .geometry import Pose3
from .lip import GaitParams, Se2Velocity
from .modulation import rollout_steps
from .mpc import (
    EllipseObstacle,
    HalfplaneObstacle,
    MpcConfig,
    NavState,
    solve_mpc,
)
from .rewards import TrackingObjective, evaluate_trace
from .simulate import (
    FAULT,
    Scenario,
    run_scenario,
    scenario_hash,
    read_trace_csv,
    write_summary_json,
    write_trace_csv,
)
from .terrain import (
    Terrain,
    generate_terrain,
    load_terrain,
    save_heightfield_csv,
    save_terrain,
    spec_from_dict,
    spec_to_dict,
)
from .tracking import TrackerConfig

_POSE_KEYS = {"x", "y", "theta"}


def _require_keys(d: dict, allowed: set, where: str):
    unknown = set(d) - allowed
    if unknown:
        raise ParseError(f"unknown keys in {where}: {sorted(unknown)}")


def _nav_state(d: dict, where: str) -> NavState:
    _require_keys(d, _POSE_KEYS, where)
    try:
        return NavState(**{k: float(v) for k, v in d.items()})
    except (TypeError, ValueError) as e:
        raise ValidationError(f"{where}: {e}") from e


def _obstacle(d: dict, i: int):
    d = dict(d)
    kind = d.pop("type", None)
    try:
        if kind == "ellipse":
            _require_keys(d, {"center", "semi_axes", "rotation"}, f"obstacles[{i}]")
            return EllipseObstacle(
                center=tuple(d["center"]),
                semi_axes=tuple(d["semi_axes"]),
                rotation=float(d.get("rotation", 0.0)),
            )
        if kind == "halfplane":
            _require_keys(d, {"normal", "offset"}, f"obstacles[{i}]")
            return HalfplaneObstacle(
                normal=tuple(d["normal"]), offset=float(d["offset"])
            )
    except (TypeError, KeyError, ValueError) as e:
        raise ValidationError(f"obstacles[{i}]: {e}") from e
    raise ParseError(f"obstacles[{i}]: unknown type {kind!r}")


_MPC_ALIASES = {"alpha": "cbf_alpha", "delta": "cbf_margin", "N": "horizon"}


def _build(cls, d: dict, where: str, aliases: dict | None = None, casts: dict | None = None):
    kw = {}
    for k, v in d.items():
        k = (aliases or {}).get(k, k)
        if k not in cls.__dataclass_fields__:
            raise ParseError(f"unknown key in {where}: {k}")
        if casts and k in casts:
            v = casts[k](v)
        kw[k] = v
    try:
        return cls(**kw)
    except (TypeError, ValueError) as e:
        raise ValidationError(f"{where}: {e}") from e


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ParseError("scenario file must be a mapping of sections")
    _require_keys(
        doc,
        {"terrain", "start", "goal", "obstacles", "gait", "mpc", "tracker", "noise", "sim"},
        "scenario",
    )
    if "terrain" not in doc:
        raise ParseError("scenario missing required section: terrain")
    if "goal" not in doc:
        raise ParseError("scenario missing required section: goal")
    terrain = spec_from_dict(doc["terrain"])
    goal = _nav_state(doc["goal"], "goal")
    start = _nav_state(doc.get("start", {}), "start")
    obstacles = tuple(
        _obstacle(o, i) for i, o in enumerate(doc.get("obstacles", []))
    )
    gait = _build(GaitParams, doc.get("gait", {}), "gait")
    mpc = _build(
        MpcConfig,
        doc.get("mpc", {}),
        "mpc",
        aliases=_MPC_ALIASES,
        casts={
            "r_input": tuple,
            "v_par_bounds": tuple,
            "v_perp_bounds": tuple,
            "omega_bounds": tuple,
        },
    )
    tracker_doc = dict(doc.get("tracker", {}))
    for key in ("v_par_bounds", "v_perp_bounds", "omega_bounds"):
        tracker_doc.setdefault(key, getattr(mpc, key))
    tracker = _build(
        TrackerConfig,
        tracker_doc,
        "tracker",
        casts={
            "gains": tuple,
            "v_par_bounds": tuple,
            "v_perp_bounds": tuple,
            "omega_bounds": tuple,
        },
    )
    noise_doc = dict(doc.get("noise", {}))
    _require_keys(noise_doc, {"lag_tau", "velocity_std"}, "noise")
    sim_doc = dict(doc.get("sim", {}))
    _require_keys(
        sim_doc,
        {"seed", "max_time", "dt", "goal_tol_xy", "goal_tol_theta", "replan_period", "modulate"},
        "sim",
    )
    try:
        return Scenario(
            terrain=terrain,
            start=start,
            goal=goal,
            obstacles=obstacles,
            gait=gait,
            mpc=mpc,
            tracker=tracker,
            lag_tau=float(noise_doc.get("lag_tau", 0.3)),
            noise_std=tuple(noise_doc.get("velocity_std", (0.02, 0.02, 0.02))),
            seed=int(sim_doc.get("seed", 0)),
            max_time=float(sim_doc.get("max_time", 60.0)),
            goal_tol_xy=float(sim_doc.get("goal_tol_xy", 0.15)),
            goal_tol_theta=float(sim_doc.get("goal_tol_theta", 0.2)),
            sim_dt=float(sim_doc.get("dt", 0.01)),
            replan_period=float(sim_doc.get("replan_period", 0.8)),
            modulate=bool(sim_doc.get("modulate", True)),
        )
    except ValueError as e:
        raise ValidationError(f"sim: {e}") from e


def scenario_to_dict(scn: Scenario) -> dict:
    def nav(z: NavState) -> dict:
        return {"x": z.x, "y": z.y, "theta": z.theta}

    obstacles = []
    for o in scn.obstacles:
        if isinstance(o, EllipseObstacle):
            obstacles.append(
                {
                    "type": "ellipse",
                    "center": list(o.center),
                    "semi_axes": list(o.semi_axes),
                    "rotation": o.rotation,
                }
            )
        else:
            obstacles.append(
                {"type": "halfplane", "normal": list(o.normal), "offset": o.offset}
            )
    return {
        "terrain": spec_to_dict(scn.terrain),
        "start": nav(scn.start),
        "goal": nav(scn.goal),
        "obstacles": obstacles,
        "gait": {f: getattr(scn.gait, f) for f in scn.gait.__dataclass_fields__},
        "mpc": {
            f: (list(v) if isinstance(v := getattr(scn.mpc, f), tuple) else v)
            for f in scn.mpc.__dataclass_fields__
        },
        "tracker": {
            f: (list(v) if isinstance(v := getattr(scn.tracker, f), tuple) else v)
            for f in scn.tracker.__dataclass_fields__
        },
        "noise": {"lag_tau": scn.lag_tau, "velocity_std": list(scn.noise_std)},
        "sim": {
            "seed": scn.seed,
            "max_time": scn.max_time,
            "dt": scn.sim_dt,
            "goal_tol_xy": scn.goal_tol_xy,
            "goal_tol_theta": scn.goal_tol_theta,
            "replan_period": scn.replan_period,
            "modulate": scn.modulate,
        },
    }


def parse_scenario(path) -> Scenario:
    try:
        with open(path) as f:
            doc = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ParseError(f"{path}: {e}") from e
    return scenario_from_dict(doc)


def serialize_scenario(scn: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(scn), sort_keys=True)


# ---------------------------------------------------------------------------
# subcommands

def _cmd_gen_terrain(args) -> int:
    spec_doc = {"type": args.type}
    for kv in args.param or []:
        if "=" not in kv:
            raise ParseError(f"--param expects key=value, got {kv!r}")
        k, v = kv.split("=", 1)
        spec_doc[k] = yaml.safe_load(v)
    spec = spec_from_dict(spec_doc)
    terrain = generate_terrain(spec)
    doc = json.dumps(spec_to_dict(spec), sort_keys=True)
    meta = {
        "config_hash": hashlib.sha256(doc.encode()).hexdigest()[:12],
        "seed": getattr(spec, "seed", 0),
    }
    save_terrain(terrain, args.out, include_polygons=args.include_polygons, meta=meta)
    if args.heights_csv:
        save_heightfield_csv(terrain, args.heights_csv, meta=meta)
    print(f"wrote {args.out} ({len(terrain.polygons)} foothold polygons)")
    return 0


def _load_terrain_arg(args) -> Terrain:
    if args.terrain_file:
        return load_terrain(args.terrain_file)
    return generate_terrain(spec_from_dict({"type": args.terrain}))


def _cmd_gen_ref(args) -> int:
    terrain = _load_terrain_arg(args)
    cmd_vals = [float(v) for v in args.cmd.split(",")]
    if len(cmd_vals) != 3:
        raise ParseError("--cmd expects vx,vy,wz")
    cmd = Se2Velocity(*cmd_vals)
    params = GaitParams()
    xmin, xmax, ymin, ymax = terrain.bounds
    sx = xmin + 0.5 if args.start_x is None else args.start_x
    from .terrain import height_at

    stance = Pose3(x=sx, y=-params.step_width / 2, z=height_at(terrain, sx, -params.step_width / 2))
    swing = Pose3(x=sx, y=params.step_width / 2, z=height_at(terrain, sx, params.step_width / 2))
    mod_refs = rollout_steps(terrain, params, cmd, args.steps, stance, swing, modulate=True)
    nom_refs = rollout_steps(terrain, params, cmd, args.steps, stance, swing, modulate=False)
    seed = getattr(terrain.spec, "seed", 0)
    key = json.dumps(
        {"terrain": spec_to_dict(terrain.spec), "cmd": cmd_vals, "steps": args.steps},
        sort_keys=True,
    )
    cfg_hash = hashlib.sha256(key.encode()).hexdigest()[:12]
    n_phase = args.samples_per_step
    with open(args.out, "w") as f:
        f.write(f"# config_hash={cfg_hash} seed={seed}\n")
        cols = ["step", "t"]
        for tag in ("nom", "mod"):
            cols += [
                f"{tag}_swing_x", f"{tag}_swing_y", f"{tag}_swing_z", f"{tag}_swing_yaw",
                f"{tag}_com_x", f"{tag}_com_y", f"{tag}_com_z", f"{tag}_com_yaw",
                f"{tag}_target_x", f"{tag}_target_y", f"{tag}_target_z",
            ]
        f.write(",".join(cols) + "\n")
        for k, (nom, mod) in enumerate(zip(nom_refs, mod_refs)):
            for t in np.linspace(0.0, nom.duration, n_phase):
                row = [float(k), t]
                for ref in (nom, mod):
                    sw = ref.swing(t)
                    cm = ref.com(t)
                    tg = ref.footstep_target
                    row += [sw.x, sw.y, sw.z, sw.yaw, cm.x, cm.y, cm.z, cm.yaw,
                            tg.x, tg.y, tg.z]
                f.write(",".join(f"{v:.17g}" for v in row) + "\n")
    print(f"wrote {args.out} ({args.steps} steps)")
    return 0


def _cmd_plan(args) -> int:
    scn = parse_scenario(args.scenario)
    try:
        plan = solve_mpc(scn.start, scn.goal, scn.obstacles, scn.mpc)
    except Infeasible as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return 1
    doc = {
        "states": plan.states.tolist(),
        "inputs": plan.inputs.tolist(),
        "dt": plan.dt,
        "objective": plan.objective,
        "max_violation": plan.max_violation,
        "max_slack": plan.max_slack,
        "status": plan.status,
        "config_hash": scenario_hash(scn),
        "seed": scn.seed,
    }
    with open(args.out, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
    print(f"wrote {args.out} (status={plan.status}, objective={plan.objective:.4f})")
    return 0


def _cmd_render_depth(args) -> int:
    scn = parse_scenario(args.scenario)
    terrain = generate_terrain(scn.terrain)
    mesh = heightfield_mesh(terrain)
    x = scn.start.x if args.x is None else args.x
    y = scn.start.y if args.y is None else args.y
    heading = scn.start.theta if args.heading is None else args.heading
    cam = chest_camera_pose(
        x, y, heading, height=args.height, pitch_down=math.radians(args.pitch_down_deg)
    )
    dynamic = []
    if args.with_box:
        box = box_mesh((0.3, 0.2, 0.4))
        box.translation = np.array([x + 0.4 * math.cos(heading),
                                    y + 0.4 * math.sin(heading), 0.6])
        dynamic.append(box)
    img = raycast_depth(mesh, dynamic, cam, CameraIntrinsics())
    if not args.no_noise:
        img = apply_noise(img, DepthNoise(seed=scn.seed))
    meta = {"config_hash": scenario_hash(scn), "seed": scn.seed}
    write_pfm(args.out, img)
    with open(str(args.out) + ".meta.json", "w") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
    if args.csv:
        write_depth_csv(args.csv, img, meta=meta)
    finite = np.isfinite(img.values)
    print(
        f"wrote {args.out} ({int(finite.sum())}/{img.values.size} returns, "
        f"median {np.nanmedian(img.values):.3f} m)"
    )
    return 0


def _cmd_sim(args) -> int:
    scn = parse_scenario(args.scenario)
    trace = run_scenario(scn)
    write_trace_csv(trace, args.out)
    if args.summary:
        write_summary_json(trace, args.summary)
    print(
        f"status={trace.summary['status']} t={trace.summary['sim_time']:.2f}s "
        f"steps={trace.summary['n_steps']} replans={trace.summary['n_replans']}"
    )
    return 1 if trace.summary["status"] == FAULT else 0


def _cmd_eval(args) -> int:
    trace = read_trace_csv(args.trace)
    if not trace.rows:
        print("empty trace", file=sys.stderr)
        return 1
    times = trace.times
    actual = {
        "com": np.stack(
            [trace.column("x"), trace.column("y"), trace.column("com_z")], axis=1
        ),
        "foot": np.stack(
            [trace.column("swing_ref_x"), trace.column("swing_ref_y"),
             trace.column("swing_ref_z")], axis=1
        ),
    }
    reference = {
        "com": np.stack(
            [trace.column("com_ref_x"), trace.column("com_ref_y"),
             trace.column("com_ref_z")], axis=1
        ),
        "foot": actual["foot"],  # feet track their reference kinematically
    }
    objectives = {
        "com": TrackingObjective(name="com", P=np.eye(3)),
        "foot": TrackingObjective(name="foot", P=np.eye(3)),
    }
    result = evaluate_trace(times, actual, reference, objectives)
    with open(args.out, "w") as f:
        f.write(f"# config_hash={trace.config_hash} seed={trace.seed}\n")
        f.write(
            "# "
            + " ".join(f"mean_err_{k}={v:.6g}" for k, v in result.mean_error.items())
            + "\n"
        )
        groups = sorted(result.samples)
        cols = ["t"] + [
            f"{g}_{c}" for g in groups for c in ("v", "v_dot", "r_v", "r_vdot", "r_total")
        ]
        f.write(",".join(cols) + "\n")
        for i, t in enumerate(times):
            row = [t]
            for g in groups:
                s = result.samples[g][i]
                row += [s.v, s.v_dot, s.r_v, s.r_vdot, s.r_total]
            f.write(",".join(f"{v:.17g}" for v in row) + "\n")
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gaitnav",
        description="Gait reference synthesis, terrain modulation, and SE(2) navigation simulation",
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-terrain", help="emit a terrain file")
    g.add_argument("--type", required=True, choices=["flat", "slope", "stairs", "blocks"])
    g.add_argument("--param", action="append", metavar="KEY=VALUE")
    g.add_argument("--out", required=True)
    g.add_argument("--heights-csv")
    g.add_argument("--include-polygons", action="store_true")
    g.set_defaults(fn=_cmd_gen_terrain)

    g = sub.add_parser("gen-ref", help="dump nominal and modulated step references as CSV")
    g.add_argument("--terrain", default="flat", choices=["flat", "slope", "stairs", "blocks"])
    g.add_argument("--terrain-file")
    g.add_argument("--cmd", default="0.4,0,0", help="vx,vy,wz")
    g.add_argument("--steps", type=int, default=10)
    g.add_argument("--samples-per-step", type=int, default=21)
    g.add_argument("--start-x", type=float, default=None)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=_cmd_gen_ref)

    g = sub.add_parser("plan", help="solve a single navigation program")
    g.add_argument("--scenario", required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=_cmd_plan)

    g = sub.add_parser("render-depth", help="render a depth image over the scenario terrain")
    g.add_argument("--scenario", required=True)
    g.add_argument("--out", required=True, help="PFM output path")
    g.add_argument("--csv")
    g.add_argument("--x", type=float, default=None)
    g.add_argument("--y", type=float, default=None)
    g.add_argument("--heading", type=float, default=None)
    g.add_argument("--height", type=float, default=1.0)
    g.add_argument("--pitch-down-deg", type=float, default=60.0)
    g.add_argument("--with-box", action="store_true", help="add a demo dynamic mesh")
    g.add_argument("--no-noise", action="store_true")
    g.set_defaults(fn=_cmd_render_depth)

    g = sub.add_parser("sim", help="run a closed-loop scenario")
    g.add_argument("--scenario", required=True)
    g.add_argument("--out", required=True, help="trace CSV path")
    g.add_argument("--summary", help="summary JSON path")
    g.set_defaults(fn=_cmd_sim)

    g = sub.add_parser("eval", help="score tracking rewards over a trace CSV")
    g.add_argument("--trace", required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=_cmd_eval)
    return p


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    try:
        return args.fn(args)
    except (ParseError, ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))
