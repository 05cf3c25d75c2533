"""Terrain-consistent reference modulation: projection composition, swing
retargeting, pelvis lift, and the modulated-vs-blind stairs comparison."""
import math

import numpy as np
import pytest

from gaitnav import (
    FlatSpec,
    GaitParams,
    Se2Velocity,
    SlopeSpec,
    StairsSpec,
    generate_step_reference,
    generate_terrain,
    height_at,
    modulate_com,
    modulate_footstep,
    modulate_swing,
    rollout_steps,
)
from gaitnav.geometry import Pose3, frame_from_world_xy, world_from_frame_xy
from gaitnav.reference import StepContext, assemble_nominal_step


PARAMS = GaitParams()


def make_ctx(cmd=Se2Velocity(), stance=None, swing=None, parity=1):
    stance = stance or Pose3(y=-PARAMS.step_width / 2)
    swing = swing or Pose3(y=PARAMS.step_width / 2)
    return StepContext(stance_pose=stance, swing_start=swing, stance_parity=parity, cmd=cmd)


@pytest.fixture(scope="module")
def flat():
    return generate_terrain(FlatSpec(extent=8.0))


@pytest.fixture(scope="module")
def stairs():
    return generate_terrain(StairsSpec())


class TestModulateFootstep:
    def test_identity_on_flat(self, flat):
        stance = Pose3(x=0.3, y=0.1, yaw=0.4)
        tgt = modulate_footstep((0.2, 0.2), stance, flat)
        expect = world_from_frame_xy(stance, (0.2, 0.2))
        assert tgt.position[0] == pytest.approx(expect[0], abs=1e-12)
        assert tgt.position[1] == pytest.approx(expect[1], abs=1e-12)
        assert tgt.projection_distance == 0.0
        assert tgt.roll == 0.0 and tgt.pitch == 0.0

    def test_frame_round_trip_is_identity(self, flat):
        rng = np.random.default_rng(8)
        for _ in range(100):
            stance = Pose3(
                x=rng.uniform(-1, 1), y=rng.uniform(-1, 1), yaw=rng.uniform(-3, 3)
            )
            u = rng.uniform(-0.3, 0.3, 2)
            w = world_from_frame_xy(stance, u)
            back = frame_from_world_xy(stance, w)
            np.testing.assert_allclose(back, u, atol=1e-12)

    def test_stair_gap_lands_on_tread(self, stairs):
        spec = stairs.spec
        stance = Pose3(x=spec.run - 0.17, z=spec.rise)
        # nominal step of 0.16 lands at run - 0.01, inside the inset gap
        tgt = modulate_footstep((0.16, 0.0), stance, stairs)
        assert tgt.polygon_id in (1, 2)
        poly = stairs.polygons[tgt.polygon_id]
        assert poly.contains_xy(tgt.position[0], tgt.position[1], tol=1e-9)

    def test_rotated_stance_frame(self, flat):
        stance = Pose3(yaw=math.pi / 2)
        tgt = modulate_footstep((0.2, 0.0), stance, flat)
        assert tgt.position[0] == pytest.approx(0.0, abs=1e-12)
        assert tgt.position[1] == pytest.approx(0.2, abs=1e-12)


class TestModulateCom:
    def test_zero_lift_unchanged(self):
        z = modulate_com(lambda t: 0.62, 0.0, 0.0, 0.4)
        assert z(0.17) == 0.62

    def test_midpoint_of_line(self):
        z = modulate_com(lambda t: 0.0, 0.0, 0.17, 0.4)
        assert z(0.2) == pytest.approx(0.085, abs=1e-15)

    def test_line_endpoints(self):
        prof = lambda t: 0.6 + 0.01 * t
        z = modulate_com(prof, 0.34, 0.51, 0.4)
        assert z(0.0) - prof(0.0) == pytest.approx(0.34, abs=1e-15)
        assert z(0.4) - prof(0.4) == pytest.approx(0.51, abs=1e-15)


class TestModulateSwing:
    def test_flat_identical_to_nominal(self, flat):
        ctx = make_ctx(cmd=Se2Velocity(0.4, 0.05, 0.2))
        nominal = assemble_nominal_step(ctx, PARAMS)
        tgt = modulate_footstep(nominal.nominal_step_xy, ctx.stance_pose, flat)
        swing = modulate_swing(nominal, tgt, flat, PARAMS)
        for t in np.linspace(0, PARAMS.period, 13):
            a = nominal.swing(t)
            b = swing(t)
            assert b.x == pytest.approx(a.x, abs=1e-12)
            assert b.y == pytest.approx(a.y, abs=1e-12)
            assert b.z == pytest.approx(a.z, abs=1e-12)
            assert b.yaw == pytest.approx(a.yaw, abs=1e-12)
            assert b.roll == 0.0 and b.pitch == 0.0

    def test_single_ascending_step(self, stairs):
        """Landing one tread up: end height matches the tread, and the
        profile clears the terrain at the scan phases."""
        spec = stairs.spec
        stance = Pose3(x=0.1, y=-PARAMS.step_width / 2, z=spec.rise)
        swing0 = Pose3(x=0.1, y=PARAMS.step_width / 2, z=spec.rise)
        ctx = StepContext(stance_pose=stance, swing_start=swing0, stance_parity=1,
                          cmd=Se2Velocity(0.5, 0, 0))
        nominal = assemble_nominal_step(ctx, PARAMS)
        tgt = modulate_footstep(nominal.nominal_step_xy, stance, stairs)
        swing = modulate_swing(nominal, tgt, stairs, PARAMS)
        end = swing(PARAMS.period)
        assert end.z == pytest.approx(tgt.position[2], abs=1e-6)
        assert end.x == pytest.approx(tgt.position[0], abs=1e-6)
        assert end.y == pytest.approx(tgt.position[1], abs=1e-6)
        for t in np.linspace(0, PARAMS.period, 21):
            pose = swing(t)
            assert pose.z >= height_at(stairs, pose.x, pose.y) - 1e-6

    def test_slope_orients_foot_to_plane(self):
        terrain = generate_terrain(SlopeSpec(grade=0.2, extent=6.0))
        stance = Pose3(x=0.0, y=-PARAMS.step_width / 2, z=0.0)
        swing0 = Pose3(x=0.0, y=PARAMS.step_width / 2, z=0.0)
        ctx = StepContext(stance_pose=stance, swing_start=swing0, stance_parity=1,
                          cmd=Se2Velocity(0.5, 0, 0))
        nominal = assemble_nominal_step(ctx, PARAMS)
        tgt = modulate_footstep(nominal.nominal_step_xy, stance, terrain)
        swing = modulate_swing(nominal, tgt, terrain, PARAMS)
        end = swing(PARAMS.period)
        assert end.roll == pytest.approx(0.0, abs=1e-12)
        assert end.pitch == pytest.approx(math.atan(0.2), abs=1e-12)
        assert swing(0.0).pitch == 0.0


class TestGenerateStepReference:
    def test_flat_ground_identity(self, flat):
        """Acceptance-style check: all channels equal the nominal ones to
        1e-12 on flat ground (stance height is zero here)."""
        rng = np.random.default_rng(100)
        for _ in range(100):
            cmd = Se2Velocity(rng.uniform(-0.3, 0.8), rng.uniform(-0.2, 0.2), rng.uniform(-0.8, 0.8))
            parity = int(rng.integers(1, 3))
            ctx = make_ctx(cmd=cmd, parity=parity)
            nom = assemble_nominal_step(ctx, PARAMS)
            mod = generate_step_reference(ctx, flat, PARAMS)
            assert mod.modulated
            for t in np.linspace(0, PARAMS.period, 5):
                for chan in ("swing", "com"):
                    a = getattr(nom, chan)(t)
                    b = getattr(mod, chan)(t)
                    for f in ("x", "y", "z", "roll", "pitch", "yaw"):
                        assert abs(getattr(a, f) - getattr(b, f)) < 1e-12, (chan, f)
                assert nom.arms(t) == mod.arms(t)
            assert abs(mod.footstep_target.x - nom.footstep_target.x) < 1e-12
            assert abs(mod.footstep_target.y - nom.footstep_target.y) < 1e-12
            assert abs(mod.footstep_target.z - nom.footstep_target.z) < 1e-12

    def test_stairs_rollout_footsteps_all_on_treads(self, stairs):
        stance = Pose3(x=-0.2, y=-PARAMS.step_width / 2, z=0.0)
        swing0 = Pose3(x=-0.2, y=PARAMS.step_width / 2, z=0.0)
        refs = rollout_steps(stairs, PARAMS, Se2Velocity(0.4, 0, 0), 10, stance, swing0)
        assert len(refs) == 10
        for ref in refs:
            tgt = ref.footstep_target
            on_poly = [
                p for p in stairs.polygons if p.contains_xy(tgt.x, tgt.y, tol=1e-9)
            ]
            assert on_poly, f"footstep ({tgt.x:.3f}, {tgt.y:.3f}) not on any polygon"
            assert tgt.z == pytest.approx(on_poly[0].plane_z(tgt.x, tgt.y), abs=1e-9)

    def test_stairs_rollout_swing_clearance(self, stairs):
        stance = Pose3(x=-0.2, y=-PARAMS.step_width / 2, z=0.0)
        swing0 = Pose3(x=-0.2, y=PARAMS.step_width / 2, z=0.0)
        refs = rollout_steps(stairs, PARAMS, Se2Velocity(0.4, 0, 0), 10, stance, swing0)
        for ref in refs:
            for t in np.linspace(0, PARAMS.period, 21):
                pose = ref.swing(t)
                assert pose.z >= height_at(stairs, pose.x, pose.y) - 1e-6

    def test_unmodulated_rollout_fails_on_stairs(self, stairs):
        """The blind baseline must land in a gap or inset margin at least
        once and clip the terrain at least once within ten steps."""
        stance = Pose3(x=-0.2, y=-PARAMS.step_width / 2, z=0.0)
        swing0 = Pose3(x=-0.2, y=PARAMS.step_width / 2, z=0.0)
        refs = rollout_steps(
            stairs, PARAMS, Se2Velocity(0.4, 0, 0), 10, stance, swing0, modulate=False
        )
        invalid = 0
        penetrations = 0
        for ref in refs:
            tgt = ref.footstep_target
            if not any(p.contains_xy(tgt.x, tgt.y, tol=1e-9) for p in stairs.polygons):
                invalid += 1
            for t in np.linspace(0, PARAMS.period, 21):
                pose = ref.swing(t)
                if pose.z < height_at(stairs, pose.x, pose.y) - 1e-6:
                    penetrations += 1
                    break
        assert invalid >= 1
        assert penetrations >= 1

    def test_com_lift_on_stairs(self, stairs):
        spec = stairs.spec
        stance = Pose3(x=0.1, y=-PARAMS.step_width / 2, z=spec.rise)
        swing0 = Pose3(x=0.1, y=PARAMS.step_width / 2, z=spec.rise)
        ctx = StepContext(stance_pose=stance, swing_start=swing0, stance_parity=1,
                          cmd=Se2Velocity(0.5, 0, 0))
        ref = generate_step_reference(ctx, stairs, PARAMS)
        target_z = ref.footstep_target.z
        from gaitnav.reference import com_z_profile

        prof0 = com_z_profile(0.0, ctx.cmd, PARAMS)
        profT = com_z_profile(PARAMS.period, ctx.cmd, PARAMS)
        assert ref.com(0.0).z - prof0 == pytest.approx(spec.rise, abs=1e-12)
        assert ref.com(PARAMS.period).z - profT == pytest.approx(target_z, abs=1e-12)

    def test_continuity_and_endpoint_velocity(self, stairs):
        """Modulated channels stay continuous with zero endpoint velocity
        in the plan view (finite-difference check)."""
        stance = Pose3(x=0.5, y=-PARAMS.step_width / 2, z=stairs.spec.rise * 2)
        swing0 = Pose3(x=0.2, y=PARAMS.step_width / 2, z=stairs.spec.rise)
        ctx = StepContext(stance_pose=stance, swing_start=swing0, stance_parity=1,
                          cmd=Se2Velocity(0.3, 0, 0.4))
        ref = generate_step_reference(ctx, stairs, PARAMS)
        T = PARAMS.period
        h = 1e-6
        for chan in ("swing", "com"):
            f = getattr(ref, chan)
            ts = np.linspace(h, T - h, 41)
            prev = f(0.0)
            for t in ts:
                cur = f(t)
                assert abs(cur.x - prev.x) < 0.05 and abs(cur.z - prev.z) < 0.05
                prev = cur
        # zero endpoint velocity in xy / yaw of the swing
        a, b = ref.swing(0.0), ref.swing(h)
        assert abs(b.x - a.x) / h < 1e-4 and abs(b.yaw - a.yaw) / h < 1e-4
        c, d = ref.swing(T - h), ref.swing(T)
        assert abs(d.x - c.x) / h < 1e-4 and abs(d.yaw - c.yaw) / h < 1e-4

    def test_throughput_under_one_ms(self, stairs):
        import time

        stance = Pose3(x=0.5, y=-PARAMS.step_width / 2, z=stairs.spec.rise * 2)
        swing0 = Pose3(x=0.34, y=PARAMS.step_width / 2, z=stairs.spec.rise)
        ctx = StepContext(stance_pose=stance, swing_start=swing0, stance_parity=1,
                          cmd=Se2Velocity(0.4, 0, 0))
        generate_step_reference(ctx, stairs, PARAMS)  # warm up (jit, caches)
        n = 200
        t0 = time.perf_counter()
        for _ in range(n):
            generate_step_reference(ctx, stairs, PARAMS)
        per_step = (time.perf_counter() - t0) / n
        assert per_step < 1e-3, f"{per_step * 1e3:.3f} ms per step"
