"""Navigation MPC: model pieces, analytic gradients against finite
differences, and full solves against feasible-plan upper bounds."""
import math
import time

import numpy as np
import pytest

from gaitnav import (
    EllipseObstacle,
    HalfplaneObstacle,
    Infeasible,
    MpcConfig,
    NavInput,
    NavState,
    dcbf_constraint,
    goal_cost,
    nav_step,
    obstacle_h,
    solve_mpc,
)
from gaitnav.mpc import _OcpWorkspace, plan_objective, rollout


CFG = MpcConfig()


class TestNavStep:
    def test_zero_input(self):
        z = NavState(0.3, -0.2, 0.7)
        out = nav_step(z, NavInput(), 0.4)
        assert (out.x, out.y, out.theta) == (z.x, z.y, z.theta)

    def test_forward_at_zero_heading(self):
        out = nav_step(NavState(), NavInput(v_par=1.0), 0.4)
        assert out.x == pytest.approx(0.4)
        assert out.y == 0.0

    def test_frame_rotation(self):
        out = nav_step(NavState(theta=math.pi / 2), NavInput(v_par=1.0), 0.4)
        assert out.x == pytest.approx(0.0, abs=1e-15)
        assert out.y == pytest.approx(0.4)


class TestGoalCost:
    def test_at_goal(self):
        assert goal_cost([1, 2, 0.5], [1, 2, 0.5], 1.0, 0.5) == 0.0

    def test_opposite_heading(self):
        c = goal_cost([0, 0, math.pi], [0, 0, 0.0], 1.0, 0.5)
        assert c == pytest.approx(0.5 * 4.0)

    def test_heading_periodicity(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            th = rng.uniform(-10, 10)
            a = goal_cost([0, 0, th], [0, 0, 0.3], 1.0, 0.5)
            b = goal_cost([0, 0, th + 2 * math.pi], [0, 0, 0.3], 1.0, 0.5)
            assert a == pytest.approx(b, abs=1e-9)


class TestObstacleH:
    def test_ellipse_center_and_boundary(self):
        obs = EllipseObstacle(center=(1.0, 2.0), semi_axes=(0.5, 0.25), rotation=0.3)
        assert obstacle_h(obs, [1.0, 2.0, 0.0]) == pytest.approx(-1.0)
        # boundary point: center + R @ (a, 0)
        c, s = math.cos(0.3), math.sin(0.3)
        p = [1.0 + 0.5 * c, 2.0 + 0.5 * s, 0.0]
        assert obstacle_h(obs, p) == pytest.approx(0.0, abs=1e-12)

    def test_halfplane_signed_distance(self):
        obs = HalfplaneObstacle(normal=(0.0, 1.0), offset=-2.0)
        for d in (-0.5, 0.0, 1.7):
            assert obstacle_h(obs, [3.0, -2.0 + d, 0.9]) == pytest.approx(d)


class TestDcbf:
    def test_alpha_one_is_state_constraint(self):
        assert dcbf_constraint(5.0, 0.9, 1.0, 0.05) == pytest.approx(0.85)

    def test_arithmetic(self):
        assert dcbf_constraint(1.0, 0.9, 0.2, 0.05) == pytest.approx(0.05)

    def test_boundary_fixed_point(self):
        alpha, delta = 0.3, 0.1
        h = delta / alpha
        assert dcbf_constraint(h, h, alpha, delta) == pytest.approx(0.0, abs=1e-15)


class TestGradients:
    def test_objective_gradient_matches_fd(self):
        obstacles = [EllipseObstacle(center=(1.5, 0.2), semi_axes=(0.5, 0.4), rotation=0.4)]
        cfg = MpcConfig(horizon=6)
        ws = _OcpWorkspace(
            np.array([0.0, 0.0, 0.1]), np.array([2.0, 0.5, 0.3]), obstacles, cfg
        )
        rng = np.random.default_rng(4)
        x = np.concatenate([rng.uniform(-0.2, 0.5, ws.nv), rng.uniform(0, 0.1, ws.ns)])
        _, grad = ws.objective(x)
        eps = 1e-7
        for i in range(0, len(x), 3):
            xp, xm = x.copy(), x.copy()
            xp[i] += eps
            xm[i] -= eps
            fd = (ws.objective(xp)[0] - ws.objective(xm)[0]) / (2 * eps)
            assert grad[i] == pytest.approx(fd, rel=1e-5, abs=1e-6)

    def test_constraint_jacobian_matches_fd(self):
        obstacles = [
            EllipseObstacle(center=(1.0, 0.0), semi_axes=(0.6, 0.3)),
            HalfplaneObstacle(normal=(0.0, 1.0), offset=-1.5),
        ]
        cfg = MpcConfig(horizon=5)
        ws = _OcpWorkspace(
            np.array([0.0, 0.0, 0.0]), np.array([2.0, 0.0, 0.0]), obstacles, cfg
        )
        rng = np.random.default_rng(5)
        x = np.concatenate([rng.uniform(-0.2, 0.6, ws.nv), rng.uniform(0, 0.1, ws.ns)])
        jac = ws.constraints_jac(x)
        eps = 1e-7
        for i in range(0, len(x), 4):
            xp, xm = x.copy(), x.copy()
            xp[i] += eps
            xm[i] -= eps
            fd = (ws.constraints(xp) - ws.constraints(xm)) / (2 * eps)
            np.testing.assert_allclose(jac[:, i], fd, rtol=1e-4, atol=1e-6)


def assert_plan_wellformed(plan, cfg, obstacles, z0):
    # dynamics exact
    rerolled = rollout(z0.as_array(), plan.inputs, cfg.dt)
    assert np.max(np.abs(rerolled - plan.states)) <= 1e-8
    # input box
    assert np.all(plan.inputs[:, 0] >= cfg.v_par_bounds[0] - 1e-12)
    assert np.all(plan.inputs[:, 0] <= cfg.v_par_bounds[1] + 1e-12)
    assert np.all(plan.inputs[:, 1] >= cfg.v_perp_bounds[0] - 1e-12)
    assert np.all(plan.inputs[:, 1] <= cfg.v_perp_bounds[1] + 1e-12)
    assert np.all(plan.inputs[:, 2] >= cfg.omega_bounds[0] - 1e-12)
    assert np.all(plan.inputs[:, 2] <= cfg.omega_bounds[1] + 1e-12)
    # barrier residuals (slack-adjusted)
    for obs in obstacles:
        hs = [obstacle_h(obs, z) for z in plan.states]
        for k in range(len(plan.inputs)):
            g = dcbf_constraint(hs[k], hs[k + 1], cfg.cbf_alpha, cfg.cbf_margin)
            assert g + plan.max_slack >= -1e-6


class TestSolveMpc:
    def test_already_at_goal(self):
        goal = NavState(1.0, -0.5, 0.3)
        plan = solve_mpc(goal, goal, [], CFG)
        assert plan.status == "converged"
        assert plan.objective == pytest.approx(0.0, abs=1e-9)
        np.testing.assert_allclose(plan.inputs, 0.0, atol=1e-6)

    def test_straight_line_beats_handbuilt_plan(self):
        """The solver's objective must not exceed a feasible hand-built
        ramp plan, and the terminal state must be at the goal."""
        z0 = NavState()
        goal = NavState(1.0, 0.0, 0.0)
        t0 = time.perf_counter()
        plan = solve_mpc(z0, goal, [], CFG)
        elapsed = time.perf_counter() - t0
        assert_plan_wellformed(plan, CFG, [], z0)
        assert plan.status == "converged"
        # hand-built feasible plan: full speed then a trim step, then stop
        inputs = np.zeros((CFG.horizon, 3))
        inputs[:3, 0] = 0.8
        inputs[3, 0] = (1.0 - 3 * 0.8 * CFG.dt) / CFG.dt
        states = rollout(z0.as_array(), inputs, CFG.dt)
        assert states[-1, 0] == pytest.approx(1.0)
        upper = plan_objective(states, inputs, goal.as_array(), CFG)
        assert plan.objective <= upper + 1e-6
        assert math.hypot(plan.states[-1, 0] - 1.0, plan.states[-1, 1]) <= 1e-2
        assert elapsed < 0.8

    def test_ellipse_on_path(self):
        z0 = NavState()
        goal = NavState(4.0, 0.0, 0.0)
        obs = [EllipseObstacle(center=(2.0, 0.0), semi_axes=(0.5, 0.5))]
        t0 = time.perf_counter()
        plan = solve_mpc(z0, goal, obs, CFG)
        elapsed = time.perf_counter() - t0
        assert_plan_wellformed(plan, CFG, obs, z0)
        assert plan.max_slack <= 1e-6
        floor = CFG.cbf_margin / CFG.cbf_alpha
        hs = np.array([obstacle_h(obs[0], z) for z in plan.states])
        assert hs.min() >= floor - 1e-6
        # still makes progress around the obstacle
        assert plan.states[-1, 0] > 3.0
        assert elapsed < 0.8

    def test_dcbf_forward_invariance_recursion(self):
        """If h(z0) >= delta/alpha and all residuals hold, every h stays
        above delta/alpha (checked on the returned plan)."""
        cfg = CFG
        z0 = NavState(0.0, 0.9, 0.0)
        goal = NavState(4.0, -0.5, 0.0)
        obs = [EllipseObstacle(center=(2.0, 0.3), semi_axes=(0.7, 0.5), rotation=0.2)]
        floor = cfg.cbf_margin / cfg.cbf_alpha
        assert obstacle_h(obs[0], z0.as_array()) >= floor
        plan = solve_mpc(z0, goal, obs, cfg)
        hs = np.array([obstacle_h(obs[0], z) for z in plan.states])
        assert np.all(hs >= floor - 1e-6)

    def test_warm_start_not_worse(self):
        z0 = NavState()
        goal = NavState(2.0, 1.0, 0.5)
        obs = [EllipseObstacle(center=(1.0, 0.5), semi_axes=(0.4, 0.4))]
        cold = solve_mpc(z0, goal, obs, CFG)
        warm = solve_mpc(z0, goal, obs, CFG, warm_start=cold, warm_shift=0)
        assert warm.objective <= cold.objective + 1e-6

    def test_determinism(self):
        z0 = NavState(0.1, -0.2, 0.3)
        goal = NavState(3.0, 1.0, -0.4)
        obs = [EllipseObstacle(center=(1.5, 0.4), semi_axes=(0.5, 0.3))]
        a = solve_mpc(z0, goal, obs, CFG)
        b = solve_mpc(z0, goal, obs, CFG)
        np.testing.assert_array_equal(a.inputs, b.inputs)
        np.testing.assert_array_equal(a.states, b.states)
        assert a.objective == b.objective

    def test_rotation_equivariance(self):
        phi = 0.9
        c, s = math.cos(phi), math.sin(phi)
        R = np.array([[c, -s], [s, c]])
        z0 = NavState(0.2, 0.1, 0.05)
        goal = NavState(2.5, 0.4, 0.3)
        obs = [EllipseObstacle(center=(1.3, 0.2), semi_axes=(0.45, 0.45))]
        plan = solve_mpc(z0, goal, obs, CFG)

        def rot_state(z):
            xy = R @ np.array([z.x, z.y])
            return NavState(xy[0], xy[1], z.theta + phi)

        obs_r = [
            EllipseObstacle(
                center=tuple(R @ np.array(obs[0].center)),
                semi_axes=obs[0].semi_axes,
                rotation=obs[0].rotation + phi,
            )
        ]
        plan_r = solve_mpc(rot_state(z0), rot_state(goal), obs_r, CFG)
        expect_xy = plan.states[:, :2] @ R.T
        np.testing.assert_allclose(plan_r.states[:, :2], expect_xy, atol=1e-6)
        np.testing.assert_allclose(
            plan_r.states[:, 2], plan.states[:, 2] + phi, atol=1e-6
        )

    def test_infeasible_raises(self):
        """Starting deep inside an obstacle with the goal inside too leaves
        barrier slack no way to vanish."""
        z0 = NavState(0.0, 0.0, 0.0)
        goal = NavState(0.0, 0.0, 0.0)
        obs = [EllipseObstacle(center=(0.0, 0.0), semi_axes=(3.0, 3.0))]
        with pytest.raises(Infeasible):
            solve_mpc(z0, goal, obs, CFG)

    def test_alpha_validation(self):
        with pytest.raises(ValueError):
            MpcConfig(cbf_alpha=1.5)
