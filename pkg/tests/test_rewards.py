"""Lyapunov reward terms: bounds, monotonicity, clamping, and the
finite-difference derivative estimate against analytic decay."""
import math

import numpy as np
import pytest

from gaitnav import (
    DimensionMismatch,
    EmptyTrace,
    TrackingObjective,
    clf_reward_terms,
    evaluate_trace,
    lyapunov_value,
)


OBJ = TrackingObjective(name="test", P=np.eye(2), alpha=1.0, sigma1=1.0, sigma2=1.0)


class TestLyapunovValue:
    def test_zero_error(self):
        assert lyapunov_value([0.0, 0.0], np.eye(2)) == 0.0

    def test_squared_norm(self):
        assert lyapunov_value([3.0, 4.0], np.eye(2)) == pytest.approx(25.0)

    def test_positive_for_nonzero_error(self):
        rng = np.random.default_rng(0)
        A = rng.uniform(-1, 1, (4, 4))
        P = A @ A.T + 0.1 * np.eye(4)  # SPD by construction
        for _ in range(1000):
            e = rng.uniform(-1, 1, 4)
            if np.linalg.norm(e) < 1e-12:
                continue
            assert lyapunov_value(e, P) > 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            lyapunov_value([1.0, 2.0, 3.0], np.eye(2))


class TestRewardTerms:
    def test_perfect_tracking(self):
        s = clf_reward_terms(0.0, 0.0, OBJ)
        assert s.r_v == 1.0 and s.r_vdot == 1.0
        assert s.r_total == OBJ.w1 + OBJ.w2

    def test_decrescent_satisfied_clamps_to_one(self):
        # V=0.5, Vdot=-1, alpha=1: Vdot + alpha V = -0.5 < 0
        s = clf_reward_terms(0.5, -1.0, OBJ)
        assert s.r_vdot == 1.0

    def test_decrescent_violated(self):
        s = clf_reward_terms(1.0, 0.0, OBJ)
        assert s.r_vdot == pytest.approx(math.exp(-1.0), abs=1e-15)

    def test_bounds(self):
        rng = np.random.default_rng(1)
        for _ in range(500):
            v = rng.uniform(0, 50)
            vd = rng.uniform(-50, 50)
            s = clf_reward_terms(v, vd, OBJ)
            assert 0.0 < s.r_v <= 1.0
            assert 0.0 < s.r_vdot <= 1.0

    def test_monotonicity(self):
        vs = np.linspace(0, 5, 40)
        rv = [clf_reward_terms(v, 0.0, OBJ).r_v for v in vs]
        assert all(a > b for a, b in zip(rv, rv[1:]))
        vds = np.linspace(-2, 5, 40)
        rvd = [clf_reward_terms(1.0, vd, OBJ).r_vdot for vd in vds]
        assert all(a >= b for a, b in zip(rvd, rvd[1:]))

    def test_objective_validation(self):
        with pytest.raises(ValueError):
            TrackingObjective(name="bad", P=np.array([[1.0, 2.0], [2.0, 1.0]]))  # indefinite
        with pytest.raises(ValueError):
            TrackingObjective(name="bad", P=np.eye(2), alpha=-1.0)


class TestEvaluateTrace:
    def _trace(self, times, err_fn):
        err = np.array([err_fn(t) for t in times])
        actual = {"com": err}
        reference = {"com": np.zeros_like(err)}
        return actual, reference

    def test_perfect_trace_scores_full_reward(self):
        times = np.linspace(0, 1, 11)
        actual, reference = self._trace(times, lambda t: np.zeros(3))
        objs = {"com": TrackingObjective(name="com", P=np.eye(3))}
        out = evaluate_trace(times, actual, reference, objs)
        for s in out.samples["com"]:
            assert s.r_total == pytest.approx(objs["com"].w1 + objs["com"].w2)
        assert out.mean_error["com"] == 0.0

    def test_exponential_decay_satisfies_decrescent(self):
        """e(t) = e0 exp(-k t) with alpha < 2k: analytic Vdot = -2kV, so the
        decrescent reward is exactly 1 away from the first sample."""
        k = 2.0
        obj = TrackingObjective(name="com", P=np.eye(2), alpha=1.0)
        times = np.linspace(0, 2, 201)
        actual, reference = self._trace(
            times, lambda t: np.array([0.5, -0.3]) * math.exp(-k * t)
        )
        out = evaluate_trace(times, actual, reference, {"com": obj})
        for s in out.samples["com"][1:]:
            assert s.r_vdot == 1.0

    def test_finite_difference_converges_linearly(self):
        """Backward-difference Vdot error shrinks as O(dt) on the analytic
        exponential trace."""
        k = 1.5
        obj = TrackingObjective(name="com", P=np.eye(1), alpha=1.0)
        errs = []
        for n in (100, 200, 400, 800):
            times = np.linspace(0, 1, n + 1)
            actual, reference = self._trace(
                times, lambda t: np.array([math.exp(-k * t)])
            )
            out = evaluate_trace(times, actual, reference, {"com": obj})
            worst = 0.0
            for s in out.samples["com"][1:]:
                analytic = -2.0 * k * s.v
                worst = max(worst, abs(s.v_dot - analytic))
            errs.append(worst)
        ratios = [a / b for a, b in zip(errs, errs[1:])]
        for r in ratios:
            assert 1.6 < r < 2.4  # halving dt halves the error

    def test_constant_offset_error(self):
        """Constant error: r_v constant below one, and Vdot + alpha V > 0
        makes the decrescent term drop below one (after the first sample)."""
        obj = TrackingObjective(name="com", P=np.eye(2), alpha=1.0, sigma1=0.5, sigma2=0.5)
        times = np.linspace(0, 1, 11)
        actual, reference = self._trace(times, lambda t: np.array([0.3, 0.0]))
        out = evaluate_trace(times, actual, reference, {"com": obj})
        v = 0.09
        r_v_expect = math.exp(-v / 0.25)
        r_vdot_expect = math.exp(-1.0 * v / 0.25)  # Vdot = 0, alpha V > 0
        first = out.samples["com"][0]
        assert first.r_vdot == pytest.approx(r_vdot_expect)  # Vdot = 0 by convention
        for s in out.samples["com"]:
            assert s.r_v == pytest.approx(r_v_expect, abs=1e-12)
        for s in out.samples["com"][1:]:
            assert s.r_vdot == pytest.approx(r_vdot_expect, abs=1e-12)
        assert out.mean_error["com"] == pytest.approx(0.3, abs=1e-12)

    def test_empty_trace(self):
        with pytest.raises(EmptyTrace):
            evaluate_trace(np.array([]), {}, {}, {})
