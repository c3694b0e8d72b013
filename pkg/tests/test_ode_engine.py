"""Integrator tests: fixed points, oracle agreement with the closed
forms, convergence orders, and grid guarantees."""

import numpy as np
import pytest

from conftest import draw_params
from themeflow import (
    IntegratorConfig,
    StepTooLarge,
    TopicParams,
    Trajectory,
    eval_u,
    eval_v,
    flow_values,
    integrate_decay,
    integrate_flow,
    integrate_rise,
)


def max_rel_err(trajectory, reference_values):
    return float(
        np.max(np.abs(trajectory - reference_values) / np.abs(reference_values))
    )


def rise_error(params, method, h):
    traj = integrate_rise(params, IntegratorConfig(step=h, method=method))
    mask = traj.times > 0
    exact = flow_values(params, traj.times[mask])
    return max_rel_err(traj.values[mask], exact)


class TestConfigAndTrajectory:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            IntegratorConfig(step=0.0)
        with pytest.raises(ValueError):
            IntegratorConfig(step=0.1, method="rk45")

    def test_trajectory_validation(self):
        with pytest.raises(ValueError):
            Trajectory(times=np.array([0.0, 1.0]), values=np.array([1.0, -0.5]))
        with pytest.raises(ValueError):
            Trajectory(times=np.array([0.0, 0.0]), values=np.array([1.0, 1.0]))
        with pytest.raises(ValueError):
            Trajectory(times=np.array([0.0, 1.0]), values=np.array([1.0, np.nan]))

    def test_csv_export_round_trips(self, tmp_path, std_params):
        traj = integrate_rise(std_params, IntegratorConfig(step=0.5))
        out = tmp_path / "traj.csv"
        traj.write_csv(out)
        rows = out.read_text().splitlines()
        assert rows[0] == "time,value"
        parsed = np.array([[float(x) for x in row.split(",")] for row in rows[1:]])
        assert np.array_equal(parsed[:, 0], traj.times)
        assert np.array_equal(parsed[:, 1], traj.values)


class TestIntegrateRise:
    def test_fixed_point_stays_constant(self):
        params = TopicParams(p=1.0, D=0.0, q=0.5, lam=5.0, tau=0.0, n0=2.0)
        traj = integrate_rise(params, IntegratorConfig(step=0.05))
        assert np.all(traj.values == 2.0)

    def test_rk4_matches_closed_form_at_fixture_point(self, std_params):
        traj = integrate_rise(std_params, IntegratorConfig(step=0.01, method="rk4"))
        idx = int(np.argmin(np.abs(traj.times - 3.0)))
        assert traj.times[idx] == pytest.approx(3.0, abs=1e-12)
        exact = eval_u(std_params, 3.0)
        assert abs(traj.values[idx] - exact) / exact < 1e-8

    def test_rk4_beats_euler_by_far(self, std_params):
        e_euler = rise_error(std_params, "euler", 0.01)
        e_rk4 = rise_error(std_params, "rk4", 0.01)
        assert e_euler / e_rk4 > 100.0

    def test_empty_window_rejected(self):
        params = TopicParams(p=1.0, D=1.0, q=1.0, lam=2.0, tau=2.5, n0=0.2)
        with pytest.raises(ValueError, match="tau"):
            integrate_rise(params, IntegratorConfig(step=0.01))

    def test_unstable_step_raises(self):
        with pytest.warns(UserWarning):
            params = TopicParams(p=1.0, D=0.0, q=1.0, lam=9.0, tau=0.0, n0=5.0)
        with pytest.raises(StepTooLarge):
            integrate_rise(params, IntegratorConfig(step=1.0, method="euler"))


class TestIntegrateDecay:
    def test_fixed_point_stays_constant(self, std_params):
        traj = integrate_decay(std_params, 1.0, IntegratorConfig(step=0.05), 8.0)
        assert np.all(traj.values == 1.0)

    def test_matches_closed_form_everywhere(self, std_params):
        traj = integrate_decay(
            std_params, eval_u(std_params, 10.0), IntegratorConfig(step=0.01), 15.0
        )
        exact = np.array([eval_v(std_params, float(t)) for t in traj.times])
        assert max_rel_err(traj.values, exact) < 1e-8

    def test_recovers_from_below_background(self, std_params):
        traj = integrate_decay(std_params, 0.3, IntegratorConfig(step=0.01), 40.0)
        assert np.all(np.diff(traj.values) >= 0)
        assert traj.values[-1] == pytest.approx(1.0, rel=1e-6)

    def test_bad_handoff_rejected(self, std_params):
        with pytest.raises(ValueError):
            integrate_decay(std_params, 0.0, IntegratorConfig(step=0.01), 5.0)


class TestIntegrateFlow:
    def test_grid_contains_lam_exactly(self):
        params = TopicParams(p=1.0, D=1.0, q=1.0, lam=1.0, tau=0.0, n0=0.2)
        traj = integrate_flow(params, IntegratorConfig(step=0.3), 2.0)
        assert np.any(traj.times == 1.0)
        assert np.all(np.diff(traj.times) > 0)

    def test_continuous_across_felling(self, std_params):
        h = 0.01
        traj = integrate_flow(std_params, IntegratorConfig(step=h), 30.0)
        p, D, q = std_params.p, std_params.D, std_params.q
        slope_cap = float(
            np.max(np.abs(p * traj.values * (1 - q * traj.values)) + D * traj.values)
        )
        assert float(np.max(np.abs(np.diff(traj.values)))) <= 2.0 * h * slope_cap

    def test_matches_closed_forms_pointwise(self, std_params):
        traj = integrate_flow(std_params, IntegratorConfig(step=0.01), 30.0)
        mask = traj.times > 0
        exact = flow_values(std_params, traj.times[mask])
        assert max_rel_err(traj.values[mask], exact) < 1e-7

    def test_horizon_must_pass_lam(self, std_params):
        with pytest.raises(ValueError):
            integrate_flow(std_params, IntegratorConfig(step=0.01), 9.0)


class TestConvergenceOrder:
    def test_rk4_is_fourth_order(self, std_params):
        e_coarse = rise_error(std_params, "rk4", 0.1)
        e_fine = rise_error(std_params, "rk4", 0.05)
        ratio = e_coarse / e_fine
        assert 10.0 < ratio < 25.0
        assert np.log2(ratio) >= 3.8

    def test_euler_is_first_order(self, std_params):
        e_coarse = rise_error(std_params, "euler", 0.1)
        e_fine = rise_error(std_params, "euler", 0.05)
        assert np.log2(e_coarse / e_fine) >= 0.9


class TestOracleAgreementSample:
    def test_randomized_rk4_agreement(self):
        rng = np.random.default_rng(2024)
        for _ in range(10):
            params = draw_params(rng, rise_span=(2.0, 25.0))
            h = params.lam / 2000.0
            traj = integrate_flow(params, IntegratorConfig(step=h), 2.0 * params.lam)
            mask = traj.times > 0
            exact = flow_values(params, traj.times[mask])
            assert max_rel_err(traj.values[mask], exact) < 1e-6
