"""Nonlinear/linear simulation, the control law, and transient metrics."""

import numpy as np
import pytest

from phtune import (
    Gains,
    SimulationDiverged,
    Trajectory,
    assign_equilibrium,
    builtin_pendulum,
    closed_loop_field,
    control_input,
    linearize_closed_loop,
    shaped_energy,
    simulate_linear,
    simulate_nonlinear,
    transient_metrics,
)


class TestControlInput:
    def test_zero_at_equilibrium_when_unforced(self, arm, gain_sets):
        g = gain_sets["e2"]
        eq = assign_equilibrium(arm, [0.6, 0.8], g.Ki)
        u = control_input(arm, g, eq, eq.q_star, np.zeros(2))
        assert np.allclose(u, 0.0, atol=1e-14)

    def test_holding_input_at_offset_equilibrium(self):
        pend = builtin_pendulum(1.0, 1.0, 9.81, 0.1)
        g = Gains([[3.0]], [[2.0]], [[0.4]])
        eq = assign_equilibrium(pend, [np.pi / 4], g.Ki)
        u = control_input(pend, g, eq, eq.q_star, np.zeros(1))
        assert u[0] == pytest.approx(eq.u_star[0], abs=1e-12)

    def test_kd_zero_reduces_to_direct_formula(self, arm, gain_sets):
        g = gain_sets["e1"]
        eq = assign_equilibrium(arm, [0.6, 0.8], g.Ki)
        q = np.array([0.3, 0.4])
        p = np.array([0.01, -0.02])
        y = np.linalg.solve(arm.mass(q), p)
        expected = -g.Kp @ y - g.Ki @ (q + eq.kappa)
        assert np.allclose(control_input(arm, g, eq, q, p), expected, atol=1e-14)

    def test_consistent_with_fd_output_derivative(self, arm, gain_sets):
        """The algebraic input satisfies the defining law with ydot taken
        by finite differences along the realized closed-loop flow."""
        g = gain_sets["e2"]
        eq = assign_equilibrium(arm, [0.6, 0.8], g.Ki)
        q = np.array([0.3, 0.4])
        p = np.array([0.01, -0.02])
        x = np.concatenate([q, p])
        u = control_input(arm, g, eq, q, p)

        def passive_output(state):
            return arm.input_matrix.T @ np.linalg.solve(
                arm.mass(state[:2]), state[2:]
            )

        h = 1e-6
        xdot = closed_loop_field(arm, g, eq, x)
        ydot_fd = (passive_output(x + h * xdot) - passive_output(x - h * xdot)) / (2 * h)
        y = passive_output(x)
        residual = u + g.Kp @ y + g.Ki @ (q + eq.kappa) + g.Kd @ ydot_fd
        assert np.max(np.abs(residual)) < 1e-4 * max(1.0, np.max(np.abs(u)))


class TestSimulateNonlinear:
    def test_equilibrium_invariance(self, arm, gain_sets):
        g = gain_sets["e1"]
        eq = assign_equilibrium(arm, [0.6, 0.8], g.Ki)
        x0 = np.concatenate([eq.q_star, np.zeros(2)])
        traj = simulate_nonlinear(arm, g, eq, x0, 1e-3, 1.0)
        drift = np.abs(
            np.column_stack([traj.q, traj.p]) - x0
        ).max()
        assert drift <= 1e-9
        assert np.allclose(traj.u, 0.0, atol=1e-9)

    def test_e1_converges_to_target(self, arm, gain_sets):
        g = gain_sets["e1"]
        eq = assign_equilibrium(arm, [0.6, 0.8], g.Ki)
        traj = simulate_nonlinear(arm, g, eq, np.zeros(4), 1e-3, 5.0)
        assert np.max(np.abs(traj.q[-1] - [0.6, 0.8])) <= 1e-3

    def test_shaped_energy_non_increasing(self, arm, gain_sets):
        for name in ("e1", "e2"):
            g = gain_sets[name]
            eq = assign_equilibrium(arm, [0.6, 0.8], g.Ki)
            traj = simulate_nonlinear(arm, g, eq, np.zeros(4), 1e-3, 3.0)
            assert np.max(np.diff(traj.hd)) <= 1e-6 * traj.hd[0]

    def test_pendulum_energy_decreases(self):
        pend = builtin_pendulum(1.0, 0.9, 9.81, 0.05)
        g = Gains([[2.0]], [[3.0]], [[0.1]])
        eq = assign_equilibrium(pend, [0.5], g.Ki)
        traj = simulate_nonlinear(pend, g, eq, np.array([2.0, 0.0]), 1e-3, 4.0)
        assert np.max(np.diff(traj.hd)) <= 1e-6 * traj.hd[0]

    def test_divergence_reports_step(self, arm, gain_sets):
        with pytest.raises(SimulationDiverged) as err:
            eq = assign_equilibrium(arm, [0.6, 0.8], gain_sets["e2"].Ki)
            simulate_nonlinear(arm, gain_sets["e2"], eq, np.zeros(4), 0.5, 40.0)
        assert err.value.step > 0

    def test_convergence_check_flag(self, arm, gain_sets):
        g = gain_sets["e1"]
        eq = assign_equilibrium(arm, [0.6, 0.8], g.Ki)
        traj = simulate_nonlinear(arm, g, eq, np.zeros(4), 1e-3, 1.0, check_convergence=True)
        assert traj.convergence_error is not None
        assert traj.convergence_error < 1e-6

    def test_bad_steps_rejected(self, arm, gain_sets):
        eq = assign_equilibrium(arm, [0.6, 0.8], np.eye(2))
        with pytest.raises(ValueError):
            simulate_nonlinear(arm, gain_sets["e1"], eq, np.zeros(4), -1e-3, 1.0)
        with pytest.raises(ValueError):
            simulate_nonlinear(arm, gain_sets["e1"], eq, np.zeros(4), 1e-3, 1e-4)


class TestSimulateLinear:
    def test_critically_damped_no_sign_change(self):
        A = np.array([[0.0, 1.0], [-1.0, -2.0]])
        traj = simulate_linear(A, [1.0, 0.0], 1e-3, 10.0)
        assert np.all(traj.q >= 0.0)  # approaches zero from above
        assert abs(traj.q[-1, 0]) < 1e-3

    def test_zero_drift_is_constant(self):
        traj = simulate_linear(np.zeros((2, 2)), [0.3, -0.7], 0.1, 1.0)
        assert np.allclose(traj.q, 0.3)
        assert np.allclose(traj.p, -0.7)

    def test_matches_eigen_propagation_oracle(self, arm, gain_sets):
        g = gain_sets["e1"]
        eq = assign_equilibrium(arm, [0.6, 0.8], g.Ki)
        A = linearize_closed_loop(arm, g, eq)
        x0 = np.concatenate([-eq.q_star, np.zeros(2)])
        dt = 1e-2
        traj = simulate_linear(A, x0, dt, 1.0)
        # oracle: diagonalized propagation x(t) = V e^{Lambda t} V^-1 x0
        vals, vecs = np.linalg.eig(A)
        coeff = np.linalg.solve(vecs, x0.astype(complex))
        for k in (1, 10, 50, 100):
            expected = (vecs @ (np.exp(vals * traj.t[k]) * coeff)).real
            got = np.concatenate([traj.q[k], traj.p[k]])
            assert np.max(np.abs(got - expected)) < 1e-10

    def test_no_input_series(self):
        traj = simulate_linear(np.zeros((2, 2)), [1.0, 0.0], 0.1, 1.0)
        assert traj.u is None
        with pytest.raises(ValueError):
            traj.to_csv("/tmp/should_not_exist.csv")

    def test_linear_tracks_nonlinear_near_equilibrium(self, arm, gain_sets):
        g = gain_sets["e2"]
        eq = assign_equilibrium(arm, [0.6, 0.8], g.Ki)
        delta = 1e-3 * np.array([1.0, -0.5, 0.3, 0.8])
        x0 = np.concatenate([eq.q_star, np.zeros(2)]) + delta
        horizon = 1.0  # about one rise time of this gain set
        nl = simulate_nonlinear(arm, g, eq, x0, 1e-3, horizon)
        lin = simulate_linear(linearize_closed_loop(arm, g, eq), delta, 1e-3, horizon)
        q_err = np.abs(nl.q - (lin.q + eq.q_star)).max()
        assert q_err < 1e-4


class TestTransientMetrics:
    def test_exact_exponential_rise(self):
        t = np.arange(0.0, 6.0, 1e-4)
        q = (1.0 - np.exp(-t)).reshape(-1, 1)
        traj = Trajectory(t=t, q=q, p=np.zeros_like(q))
        m = transient_metrics(traj, [1.0])
        assert m.rise_time[0] == pytest.approx(-np.log(0.02), abs=1e-3)
        assert m.overshoot_pct[0] == 0.0
        assert m.oscillation_count[0] == 0
        assert m.applicable[0] and m.rise_reached[0] and m.settled[0]

    def test_critically_damped_toy(self):
        traj = simulate_linear([[0.0, 1.0], [-1.0, -2.0]], [-1.0, 0.0], 1e-3, 12.0)
        m = transient_metrics(traj, [0.0])
        assert m.overshoot_pct[0] == 0.0
        assert m.oscillation_count[0] == 0

    def test_underdamped_counts_oscillations(self):
        t = np.arange(0.0, 10.0, 1e-3)
        q = (1.0 - np.exp(-0.5 * t) * np.cos(3.0 * t)).reshape(-1, 1)
        traj = Trajectory(t=t, q=q, p=np.zeros_like(q))
        m = transient_metrics(traj, [1.0])
        assert m.oscillation_count[0] >= 3
        assert m.overshoot_pct[0] > 5.0
        # first stationary point of -exp(-t/2) cos(3t): tan(3t) = -1/6
        t_peak = (np.pi - np.arctan(1.0 / 6.0)) / 3.0
        assert m.peak_time[0] == pytest.approx(t_peak, abs=2e-3)

    def test_zero_step_not_applicable(self):
        t = np.arange(0.0, 1.0, 1e-2)
        q = np.column_stack([np.full_like(t, 0.6), 0.8 - 0.8 * np.exp(-5 * t)])
        traj = Trajectory(t=t, q=q, p=np.zeros_like(q))
        m = transient_metrics(traj, [0.6, 0.8])
        assert not m.applicable[0]
        assert np.isnan(m.rise_time[0])
        assert m.applicable[1]

    def test_e1_rise_times_within_bound(self, arm, gain_sets):
        g = gain_sets["e1"]
        eq = assign_equilibrium(arm, [0.6, 0.8], g.Ki)
        traj = simulate_nonlinear(arm, g, eq, np.zeros(4), 1e-3, 5.0)
        m = transient_metrics(traj, [0.6, 0.8])
        assert np.all(m.rise_time <= 1.846)
        assert np.all(m.rise_reached)

    def test_linearized_rise_within_bound_every_gain_set(self, arm, gain_sets):
        from phtune import build_rpw, spectral_report

        for g in gain_sets.values():
            eq = assign_equilibrium(arm, [0.6, 0.8], g.Ki)
            bound = spectral_report(*build_rpw(arm, g, eq)).t_ru
            A = linearize_closed_loop(arm, g, eq)
            traj = simulate_linear(A, np.concatenate([-eq.q_star, np.zeros(2)]), 1e-3, 5.0)
            m = transient_metrics(traj, np.zeros(2))
            assert np.all(m.rise_reached)
            assert np.all(m.rise_time <= bound)

    def test_band_validation(self):
        t = np.arange(0.0, 1.0, 1e-2)
        traj = Trajectory(t=t, q=t.reshape(-1, 1), p=t.reshape(-1, 1))
        with pytest.raises(ValueError):
            transient_metrics(traj, [1.0], band=1.5)


class TestCsvExport:
    def test_round_trip_format(self, tmp_path, arm, gain_sets):
        g = gain_sets["e1"]
        eq = assign_equilibrium(arm, [0.6, 0.8], g.Ki)
        traj = simulate_nonlinear(arm, g, eq, np.zeros(4), 1e-3, 0.05)
        path = tmp_path / "traj.csv"
        traj.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,q1,q2,p1,p2,u1,u2,Hd"
        assert len(lines) == len(traj.t) + 1
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert np.allclose(data[:, 0], traj.t, atol=1e-12)
        assert np.allclose(data[:, 1:3], traj.q, rtol=1e-11)
        assert np.allclose(data[:, 7], traj.hd, rtol=1e-11)


def test_shaped_energy_matches_manual_sum(arm, gain_sets):
    g = gain_sets["e2"]
    eq = assign_equilibrium(arm, [0.6, 0.8], g.Ki)
    q = np.array([0.2, 0.9])
    p = np.array([0.05, -0.01])
    M = arm.mass(q)
    w = np.linalg.solve(M, p)
    gamma = q + eq.kappa
    y = w
    manual = 0.5 * p @ w + 0.5 * gamma @ g.Ki @ gamma + 0.5 * y @ g.Kd @ y
    assert shaped_energy(arm, g, eq, q, p) == pytest.approx(manual, rel=1e-12)
