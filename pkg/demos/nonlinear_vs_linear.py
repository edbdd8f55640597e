"""Nonlinear closed loop versus its linearization, side by side.

Simulates the no-overshoot preset on the two-link arm from rest, simulates
the linearized loop over the same horizon, prints the transient metrics of
both, checks that the shaped energy only ever decreases, and exports the
nonlinear trajectory to CSV.  Pass ``--plot`` to also draw the responses.

Run:  python3 demos/nonlinear_vs_linear.py [--plot]
"""

import sys

import numpy as np

from phtune import (
    TWO_DOF_TARGET,
    assign_equilibrium,
    builtin_manipulator,
    linearize_closed_loop,
    simulate_linear,
    simulate_nonlinear,
    transient_metrics,
    two_dof_gain_sets,
)


def main():
    model = builtin_manipulator()
    gains = two_dof_gain_sets()["e1"]
    eq = assign_equilibrium(model, TWO_DOF_TARGET, gains.Ki)
    dt, horizon = 1e-3, 5.0

    print("no-overshoot preset, step from the origin to q* = (0.6, 0.8) rad\n")

    traj = simulate_nonlinear(model, gains, eq, np.zeros(4), dt, horizon,
                              check_convergence=True)
    nl = transient_metrics(traj, TWO_DOF_TARGET)

    A = linearize_closed_loop(model, gains, eq)
    lin_traj = simulate_linear(A, np.concatenate([-TWO_DOF_TARGET, np.zeros(2)]), dt, horizon)
    lin = transient_metrics(lin_traj, np.zeros(2))

    print(f"{'':<10}{'nonlinear t_r98':<18}{'linear t_r98':<16}"
          f"{'nonlinear overshoot':<21}{'linear overshoot'}")
    for i in range(2):
        print(f"link {i + 1:<5}{nl.rise_time[i]:<18.3f}{lin.rise_time[i]:<16.3f}"
              f"{nl.overshoot_pct[i]:<21.3f}{lin.overshoot_pct[i]:.3f}")

    drift = np.max(np.diff(traj.hd))
    print(f"\nshaped energy: starts at {traj.hd[0]:.3f} J, ends at {traj.hd[-1]:.2e} J, "
          f"largest per-step increase {drift:.2e} (never above round-off)")
    print(f"final position error: {np.max(np.abs(traj.q[-1] - TWO_DOF_TARGET)):.2e} rad")
    print(f"step-halving convergence check: {traj.convergence_error:.2e} relative")

    out = "arm_e1_trajectory.csv"
    traj.to_csv(out)
    print(f"nonlinear trajectory written to {out} (t, q, p, u, Hd columns)")

    if "--plot" in sys.argv:
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
        for i, ax in enumerate(axes):
            ax.plot(traj.t, traj.q[:, i], label="nonlinear")
            ax.plot(lin_traj.t, lin_traj.q[:, i] + TWO_DOF_TARGET[i], "--",
                    label="linearized")
            ax.axhline(TWO_DOF_TARGET[i], color="k", lw=0.5)
            ax.set_ylabel(f"q{i + 1} (rad)")
            ax.legend()
        axes[-1].set_xlabel("t (s)")
        fig.suptitle("two-link arm: nonlinear vs linearized step response")
        plt.show()


if __name__ == "__main__":
    main()
