"""Synthesize gains with each of the three tuning rules.

Shows the no-overshoot rule on a pendulum (where the closed form is easy to
check by hand) and on the two-link arm, the damping-band rule, the rise-time
rule stacked on top of a companion rule, and the one genuinely hopeless case:
an underactuated plant with no natural damping.

Run:  python3 demos/tuning_walkthrough.py
"""

import numpy as np

from phtune import (
    InfeasibleTuning,
    Mode,
    assign_equilibrium,
    builtin_manipulator,
    builtin_pendulum,
    linear_model,
    tune_damping_band,
    tune_no_overshoot,
    tune_rise_time,
)


def show(result, label):
    rep = result.report
    print(f"  {label}")
    print(f"    Kp = diag{np.round(np.diag(result.gains.Kp), 4).tolist()}, "
          f"Ki = diag{np.round(np.diag(result.gains.Ki), 4).tolist()}")
    print(f"    scenario {rep.scenario.value}, margin {rep.no_overshoot_margin:.4g}, "
          f"zeta in [{np.sqrt(rep.zeta_min):.3f}, {np.sqrt(rep.zeta_max):.3f}], "
          f"t_ru {rep.t_ru:.3f} s, probes {len(result.search_trace)}")


def main():
    print("=== 1. no-overshoot rule ===")
    pend = builtin_pendulum(1.0, 1.0, 1.0, 0.0)
    eq = assign_equilibrium(pend, [0.0], [[1.0]])
    res = tune_no_overshoot(pend, eq, Ki=[[1.0]])
    print(f"  pendulum (unit mass/length/gravity, no friction), Ki = 1:")
    print(f"    smallest real-spectrum Kp = {res.gains.Kp[0, 0]:.6f}"
          f"  (hand value: 2*sqrt(2) = {2 * np.sqrt(2):.6f})")

    arm = builtin_manipulator()
    arm_eq = assign_equilibrium(arm, [0.6, 0.8], np.diag([35.0, 20.0]))
    res = tune_no_overshoot(arm, arm_eq, Ki=np.diag([35.0, 20.0]))
    show(res, "two-link arm, Ki = diag(35, 20):")

    print("\n=== 2. damping-band rule ===")
    ki = np.diag([50.0, 45.0])
    kd = np.diag([0.08, 0.15])
    eq2 = assign_equilibrium(arm, [0.6, 0.8], ki)
    res = tune_damping_band(arm, eq2, 0.4, 0.8, Ki=ki, Kd=kd)
    show(res, "two-link arm, band 0.4 <= zeta <= 0.8, Ki = diag(50, 45), Kd ~ 0.1:")

    print("\n=== 3. rise-time rule on top of a companion ===")
    res = tune_rise_time(arm, arm_eq, t_r_max=0.8, companion=Mode.NO_OVERSHOOT,
                         Ki_seed=np.diag([35.0, 20.0]))
    show(res, "arm, t_r <= 0.8 s while staying overshoot-free:")
    print("    Ki scale trace:", [(round(s, 3), round(t, 3)) for s, t in res.search_trace])

    print("\n=== 4. the hopeless case ===")
    cart = linear_model(np.eye(2), np.eye(2), np.zeros((2, 2)), [[1.0], [0.0]])
    cart_eq = assign_equilibrium(cart, np.zeros(2), [[1.0]])
    try:
        tune_no_overshoot(cart, cart_eq, Ki=[[1.0]])
    except InfeasibleTuning as exc:
        print(f"  underactuated frictionless plant: {exc}")
    print("\n  Adding real damping rescues it:")
    cart2 = linear_model(np.eye(2), np.eye(2), 4.5 * np.eye(2), [[1.0], [0.0]])
    res = tune_no_overshoot(cart2, assign_equilibrium(cart2, np.zeros(2), [[0.1]]), Ki=[[0.1]])
    print(f"    feasible with Kp = {res.gains.Kp[0, 0]:.3g} "
          f"(the natural damping suffices on its own), margin {res.report.no_overshoot_margin:.4g}")


if __name__ == "__main__":
    main()
