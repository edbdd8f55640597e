"""Config-driven command line front end.

``phtune <analyze|tune|simulate|verify|demo> --config <path> [--out <dir>]``
reads a JSON configuration (``"schema": 1``), writes JSON reports and CSV
trajectories, and keeps a stable exit-code contract:

    0 success, 2 bad config, 3 shaped energy not positive definite,
    4 target infeasible (report still written), 5 simulation diverged.

All numeric output is rounded to 12 significant digits; synthesized gains are
rounded before their reported spectra are computed, so re-analyzing a tune
report reproduces the spectra exactly.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .benchmarks import TWO_DOF_TARGET, two_dof_gain_sets
from .errors import (
    AssumptionViolation,
    InfeasibleTuning,
    SimulationDiverged,
    UnassignableEquilibrium,
)
from .model import (
    MechanicalModel,
    assign_equilibrium,
    builtin_manipulator,
    builtin_pendulum,
    linear_model,
)
from .saddleform import Gains, build_rpw, linearize_closed_loop
from .sim import simulate_linear, simulate_nonlinear, transient_metrics
from .spectral import spectral_report
from .tuning import (
    Mode,
    TuningTarget,
    tune_damping_band,
    tune_no_overshoot,
    tune_rise_time,
    verify_gains,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ASSUMPTION = 3
EXIT_INFEASIBLE = 4
EXIT_DIVERGED = 5

DEMO_SIM = {"dt": 1e-3, "T": 5.0}


class ConfigError(Exception):
    """Configuration file problem; the message names the offending field."""


def _round12(x: float) -> float:
    return float(f"{float(x):.12g}")


def _jsonify(obj):
    """Recursively convert to JSON-serializable values, floats at 12 digits."""
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonify(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _round12(obj)
    return obj


def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(cfg, dict):
        raise ConfigError("top level: must be a JSON object")
    if cfg.get("schema") != 1:
        raise ConfigError("schema: must be present and equal to 1")
    return cfg


def _as_matrix(value, m: int, where: str) -> np.ndarray:
    """Scalar -> scaled identity, list -> diagonal, nested list -> full matrix."""
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: not numeric ({exc})") from exc
    if arr.ndim == 0:
        return float(arr) * np.eye(m)
    if arr.ndim == 1:
        if arr.shape != (m,):
            raise ConfigError(f"{where}: diagonal must have length {m}, got {arr.shape[0]}")
        return np.diag(arr)
    if arr.shape != (m, m):
        raise ConfigError(f"{where}: matrix must be {m}x{m}, got {list(arr.shape)}")
    return arr


def _build_model(cfg: dict) -> MechanicalModel:
    spec = cfg.get("model")
    if not isinstance(spec, dict):
        raise ConfigError("model: must be an object")
    if "builtin" in spec:
        name = spec["builtin"]
        params = spec.get("params", {})
        try:
            if name == "manipulator2dof":
                return builtin_manipulator()
            if name == "pendulum":
                return builtin_pendulum(**params)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"model.params: {exc}") from exc
        raise ConfigError(f"model.builtin: unknown name {name!r}")
    for key in ("mass", "stiffness", "damping", "input_matrix"):
        if key not in spec:
            raise ConfigError(f"model.{key}: required for an inline linear model")
    try:
        return linear_model(
            spec["mass"], spec["stiffness"], spec["damping"], spec["input_matrix"]
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"model: {exc}") from exc


def _build_q_star(cfg: dict, model: MechanicalModel) -> np.ndarray:
    if "q_star" not in cfg:
        raise ConfigError("q_star: required")
    q = np.asarray(cfg["q_star"], dtype=float).reshape(-1)
    if q.shape != (model.n,):
        raise ConfigError(f"q_star: must have length {model.n}, got {q.shape[0]}")
    return q


def _build_gains(cfg: dict, model: MechanicalModel) -> Gains:
    spec = cfg.get("gains")
    if not isinstance(spec, dict):
        raise ConfigError("gains: must be an object with kp, ki, kd")
    mats = {}
    for key in ("kp", "ki", "kd"):
        if key == "kd" and key not in spec:
            mats[key] = np.zeros((model.m, model.m))
            continue
        if key not in spec:
            raise ConfigError(f"gains.{key}: required")
        mats[key] = _as_matrix(spec[key], model.m, f"gains.{key}")
    try:
        return Gains(mats["kp"], mats["ki"], mats["kd"])
    except ValueError as exc:
        raise ConfigError(f"gains: {exc}") from exc


def _build_target(cfg: dict, model: MechanicalModel) -> TuningTarget:
    spec = cfg.get("target")
    if not isinstance(spec, dict):
        raise ConfigError("target: must be an object with at least a mode")
    if "mode" not in spec:
        raise ConfigError("target.mode: required")
    try:
        mode = Mode(spec["mode"])
    except ValueError:
        names = ", ".join(m.value for m in Mode)
        raise ConfigError(f"target.mode: unknown mode {spec['mode']!r} (one of {names})")
    kw = {}
    for key in ("zeta_lo", "zeta_hi", "t_r_max"):
        if key in spec:
            kw[key] = float(spec[key])
    for cfg_key, field_name in (("base_kp", "base_Kp"), ("ki", "base_Ki"), ("kd", "base_Kd")):
        if cfg_key in spec:
            kw[field_name] = _as_matrix(spec[cfg_key], model.m, f"target.{cfg_key}")
    try:
        return TuningTarget(mode=mode, **kw)
    except ValueError as exc:
        raise ConfigError(f"target: {exc}") from exc


def _build_sim(cfg: dict, model: MechanicalModel, required: bool):
    spec = cfg.get("sim")
    if spec is None:
        if required:
            raise ConfigError("sim: required for this command")
        spec = {}
    if not isinstance(spec, dict):
        raise ConfigError("sim: must be an object")
    dt = float(spec.get("dt", 1e-3))
    horizon = float(spec.get("T", 5.0))
    if dt <= 0.0 or horizon < dt:
        raise ConfigError("sim: need dt > 0 and T >= dt")
    x0 = np.asarray(spec.get("x0", np.zeros(2 * model.n)), dtype=float).reshape(-1)
    if x0.shape != (2 * model.n,):
        raise ConfigError(f"sim.x0: must have length {2 * model.n}, got {x0.shape[0]}")
    return x0, dt, horizon


def _output_path(cfg: dict, out_dir: Path, key: str, default: str) -> Path:
    outputs = cfg.get("outputs", {})
    if not isinstance(outputs, dict):
        raise ConfigError("outputs: must be an object")
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir / str(outputs.get(key, default))


def _gains_dict(gains: Gains) -> dict:
    return {"kp": gains.Kp, "ki": gains.Ki, "kd": gains.Kd}


def _round_gains(gains: Gains) -> Gains:
    def rounded(A):
        return np.vectorize(_round12)(np.asarray(A, dtype=float))

    return Gains(rounded(gains.Kp), rounded(gains.Ki), rounded(gains.Kd))


def _spectral_summary(model: MechanicalModel, gains: Gains, q_star: np.ndarray) -> dict:
    eq = assign_equilibrium(model, q_star, gains.Ki)
    R, P, W = build_rpw(model, gains, eq)
    report = spectral_report(R, P, W)
    return {
        "model": {"name": model.name, "n": model.n, "m": model.m},
        "q_star": q_star,
        "kappa": eq.kappa,
        "u_star": eq.u_star,
        "gains": _gains_dict(gains),
        "blocks": {"R": R, "P": P, "W": W},
        "block_spectra": {
            "R": np.linalg.eigvalsh(R),
            "P": np.linalg.eigvalsh(P),
            "W": np.linalg.eigvalsh(W),
        },
        "eigenvalues": {
            "real": report.eigenvalues.real,
            "imag": report.eigenvalues.imag,
        },
        "scenario": report.scenario.value,
        "no_overshoot": {
            "satisfied": report.no_overshoot_satisfied,
            "margin": report.no_overshoot_margin,
        },
        "zeta_squared_bounds": {"min": report.zeta_min, "max": report.zeta_max},
        "damping_ratio_bounds": {
            "min": float(np.sqrt(report.zeta_min)),
            "max": float(np.sqrt(report.zeta_max)),
        },
        "rise_time": {
            "re_lambda_u": report.re_lambda_u,
            "t_ru": report.t_ru,
            "used_fallback": report.rise_fallback,
        },
    }


def _write_report(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonify(payload), fh, indent=2)
        fh.write("\n")


def cmd_analyze(cfg: dict, out_dir: Path) -> int:
    model = _build_model(cfg)
    q_star = _build_q_star(cfg, model)
    gains = _build_gains(cfg, model)
    report = {"schema": 1, "command": "analyze"}
    report.update(_spectral_summary(model, gains, q_star))
    path = _output_path(cfg, out_dir, "report", "report.json")
    _write_report(path, report)
    print(f"analyze: scenario {report['scenario']}, t_ru {report['rise_time']['t_ru']:.6g} s "
          f"-> {path}")
    return EXIT_OK


def _run_tuner(model, eq, target: TuningTarget):
    m = model.m
    ki = target.base_Ki if target.base_Ki is not None else np.eye(m)
    kd = target.base_Kd
    if target.mode is Mode.NO_OVERSHOOT:
        return tune_no_overshoot(model, eq, ki, kd, target.base_Kp)
    if target.mode is Mode.DAMPING_BAND:
        return tune_damping_band(
            model, eq, target.zeta_lo, target.zeta_hi, ki, kd, target.base_Kp
        )
    companion = Mode.DAMPING_BAND if target.zeta_lo is not None else Mode.NO_OVERSHOOT
    return tune_rise_time(
        model,
        eq,
        target.t_r_max,
        companion,
        ki,
        kd,
        target.base_Kp,
        zeta_lo=target.zeta_lo,
        zeta_hi=target.zeta_hi,
    )


def cmd_tune(cfg: dict, out_dir: Path) -> int:
    model = _build_model(cfg)
    q_star = _build_q_star(cfg, model)
    if "gains" in cfg:
        raise ConfigError("gains: not allowed for tune; seed matrices go inside target")
    target = _build_target(cfg, model)
    path = _output_path(cfg, out_dir, "report", "report.json")
    seed_ki = target.base_Ki if target.base_Ki is not None else np.eye(model.m)
    eq = assign_equilibrium(model, q_star, seed_ki)

    target_dict = {
        "mode": target.mode.value,
        "zeta_lo": target.zeta_lo,
        "zeta_hi": target.zeta_hi,
        "t_r_max": target.t_r_max,
    }
    try:
        result = _run_tuner(model, eq, target)
    except InfeasibleTuning as exc:
        report = {
            "schema": 1,
            "command": "tune",
            "target": target_dict,
            "feasible": False,
            "error": str(exc),
            "search_trace": exc.details.get("trace", []),
        }
        _write_report(path, report)
        print(f"tune: infeasible ({exc}) -> {path}", file=sys.stderr)
        return EXIT_INFEASIBLE

    # report spectra are recomputed from the serialized gains: bit-stable round trip
    rounded = _round_gains(result.gains)
    report = {"schema": 1, "command": "tune", "target": target_dict}
    report.update(_spectral_summary(model, rounded, q_star))
    report["feasible"] = result.feasible
    report["search_trace"] = result.search_trace
    _write_report(path, report)
    print(f"tune: feasible, scenario {report['scenario']}, "
          f"t_ru {report['rise_time']['t_ru']:.6g} s -> {path}")
    return EXIT_OK if result.feasible else EXIT_INFEASIBLE


def cmd_verify(cfg: dict, out_dir: Path) -> int:
    model = _build_model(cfg)
    q_star = _build_q_star(cfg, model)
    gains = _build_gains(cfg, model)
    target = _build_target(cfg, model)
    eq = assign_equilibrium(model, q_star, gains.Ki)
    result = verify_gains(model, eq, gains, target)
    report = {
        "schema": 1,
        "command": "verify",
        "target": {
            "mode": target.mode.value,
            "zeta_lo": target.zeta_lo,
            "zeta_hi": target.zeta_hi,
            "t_r_max": target.t_r_max,
        },
    }
    report.update(_spectral_summary(model, gains, q_star))
    report["feasible"] = result.feasible
    path = _output_path(cfg, out_dir, "report", "report.json")
    _write_report(path, report)
    verdict = "meets" if result.feasible else "does NOT meet"
    print(f"verify: gains {verdict} the {target.mode.value} target -> {path}")
    return EXIT_OK if result.feasible else EXIT_INFEASIBLE


def cmd_simulate(cfg: dict, out_dir: Path) -> int:
    model = _build_model(cfg)
    q_star = _build_q_star(cfg, model)
    gains = _build_gains(cfg, model)
    x0, dt, horizon = _build_sim(cfg, model, required=True)
    eq = assign_equilibrium(model, q_star, gains.Ki)
    R, P, W = build_rpw(model, gains, eq)
    spec = spectral_report(R, P, W)

    traj = simulate_nonlinear(model, gains, eq, x0, dt, horizon)
    metrics = transient_metrics(traj, q_star)
    csv_path = _output_path(cfg, out_dir, "trajectory", "trajectory.csv")
    traj.to_csv(csv_path)

    # linearized companion run from the same initial condition
    A = linearize_closed_loop(model, gains, eq)
    x0_rel = x0 - np.concatenate([q_star, np.zeros(model.n)])
    lin_metrics = transient_metrics(
        simulate_linear(A, x0_rel, dt, horizon), np.zeros(model.n)
    )

    def rows(m):
        return [
            {
                "rise_time_98": m.rise_time[i],
                "overshoot_pct": m.overshoot_pct[i],
                "peak_time": m.peak_time[i],
                "oscillation_count": m.oscillation_count[i],
                "steady_state_value": m.steady_state_value[i],
                "applicable": m.applicable[i],
                "rise_reached": m.rise_reached[i],
                "settled": m.settled[i],
            }
            for i in range(model.n)
        ]

    payload = {
        "schema": 1,
        "command": "simulate",
        "model": {"name": model.name, "n": model.n, "m": model.m},
        "q_star": q_star,
        "sim": {"dt": dt, "T": horizon, "x0": x0},
        "t_ru_nominal": spec.t_ru,
        "scenario": spec.scenario.value,
        "per_output": rows(metrics),
        "per_output_linearized": rows(lin_metrics),
    }
    report_path = _output_path(cfg, out_dir, "report", "metrics.json")
    _write_report(report_path, payload)
    print(f"simulate: {len(traj.t)} samples -> {csv_path}, metrics -> {report_path}")
    return EXIT_OK


def run_demo(name: str, out_dir: Path) -> str:
    """Analyze and simulate one preset of the two-link arm; return the table."""
    model = builtin_manipulator()
    gains = two_dof_gain_sets()[name]
    eq = assign_equilibrium(model, TWO_DOF_TARGET, gains.Ki)
    R, P, W = build_rpw(model, gains, eq)
    spec = spectral_report(R, P, W)

    report = {"schema": 1, "command": "demo", "preset": name}
    report.update(_spectral_summary(model, gains, TWO_DOF_TARGET))
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_report(out_dir / f"demo_{name}_report.json", report)

    traj = simulate_nonlinear(
        model, gains, eq, np.zeros(4), DEMO_SIM["dt"], DEMO_SIM["T"]
    )
    traj.to_csv(out_dir / f"demo_{name}_trajectory.csv")
    metrics = transient_metrics(traj, TWO_DOF_TARGET)

    lines = [
        f"preset {name}: scenario {spec.scenario.value}, "
        f"no-overshoot margin {spec.no_overshoot_margin:.4g}",
        f"  nominal rise-time bound t_ru = {spec.t_ru:.3f} s",
        "  link   simulated t_r98 (s)   within bound",
    ]
    for i in range(model.n):
        t_r = metrics.rise_time[i]
        shown = f"{t_r:.3f}" if np.isfinite(t_r) else "not reached"
        ok = "yes" if np.isfinite(t_r) and t_r <= spec.t_ru else "no"
        lines.append(f"  {i + 1:<6} {shown:<21} {ok}")
    return "\n".join(lines)


def cmd_demo(names: list[str], out_dir: Path, jobs: int) -> int:
    presets = two_dof_gain_sets()
    unknown = [n for n in names if n not in presets]
    if unknown:
        print(
            f"unknown demo name(s) {unknown}; choose from {sorted(presets)}",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    if jobs > 1 and len(names) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            tables = list(pool.map(lambda n: run_demo(n, out_dir), names))
    else:
        tables = [run_demo(n, out_dir) for n in names]
    print("\n\n".join(tables))
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="phtune",
        description="PID passivity gain tuning for mechanical systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("analyze", "spectral report for a gain set"),
        ("tune", "synthesize gains for a target"),
        ("simulate", "nonlinear closed-loop run with metrics"),
        ("verify", "check a gain set against a target"),
    ):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", required=True, help="JSON configuration file")
        sp.add_argument("--out", default=".", help="output directory")
    sp = sub.add_parser("demo", help="bundled two-link arm presets")
    sp.add_argument("names", nargs="+", help="preset names: rt, e1, e2")
    sp.add_argument("--out", default=".", help="output directory")
    sp.add_argument("--jobs", type=int, default=1, help="parallel demo runs")

    args = parser.parse_args(argv)
    out_dir = Path(args.out)

    try:
        if args.command == "demo":
            return cmd_demo(args.names, out_dir, args.jobs)
        cfg = _load_config(args.config)
        handler = {
            "analyze": cmd_analyze,
            "tune": cmd_tune,
            "simulate": cmd_simulate,
            "verify": cmd_verify,
        }[args.command]
        return handler(cfg, out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnassignableEquilibrium as exc:
        print(f"config error: q_star is not an assignable equilibrium ({exc})", file=sys.stderr)
        return EXIT_CONFIG
    except AssumptionViolation as exc:
        print(f"assumption failure: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except InfeasibleTuning as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SimulationDiverged as exc:
        print(f"simulation diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
