"""Batch command-line front end.

Exit codes: 0 success, 2 input/config error, 3 simulation error,
4 calibration failure.
"""
from __future__ import annotations

import argparse
import json
import shutil
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, emg, muscle, sensor
from .config import SCALAR_KEYS, default_config_text, load_config, parse_config, set_scalar
from .control import closed_loop_run
from .errors import (ConfigError, ExosimError, FitDiverged, InsufficientData,
                     SimulationError)

EXIT_OK, EXIT_INPUT, EXIT_SIM, EXIT_CALIB = 0, 2, 3, 4

TIMESERIES_COLUMNS = ["t", "theta_hip", "theta_lumbar", "tau_hip_human", "tau_lumbar_human",
                      "tau_ext", "sensor_pressure_Pa", "muscle_force_N", "engaged"]


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def write_timeseries(path, r) -> None:
    cols = np.column_stack([r.t, r.theta[:, 0], r.theta[:, 1], r.tau_human[:, 0],
                            r.tau_human[:, 1], r.tau_ext, r.sensor_pressure,
                            r.muscle_force, r.engaged.astype(float)])
    np.savetxt(path, cols, delimiter=",", header=",".join(TIMESERIES_COLUMNS), comments="",
               fmt=["%.9g"] * 8 + ["%d"])


def _write_kv(path, rows) -> None:
    with open(path, "w") as fh:
        fh.write("key,value\n")
        for k, v in rows:
            fh.write(f"{k},{v:.9g}\n" if isinstance(v, float) else f"{k},{v}\n")


def _hydraulics(cfg, peak_force):
    """Design-point figures for the peak total MSAM force of a run."""
    p = cfg.muscle
    x = muscle.FULL_STROKE_STRAIN * p.l_i
    per = peak_force / p.n_muscles
    P = muscle.required_pressure(p, per, x)
    return [
        ("per_muscle_force_N", float(per)),
        ("muscle_model_force_at_full_stroke_N", float(muscle.muscle_force(p, x))),
        ("required_pressure_Pa", float(P)),
        ("required_thrust_N", float(muscle.actuator_thrust(P, cfg.syringe, p.n_muscles))),
    ]


def _prepare_out(out: Path) -> Path:
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"output directory {out} is not writable: {exc}") from None
    return out


def _run(cfg, label):
    try:
        return closed_loop_run(cfg)
    except SimulationError as exc:
        raise CliError(EXIT_SIM, f"{label}: simulation failed at {exc}") from None
    except ExosimError as exc:
        raise CliError(EXIT_SIM, f"{label}: simulation failed: {exc}") from None


def _load(path):
    if path is None:
        return parse_config(default_config_text(), "default.ini"), default_config_text().encode()
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"{path}: {exc.strerror}") from None
    try:
        return load_config(path), raw
    except ConfigError as exc:
        raise CliError(EXIT_INPUT, f"config error: {exc}") from None


def cmd_simulate(args) -> int:
    cfg, raw = _load(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    out = _prepare_out(Path(args.out or cfg.output_dir) / cfg.name)
    (out / "config.ini").write_bytes(raw)

    if args.four_scenario:
        loaded = cfg.load_mass if cfg.load_mass > 0 else 5.0
        runs = {
            "loaded_assist": cfg.replace(load_mass=loaded, assist_enabled=True),
            "loaded_noassist": cfg.replace(load_mass=loaded, assist_enabled=False),
            "unloaded_assist": cfg.replace(load_mass=0.0, assist_enabled=True),
            "unloaded_noassist": cfg.replace(load_mass=0.0, assist_enabled=False),
        }
    else:
        runs = {"timeseries": cfg}

    results = {label: _run(c, label) for label, c in runs.items()}
    files = {"config": "config.ini", "timeseries": [], "plots": []}
    rows = []
    lines = [f"scenario {cfg.name}", ""]
    for label, r in results.items():
        name = f"{label}.csv"
        write_timeseries(out / name, r)
        files["timeseries"].append(name)
        summ = r.summary()
        lines.append(f"[{label}] load {runs[label].load_mass:g} kg, "
                     f"assist {'on' if runs[label].assist_enabled else 'off'}")
        for k, v in summ.items():
            lines.append(f"  {k:40s} {v:.6g}")
            rows.append((f"{label}.{k}", v))
        if runs[label].assist_enabled:
            for k, v in _hydraulics(runs[label], summ["peak_muscle_force_N"]):
                lines.append(f"  {k:40s} {v:.6g}")
                rows.append((f"{label}.{k}", v))
        lines.append("")
    if args.four_scenario:
        for cond in ("loaded", "unloaded"):
            a = results[f"{cond}_assist"].summary()["peak_lumbar_extensor_Nm"]
            b = results[f"{cond}_noassist"].summary()["peak_lumbar_extensor_Nm"]
            red = 100.0 * (1 - a / b) if b > 0 else 0.0
            lines.append(f"{cond} peak lumbar torque reduction: {red:.3f} %")
            rows.append((f"{cond}.lumbar_reduction_pct", red))
    report = "\n".join(lines).rstrip() + "\n"
    (out / "summary.txt").write_text(report)
    _write_kv(out / "summary.csv", rows)
    files["summary"] = ["summary.txt", "summary.csv"]

    if args.plot:
        from .plotting import plot_run

        plot_run(results, out / "torques.png")
        files["plots"].append("torques.png")
    manifest = {"command": "simulate", "four_scenario": bool(args.four_scenario),
                "seed": cfg.seed, "version": __version__, "files": files}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    sys.stdout.write(report)
    print(f"wrote {out}")
    return EXIT_OK


def _read_samples(reader, path):
    try:
        return reader(path)
    except OSError as exc:
        raise CliError(EXIT_INPUT, f"{path}: {exc.strerror}") from None
    except ValueError as exc:
        raise CliError(EXIT_INPUT, f"schema error: {exc}") from None


def cmd_calibrate_sensor(args) -> int:
    cfg, _ = _load(args.config)
    samples = _read_samples(sensor.read_pressure_csv, args.csv)
    try:
        rep = sensor.fit_geometry(samples, cfg.sensor, fit_offset=args.fit_offset,
                                  max_iter=args.max_iter)
    except InsufficientData as exc:
        raise CliError(EXIT_INPUT, f"insufficient data: {exc}") from None
    except FitDiverged as exc:
        raise CliError(EXIT_CALIB, f"fit diverged: {exc}") from None
    out = _prepare_out(Path(args.out))
    text = rep.as_text()
    (out / "sensor_fit.txt").write_text(text)
    g = rep.geometry
    snippet = ["[sensor]"] + [f"{k} = {float(v)!r}" for k, v in (
        ("d1_m", g.d1), ("d2_m", g.d2), ("g_i_m", g.g_i), ("phi_c_rad", g.phi_c),
        ("P_init_Pa", g.P_init), ("T_wall_m", g.T_wall), ("S_allow_Pa", g.S_allow),
        ("D_tube_m", g.D_tube), ("strain_offset", g.strain_offset))]
    (out / "sensor_fit.ini").write_text("\n".join(snippet) + "\n")
    np.savetxt(out / "sensor_residuals.csv", np.column_stack([samples, rep.residuals]),
               delimiter=",", header="strain_fraction,pressure_Pa,residual_Pa",
               comments="", fmt="%.9g")
    if args.plot:
        from .plotting import plot_sensor_fit

        plot_sensor_fit(samples, g, out / "sensor_fit.png")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_calibrate_muscle(args) -> int:
    import warnings

    cfg, _ = _load(args.config)
    samples = _read_samples(muscle.read_force_csv, args.csv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            fit = muscle.calibrate_elastic_term(samples, cfg.muscle)
    except (InsufficientData, muscle.ElongationOutOfRange) as exc:
        raise CliError(EXIT_INPUT, f"insufficient data: {exc}") from None
    out = _prepare_out(Path(args.out))
    lines = ["muscle elastic-term fit",
             f"samples              {fit.n_samples}",
             f"alpha_A_t_m2         {fit.elastic_product:.9g}",
             f"rms_residual_N       {fit.rms_residual:.9g}",
             f"k_c_Npm (held)       {cfg.muscle.k_c:.9g}"]
    if fit.clamped:
        lines.append("warning: negative optimum clamped to 0")
    text = "\n".join(lines) + "\n"
    (out / "muscle_fit.txt").write_text(text)
    if args.plot:
        from .plotting import plot_muscle_fit

        plot_muscle_fit(samples, cfg.muscle, fit.elastic_product, out / "muscle_fit.png")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_emg(args) -> int:
    traces = {}
    for label, path in (("assist", args.assist_csv), ("no_assist", args.no_assist_csv)):
        traces[label] = _read_samples(lambda p: emg.read_trace_csv(p, args.sample_rate), path)
    ra, rb = traces["assist"].sample_rate, traces["no_assist"].sample_rate
    if not np.isclose(ra, rb, rtol=1e-9):
        raise CliError(EXIT_INPUT, f"sample rates differ ({ra:g} vs {rb:g} Hz); "
                                   "pass --sample-rate to override")
    try:
        env = {k: emg.process(v, (args.f_lo, args.f_hi), args.smooth_hz)
               for k, v in traces.items()}
    except (emg.InvalidBand, emg.InvalidCutoff) as exc:
        raise CliError(EXIT_INPUT, str(exc)) from None
    m = {k: emg.metrics(v) for k, v in env.items()}
    try:
        eff = emg.efficiency(m["assist"], m["no_assist"])
        peak_red = emg.peak_reduction(m["assist"], m["no_assist"])
    except ZeroDivisionError as exc:
        raise CliError(EXIT_INPUT, f"DivisionByZero: {exc}") from None
    rows = []
    for k in ("assist", "no_assist"):
        rows += [(f"{k}.peak_mV", m[k].peak), (f"{k}.iemg_mVs", m[k].iemg),
                 (f"{k}.duration_s", m[k].duration)]
    rows += [("efficiency", eff), ("peak_reduction", peak_red)]
    text = "".join(f"{k:20s} {v:.6g}\n" for k, v in rows)
    if args.out:
        out = _prepare_out(Path(args.out))
        _write_kv(out / "emg_metrics.csv", rows)
        (out / "emg_metrics.txt").write_text(text)
        if args.plot:
            from .plotting import plot_emg

            plot_emg(traces, out / "emg_envelopes.png")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_synth_emg(args) -> int:
    act = emg.lift_activation(args.duration, args.sample_rate, level=args.level)
    try:
        trace = emg.synth_emg(act, args.sample_rate, args.seed)
    except ValueError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from None
    emg.write_trace_csv(args.out, trace)
    return EXIT_OK


def _parse_values(args):
    if args.values:
        try:
            vals = [float(v) for v in args.values.split(",") if v.strip()]
        except ValueError:
            raise CliError(EXIT_INPUT, f"bad --values {args.values!r}") from None
    else:
        try:
            start, stop, num = args.range.split(":")
            vals = list(np.linspace(float(start), float(stop), int(num)))
        except ValueError:
            raise CliError(EXIT_INPUT, f"--range must be start:stop:num, got {args.range!r}") from None
    if not vals:
        raise CliError(EXIT_INPUT, "empty sweep")
    return sorted(vals)


def _sweep_point(cfg, param, v):
    c = set_scalar(cfg, param, v)
    s = closed_loop_run(c).summary()
    return (v, s["peak_hip_extensor_Nm"], s["peak_lumbar_extensor_Nm"], s["lumbar_reduction_pct"])


def cmd_sweep(args) -> int:
    if args.param not in SCALAR_KEYS:
        raise CliError(EXIT_INPUT, f"unknown parameter {args.param!r}; "
                                   f"choose from {', '.join(SCALAR_KEYS)}")
    cfg, _ = _load(args.config)
    vals = _parse_values(args)
    try:
        for v in vals:
            set_scalar(cfg, args.param, v)
    except ConfigError as exc:
        raise CliError(EXIT_INPUT, f"config error: {exc}") from None
    try:
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as ex:
                rows = list(ex.map(_sweep_point, [cfg] * len(vals), [args.param] * len(vals),
                                   vals))
        else:
            rows = [_sweep_point(cfg, args.param, v) for v in vals]
    except SimulationError as exc:
        raise CliError(EXIT_SIM, f"simulation failed at {exc}") from None
    except ExosimError as exc:
        raise CliError(EXIT_SIM, f"simulation failed: {exc}") from None
    rows.sort(key=lambda r: r[0])
    out = _prepare_out(Path(args.out))
    header = f"{args.param},peak_hip_torque_Nm,peak_lumbar_torque_Nm,reduction_pct"
    np.savetxt(out / "sweep.csv", np.array(rows), delimiter=",", header=header, comments="",
               fmt="%.9g")
    sys.stdout.write(header + "\n" + "".join(",".join(f"{x:.9g}" for x in r) + "\n"
                                             for r in rows))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="exosim", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario (or the four-scenario protocol)")
    p.add_argument("--config", help="scenario INI (default: bundled default.ini)")
    p.add_argument("--out", help="output root (default: [scenario] output_dir)")
    p.add_argument("--seed", type=int)
    p.add_argument("--four-scenario", action="store_true",
                   help="loaded/unloaded x assist/no-assist")
    p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate-sensor", help="fit sensor geometry to strain/pressure samples")
    p.add_argument("csv")
    p.add_argument("--config", help="seed geometry from this scenario INI")
    p.add_argument("--out", default="sensor_fit")
    p.add_argument("--fit-offset", action="store_true", help="also fit a strain delay")
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--seed", type=int, default=0, help="accepted for symmetry; fit is deterministic")
    p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=cmd_calibrate_sensor)

    p = sub.add_parser("calibrate-muscle", help="fit alpha*A_t to elongation/force samples")
    p.add_argument("csv")
    p.add_argument("--config")
    p.add_argument("--out", default="muscle_fit")
    p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=cmd_calibrate_muscle)

    p = sub.add_parser("emg", help="EMG metrics and assist efficiency for two recordings")
    p.add_argument("assist_csv")
    p.add_argument("no_assist_csv")
    p.add_argument("--sample-rate", type=float, help="override the declared rate (Hz)")
    p.add_argument("--f-lo", type=float, default=emg.BAND[0])
    p.add_argument("--f-hi", type=float, default=emg.BAND[1])
    p.add_argument("--smooth-hz", type=float, default=emg.SMOOTH_CUTOFF)
    p.add_argument("--out")
    p.add_argument("--plot", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=cmd_emg)

    p = sub.add_parser("synth-emg", help="write a synthetic single-lift EMG trace")
    p.add_argument("out")
    p.add_argument("--level", type=float, default=1.0, help="peak activation in [0, 1]")
    p.add_argument("--duration", type=float, default=3.0)
    p.add_argument("--sample-rate", type=float, default=emg.DEFAULT_RATE)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth_emg)

    p = sub.add_parser("sweep", help="peak torques over a range of one config value")
    p.add_argument("--config")
    p.add_argument("--param", required=True, help="section.key, e.g. scenario.load_mass_kg")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--values", help="comma-separated values")
    g.add_argument("--range", help="start:stop:num")
    p.add_argument("--out", default="sweep")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"exosim {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
