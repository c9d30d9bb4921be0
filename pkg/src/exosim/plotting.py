"""Static PNG figures for run directories. Imported lazily by the CLI."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import emg  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    # fixed metadata keeps PNGs reproducible
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)


def plot_run(results: dict, path):
    """Joint angles, lumbar extensor moment and sensor pressure for one or more runs."""
    fig, axes = plt.subplots(3, 1, figsize=(7, 8), sharex=True)
    for label, r in results.items():
        axes[0].plot(r.t, np.degrees(r.theta[:, 0]), label=f"{label} hip")
        axes[0].plot(r.t, np.degrees(r.theta[:, 1]), "--", label=f"{label} L5-S1")
        axes[1].plot(r.t, -r.tau_human[:, 1], label=label)
        axes[2].plot(r.t, r.sensor_pressure / 1e3, label=label)
    axes[0].set_ylabel("angle (deg)")
    axes[1].set_ylabel("lumbar extensor moment (N m)")
    axes[2].set_ylabel("sensor pressure (kPa)")
    axes[2].set_xlabel("time (s)")
    for ax in axes:
        ax.legend(fontsize=7)
        ax.grid(alpha=0.3)
    _save(fig, path)


def plot_sensor_fit(samples, geom, path):
    from .sensor import pressure_at_strain

    s, P = samples[:, 0], samples[:, 1]
    grid = np.linspace(0, s.max(), 200)
    fig, (ax, axr) = plt.subplots(2, 1, figsize=(6, 6), sharex=True,
                                  gridspec_kw={"height_ratios": [3, 1]})
    ax.plot(100 * s, P / 1e3, "o", ms=3, label="samples")
    ax.plot(100 * grid, pressure_at_strain(geom, grid) / 1e3, label="model")
    ax.set_ylabel("pressure (kPa)")
    ax.legend()
    axr.plot(100 * s, (P - pressure_at_strain(geom, s)) / 1e3, "o", ms=3)
    axr.axhline(0, color="k", lw=0.5)
    axr.set_xlabel("strain (%)")
    axr.set_ylabel("residual (kPa)")
    _save(fig, path)


def plot_muscle_fit(samples, p, elastic_product, path):
    from .muscle import muscle_force

    x, F = samples[:, 0], samples[:, 1]
    grid = np.linspace(0, x.max(), 200)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(1e3 * x, F, "o", ms=3, label="samples")
    ax.plot(1e3 * grid, muscle_force(p, grid, elastic_product), label="model")
    ax.set_xlabel("elongation (mm)")
    ax.set_ylabel("force (N)")
    ax.legend()
    _save(fig, path)


def plot_emg(traces: dict, path):
    """Rectified signal with its 100 ms RMS envelope and the smoothed envelope."""
    fig, axes = plt.subplots(len(traces), 1, figsize=(7, 3 * len(traces)), squeeze=False)
    for ax, (label, raw) in zip(axes[:, 0], traces.items()):
        band = emg.bandpass(raw)
        ax.plot(raw.t, np.abs(band.samples), lw=0.3, color="0.7", label="rectified")
        ax.plot(raw.t, emg.rms_envelope(band).samples, label="RMS 100 ms")
        ax.plot(raw.t, emg.smooth(emg.rectify(band)).samples, label="envelope")
        ax.set_title(label)
        ax.set_ylabel("mV")
        ax.legend(fontsize=7)
    axes[-1, 0].set_xlabel("time (s)")
    _save(fig, path)
