"""Surface EMG processing: band-pass, rectify, smooth, integrate.

Both filters are Butterworth designs applied forward and backward
(``sosfiltfilt``), so envelopes keep the timing of the raw activity.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate, signal

from .errors import InvalidBand, InvalidCutoff

DEFAULT_RATE = 10_000.0
BAND = (50.0, 400.0)
SMOOTH_CUTOFF = 10.0


@dataclass(frozen=True)
class EmgTrace:
    samples: np.ndarray
    sample_rate: float = DEFAULT_RATE

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float).ravel()
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be > 0")
        if x.size < 2:
            raise ValueError("a trace needs at least 2 samples")
        if not np.all(np.isfinite(x)):
            raise ValueError("trace contains non-finite samples")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)

    @property
    def duration(self) -> float:
        return (self.samples.size - 1) / self.sample_rate

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate

    def scaled(self, k: float) -> "EmgTrace":
        return EmgTrace(self.samples * k, self.sample_rate)


@dataclass(frozen=True)
class EmgMetrics:
    peak: float
    iemg: float
    duration: float


def _filtfilt(sos, x):
    # sosfiltfilt's default padding needs more samples than very short traces have
    padlen = min(3 * (2 * len(sos) + 1), x.size - 1)
    return signal.sosfiltfilt(sos, x, padlen=padlen)


def bandpass(trace: EmgTrace, f_lo: float = BAND[0], f_hi: float = BAND[1],
             order: int = 4) -> EmgTrace:
    nyq = trace.sample_rate / 2
    if not (0 < f_lo < f_hi < nyq):
        raise InvalidBand(f"need 0 < f_lo < f_hi < {nyq:g} Hz, got ({f_lo}, {f_hi})")
    sos = signal.butter(order, [f_lo, f_hi], btype="bandpass", fs=trace.sample_rate,
                        output="sos")
    return EmgTrace(_filtfilt(sos, trace.samples), trace.sample_rate)


def rectify(trace: EmgTrace) -> EmgTrace:
    return EmgTrace(np.abs(trace.samples), trace.sample_rate)


def smooth(trace: EmgTrace, f_c: float = SMOOTH_CUTOFF, order: int = 2) -> EmgTrace:
    """Zero-phase low-pass Butterworth envelope."""
    if not (0 < f_c < trace.sample_rate / 2):
        raise InvalidCutoff(f"cutoff must lie in (0, {trace.sample_rate / 2:g}) Hz")
    sos = signal.butter(order, f_c, btype="lowpass", fs=trace.sample_rate, output="sos")
    return EmgTrace(_filtfilt(sos, trace.samples), trace.sample_rate)


def process(trace: EmgTrace, band=BAND, f_c: float = SMOOTH_CUTOFF) -> EmgTrace:
    """Band-pass, rectify and smooth a raw trace into its envelope."""
    return smooth(rectify(bandpass(trace, *band)), f_c)


def metrics(trace: EmgTrace) -> EmgMetrics:
    """Peak and trapezoidal integral of an already rectified, smoothed trace."""
    x = trace.samples
    iemg = integrate.trapezoid(x, dx=1.0 / trace.sample_rate)
    return EmgMetrics(peak=float(np.max(x)), iemg=float(iemg), duration=trace.duration)


def efficiency(assist: EmgMetrics, no_assist: EmgMetrics) -> float:
    """1 - iEMG_assist / iEMG_no_assist."""
    if no_assist.iemg == 0:
        raise ZeroDivisionError("no-assist iEMG is zero; efficiency undefined")
    return 1.0 - assist.iemg / no_assist.iemg


def peak_reduction(assist: EmgMetrics, no_assist: EmgMetrics) -> float:
    if no_assist.peak == 0:
        raise ZeroDivisionError("no-assist peak is zero")
    return 1.0 - assist.peak / no_assist.peak


def rms_envelope(trace: EmgTrace, window_s: float = 0.1) -> EmgTrace:
    """Centred moving RMS, for display only."""
    n = max(1, int(round(window_s * trace.sample_rate)))
    x2 = trace.samples**2
    c = np.concatenate([[0.0], np.cumsum(x2)])
    idx = np.arange(x2.size)
    lo = np.clip(idx - n // 2, 0, x2.size)
    hi = np.clip(idx - n // 2 + n, 0, x2.size)
    mean = (c[hi] - c[lo]) / (hi - lo)
    return EmgTrace(np.sqrt(np.maximum(mean, 0.0)), trace.sample_rate)


def synth_emg(activation, sample_rate: float = DEFAULT_RATE, seed: int = 0,
              amplitude_mv: float = 1.0) -> EmgTrace:
    """Band-limited Gaussian noise with unit RMS, modulated by ``activation``."""
    a = np.asarray(activation, dtype=float).ravel()
    if np.any(a < 0) or np.any(a > 1) or not np.all(np.isfinite(a)):
        raise ValueError("activation must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(a.size)
    hi = min(BAND[1], 0.45 * sample_rate)
    sos = signal.butter(4, [BAND[0], hi], btype="bandpass", fs=sample_rate, output="sos")
    carrier = _filtfilt(sos, noise)
    rms = np.sqrt(np.mean(carrier**2))
    if rms > 0:
        carrier = carrier / rms
    return EmgTrace(amplitude_mv * a * carrier, sample_rate)


def lift_activation(duration: float, sample_rate: float = DEFAULT_RATE,
                    level: float = 1.0, baseline: float = 0.05) -> np.ndarray:
    """Smooth single-burst activation profile peaking mid-cycle."""
    n = int(round(duration * sample_rate)) + 1
    u = np.linspace(0.0, 1.0, n)
    burst = np.sin(np.pi * u) ** 2
    return level * (baseline + (1 - baseline) * burst)


def read_trace_csv(path, sample_rate: float | None = None) -> EmgTrace:
    """Read a single-column or (time, amplitude) CSV.

    The rate comes from ``sample_rate`` if given, else a ``# sample_rate_hz=``
    comment line, else the time column. A leading non-numeric row is a header.
    """
    path = Path(path)
    declared = None
    rows = []
    with open(path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                key, _, val = s.lstrip("#").partition("=")
                if key.strip() == "sample_rate_hz":
                    try:
                        declared = float(val)
                    except ValueError:
                        raise ValueError(f"{path}:{lineno}: bad sample_rate_hz") from None
                continue
            rows.append((lineno, next(csv.reader([s]))))
    if rows:
        try:
            [float(c) for c in rows[0][1]]
        except ValueError:
            rows = rows[1:]
    if not rows:
        raise ValueError(f"{path}: no samples")
    ncol = len(rows[0][1])
    if ncol not in (1, 2):
        raise ValueError(f"{path}: expected 1 or 2 columns, got {ncol}")
    data = np.empty((len(rows), ncol))
    for i, (lineno, row) in enumerate(rows):
        if len(row) != ncol:
            raise ValueError(f"{path}:{lineno}: expected {ncol} columns, got {len(row)}")
        try:
            data[i] = [float(c) for c in row]
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-numeric value") from None
    rate = sample_rate if sample_rate is not None else declared
    if rate is None and ncol == 2:
        dt = np.diff(data[:, 0])
        if dt.size == 0 or np.any(dt <= 0):
            raise ValueError(f"{path}: time column must be strictly increasing")
        rate = 1.0 / np.median(dt)
    if rate is None:
        raise ValueError(f"{path}: sample rate unknown; pass --sample-rate or add "
                         "'# sample_rate_hz=<rate>'")
    return EmgTrace(data[:, -1], rate)


def write_trace_csv(path, trace: EmgTrace) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# sample_rate_hz={trace.sample_rate:.9g}\n")
        fh.write("amplitude_mV\n")
        np.savetxt(fh, trace.samples, fmt="%.9g")
