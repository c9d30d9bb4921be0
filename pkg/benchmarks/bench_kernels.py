"""Time the numba kernels against the pure-numpy fallback.

Both kernel modules are imported directly, so the EXOSIM_KERNELS flag does
not matter here. The first numba call (JIT compile or cache load) is excluded.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import time

import numpy as np

from exosim import _kernels_numba as nb, _kernels_numpy as npk
from exosim.dynamics import FIXTURE, lift_trajectory
from exosim.sensor import DEFAULT_GEOMETRY


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    p = FIXTURE.with_load(5.0).packed()
    tr = lift_trajectory(duration=2.0, dt=1e-3)
    n = len(tr.t)
    zeros2, zeros1 = np.zeros((n, 2)), np.zeros(n)
    th, om, al = (np.ascontiguousarray(a) for a in (tr.theta, tr.theta_dot, tr.theta_ddot))
    tau = np.zeros((20_000, 2))
    sp = DEFAULT_GEOMETRY.packed()
    strain = np.linspace(0.0, 0.5, 100_000)
    pressure = npk.sensor_pressure_batch(sp, strain[:2000])
    cmd = np.abs(np.sin(np.linspace(0, 20, 200_000)))
    th0, om0 = np.array([np.pi / 2, 0.3]), np.zeros(2)
    f20k, te20k = np.zeros((20_000, 2)), np.zeros(20_000)
    return {
        "inverse_dynamics (2001 samples)":
            lambda k: k.inverse_dynamics_batch(p, th, om, al, zeros2, zeros1),
        "rk4_integrate (20000 steps)":
            lambda k: k.rk4_integrate(p, th0, om0, tau, f20k, te20k, 1e-4),
        "sensor_pressure (100000 strains)":
            lambda k: k.sensor_pressure_batch(sp, strain),
        "sensor_strain (2000 inversions)":
            lambda k: k.sensor_strain_batch(sp, pressure, 0.5),
        "rate_limit (200000 samples)":
            lambda k: k.rate_limit(cmd, 0.0, 1e-3),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    print(f"{'kernel':36s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speed-up':>9s}")
    for name, run in cases().items():
        run(nb)  # compile / load cache
        t_nb = best_of(lambda: run(nb), args.repeat)
        t_np = best_of(lambda: run(npk), args.repeat)
        print(f"{name:36s} {1e3 * t_nb:11.3f} {1e3 * t_np:11.3f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
