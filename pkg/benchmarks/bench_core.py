"""Compare the compiled and pure-Python integration kernels.

Runs the same two-ion separation segment with each available backend and
reports wall time, step counts and the largest position difference.

    python3 benchmarks/bench_core.py [--duration-us 2] [--repeat 3]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from trapforge import _core
from trapforge import config as cf
from trapforge import shuttling as sh


def build(duration):
    conf = cf.load()
    layout, drive, ion = conf.layout(), conf.drive(), conf.ion()
    w = sh.Waveform(conf.start_voltages(), conf.end_voltages(), sh.RampProfile("tanh", 4.0, duration))
    eq = sh.equilibrium_at(layout, drive, ion, w.start, 2)
    model = sh.pack_model(layout, drive, ion, w, 2)
    y0 = np.concatenate([eq.ravel(), np.zeros(eq.size)])
    return model, y0


def time_backend(model, y0, duration, backend, repeat):
    t_eval = np.linspace(0.0, duration, 201)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = _core.integrate(model, y0, 0.0, duration, t_eval, atol_v=1e-7, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--duration-us", type=float, default=2.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    duration = args.duration_us * 1e-6
    model, y0 = build(duration)
    results = {}
    for name, mod in _core.backends().items():
        results[name] = time_backend(model, y0, duration, mod, args.repeat)
        dt, (y, status, steps, fev, _) = results[name]
        print(f"{name:>9s}: {dt * 1e3:10.2f} ms  steps={steps:7d}  fev={fev:8d}  status={status}")
    if len(results) == 2:
        (tp, op), (tc, oc) = results["pure"], results["compiled"]
        diff = np.abs(op[0][:, :6] - oc[0][:, :6]).max()
        print(f"  speed-up: {tp / tc:.1f}x   max |dx| between backends: {diff:.3e} m")


if __name__ == "__main__":
    main()
