#!/usr/bin/env python3
"""Benchmark the numba fast path against the pure-numpy fallback.

Usage:
    python benchmarks/bench_kernels.py

Covers the two hot kernels: the batched sliced-MAC sweep (exhaustive PE
verification) and the batched cycle-model evaluation (array-shape search).
The numpy fallback is what you get with MPDSE_NO_NUMBA=1; both paths must
produce identical integers, so this is purely a speed comparison.
"""

import time

import numpy as np

from mpdse import kernels
from mpdse.dse import _layer_matrix, _candidate_dims, max_pe_count, HardwareConstraints
from mpdse.calibration import default_calibration
from mpdse.pe import PEConfig, PEStyle
from mpdse.workload import resnet


def bench(fn, *args, warmup=2, iters=7):
    for _ in range(warmup):
        fn(*args)
    times = []
    for _ in range(iters):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def mac_sweep_inputs():
    a = np.repeat(np.arange(256, dtype=np.int64), 256)
    w = np.tile(np.arange(-128, 128, dtype=np.int64), 256)
    return a, w


def main():
    if not kernels.USE_NUMBA:
        print("numba path unavailable (missing, or MPDSE_NO_NUMBA set); "
              "run without the flag to compare both paths")
        return

    print(f"{'kernel':<28} {'numba':>10} {'numpy':>10} {'speedup':>9}")
    print("-" * 60)

    a, w = mac_sweep_inputs()
    out = np.empty_like(a)
    for label, args in [("mac_batch 1D k=2 wq=8", (a, w, 8, 2, 8, 0, 0)),
                        ("mac_batch 2D k=2 wq=8", (a, w, 8, 2, 8, 1, 0)),
                        ("mac_batch 1D k=1 wq=8 SA", (a, w, 8, 1, 8, 0, 1))]:
        t_numba = bench(kernels._mac_batch_loop, *args, out)
        t_numpy = bench(kernels._mac_batch_numpy, *args, out)
        print(f"{label:<28} {t_numba * 1e3:>8.2f}ms {t_numpy * 1e3:>8.2f}ms {t_numpy / t_numba:>8.1f}x")

    calib = default_calibration()
    hwc = HardwareConstraints()
    cfg = PEConfig(PEStyle("BP", "ST", "1D", 2))
    net = resnet(152, 2)
    layers = _layer_matrix(net, cfg)
    cands = _candidate_dims(net, cfg, max_pe_count(cfg, hwc, calib))
    label = f"search_eval ({cands.shape[0]} cands x {layers.shape[0]} layers)"

    def run_numba():
        totals = np.empty(cands.shape[0], dtype=np.int64)
        ok = np.empty(cands.shape[0], dtype=np.bool_)
        cols = [np.ascontiguousarray(layers[:, i]) for i in range(7)]
        hs, ws, ds = (np.ascontiguousarray(cands[:, i]) for i in range(3))
        kernels._search_eval_loop(*cols, hs, ws, ds, 127_000_000, 32_000_000_000, totals, ok)

    def run_numpy():
        totals = np.empty(cands.shape[0], dtype=np.int64)
        ok = np.empty(cands.shape[0], dtype=np.bool_)
        cols = [np.ascontiguousarray(layers[:, i]) for i in range(7)]
        hs, ws, ds = (np.ascontiguousarray(cands[:, i]) for i in range(3))
        kernels._search_eval_numpy(*cols, hs, ws, ds, 127_000_000, 32_000_000_000, totals, ok)

    t_numba = bench(run_numba)
    t_numpy = bench(run_numpy)
    print(f"{label:<28} {t_numba * 1e3:>8.2f}ms {t_numpy * 1e3:>8.2f}ms {t_numpy / t_numba:>8.1f}x")


if __name__ == "__main__":
    main()
