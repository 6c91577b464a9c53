"""Hot numeric kernels: batched MAC simulation and batched cycle-model evaluation.

Two implementations of each kernel exist: a numba @njit loop (default) and a
vectorized pure-numpy path.  Set MPDSE_NO_NUMBA=1 to force the numpy path;
benchmarks/bench_kernels.py compares the two.  Both paths are exact integer
arithmetic and must agree bit for bit (tested).
"""

from __future__ import annotations

import os

import numpy as np


def _numba_available() -> bool:
    if os.environ.get("MPDSE_NO_NUMBA", "").strip() not in ("", "0"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USE_NUMBA = _numba_available()

if USE_NUMBA:
    from numba import njit
else:
    def njit(*args, **kwargs):
        def wrap(f):
            return f
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return wrap


# ---------------------------------------------------------------------------
# batched sliced-MAC simulation
# ---------------------------------------------------------------------------
# style encoding: processing 0=BP 1=BS (result-identical, kept for parity with
# the scalar simulator), scaling 0=1D 1=2D, consolidation 0=ST 1=SA.

@njit(cache=True)
def _mac_batch_loop(a, w, wq, k, n_bits, scaling_2d, sum_apart, out):
    n_slices = -(-wq // k)
    n_aslices = -(-n_bits // k)
    mask = (1 << k) - 1
    nclasses = n_slices + (n_aslices - 1 if scaling_2d else 0)
    lanes = np.zeros(nclasses, dtype=np.int64)
    for idx in range(a.shape[0]):
        av = a[idx]
        wv = w[idx]
        # weight slices, LSB first, top slice signed via arithmetic shift
        if sum_apart:
            # per-shift-class accumulators, finalized after the slice walk
            lanes[:] = 0
            for j in range(n_slices):
                ws = (wv >> (k * j)) & mask if j < n_slices - 1 else (wv >> (k * j))
                if scaling_2d:
                    for i in range(n_aslices):
                        asl = (av >> (k * i)) & mask
                        lanes[i + j] += asl * ws
                else:
                    lanes[j] += av * ws
            acc = 0
            for j in range(nclasses):
                acc += lanes[j] << (k * j)
        else:
            acc = 0
            for j in range(n_slices):
                ws = (wv >> (k * j)) & mask if j < n_slices - 1 else (wv >> (k * j))
                if scaling_2d:
                    for i in range(n_aslices):
                        asl = (av >> (k * i)) & mask
                        acc += (asl * ws) << (k * (i + j))
                else:
                    acc += (av * ws) << (k * j)
        out[idx] = acc


def _mac_batch_numpy(a, w, wq, k, n_bits, scaling_2d, sum_apart, out):
    n_slices = -(-wq // k)
    n_aslices = -(-n_bits // k)
    mask = (1 << k) - 1
    acc = np.zeros_like(a)
    lanes = {}
    for j in range(n_slices):
        ws = (w >> (k * j)) & mask if j < n_slices - 1 else (w >> (k * j))
        if scaling_2d:
            for i in range(n_aslices):
                asl = (a >> (k * i)) & mask
                if sum_apart:
                    cls = i + j
                    lanes[cls] = lanes.get(cls, 0) + asl * ws
                else:
                    acc += (asl * ws) << (k * (i + j))
        else:
            if sum_apart:
                lanes[j] = lanes.get(j, 0) + a * ws
            else:
                acc += (a * ws) << (k * j)
    if sum_apart:
        for j, lane in lanes.items():
            acc += lane << (k * j)
    out[:] = acc


def mac_batch(a: np.ndarray, w: np.ndarray, wq: int, k: int, n_bits: int,
              scaling_2d: bool, sum_apart: bool) -> np.ndarray:
    """Sliced-MAC results for element-wise (a, w) pairs; exact integers."""
    a = np.ascontiguousarray(a, dtype=np.int64)
    w = np.ascontiguousarray(w, dtype=np.int64)
    out = np.empty_like(a)
    impl = _mac_batch_loop if USE_NUMBA else _mac_batch_numpy
    impl(a, w, wq, k, n_bits, 1 if scaling_2d else 0, 1 if sum_apart else 0, out)
    return out


# ---------------------------------------------------------------------------
# batched cycle model
# ---------------------------------------------------------------------------
# Layers arrive as int64 columns: ih, iw, od, kk (K*K), ss (S*S), pack, wbits
# (total weight bits, used for the DRAM roofline gate).

@njit(cache=True)
def _cycles_batch_loop(ih, iw, od, kk, ss, pack, H, W, D, out):
    for i in range(ih.shape[0]):
        tiles = (-(-ih[i] // H)) * (-(-iw[i] // (W * pack[i]))) * (-(-od[i] // D))
        out[i] = -(-(tiles * ih[i] * kk[i]) // ss[i])


def _cycles_batch_numpy(ih, iw, od, kk, ss, pack, H, W, D, out):
    tiles = (-(-ih // H)) * (-(-iw // (W * pack))) * (-(-od // D))
    np.copyto(out, -(-(tiles * ih * kk) // ss))


def cycles_batch(layers: np.ndarray, H: int, W: int, D: int) -> np.ndarray:
    """Per-layer actual cycle counts on an (H, W, D) array; columns as above."""
    out = np.empty(layers.shape[0], dtype=np.int64)
    cols = [np.ascontiguousarray(layers[:, i]) for i in range(6)]
    impl = _cycles_batch_loop if USE_NUMBA else _cycles_batch_numpy
    impl(*cols, H, W, D, out)
    return out


@njit(cache=True)
def _search_eval_loop(ih, iw, od, kk, ss, pack, wbits, Hs, Ws, Ds, f_hz, dram_bw, totals, bw_ok):
    n_layers = ih.shape[0]
    for c in range(Hs.shape[0]):
        H = Hs[c]
        W = Ws[c]
        D = Ds[c]
        total = 0
        ok = True
        for i in range(n_layers):
            tiles = (-(-ih[i] // H)) * (-(-iw[i] // (W * pack[i]))) * (-(-od[i] // D))
            p = -(-(tiles * ih[i] * kk[i]) // ss[i])
            total += p
            # weights of a layer must stream from DRAM within the layer's runtime
            if wbits[i] * f_hz > dram_bw * p:
                ok = False
        totals[c] = total
        bw_ok[c] = ok


def _search_eval_numpy(ih, iw, od, kk, ss, pack, wbits, Hs, Ws, Ds, f_hz, dram_bw, totals, bw_ok):
    chunk = 4096
    for lo in range(0, Hs.shape[0], chunk):
        hi = min(lo + chunk, Hs.shape[0])
        H = Hs[lo:hi, None]
        W = Ws[lo:hi, None]
        D = Ds[lo:hi, None]
        tiles = (-(-ih[None, :] // H)) * (-(-iw[None, :] // (W * pack[None, :]))) * (-(-od[None, :] // D))
        p = -(-(tiles * ih[None, :] * kk[None, :]) // ss[None, :])
        totals[lo:hi] = p.sum(axis=1)
        bw_ok[lo:hi] = ~np.any(wbits[None, :] * f_hz > dram_bw * p, axis=1)


def search_eval(layers: np.ndarray, cands: np.ndarray, f_hz: int, dram_bw: int) -> tuple[np.ndarray, np.ndarray]:
    """Total cycles and DRAM-bandwidth feasibility for candidate (H, W, D) triples.

    layers: int64 array with columns (ih, iw, od, K*K, S*S, pack, weight_bits);
    cands: int64 array with columns (H, W, D).  Returns (totals, bw_ok).
    """
    layers = np.ascontiguousarray(layers, dtype=np.int64)
    cands = np.ascontiguousarray(cands, dtype=np.int64)
    totals = np.empty(cands.shape[0], dtype=np.int64)
    bw_ok = np.empty(cands.shape[0], dtype=np.bool_)
    cols = [np.ascontiguousarray(layers[:, i]) for i in range(7)]
    hs, ws, ds = (np.ascontiguousarray(cands[:, i]) for i in range(3))
    impl = _search_eval_loop if USE_NUMBA else _search_eval_numpy
    impl(*cols, hs, ws, ds, f_hz, dram_bw, totals, bw_ok)
    return totals, bw_ok
