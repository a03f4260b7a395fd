"""Hot numerical kernels: greedy bin formation and nearest-neighbor scans.

The numba-compiled path is the default. Set CORESETKIT_NO_NUMBA=1 before
import to force the pure-numpy fallbacks (same results, slower); the
benchmark in benchmarks/bench_kernels.py compares the two. Both paths are
deterministic run to run; the greedy argmax applies a strict greater-than
test so the lowest index wins every tie.
"""

from __future__ import annotations

import os

import numpy as np

_FORCE_NUMPY = os.environ.get("CORESETKIT_NO_NUMBA", "0") == "1"

try:
    if _FORCE_NUMPY:
        raise ImportError("numba disabled by CORESETKIT_NO_NUMBA")
    from numba import njit, prange

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False


def backend() -> str:
    """Name of the active kernel backend ("numba" or "numpy")."""
    return "numba" if HAS_NUMBA else "numpy"


def _greedy_order_numpy(feats: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    n = feats.shape[0]
    # total squared distance to the full set; the anchor term of the gain
    b_full = np.empty(n, dtype=np.float64)
    for k in range(n):
        diff = feats - feats[k]
        b_full[k] = (diff * diff).sum()
    order = np.empty(n, dtype=np.int64)
    assigned = np.zeros(n, dtype=bool)
    pos = 0
    for size in sizes:
        a = np.zeros(n, dtype=np.float64)
        for _ in range(size):
            gains = 2.0 * a - b_full
            gains[assigned] = -np.inf
            best = int(np.argmax(gains))
            assigned[best] = True
            order[pos] = best
            pos += 1
            diff = feats - feats[best]
            a += (diff * diff).sum(axis=1)
    return order


def _nn_distances_numpy(feats: np.ndarray, sel: np.ndarray) -> np.ndarray:
    chosen = feats[sel]
    out = np.empty(feats.shape[0], dtype=np.float64)
    step = 2048
    for start in range(0, feats.shape[0], step):
        block = feats[start:start + step]
        d2 = ((block[:, None, :] - chosen[None, :, :]) ** 2).sum(axis=2)
        out[start:start + step] = np.sqrt(d2.min(axis=1))
    return out


if HAS_NUMBA:

    @njit(cache=True)
    def _greedy_order_numba(feats, sizes):  # pragma: no cover - compiled
        n, d = feats.shape
        b_full = np.zeros(n, dtype=np.float64)
        for k in range(n):
            acc = 0.0
            for p in range(n):
                s = 0.0
                for j in range(d):
                    diff = feats[p, j] - feats[k, j]
                    s += diff * diff
                acc += s
            b_full[k] = acc
        order = np.empty(n, dtype=np.int64)
        assigned = np.zeros(n, dtype=np.bool_)
        pos = 0
        for b in range(sizes.shape[0]):
            a = np.zeros(n, dtype=np.float64)
            for _ in range(sizes[b]):
                best = -1
                best_gain = -np.inf
                for k in range(n):
                    if not assigned[k]:
                        g = 2.0 * a[k] - b_full[k]
                        if g > best_gain:
                            best_gain = g
                            best = k
                assigned[best] = True
                order[pos] = best
                pos += 1
                for k in range(n):
                    s = 0.0
                    for j in range(d):
                        diff = feats[k, j] - feats[best, j]
                        s += diff * diff
                    a[k] += s
        return order

    @njit(cache=True, parallel=True)
    def _nn_distances_numba(feats, sel):  # pragma: no cover - compiled
        n, d = feats.shape
        m = sel.shape[0]
        out = np.empty(n, dtype=np.float64)
        for i in prange(n):
            best = np.inf
            for j in range(m):
                s = 0.0
                for c in range(d):
                    diff = feats[i, c] - feats[sel[j], c]
                    s += diff * diff
                if s < best:
                    best = s
            out[i] = np.sqrt(best)
        return out


def greedy_order(feats: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    """Flat greedy selection order over all points, bin by bin.

    Args:
        feats: (n, d) float64 feature matrix.
        sizes: (N,) int64 bin sizes summing to n.

    Returns:
        (n,) int64 array of point indices in selection order; slicing it by
        the cumulative sizes yields the bins.
    """
    feats = np.ascontiguousarray(feats, dtype=np.float64)
    sizes = np.ascontiguousarray(sizes, dtype=np.int64)
    if HAS_NUMBA:
        return _greedy_order_numba(feats, sizes)
    return _greedy_order_numpy(feats, sizes)


def nn_distances(feats: np.ndarray, sel: np.ndarray) -> np.ndarray:
    """Euclidean distance from every point to its nearest selected point.

    Parallel over query points on the numba path; each point's result is
    computed independently so the output does not depend on thread count.
    """
    feats = np.ascontiguousarray(feats, dtype=np.float64)
    sel = np.ascontiguousarray(sel, dtype=np.int64)
    if HAS_NUMBA:
        return _nn_distances_numba(feats, sel)
    return _nn_distances_numpy(feats, sel)
