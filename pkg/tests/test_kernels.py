"""Both kernel backends must agree with each other and the oracles."""

import os
import subprocess
import sys
import textwrap

import numpy as np

from coresetkit import _kernels

import oracles


def random_feats(n, d, key):
    rng = np.random.Generator(np.random.Philox(key=key))
    return rng.normal(size=(n, d))


def test_active_backend_reported():
    assert _kernels.backend() in ("numba", "numpy")


def test_greedy_order_backends_agree():
    for key, n, d, n_bins in [(0, 20, 3, 4), (1, 33, 5, 3), (2, 8, 2, 8)]:
        feats = random_feats(n, d, key)
        sizes = np.asarray(oracles.oracle_bin_sizes(n, n_bins), dtype=np.int64)
        fast = _kernels.greedy_order(feats, sizes)
        slow = _kernels._greedy_order_numpy(feats, sizes)
        assert np.array_equal(fast, slow)


def test_greedy_order_handles_exact_ties():
    # duplicated points give bitwise-equal gains; both backends must take
    # the lowest index
    feats = np.ones((6, 2))
    sizes = np.asarray([3, 3], dtype=np.int64)
    assert list(_kernels.greedy_order(feats, sizes)) == [0, 1, 2, 3, 4, 5]
    assert list(_kernels._greedy_order_numpy(feats, sizes)) == [0, 1, 2, 3, 4, 5]


def test_nn_distances_backends_agree_with_oracle():
    feats = random_feats(50, 4, key=3)
    sel = [0, 7, 33]
    expected = oracles.oracle_nn_distances(feats, sel)
    fast = _kernels.nn_distances(feats, np.asarray(sel, dtype=np.int64))
    slow = _kernels._nn_distances_numpy(feats, np.asarray(sel, dtype=np.int64))
    assert np.allclose(fast, expected, rtol=1e-12, atol=1e-12)
    assert np.allclose(slow, expected, rtol=1e-12, atol=1e-12)
    assert fast[0] == 0.0 and fast[7] == 0.0 and fast[33] == 0.0


def test_env_flag_forces_numpy_backend():
    script = textwrap.dedent(
        """
        import numpy as np
        from coresetkit import _kernels
        assert _kernels.backend() == "numpy", _kernels.backend()
        rng = np.random.Generator(np.random.Philox(key=7))
        feats = rng.normal(size=(15, 3))
        sizes = np.asarray([5, 5, 5], dtype=np.int64)
        print(",".join(map(str, _kernels.greedy_order(feats, sizes))))
        """
    )
    env = dict(os.environ, CORESETKIT_NO_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", script], env=env, capture_output=True, text=True
    )
    assert out.returncode == 0, out.stderr
    # same order as whatever backend this process runs
    feats = random_feats(15, 3, key=7)
    sizes = np.asarray([5, 5, 5], dtype=np.int64)
    local = ",".join(map(str, _kernels.greedy_order(feats, sizes)))
    assert out.stdout.strip() == local
