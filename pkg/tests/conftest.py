import numpy as np
import pytest

from topocube import Volume


def smooth_blobs(seed, n, k=6, amp=0.95):
    """Sum of random Gaussian bumps normalised to [0, amp]."""
    rng = np.random.default_rng(seed)
    g = np.indices((n, n, n)).astype(np.float64)
    out = np.zeros((n, n, n))
    for _ in range(k):
        c = rng.uniform(0.15 * n, 0.85 * n, 3)
        w = rng.uniform(0.1 * n, 0.3 * n, 3)
        a = rng.uniform(0.4, 1.0)
        out += a * np.exp(
            -(((g[0] - c[0]) / w[0]) ** 2 + ((g[1] - c[1]) / w[1]) ** 2 + ((g[2] - c[2]) / w[2]) ** 2)
        )
    return Volume(out / out.max() * amp)


def generic_pair(seed, n):
    """Truth/prediction volumes on incommensurate value lattices.

    Values are spaced far apart relative to finite-difference steps and the
    two volumes share no rational value relation, so matchings and critical
    vertices stay constant under small perturbations.
    """
    rng = np.random.default_rng(seed)
    size = n * n * n
    t = 0.05 + 0.88 * rng.permutation(size) / size + rng.uniform(0, 1e-6, size)
    p = 0.06 + (0.88 / np.sqrt(2)) * rng.permutation(size) / size + rng.uniform(0, 1e-6, size)
    return Volume(t.reshape(n, n, n)), Volume(p.reshape(n, n, n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
