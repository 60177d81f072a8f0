"""numpy versions of the compiled kernels, same signatures and results."""

import numpy as np


def relu_loss_batch(X, y, Z, W):
    """Mean squared loss of ``G`` networks; ``Z`` is (G, K), ``W`` is (G, K, d)."""
    act = np.maximum(np.einsum("gkd,nd->gnk", W, X), 0.0)
    pred = np.einsum("gnk,gk->gn", act, Z)
    return np.mean((pred - y[None, :]) ** 2, axis=1)


def count_trapped(x, lo, hi):
    """Rows of ``x`` with no entry strictly inside any ``(lo[g], hi[g])``."""
    if lo.size == 0:
        return x.shape[0]
    inside = (x[:, :, None] > lo) & (x[:, :, None] < hi)
    return int(np.count_nonzero(~inside.any(axis=(1, 2))))
