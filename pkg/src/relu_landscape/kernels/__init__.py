"""Hot loops with a compiled backend and a numpy fallback.

The compiled extension is used when it imports; setting the environment
variable ``RELU_LANDSCAPE_PURE=1`` forces the numpy path.
"""

import os

import numpy as np

from . import _fallback

BACKEND = "numpy"
_impl = _fallback
if os.environ.get("RELU_LANDSCAPE_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _core as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _impl = _fallback


def _f64(a, ndim):
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != ndim:
        raise ValueError(f"expected a {ndim}-D array, got shape {a.shape}")
    return a


def relu_loss_batch(X, y, Z, W, impl=None):
    """Squared loss of a batch of networks on one dataset."""
    impl = impl or _impl
    X, y, Z, W = _f64(X, 2), _f64(y, 1), _f64(Z, 2), _f64(W, 3)
    if W.shape[:2] != Z.shape or W.shape[2] != X.shape[1] or y.shape[0] != X.shape[0]:
        raise ValueError("inconsistent shapes for relu_loss_batch")
    return np.asarray(impl.relu_loss_batch(X, y, Z, W))


def count_trapped(x, lo, hi, impl=None):
    """Number of rows of ``x`` that miss every open interval ``(lo, hi)``."""
    impl = impl or _impl
    x, lo, hi = _f64(x, 2), _f64(lo, 1), _f64(hi, 1)
    if lo.shape != hi.shape:
        raise ValueError("interval bounds must have equal length")
    return int(impl.count_trapped(x, lo, hi))


backends = {"numpy": _fallback}
try:
    from . import _core
    backends["cython"] = _core
except ImportError:
    pass
