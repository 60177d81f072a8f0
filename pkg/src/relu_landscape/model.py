"""One-hidden-layer ReLU network, dataset, and the squared loss.

The loss is evaluated in two parameterizations: the network weights ``(z, w)``
and the combined weights ``R_j = z_j * w_j`` for a fixed activation pattern.
Every loss carries the ``1/N`` averaging factor.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import InvalidInputError, ParseError


@dataclass(frozen=True)
class Dataset:
    """Labeled samples ``x_i`` (rows of ``X``) with labels in ``{+1, -1}``.

    When ``homogeneous`` is true the final coordinate of every sample must be
    exactly 1 (the appended bias input).  Use :meth:`from_features` to append
    it automatically.
    """

    X: np.ndarray
    y: np.ndarray
    homogeneous: bool = True

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1:
            raise InvalidInputError("samples must form a non-empty 2-D array")
        if X.shape[1] < 2:
            raise InvalidInputError("sample dimension d must be at least 2")
        if y.shape != (X.shape[0],):
            raise InvalidInputError("need exactly one label per sample")
        if not np.all(np.isfinite(X)):
            raise InvalidInputError("samples contain non-finite values")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise InvalidInputError("labels must be +1 or -1")
        if self.homogeneous and not np.all(X[:, -1] == 1.0):
            raise InvalidInputError("homogeneous samples must end with a 1")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def N(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    @classmethod
    def from_features(cls, features, labels, augment=True):
        F = np.atleast_2d(np.asarray(features, dtype=float))
        if augment:
            F = np.hstack([F, np.ones((F.shape[0], 1))])
        return cls(F, labels, homogeneous=augment)

    @classmethod
    def from_csv(cls, path, augment=True):
        """Read ``f1,...,f{d-1},label`` rows; the bias column is appended."""
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ParseError(str(exc), path) from exc
        rows = list(csv.reader(text.splitlines()))
        if not rows:
            raise ParseError("empty file", path, 1)
        header = [h.strip() for h in rows[0]]
        if len(header) < 2 or header[-1] != "label":
            raise ParseError("header must be f1,...,label", path, 1)
        feats, labels = [], []
        for lineno, row in enumerate(rows[1:], start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, got {len(row)}", path, lineno
                )
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise ParseError(f"non-numeric field ({exc})", path, lineno) from exc
            if vals[-1] not in (1.0, -1.0):
                raise ParseError("label must be +1 or -1", path, lineno)
            if not all(np.isfinite(vals)):
                raise ParseError("non-finite value", path, lineno)
            feats.append(vals[:-1])
            labels.append(vals[-1])
        if not feats:
            raise ParseError("dataset has no samples", path, len(rows))
        return cls.from_features(feats, labels, augment=augment)

    def to_csv(self, path):
        """Write features (without the bias column if homogeneous) and labels."""
        F = self.X[:, :-1] if self.homogeneous else self.X
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"f{k + 1}" for k in range(F.shape[1])] + ["label"])
            for row, label in zip(F, self.y):
                w.writerow([repr(float(v)) for v in row] + [int(label)])


@dataclass(frozen=True)
class NetworkParams:
    """Output weights ``z`` (K,) and hidden weights ``w`` (K, d)."""

    z: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        z = np.atleast_1d(np.array(self.z, dtype=float))
        w = np.atleast_2d(np.array(self.w, dtype=float))
        if z.ndim != 1 or w.shape[0] != z.shape[0] or z.shape[0] < 1:
            raise InvalidInputError("z must have one entry per hidden weight vector")
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(w))):
            raise InvalidInputError("network parameters must be finite")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "w", w)

    @property
    def K(self):
        return self.z.shape[0]

    def combined(self):
        """Combined weights ``R`` of shape (K, d)."""
        return self.z[:, None] * self.w


@dataclass(frozen=True)
class LossKind:
    """Per-sample loss ``l(pred, y)`` with first and second derivatives in pred."""

    name: str
    value: Callable
    d1: Callable
    d2: Callable
    squared: bool = field(default=False)


SQUARED = LossKind(
    "squared",
    value=lambda p, y: (p - y) ** 2,
    d1=lambda p, y: 2.0 * (p - y),
    d2=lambda p, y: np.full(np.broadcast(p, y).shape, 2.0),
    squared=True,
)


def _logistic_d1(p, y):
    return -y / (1.0 + np.exp(y * p))


def _logistic_d2(p, y):
    s = 1.0 / (1.0 + np.exp(-y * p))
    return s * (1.0 - s)


LOGISTIC = LossKind(
    "logistic",
    value=lambda p, y: np.logaddexp(0.0, -y * p),
    d1=_logistic_d1,
    d2=_logistic_d2,
)


def pattern_array(pattern, N=None, K=None):
    """Return the ``(N, K)`` 0/1 array of an ActivationPattern or array-like."""
    I = np.asarray(getattr(pattern, "I", pattern))
    if I.ndim != 2:
        raise InvalidInputError("activation pattern must be an N x K array")
    if (N is not None and I.shape[0] != N) or (K is not None and I.shape[1] != K):
        raise InvalidInputError(
            f"pattern shape {I.shape} does not match (N={N}, K={K})"
        )
    return I.astype(float)


def _combined(R, K=None, d=None):
    R = np.asarray(getattr(R, "R", R), dtype=float)
    if R.ndim == 1 and d is not None and R.size % d == 0:
        R = R.reshape(-1, d)
    if R.ndim != 2 or (d is not None and R.shape[1] != d):
        raise InvalidInputError(f"combined weights of shape {R.shape} do not match d={d}")
    if K is not None and R.shape[0] != K:
        raise InvalidInputError(f"expected {K} combined weight vectors, got {R.shape[0]}")
    return R


def predict(params, data):
    """Network output for every sample."""
    if params.w.shape[1] != data.d:
        raise InvalidInputError("weight dimension does not match data dimension")
    return np.maximum(data.X @ params.w.T, 0.0) @ params.z


def loss_zw(params, data, loss=SQUARED):
    """Loss of the network ``(z, w)`` averaged over the dataset."""
    return float(np.mean(loss.value(predict(params, data), data.y)))


def predict_R(R, pattern, data):
    I = pattern_array(pattern, N=data.N)
    R = _combined(R, K=I.shape[1], d=data.d)
    return np.sum(I * (data.X @ R.T), axis=1)


def loss_R(R, pattern, data, loss=SQUARED):
    """Loss as a function of combined weights for a fixed activation pattern."""
    return float(np.mean(loss.value(predict_R(R, pattern, data), data.y)))


def grad_R(R, pattern, data):
    """Gradient of the squared ``loss_R``; returns shape (K, d)."""
    I = pattern_array(pattern, N=data.N)
    e = predict_R(R, pattern, data) - data.y
    return (2.0 / data.N) * (I * e[:, None]).T @ data.X


def lifted_samples(pattern, data):
    """Rows ``I_i1 x_i, ..., I_iK x_i`` stacked, shape (N, K*d)."""
    I = pattern_array(pattern, N=data.N)
    return (I[:, :, None] * data.X[:, None, :]).reshape(data.N, -1)


def hessian_R(pattern, data, R=None, loss=SQUARED):
    """Hessian of ``loss_R`` in the stacked ordering ``(R_1, ..., R_K)``.

    For the squared loss the Hessian is constant and ``R`` is ignored; other
    losses need ``R`` to evaluate ``l''``.
    """
    Xt = lifted_samples(pattern, data)
    if loss.squared:
        curv = np.full(data.N, 2.0)
    else:
        if R is None:
            raise InvalidInputError("non-quadratic losses need R for the Hessian")
        curv = np.asarray(loss.d2(predict_R(R, pattern, data), data.y), dtype=float)
    if np.any(curv < 0):
        raise InvalidInputError(f"loss '{loss.name}' reported a negative second derivative")
    H = (Xt.T * curv) @ Xt / data.N
    return 0.5 * (H + H.T)


def min_quadratic_form(H, n_probes=1000, rng=None):
    """Smallest ``u^T H u / ||u||^2`` over random Gaussian probes."""
    rng = np.random.default_rng(rng)
    U = rng.standard_normal((n_probes, H.shape[0]))
    q = np.einsum("ij,jk,ik->i", U, H, U) / np.einsum("ij,ij->i", U, U)
    return float(q.min())


def is_convex(pattern, data, R=None, loss=SQUARED, n_probes=1000, tol=1e-12, rng=None):
    """Random quadratic-form probe of the loss Hessian for a fixed pattern."""
    H = hessian_R(pattern, data, R=R, loss=loss)
    return min_quadratic_form(H, n_probes, rng) >= -tol


def parallel_network(direction, normals, offsets):
    """Network whose hidden weights all share ``direction`` (feature space).

    Weight ``k`` is active where ``normals[k] * (direction . x - offsets[k]) > 0``
    and its output weight is ``normals[k]``.
    """
    direction = np.asarray(direction, dtype=float)
    normals = np.asarray(normals, dtype=float)
    offsets = np.asarray(offsets, dtype=float)
    w = np.hstack([normals[:, None] * direction[None, :], (-normals * offsets)[:, None]])
    return NetworkParams(normals.copy(), w)
