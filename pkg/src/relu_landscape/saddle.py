"""Differentiable saddle points.

A saddle keeps the gradient zero for an active subset ``S`` of neurons while
every neuron outside ``S`` has ``z_j = 0`` and a non-zero gradient; its hidden
weight must then lie on the hyperplane orthogonal to that gradient.
"""

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .cells import DEFAULT_STRICT_EPS, HalfspaceSystem, cell_constraints, interior_first
from .errors import InvalidInputError, NotASaddleError
from .linalg_core import DEFAULT_RANK_TOL, AffineSolutionSet, general_least_squares
from .minima import affine_cell_system, sign_vectors
from .model import NetworkParams, loss_zw

HYPERPLANE_TOL = 1e-9
DEFAULT_MAX_SUBSETS = 256


def _check_subset(S, K):
    S = tuple(int(j) for j in S)
    if len(set(S)) != len(S) or any(j < 0 or j >= K for j in S):
        raise InvalidInputError(f"subset {S} is not a set of neuron indices in [0, {K})")
    if len(S) >= K:
        raise InvalidInputError("the stationary subset must be a proper subset of the neurons")
    return S


def assemble_saddle_system(S, pattern, data):
    """Block system ``B R~ = b`` for the stationary neurons in ``S``.

    ``B[j, k] = sum_i I_ij I_ik x_i x_i^T`` and ``b[j] = sum_i I_ij y_i x_i``.
    """
    S = _check_subset(S, pattern.K)
    d = data.d
    I = pattern.I.astype(float)
    X = data.X
    n = len(S)
    B = np.zeros((n * d, n * d))
    b = np.zeros(n * d)
    for a, j in enumerate(S):
        b[a * d:(a + 1) * d] = (I[:, j] * data.y) @ X
        for c, k in enumerate(S):
            wts = I[:, j] * I[:, k]
            B[a * d:(a + 1) * d, c * d:(c + 1) * d] = (X.T * wts) @ X
    return B, b


@dataclass(frozen=True)
class SaddleCandidate:
    """Solution of the saddle system for one stationary subset.

    ``errors`` are the residuals ``e_i`` of the stationary neurons alone, and
    ``normals[j]`` is ``sum_i e_i I_ij x_i`` for every neuron outside ``S``.
    The residuals do not depend on which member of ``R_tilde_set`` is chosen.
    """

    subset: Tuple[int, ...]
    R_tilde_set: AffineSolutionSet
    errors: np.ndarray
    normals: Dict[int, np.ndarray]
    K: int
    d: int

    @property
    def inactive(self):
        return tuple(j for j in range(self.K) if j not in self.subset)

    def R(self, c=None):
        """Full combined weights (K, d) with zeros for the inactive neurons."""
        Rt = self.R_tilde_set.particular if c is None else self.R_tilde_set.member(c)
        R = np.zeros((self.K, self.d))
        for a, j in enumerate(self.subset):
            R[j] = Rt[a * self.d:(a + 1) * self.d]
        return R


def solve_saddle(S, pattern, data, rank_tol=DEFAULT_RANK_TOL, zero_tol=1e-10):
    """Solve the saddle system for ``S`` and compute the inactive hyperplanes.

    Raises :class:`NotASaddleError` when some neuron outside ``S`` has a
    vanishing normal (its gradient is already zero).
    """
    S = _check_subset(S, pattern.K)
    B, b = assemble_saddle_system(S, pattern, data)
    sol = general_least_squares(B, b, rank_tol) if S else AffineSolutionSet(
        np.zeros(0), np.zeros((0, 0)), 0)
    I = pattern.I.astype(float)
    d = data.d
    pred = np.zeros(data.N)
    for a, j in enumerate(S):
        pred += I[:, j] * (data.X @ sol.particular[a * d:(a + 1) * d])
    e = pred - data.y
    scale = max(1.0, data.N * float(np.abs(data.X).max()))
    normals, degenerate = {}, []
    for j in range(pattern.K):
        if j in S:
            continue
        v = (e * I[:, j]) @ data.X
        if np.linalg.norm(v) <= zero_tol * scale:
            degenerate.append(j)
        normals[j] = v
    if degenerate:
        raise NotASaddleError(
            f"neurons {degenerate} outside S={S} have zero gradient", degenerate)
    return SaddleCandidate(S, sol, e, normals, pattern.K, d)


@dataclass
class SaddleBranch:
    """Outcome of the genuineness search for one sign vector over ``S``."""

    signs: Tuple[int, ...]
    feasible: bool
    R: Optional[np.ndarray] = None
    inactive_w: Dict[int, np.ndarray] = field(default_factory=dict)
    margin: float = float("nan")

    def params(self):
        """Network parameters at the saddle (``z_j = 0`` outside ``S``)."""
        if not self.feasible:
            return None
        K, d = self.R.shape
        z = np.zeros(K)
        w = np.zeros((K, d))
        subset = [j for j in range(K) if j not in self.inactive_w]
        for s, j in zip(self.signs, subset):
            z[j] = s
            w[j] = self.R[j] / s
        for j, wj in self.inactive_w.items():
            w[j] = wj
        return NetworkParams(z, w)


def genuine_saddle_check(cand, pattern, data, signs=None, strict_eps=DEFAULT_STRICT_EPS,
                         hyperplane_tol=HYPERPLANE_TOL):
    """Search for a genuine saddle on the candidate's solution set.

    Stationary neurons must satisfy the branch conditions of a minimum; each
    inactive neuron needs a hidden weight inside its cell and on the hyperplane
    orthogonal to its normal.  Returns one :class:`SaddleBranch` per sign
    vector (all ``2**|S|`` of them when ``signs`` is None).
    """
    S = cand.subset
    d = data.d
    nS = len(S)
    inactive = cand.inactive
    dim = nS * d + len(inactive) * d
    candidates = [tuple(signs)] if signs is not None else sign_vectors(nS)
    out = []
    for sv in candidates:
        if len(sv) != nS:
            raise InvalidInputError("need one sign per stationary neuron")
        def build(interior, sv=sv):
            system = (affine_cell_system(cand.R_tilde_set, pattern, data, sv, neurons=S,
                                         dim=dim, interior=interior)
                      if nS else HalfspaceSystem(dim))
            for q, j in enumerate(inactive):
                off = nS * d + q * d
                for x, rel in cell_constraints(pattern.column(j), data.X,
                                               interior=interior):
                    normal = np.zeros(dim)
                    normal[off:off + d] = x
                    system.add(normal, rel, 0.0)
                v = cand.normals[j] / np.linalg.norm(cand.normals[j])
                normal = np.zeros(dim)
                normal[off:off + d] = v
                system.add(normal, ">=", -hyperplane_tol)
                system.add(normal, "<=", hyperplane_tol)
            return system

        res = interior_first(build, strict_eps)
        if not res.feasible:
            out.append(SaddleBranch(sv, False, margin=res.margin))
            continue
        c = res.witness[:nS * d]
        R = cand.R(c) if nS else np.zeros((cand.K, d))
        ws = {}
        for q, j in enumerate(inactive):
            wj = res.witness[nS * d + q * d: nS * d + (q + 1) * d].copy()
            v = cand.normals[j]
            wj -= (v @ wj) / (v @ v) * v
            ws[j] = wj
        out.append(SaddleBranch(sv, True, R, ws, res.margin))
    return out


def perturbation_delta(cand, k, dz, dw, w_k, pattern, data):
    """Second-order loss change when ``z_k: 0 -> dz`` and ``w_k -> w_k + dw``.

    ``(1/N) [2 sum_i e_i I_ik dz dw.x_i + sum_i I_ik dz^2 (w_k.x_i)^2]``
    """
    if k in cand.subset:
        raise InvalidInputError("perturbed neuron must be outside the stationary subset")
    I = pattern.I[:, k].astype(float)
    X = data.X
    lin = 2.0 * dz * np.sum(cand.errors * I * (X @ dw))
    quad = dz ** 2 * np.sum(I * (X @ w_k) ** 2)
    return float((lin + quad) / data.N)


def perturbed(params, k, dz, dw):
    z = params.z.copy()
    w = params.w.copy()
    z[k] += dz
    w[k] = w[k] + dw
    return NetworkParams(z, w)


def exact_delta(params, k, dz, dw, data):
    """Loss difference evaluated directly on the network."""
    return loss_zw(perturbed(params, k, dz, dw), data) - loss_zw(params, data)


@dataclass(frozen=True)
class SaddleCertificate:
    neuron: int
    dz: float
    dw_descent: np.ndarray
    dw_ascent: np.ndarray
    delta_descent: float
    delta_ascent: float
    exact_descent: Optional[float] = None
    exact_ascent: Optional[float] = None


def saddle_certificate(cand, branch, k, pattern, data, radius=1e-3):
    """Perturbations of neuron ``k`` that lower and raise the loss.

    ``dw`` runs along the hyperplane normal and ``dz > 0`` is small enough for
    the mixed term to dominate the quadratic one.
    """
    w_k = branch.inactive_w[k]
    v = cand.normals[k]
    vn = float(np.linalg.norm(v))
    X = data.X
    slack = np.abs(X @ w_k) / np.linalg.norm(X, axis=1)
    rho = radius / np.sqrt(2.0)
    if np.any(slack > 0):
        # no sample may change side under the perturbation
        rho = min(rho, 0.5 * float(slack[slack > 0].min()))
    Q = float(np.sum(pattern.column(k) * (X @ w_k) ** 2))
    dz = rho / np.sqrt(2.0) if Q == 0 else min(rho, 0.5 * rho * vn / Q)
    dw = rho * v / vn
    down = perturbation_delta(cand, k, dz, -dw, w_k, pattern, data)
    up = perturbation_delta(cand, k, dz, dw, w_k, pattern, data)
    params = branch.params()
    return SaddleCertificate(
        k, dz, -dw, dw, down, up,
        exact_delta(params, k, dz, -dw, data), exact_delta(params, k, dz, dw, data),
    )


def proper_subsets(K):
    """Proper subsets of ``range(K)``, smallest first, then lexicographic."""
    for r in range(K):
        yield from itertools.combinations(range(K), r)


@dataclass
class SubsetResult:
    subset: Tuple[int, ...]
    status: str
    candidate: Optional[SaddleCandidate] = None
    branches: List[SaddleBranch] = field(default_factory=list)
    certificates: Dict[Tuple[int, ...], List[SaddleCertificate]] = field(default_factory=dict)
    note: str = ""

    @property
    def genuine(self):
        return any(b.feasible for b in self.branches)


def analyze_subset(S, pattern, data, rank_tol=DEFAULT_RANK_TOL,
                   strict_eps=DEFAULT_STRICT_EPS):
    try:
        cand = solve_saddle(S, pattern, data, rank_tol)
    except NotASaddleError as exc:
        return SubsetResult(tuple(S), "not-a-saddle", note=str(exc))
    branches = genuine_saddle_check(cand, pattern, data, strict_eps=strict_eps)
    res = SubsetResult(cand.subset, "candidate", cand, branches)
    if not cand.subset:
        res.note = "empty stationary subset (e_i = -y_i)"
    for br in branches:
        if br.feasible:
            res.certificates[br.signs] = [
                saddle_certificate(cand, br, k, pattern, data) for k in cand.inactive]
    return res


def saddle_sweep(pattern, data, max_subsets=None, rank_tol=DEFAULT_RANK_TOL,
                 strict_eps=DEFAULT_STRICT_EPS, executor=None):
    """Analyze every proper subset (or the first ``max_subsets`` of them)."""
    total = 2 ** pattern.K - 1
    if max_subsets is None and total > DEFAULT_MAX_SUBSETS:
        raise InvalidInputError(
            f"K={pattern.K} gives {total} subsets; pass max_subsets to cap the sweep")
    subsets = list(itertools.islice(proper_subsets(pattern.K), max_subsets))
    work = lambda S: analyze_subset(S, pattern, data, rank_tol, strict_eps)
    if executor is None:
        return [work(S) for S in subsets]
    return list(executor.map(work, subsets))
