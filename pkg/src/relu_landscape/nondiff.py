"""Local minima with one hidden weight pinned on a sample hyperplane.

Neuron ``m`` sits on the hyperplane ``w_m . x_n = 0``.  Sample ``n`` is
inactive on the negative side (cell 1) and active on the positive side
(cell 2).  Both one-sided gradients of the loss in ``w_m`` must point
across the hyperplane in opposite directions for the point to be a minimum.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .cells import DEFAULT_STRICT_EPS, ActivationPattern, FeasibilityResult, interior_first
from .errors import InvalidInputError
from .linalg_core import (DEFAULT_RANK_TOL, DEFAULT_SOLVE_TOL, AffineSolutionSet,
                          general_least_squares, solvability_residual)
from .minima import affine_cell_system, classify_kind, sign_vectors
from .model import NetworkParams, lifted_samples, predict

PARALLEL_COS_TOL = 1e-8
ZERO_GRAD_TOL = 1e-10


@dataclass(frozen=True)
class BoundaryConfig:
    """Neuron ``m`` on the hyperplane of sample ``n`` within a base pattern.

    The pattern entry ``(n, m)`` is normalized to 0: the boundary point is
    owned by the inactive side.
    """

    m: int
    n: int
    pattern: ActivationPattern

    def __post_init__(self):
        if not 0 <= self.m < self.pattern.K:
            raise InvalidInputError(f"neuron index m={self.m} outside [0, {self.pattern.K})")
        if not 0 <= self.n < self.pattern.N:
            raise InvalidInputError(f"sample index n={self.n} outside [0, {self.pattern.N})")
        if self.pattern.I[self.n, self.m] != 0:
            object.__setattr__(self, "pattern", self.pattern.with_entry(self.n, self.m, 0))


def _check(cfg, data):
    if cfg.pattern.N != data.N:
        raise InvalidInputError("pattern rows must match the number of samples")
    xn = data.X[cfg.n]
    if not np.any(xn):
        raise InvalidInputError(f"sample {cfg.n} is the zero vector")
    return xn


def assemble_D_system(cfg, data):
    """Stack stationarity of every neuron but ``m``, the parallel-gradient
    condition of ``m`` and the pin ``x_n . R_m = 0``.

    Returns ``D`` of shape ((K+1)d, Kd) and the right-hand side.  The pin
    occupies the first row of the last block; the remaining rows are zero.
    """
    xn = _check(cfg, data)
    K, d = cfg.pattern.K, data.d
    I = cfg.pattern.I.astype(float)
    X, y = data.X, data.y
    m, n = cfg.m, cfg.n
    D = np.zeros(((K + 1) * d, K * d))
    rhs = np.zeros((K + 1) * d)
    keep = np.ones(data.N, dtype=bool)
    keep[n] = False
    # (x_i . x_n) x_n - |x_n|^2 x_i, one row per sample
    T = np.outer(X @ xn, xn) - (xn @ xn) * X
    for j in range(K):
        rows = slice(j * d, (j + 1) * d)
        if j != m:
            rhs[rows] = (I[:, j] * y) @ X
            for k in range(K):
                D[rows, k * d:(k + 1) * d] = (X.T * (I[:, j] * I[:, k])) @ X
        else:
            wts = I[:, m] * keep
            rhs[rows] = (wts * y) @ T
            for k in range(K):
                D[rows, k * d:(k + 1) * d] = (T.T * (wts * I[:, k])) @ X
    D[K * d, m * d:(m + 1) * d] = xn
    return D, rhs


def boundary_forms(cfg, data):
    """Linear forms of the two one-sided slopes along ``x_n``.

    Returns ``(a1, b1, a2, b2)`` with ``q1(R) = a1 . R - b1`` the cell-1 slope
    ``sum_{i != n} e_i I_im x_i . x_n`` and ``q2 = q1 + e_n |x_n|^2``.
    """
    xn = _check(cfg, data)
    I = cfg.pattern.I.astype(float)
    A = lifted_samples(cfg.pattern, data)
    wts = I[:, cfg.m] * (data.X @ xn)
    wts[cfg.n] = 0.0
    a1 = wts @ A
    b1 = float(wts @ data.y)
    nn = float(xn @ xn)
    return a1, b1, a1 + nn * A[cfg.n], b1 + nn * data.y[cfg.n]


def inequality_values(R, cfg, data, z_m):
    """``(z_m q1, z_m q2)``; a boundary minimum needs the first < 0 and the
    second > 0."""
    a1, b1, a2, b2 = boundary_forms(cfg, data)
    R = np.asarray(R, dtype=float).ravel()
    return float(z_m * (a1 @ R - b1)), float(z_m * (a2 @ R - b2))


@dataclass
class NonDiffSolution:
    cfg: BoundaryConfig
    solvable: bool
    residual: float
    solution_set: Optional[AffineSolutionSet] = None
    kind: str = ""
    sign_results: Dict[Tuple[int, ...], FeasibilityResult] = field(default_factory=dict)
    K: int = 0
    d: int = 0

    @property
    def branch_verdicts(self):
        """Whether some sign vector passes, for ``z_m > 0`` and ``z_m < 0``."""
        m = self.cfg.m
        out = {1: False, -1: False}
        for s, res in self.sign_results.items():
            if res.feasible:
                out[s[m]] = True
        return out

    @property
    def accepted(self):
        return any(self.branch_verdicts.values())

    def accepted_signs(self):
        return [s for s, r in self.sign_results.items() if r.feasible]

    def R(self, signs):
        res = self.sign_results.get(tuple(signs))
        if res is None or not res.feasible:
            return None
        return self.solution_set.member(res.witness).reshape(self.K, self.d)

    def params(self, signs, data, scale=1.0):
        """Network parameters for an accepted sign vector, ``w_m`` exactly pinned."""
        R = self.R(signs)
        if R is None:
            return None
        xn = data.X[self.cfg.n]
        m = self.cfg.m
        R = R.copy()
        R[m] -= (R[m] @ xn) / (xn @ xn) * xn
        z = np.asarray(signs, dtype=float) * scale
        return NetworkParams(z, R / z[:, None])


def boundary_system(sol_set, cfg, data, signs, interior=False):
    """Half-spaces in ``c``: cell membership of every neuron (neuron ``m``
    ignoring sample ``n``) and the two strict slope conditions."""
    system = affine_cell_system(sol_set, cfg.pattern, data, signs,
                                exclude={cfg.m: (cfg.n,)}, interior=interior)
    a1, b1, a2, b2 = boundary_forms(cfg, data)
    s = signs[cfg.m]
    P, p = sol_set.projector, sol_set.particular
    # s (a . (p + P c) - b) <, > 0
    system.add(s * (P @ a1), "<", -s * (a1 @ p - b1))
    system.add(s * (P @ a2), ">", -s * (a2 @ p - b2))
    return system


def solve_nondiff(cfg, data, strict_eps=DEFAULT_STRICT_EPS, rank_tol=DEFAULT_RANK_TOL,
                  solve_tol=DEFAULT_SOLVE_TOL):
    """Solve the boundary system and test every sign vector.

    A sign vector is accepted when some member of the solution set satisfies
    both slope inequalities and keeps every neuron inside its cell.
    """
    D, rhs = assemble_D_system(cfg, data)
    K, d = cfg.pattern.K, data.d
    resid = solvability_residual(D, rhs, rank_tol)
    if resid > solve_tol * (1.0 + float(np.linalg.norm(rhs))):
        return NonDiffSolution(cfg, False, resid, K=K, d=d)
    sol = general_least_squares(D, rhs, rank_tol)
    out = NonDiffSolution(cfg, True, resid, sol, classify_kind(sol.dim, K * d), K=K, d=d)
    for signs in sign_vectors(K):
        out.sign_results[signs] = interior_first(
            lambda interior, s=signs: boundary_system(sol, cfg, data, s, interior), strict_eps)
    return out


@dataclass(frozen=True)
class LimitGradients:
    """One-sided limits of ``dL/dw_m`` and the verdict on their directions."""

    cell1: np.ndarray
    cell2: np.ndarray
    passed: bool
    degenerate: bool
    cos1: float
    cos2: float


def one_sided_gradients(params, m, n, data):
    """Limits of ``dL/dw_m`` from the inactive (1) and active (2) side of ``x_n``."""
    X = data.X
    e = predict(params, data) - data.y
    act = (X @ params.w[m] > 0).astype(float)
    act[n] = 0.0
    g1 = (2.0 / data.N) * params.z[m] * ((e * act) @ X)
    g2 = g1 + (2.0 / data.N) * params.z[m] * e[n] * X[n]
    return g1, g2


def lemma2_check(cfg, params, data, tol=1e-9, cos_tol=PARALLEL_COS_TOL, zero_tol=ZERO_GRAD_TOL):
    """Check that the cell-1 limit points along ``-x_n`` and the cell-2 limit
    along ``+x_n``.

    Both limits must be non-zero.  When either vanishes the point is reported
    as degenerate: it is then a stationary point of an adjacent cell, which
    the one-sided test does not decide.
    """
    xn = _check(cfg, data)
    wm = params.w[cfg.m]
    if abs(wm @ xn) > tol * max(1.0, float(np.linalg.norm(wm) * np.linalg.norm(xn))):
        raise InvalidInputError("w_m is not on the hyperplane of x_n")
    g1, g2 = one_sided_gradients(params, cfg.m, cfg.n, data)
    e = predict(params, data) - data.y
    scale = max(1.0, abs(float(params.z[cfg.m])) * float(np.abs(e).max())
                * float(np.linalg.norm(data.X, axis=1).max()))
    u = xn / np.linalg.norm(xn)
    n1, n2 = float(np.linalg.norm(g1)), float(np.linalg.norm(g2))
    z1, z2 = n1 <= zero_tol * scale, n2 <= zero_tol * scale
    cos1 = float(-(g1 @ u) / n1) if not z1 else 0.0
    cos2 = float((g2 @ u) / n2) if not z2 else 0.0
    passed = (not z1 and not z2 and cos1 >= 1 - cos_tol and cos2 >= 1 - cos_tol)
    return LimitGradients(g1, g2, passed, z1 or z2, cos1, cos2)


@dataclass
class BoundaryResult:
    m: int
    n: int
    status: str
    solution: Optional[NonDiffSolution] = None
    note: str = ""


def boundary_pairs(pattern, data):
    """All ``(m, n)`` pairs with a note for the ones that cannot host a minimum."""
    out = []
    for m in range(pattern.K):
        for n in range(pattern.N):
            col = pattern.column(m).copy()
            col[n] = 0
            if not np.any(data.X[n]):
                out.append((m, n, "zero sample"))
            elif not np.any(col):
                out.append((m, n, "neuron inactive on every other sample"))
            else:
                out.append((m, n, ""))
    return out


def nondiff_sweep(pattern, data, strict_eps=DEFAULT_STRICT_EPS, rank_tol=DEFAULT_RANK_TOL,
                  executor=None):
    pairs = boundary_pairs(pattern, data)

    def work(item):
        m, n, note = item
        if note:
            return BoundaryResult(m, n, "skipped", note=note)
        sol = solve_nondiff(BoundaryConfig(m, n, pattern), data, strict_eps, rank_tol)
        if not sol.solvable:
            return BoundaryResult(m, n, "unsolvable", sol)
        return BoundaryResult(m, n, "accepted" if sol.accepted else "rejected", sol)

    if executor is None:
        return [work(p) for p in pairs]
    return list(executor.map(work, pairs))
