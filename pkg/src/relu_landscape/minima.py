"""Differentiable local minima inside a single activation cell.

For a fixed pattern the loss is a convex quadratic in the combined weights, so
its minimizers are the least-squares solutions of ``A R = y``.  A minimizer is
*genuine* when the hidden weights recovered from it actually produce the
pattern that defined the cell.
"""

import itertools
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .cells import (DEFAULT_STRICT_EPS, NONSTRICT_ATOL, FeasibilityResult,
                    HalfspaceSystem, assemble_A, cell_constraints,
                    halfspace_feasible, interior_first, membership)
from .errors import InvalidInputError
from .linalg_core import (DEFAULT_RANK_TOL, AffineSolutionSet,
                          general_least_squares, matrix_rank)
from .model import NetworkParams

UNIQUE = "unique"
CONTINUOUS = "continuous-subspace"
FULL_SPACE = "full-space"


@dataclass(frozen=True)
class MinimaSolution:
    solution_set: AffineSolutionSet
    loss_at_min: float
    kind: str
    per_neuron_freedom: Tuple[int, ...]
    K: int
    d: int

    def R(self, c=None):
        """A member of the solution set reshaped to (K, d); ``c=None`` gives A^+ y."""
        v = self.solution_set.particular if c is None else self.solution_set.member(c)
        return v.reshape(self.K, self.d)


def classify_kind(dim, total):
    if dim == 0:
        return UNIQUE
    if dim == total:
        return FULL_SPACE
    return CONTINUOUS


def solve_cell_minima(pattern, data, rank_tol=DEFAULT_RANK_TOL):
    """Least-squares minimizers of the loss restricted to ``pattern``'s cell."""
    A = assemble_A(pattern, data)
    sol = general_least_squares(A, data.y, rank_tol)
    resid = A @ sol.particular - data.y
    loss = float(resid @ resid) / data.N
    K, d = pattern.K, data.d
    freedom = tuple(
        matrix_rank(sol.projector[j * d:(j + 1) * d], rank_tol) if sol.dim else 0
        for j in range(K)
    )
    return MinimaSolution(sol, loss, classify_kind(sol.dim, K * d), freedom, K, d)


def sign_vectors(K):
    """All ``2**K`` sign vectors, positive branches first."""
    return [tuple(s) for s in itertools.product((1, -1), repeat=K)]


@dataclass
class GenuinenessReport:
    """Per-neuron verdicts of the positive and negative branch.

    ``positive[j]`` is the check of ``R_j`` against its cell (``z_j > 0``) and
    ``negative[j]`` the check of ``-R_j`` (``z_j < 0``).
    """

    positive: Tuple[bool, ...]
    negative: Tuple[bool, ...]
    witnesses: Dict[Tuple[int, ...], np.ndarray] = field(default_factory=dict)

    def branch(self, j, sign):
        return self.positive[j] if sign > 0 else self.negative[j]

    def overall(self, signs):
        return all(self.branch(j, s) for j, s in enumerate(signs))

    def genuine_sign_vectors(self):
        return [s for s in sign_vectors(len(self.positive)) if self.overall(s)]

    @property
    def any_genuine(self):
        return all(p or n for p, n in zip(self.positive, self.negative))


def genuineness_unique(R_star, pattern, data, tol=NONSTRICT_ATOL):
    """Check both sign branches of every neuron for a single minimizer."""
    R = np.asarray(R_star, dtype=float).reshape(pattern.K, data.d)
    pos = tuple(membership(R[j], pattern.column(j), data, tol) for j in range(pattern.K))
    neg = tuple(membership(-R[j], pattern.column(j), data, tol) for j in range(pattern.K))
    return GenuinenessReport(pos, neg)


def affine_cell_system(solution_set, pattern, data, signs, neurons=None, exclude=None,
                       dim=None, offset=0, interior=False):
    """Half-spaces in ``c`` keeping ``s_j * R_j(c)`` inside each neuron's cell.

    ``R(c) = particular + projector @ c``.  ``exclude`` maps a neuron to sample
    indices skipped for it.  The variable ``c`` may be embedded in a larger
    vector of length ``dim`` starting at ``offset``.
    """
    d = data.d
    total = solution_set.size
    dim = total if dim is None else dim
    exclude = exclude or {}
    neurons = range(pattern.K) if neurons is None else neurons
    system = HalfspaceSystem(dim)
    P = solution_set.projector
    p = solution_set.particular
    for pos, j in enumerate(neurons):
        s = signs[pos]
        block = slice(pos * d, (pos + 1) * d)
        for x, rel in cell_constraints(pattern.column(j), data.X, s,
                                       exclude=exclude.get(j, ()), interior=interior):
            normal = np.zeros(dim)
            normal[offset:offset + total] = P[:, block] @ x
            system.add(normal, rel, -float(x @ p[block]))
    return system


def genuineness_continuous(sol, pattern, data, signs, strict_eps=DEFAULT_STRICT_EPS):
    """Search the solution set for a member whose sign branches are genuine.

    Returns a :class:`FeasibilityResult` whose witness is the free vector ``c``.
    """
    if len(signs) != pattern.K:
        raise InvalidInputError("need one sign per neuron")
    return interior_first(
        lambda interior: affine_cell_system(sol.solution_set, pattern, data, signs,
                                            interior=interior),
        strict_eps)


def recover_params(R_star, signs, scale=1.0):
    """Split combined weights into ``z_j = s_j * scale`` and ``w_j = R_j / z_j``."""
    if scale <= 0:
        raise InvalidInputError("scale must be positive")
    R = np.atleast_2d(np.asarray(R_star, dtype=float))
    z = np.asarray(signs, dtype=float) * scale
    return NetworkParams(z, R / z[:, None])


@dataclass
class CellAnalysis:
    solution: MinimaSolution
    report: Optional[GenuinenessReport]
    branch_results: Dict[Tuple[int, ...], FeasibilityResult]

    @property
    def genuine_sign_vectors(self):
        if self.report is not None:
            return self.report.genuine_sign_vectors()
        return [s for s, r in self.branch_results.items() if r.feasible]

    @property
    def genuine(self):
        return bool(self.genuine_sign_vectors)

    def witness_R(self, signs):
        """A genuine member of the solution set for the given sign vector."""
        if self.report is not None:
            return self.solution.R() if self.report.overall(signs) else None
        res = self.branch_results.get(tuple(signs))
        if res is None or not res.feasible:
            return None
        return self.solution.R(res.witness)


def analyze_cell(pattern, data, rank_tol=DEFAULT_RANK_TOL, strict_eps=DEFAULT_STRICT_EPS):
    """Solve a cell and certify genuineness for every sign vector."""
    sol = solve_cell_minima(pattern, data, rank_tol)
    if sol.kind == UNIQUE:
        return CellAnalysis(sol, genuineness_unique(sol.R(), pattern, data), {})
    results = {s: genuineness_continuous(sol, pattern, data, s, strict_eps)
               for s in sign_vectors(pattern.K)}
    return CellAnalysis(sol, None, results)
