"""Activation regions of the weight space and half-space feasibility."""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np
from scipy.optimize import linprog

from .errors import InvalidInputError, ParseError
from .model import lifted_samples

DEFAULT_STRICT_EPS = 1e-7
NONSTRICT_ATOL = 1e-10


@dataclass(frozen=True)
class ActivationPattern:
    """Binary ``(N, K)`` matrix; ``I[i, j] == 1`` iff sample i activates neuron j."""

    I: np.ndarray

    def __post_init__(self):
        I = np.array(self.I)
        if I.ndim != 2 or I.size == 0:
            raise InvalidInputError("activation pattern must be a non-empty N x K array")
        if not np.all(np.isin(I, (0, 1))):
            raise InvalidInputError("activation pattern entries must be 0 or 1")
        I = I.astype(np.int8)
        I.setflags(write=False)
        object.__setattr__(self, "I", I)

    @property
    def N(self):
        return self.I.shape[0]

    @property
    def K(self):
        return self.I.shape[1]

    def column(self, j):
        return self.I[:, j]

    def with_entry(self, i, j, value):
        I = self.I.copy()
        I[i, j] = value
        return ActivationPattern(I)

    def to_json(self):
        return {"I": self.I.tolist()}

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict) or "I" not in obj:
            raise InvalidInputError('pattern JSON must be an object with key "I"')
        return cls(np.asarray(obj["I"]))

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            obj = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(str(exc), path) from exc
        try:
            return cls.from_json(obj)
        except InvalidInputError as exc:
            raise ParseError(str(exc), path) from exc


def pattern_from_weights(w, data):
    """Pattern of hidden weights ``w`` (K, d); zero dot products map to 0."""
    w = np.atleast_2d(np.asarray(w, dtype=float))
    if w.shape[1] != data.d:
        raise InvalidInputError("weight dimension does not match data dimension")
    return ActivationPattern((data.X @ w.T > 0).astype(np.int8))


def assemble_A(pattern, data):
    """Design matrix whose row i, block j is ``I_ij x_i^T``; shape (N, K*d)."""
    if pattern.N != data.N:
        raise InvalidInputError("pattern rows must match the number of samples")
    return lifted_samples(pattern, data)


def membership(w_j, column, data, tol=0.0):
    """Whether ``w_j`` lies in the cell described by one pattern column.

    Requires ``w_j . x_i > 0`` where the column is 1 and ``w_j . x_i <= tol``
    where it is 0.
    """
    column = np.asarray(column)
    s = data.X @ np.asarray(w_j, dtype=float)
    on = column == 1
    return bool(np.all(s[on] > 0) and np.all(s[~on] <= tol))


_RELATIONS = (">", ">=", "<", "<=")


@dataclass(frozen=True)
class Constraint:
    """``normal . c  <relation>  offset``."""

    normal: np.ndarray
    relation: str
    offset: float = 0.0

    def __post_init__(self):
        if self.relation not in _RELATIONS:
            raise InvalidInputError(f"unknown relation {self.relation!r}")
        a = np.asarray(self.normal, dtype=float).ravel()
        if not np.all(np.isfinite(a)) or not np.isfinite(self.offset):
            raise InvalidInputError("constraint coefficients must be finite")
        object.__setattr__(self, "normal", a)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def strict(self):
        return self.relation in (">", "<")

    def as_geq(self):
        """Equivalent ``(a, b, strict)`` with relation ``a . c >= b`` (or ``>``)."""
        if self.relation in (">", ">="):
            return self.normal, self.offset, self.strict
        return -self.normal, -self.offset, self.strict


@dataclass
class HalfspaceSystem:
    dimension: int
    constraints: List[Constraint] = field(default_factory=list)

    def add(self, normal, relation, offset=0.0):
        c = Constraint(normal, relation, offset)
        if c.normal.shape[0] != self.dimension:
            raise InvalidInputError(
                f"constraint of length {c.normal.shape[0]} in a {self.dimension}-D system"
            )
        self.constraints.append(c)
        return self

    def extend(self, other):
        for c in other.constraints:
            self.add(c.normal, c.relation, c.offset)
        return self

    def __len__(self):
        return len(self.constraints)


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    witness: Optional[np.ndarray] = None
    margin: float = float("nan")
    reason: str = ""

    def __bool__(self):
        return self.feasible


def halfspace_feasible(system, strict_eps=DEFAULT_STRICT_EPS, atol=NONSTRICT_ATOL,
                       zero_tol=1e-12):
    """Decide whether a system of strict and non-strict half-spaces is non-empty.

    Normals are scaled to unit length.  Strict constraints become
    ``a . c - t >= b`` and the minimum slack ``t`` is maximized (capped at 1)
    subject to the non-strict ones; the system counts as feasible when the
    optimal ``t`` reaches ``strict_eps``.  Constraints with a vanishing normal
    are decided directly from their offsets.
    """
    if strict_eps <= 0:
        raise InvalidInputError("strict_eps must be positive")
    n = system.dimension
    rows, rhs, strict = [], [], []
    for con in system.constraints:
        a, b, is_strict = con.as_geq()
        norm = float(np.linalg.norm(a))
        if norm <= zero_tol * (1.0 + abs(b)):
            ok = (-b >= strict_eps) if is_strict else (b <= atol)
            if not ok:
                return FeasibilityResult(False, reason="degenerate constraint violated")
            continue
        rows.append(a / norm)
        rhs.append(b / norm)
        strict.append(is_strict)

    if not rows:
        return FeasibilityResult(True, np.zeros(n), float("inf"))

    G = np.array(rows)
    h = np.array(rhs)
    strict = np.array(strict)
    any_strict = bool(strict.any())

    # Variables (c, t); linprog wants A_ub x <= b_ub.
    A_ub = np.hstack([-G, strict[:, None].astype(float)])
    b_ub = -h.copy()
    b_ub[~strict] += atol
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    bounds = [(None, None)] * n + [(0.0, 1.0) if any_strict else (0.0, 0.0)]
    res = linprog(
        cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs",
        options={"primal_feasibility_tolerance": 1e-10,
                 "dual_feasibility_tolerance": 1e-10},
    )
    if res.status == 2:
        return FeasibilityResult(False, reason="linear program infeasible")
    if res.status != 0:
        return FeasibilityResult(False, reason=f"solver status {res.status}: {res.message}")
    c = res.x[:n]
    slack = G @ c - h
    margin = float(slack[strict].min()) if any_strict else float("inf")
    worst_nonstrict = float(-slack[~strict].min()) if (~strict).any() else 0.0
    if any_strict and margin < strict_eps:
        return FeasibilityResult(False, c, margin, "strict constraints cannot be met with margin")
    if worst_nonstrict > 10 * atol + 1e-9:
        return FeasibilityResult(False, c, margin, "non-strict constraints violated at witness")
    return FeasibilityResult(True, c, margin)


def cell_constraints(column, X, sign=1.0, exclude=(), interior=False):
    """Rows ``(x_i, relation)`` that keep a weight inside the cell of ``column``.

    With ``sign = -1`` the relations are those of the negative branch.  With
    ``interior`` the inactive side is strict as well, which keeps the weight
    off every sample hyperplane.
    """
    off = ("<" if interior else "<=") if sign > 0 else (">" if interior else ">=")
    on = ">" if sign > 0 else "<"
    return [(X[i], on if bit == 1 else off)
            for i, bit in enumerate(np.asarray(column)) if i not in exclude]


def interior_first(build, strict_eps=DEFAULT_STRICT_EPS):
    """Feasibility of ``build(interior=False)``, preferring an interior witness.

    ``build`` returns a :class:`HalfspaceSystem`.  The strict variant is tried
    first; its witness also satisfies the non-strict system.
    """
    res = halfspace_feasible(build(interior=True), strict_eps)
    if res.feasible:
        return res
    return halfspace_feasible(build(interior=False), strict_eps)
