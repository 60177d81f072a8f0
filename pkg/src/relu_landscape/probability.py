"""Trapping probability for parallel hidden weights and Gaussian classes.

When every hidden weight shares one direction, a weight is described by its
normal sign and its offset ``h_k`` along that direction, and the analysis
reduces to the real line.  The offsets split the line into regions of
constant activation; the in-cell optimum ``h*`` solves a small linear system
built from region masses and means.  Samples falling between ``h_k`` and
``h*_k`` (the gap) move the optimum out of its cell.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np
from scipy.stats import norm, truncnorm

from . import kernels
from .errors import InvalidInputError, ParseError
from .linalg_core import DEFAULT_RANK_TOL, general_least_squares
from .model import Dataset, loss_zw, parallel_network

DEGENERATE_MASS = 1e-300


@dataclass(frozen=True)
class ParallelWeightConfig:
    """Hidden weights ``z_k = n_k``, active where ``n_k (x . direction - h_k) > 0``."""

    normals: tuple
    offsets: tuple
    direction: tuple = (1.0,)

    def __post_init__(self):
        n = tuple(int(v) for v in np.atleast_1d(self.normals))
        h = tuple(float(v) for v in np.atleast_1d(self.offsets))
        u = np.atleast_1d(np.asarray(self.direction, dtype=float))
        if len(n) != len(h) or not n:
            raise InvalidInputError("need one normal sign per offset")
        if any(v not in (1, -1) for v in n):
            raise InvalidInputError("normal signs must be +1 or -1")
        if not np.all(np.isfinite(h)):
            raise InvalidInputError("offsets must be finite")
        nu = float(np.linalg.norm(u))
        if not np.isfinite(nu) or nu == 0.0:
            raise InvalidInputError("direction must be a non-zero finite vector")
        if abs(nu - 1.0) > 1e-12:
            raise InvalidInputError("direction must have unit length")
        object.__setattr__(self, "normals", n)
        object.__setattr__(self, "offsets", h)
        object.__setattr__(self, "direction", tuple(float(v) for v in u))

    @property
    def K(self):
        return len(self.normals)

    def with_offsets(self, offsets):
        return ParallelWeightConfig(self.normals, tuple(offsets), self.direction)

    def network(self):
        return parallel_network(self.direction, self.normals, self.offsets)

    def to_json(self):
        return {"normals": list(self.normals), "offsets": list(self.offsets),
                "direction": list(self.direction)}


@dataclass(frozen=True)
class GaussianClassModel:
    """Class-conditional Gaussians ``N(mean_pm, sigma^2)`` along the direction."""

    mean_plus: float = 1.0
    mean_minus: float = -1.0
    sigma: float = 1.0
    prior_plus: float = 0.5

    def __post_init__(self):
        if not (np.isfinite(self.mean_plus) and np.isfinite(self.mean_minus)):
            raise InvalidInputError("class means must be finite")
        if not self.sigma > 0:
            raise InvalidInputError("sigma must be positive")
        if not 0.0 < self.prior_plus < 1.0:
            raise InvalidInputError("prior_plus must lie in (0, 1)")

    @property
    def prior_minus(self):
        return 1.0 - self.prior_plus

    def mass(self, lo, hi, cls):
        """Probability that a sample of class ``cls`` (+1/-1) lands in (lo, hi)."""
        mu = self.mean_plus if cls > 0 else self.mean_minus
        a = (lo - mu) / self.sigma
        b = (hi - mu) / self.sigma
        if a >= b:
            return 0.0
        # subtract in the tail that keeps precision
        if a > 0:
            return float(norm.sf(a) - norm.sf(b))
        return float(norm.cdf(b) - norm.cdf(a))

    def mixture_mass(self, lo, hi):
        return self.prior_plus * self.mass(lo, hi, 1) + self.prior_minus * self.mass(lo, hi, -1)

    def sample(self, rng, N, dim=1, direction=None):
        """``N`` labeled draws; returns (projections, labels, full features)."""
        y = np.where(rng.random(N) < self.prior_plus, 1.0, -1.0)
        mu = np.where(y > 0, self.mean_plus, self.mean_minus)
        if direction is None or dim == 1:
            x = mu + self.sigma * rng.standard_normal(N)
            return x, y, x[:, None]
        u = np.asarray(direction, dtype=float)
        feats = mu[:, None] * u + self.sigma * rng.standard_normal((N, dim))
        return feats @ u, y, feats


@dataclass(frozen=True)
class Region:
    lo: float
    hi: float
    active: tuple


def region_partition(cfg):
    """Regions between consecutive distinct offsets, left to right."""
    edges = sorted(set(cfg.offsets))
    bounds = [-np.inf] + edges + [np.inf]
    out = []
    n = np.array(cfg.normals)
    h = np.array(cfg.offsets)
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if np.isinf(lo) and np.isinf(hi):
            mid = 0.0
        elif np.isinf(lo):
            mid = hi - 1.0
        elif np.isinf(hi):
            mid = lo + 1.0
        else:
            mid = 0.5 * (lo + hi)
        out.append(Region(float(lo), float(hi), tuple(int(v) for v in (n * (mid - h) > 0))))
    return out


@dataclass
class RegionStats:
    regions: List[Region]
    P_plus: np.ndarray
    P_minus: np.ndarray
    mean_plus: np.ndarray
    mean_minus: np.ndarray
    degenerate_plus: np.ndarray
    degenerate_minus: np.ndarray


def _truncated_mean(lo, hi, mu, sigma, P):
    if P < DEGENERATE_MASS:
        return float("nan")
    a, b = (lo - mu) / sigma, (hi - mu) / sigma
    return float(truncnorm.mean(a, b, loc=mu, scale=sigma))


def region_stats_gaussian(regions, model):
    """Class masses and truncated means of every region."""
    Pp = np.array([model.mass(r.lo, r.hi, 1) for r in regions])
    Pm = np.array([model.mass(r.lo, r.hi, -1) for r in regions])
    mp = np.array([_truncated_mean(r.lo, r.hi, model.mean_plus, model.sigma, P)
                   for r, P in zip(regions, Pp)])
    mm = np.array([_truncated_mean(r.lo, r.hi, model.mean_minus, model.sigma, P)
                   for r, P in zip(regions, Pm)])
    return RegionStats(list(regions), Pp, Pm, mp, mm, Pp < DEGENERATE_MASS, Pm < DEGENERATE_MASS)


def _activation_matrix(regions):
    return np.array([r.active for r in regions], dtype=float)


def assemble_F_f(regions, mass, weighted_sum, label_sum):
    """Normal equations of the 1-D loss for per-region totals.

    ``mass[j]`` is the (expected) number of samples in region j,
    ``weighted_sum[j]`` the sum of their projections and ``label_sum[j]`` the
    sum of their labels.
    """
    Ia = _activation_matrix(regions)
    mass = np.asarray(mass, dtype=float)
    F = (Ia.T * mass) @ Ia
    act = Ia.sum(axis=1)
    f = Ia.T @ (act * np.asarray(weighted_sum, dtype=float)) - Ia.T @ np.asarray(label_sum, dtype=float)
    return F, f


def population_F_f(cfg, model, stats=None):
    """Expected normal equations per sample under the class model."""
    regions = region_partition(cfg) if stats is None else stats.regions
    st = region_stats_gaussian(regions, model) if stats is None else stats
    pp = model.prior_plus * st.P_plus
    pm = model.prior_minus * st.P_minus
    xs = (np.where(st.degenerate_plus, 0.0, pp * np.nan_to_num(st.mean_plus))
          + np.where(st.degenerate_minus, 0.0, pm * np.nan_to_num(st.mean_minus)))
    return assemble_F_f(regions, pp + pm, xs, pp - pm)


def sample_F_f(cfg, x, y):
    """Normal equations from a finite sample (projections ``x``, labels ``y``)."""
    regions = region_partition(cfg)
    edges = np.array([r.hi for r in regions[:-1]])
    idx = np.searchsorted(edges, x, side="left")
    R = len(regions)
    cnt = np.bincount(idx, minlength=R)
    sx = np.bincount(idx, weights=x, minlength=R)
    sy = np.bincount(idx, weights=y, minlength=R)
    return assemble_F_f(regions, cnt, sx, sy)


@dataclass
class OptimalLocations:
    h_star: np.ndarray
    free: np.ndarray
    F: np.ndarray
    f: np.ndarray


def solve_offsets(F, f, rank_tol=DEFAULT_RANK_TOL, current=None):
    """Particular solution of ``F h = f`` with free components flagged.

    The system is symmetrically rescaled by its diagonal first so that
    regions with tiny mass are not mistaken for rank loss.  Free components
    keep their current offset when ``current`` is given.
    """
    F = np.asarray(F, dtype=float)
    f = np.asarray(f, dtype=float)
    K = F.shape[0]
    diag = np.diag(F).copy()
    live = diag > 0
    h = np.zeros(K)
    free = ~live
    if live.any():
        s = 1.0 / np.sqrt(diag[live])
        Fs = F[np.ix_(live, live)] * s[:, None] * s[None, :]
        sol = general_least_squares(Fs, f[live] * s, rank_tol)
        h[live] = sol.particular * s
        if sol.dim:
            proj_rows = np.linalg.norm(sol.projector, axis=1) > 1e-8
            sub = free[live]
            sub |= proj_rows
            free[live] = sub
    if current is not None:
        h = np.where(free, np.asarray(current, dtype=float), h)
    return h, free


def optimal_locations(cfg, model, rank_tol=DEFAULT_RANK_TOL):
    """In-cell optimal offsets ``h*`` for the population loss."""
    F, f = population_F_f(cfg, model)
    h, free = solve_offsets(F, f, rank_tol, current=cfg.offsets)
    return OptimalLocations(h, free, F, f)


def closed_form_two_weights(t_right, t_left, model):
    """Optimal offsets of an outward pair: weight 1 active right of
    ``t_right``, weight 2 active left of ``t_left`` (``t_left <= t_right``).

    Each optimum is the region's mass-weighted mean minus its label mean.
    """
    def one(lo, hi):
        Pp = model.prior_plus * model.mass(lo, hi, 1)
        Pm = model.prior_minus * model.mass(lo, hi, -1)
        xp = _truncated_mean(lo, hi, model.mean_plus, model.sigma, Pp / model.prior_plus)
        xm = _truncated_mean(lo, hi, model.mean_minus, model.sigma, Pm / model.prior_minus)
        return (Pp * xp + Pm * xm - Pp + Pm) / (Pp + Pm)
    return one(t_right, np.inf), one(-np.inf, t_left)


def gap_intervals(offsets, h_star, moving=None):
    K = len(offsets)
    idx = range(K) if moving is None else moving
    return [(min(offsets[k], h_star[k]), max(offsets[k], h_star[k])) for k in idx]


def _merge(intervals):
    out = []
    for lo, hi in sorted(i for i in intervals if i[1] > i[0]):
        if out and lo <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


@dataclass
class GapProbability:
    exact: float
    max_single: float
    per_gap: List[float]
    product_trap: Optional[float] = None


def gap_probability(offsets, h_star, model, moving=None):
    """Mixture mass of the gap union, the largest single gap and each gap."""
    gaps = gap_intervals(offsets, h_star, moving)
    per = [model.mixture_mass(lo, hi) for lo, hi in gaps]
    exact = sum(model.mixture_mass(lo, hi) for lo, hi in _merge(gaps))
    return GapProbability(float(min(exact, 1.0)), float(max(per, default=0.0)), per)


def trap_probability(P_g, N):
    if not 0.0 <= P_g <= 1.0:
        raise InvalidInputError("P_g must lie in [0, 1]")
    if N < 1:
        raise InvalidInputError("N must be at least 1")
    return float((1.0 - P_g) ** N)


def product_trap_probability(per_gap, N):
    """Trap probability treating each gap independently."""
    return float(np.prod([(1.0 - p) ** N for p in per_gap]))


@dataclass
class AnalyticPoint:
    offsets: tuple
    h_star: np.ndarray
    free: np.ndarray
    gaps: GapProbability
    P_t: float
    P_t_product: float
    P_t_max: float


def analytic_trap(cfg, model, N, moving=None, rank_tol=DEFAULT_RANK_TOL):
    """``h*``, gap masses and trap probabilities for one configuration.

    ``moving`` restricts the gaps to the weights being swept; ``None`` uses
    every weight.
    """
    opt = optimal_locations(cfg, model, rank_tol)
    gp = gap_probability(cfg.offsets, opt.h_star, model, moving)
    return AnalyticPoint(cfg.offsets, opt.h_star, opt.free, gp,
                         trap_probability(gp.exact, N), product_trap_probability(gp.per_gap, N),
                         trap_probability(gp.max_single, N))


@dataclass
class MonteCarloResult:
    trapped: int
    trials: int
    seed: Optional[int]

    @property
    def p_hat(self):
        return self.trapped / self.trials

    def band(self, p_ref, k=3.0):
        """``p_ref +/- k`` binomial standard deviations, clipped to [0, 1]."""
        s = np.sqrt(max(p_ref * (1.0 - p_ref), 0.0) / self.trials)
        return max(0.0, p_ref - k * s), min(1.0, p_ref + k * s)

    def wilson(self, z=3.0):
        n, p = self.trials, self.p_hat
        den = 1 + z * z / n
        c = (p + z * z / (2 * n)) / den
        r = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
        return max(0.0, c - r), min(1.0, c + r)


def _generator(seed):
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def monte_carlo_trap(cfg, model, N, trials, seed=0, moving=None, gap="population",
                     rank_tol=DEFAULT_RANK_TOL, chunk=2000):
    """Fraction of simulated datasets with no sample in any gap.

    ``gap="population"`` uses the analytic ``h*``; ``gap="empirical"`` solves
    for ``h*`` from each simulated dataset and treats free offsets as having
    no gap.
    """
    if trials < 1:
        raise InvalidInputError("trials must be at least 1")
    if gap not in ("population", "empirical"):
        raise InvalidInputError(f"unknown gap mode {gap!r}")
    rng = _generator(seed)
    idx = list(range(cfg.K)) if moving is None else list(moving)
    trapped = 0
    if gap == "population":
        h_star = optimal_locations(cfg, model, rank_tol).h_star
        merged = _merge(gap_intervals(cfg.offsets, h_star, idx))
        lo = np.array([a for a, _ in merged], dtype=float)
        hi = np.array([b for _, b in merged], dtype=float)
    done = 0
    while done < trials:
        T = min(chunk, trials - done)
        y = np.where(rng.random((T, N)) < model.prior_plus, 1.0, -1.0)
        mu = np.where(y > 0, model.mean_plus, model.mean_minus)
        x = mu + model.sigma * rng.standard_normal((T, N))
        if gap == "population":
            trapped += int(kernels.count_trapped(x, lo, hi))
        else:
            for t in range(T):
                F, f = sample_F_f(cfg, x[t], y[t])
                hs, _ = solve_offsets(F, f, rank_tol, current=cfg.offsets)
                merged = _merge(gap_intervals(cfg.offsets, hs, idx))
                lo = np.array([a for a, _ in merged], dtype=float)
                hi = np.array([b for _, b in merged], dtype=float)
                trapped += int(kernels.count_trapped(x[t:t + 1], lo, hi))
        done += T
    return MonteCarloResult(trapped, trials, seed if isinstance(seed, int) else None)


def empirical_loss(cfg, model, N, seed=0):
    """Loss of the parallel-weight network on one simulated dataset."""
    rng = _generator(seed)
    dim = len(cfg.direction)
    _, y, feats = model.sample(rng, N, dim, cfg.direction)
    data = Dataset.from_features(feats, y)
    return loss_zw(cfg.network(), data)


def empirical_loss_curve(cfg, model, weight, values, N, seed=0):
    """Loss as one offset sweeps ``values`` with every other offset fixed.

    A single dataset is drawn for the whole sweep.
    """
    rng = _generator(seed)
    dim = len(cfg.direction)
    _, y, feats = model.sample(rng, N, dim, cfg.direction)
    data = Dataset.from_features(feats, y)
    nets = []
    for v in values:
        h = list(cfg.offsets)
        h[weight] = float(v)
        nets.append(cfg.with_offsets(h).network())
    W = np.stack([p.w for p in nets])
    Z = np.stack([p.z for p in nets])
    return np.asarray(values, dtype=float), kernels.relu_loss_batch(data.X, data.y, Z, W)


@dataclass
class SweepRow:
    offset: float
    P_t_analytic: float
    P_t_mc: float
    ci_lo: float
    ci_hi: float
    loss_mean: float
    P_t_product: float = float("nan")
    P_t_max: float = float("nan")


def probability_sweep(cfg, model, weight, values, N, trials, seed=0, gap="population",
                      moving=None, executor=None):
    """Analytic and simulated trap probability along a one-offset sweep."""
    moving = [weight] if moving is None else list(moving)
    values = [float(v) for v in values]
    seeds = np.random.SeedSequence(seed).spawn(len(values) + 1)
    _, losses = empirical_loss_curve(cfg, model, weight, values, N, seeds[-1])

    def work(item):
        i, v = item
        h = list(cfg.offsets)
        h[weight] = v
        c = cfg.with_offsets(h)
        a = analytic_trap(c, model, N, moving)
        if trials:
            mc = monte_carlo_trap(c, model, N, trials, seeds[i], moving, gap)
            lo, hi = mc.band(a.P_t)
            p_mc = mc.p_hat
        else:
            p_mc = lo = hi = float("nan")
        return SweepRow(v, a.P_t, p_mc, lo, hi, float(losses[i]), a.P_t_product, a.P_t_max)

    items = list(enumerate(values))
    if executor is None:
        return [work(it) for it in items]
    return list(executor.map(work, items))


PRESETS = {
    "two-weight": {
        "config": {"normals": [1, -1], "offsets": [0.0, 0.0]},
        "model": {},
        "sweep": {"weight": 0, "start": 0.0, "stop": 6.0, "num": 21},
        "N": 100,
    },
    "four-weight": {
        "config": {"normals": [1, -1, 1, -1], "offsets": [0.1, 0.05, 0.0, -0.05]},
        "model": {},
        "sweep": {"weight": 0, "start": 0.1, "stop": 6.0, "num": 21},
        "N": 100,
    },
}


@dataclass
class ProbSetup:
    cfg: ParallelWeightConfig
    model: GaussianClassModel
    weight: int
    values: np.ndarray
    N: int


def parse_setup(obj, source=None):
    """Build a sweep setup from a JSON-like object."""
    try:
        cfg = ParallelWeightConfig(**obj["config"])
        model = GaussianClassModel(**obj.get("model", {}))
        sw = obj.get("sweep", {})
        weight = int(sw.get("weight", 0))
        if "values" in sw:
            values = np.asarray(sw["values"], dtype=float)
        else:
            num = int(sw.get("num", 21))
            if num < 1:
                raise InvalidInputError("sweep needs at least one point")
            values = np.round(np.linspace(float(sw["start"]), float(sw["stop"]), num), 12)
        N = int(obj.get("N", 100))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad probability config: {exc!r}", source) from exc
    if not 0 <= weight < cfg.K:
        raise ParseError(f"sweep weight {weight} outside [0, {cfg.K})", source)
    if N < 1:
        raise ParseError("N must be at least 1", source)
    return ProbSetup(cfg, model, weight, values, N)


def load_setup(path):
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(str(exc), path) from exc
    return parse_setup(obj, path)
