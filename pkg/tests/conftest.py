import numpy as np
import pytest

from relu_landscape.cells import ActivationPattern, pattern_from_weights
from relu_landscape.model import Dataset


def random_dataset(rng, N, d):
    """N samples with d-1 Gaussian features plus the bias input, random labels."""
    return Dataset.from_features(rng.standard_normal((N, d - 1)), rng.choice([-1.0, 1.0], N))


def random_instance(rng, N=None, K=None, d=None):
    N = N or int(rng.integers(2, 31))
    K = K or int(rng.integers(1, 5))
    d = d or int(rng.integers(2, 6))
    data = random_dataset(rng, N, d)
    pattern = ActivationPattern(rng.integers(0, 2, size=(N, K)))
    return data, pattern


def weight_instance(rng, N, K, d):
    """Dataset plus weights and the pattern they induce."""
    data = random_dataset(rng, N, d)
    w = rng.standard_normal((K, d))
    return data, w, pattern_from_weights(w, data)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def saddle_instances(seed=1, tries=200):
    """Small 1-D datasets with K=2 whose sweep contains a genuine saddle."""
    from relu_landscape.saddle import saddle_sweep

    rng = np.random.default_rng(seed)
    for _ in range(tries):
        N = int(rng.integers(4, 9))
        data, _, pattern = weight_instance(rng, N, 2, 2)
        for res in saddle_sweep(pattern, data):
            if res.genuine and res.subset:
                yield data, pattern, res


def boundary_candidate(sol, signs, data):
    """Network at a member of the solution set for ``signs``.

    Accepted sign vectors use the solver's witness.  Otherwise a member that
    keeps every neuron in its cell (neuron m ignoring sample n) is searched
    without the slope conditions; None if there is none.
    """
    from relu_landscape.cells import interior_first
    from relu_landscape.minima import affine_cell_system
    from relu_landscape.model import NetworkParams

    if sol.sign_results[signs].feasible:
        return sol.params(signs, data)
    cfg = sol.cfg
    res = interior_first(lambda interior: affine_cell_system(
        sol.solution_set, cfg.pattern, data, signs, exclude={cfg.m: (cfg.n,)},
        interior=interior))
    if not res.feasible:
        return None
    R = sol.solution_set.member(res.witness).reshape(sol.K, sol.d).copy()
    xn = data.X[cfg.n]
    R[cfg.m] -= (R[cfg.m] @ xn) / (xn @ xn) * xn
    z = np.asarray(signs, dtype=float)
    return NetworkParams(z, R / z[:, None])


def local_descent(params, m, data, rng, n=1000, radius=1e-4):
    """Largest loss decrease over random moves of ``w_m`` within ``radius``."""
    from relu_landscape.model import NetworkParams, loss_zw

    base = loss_zw(params, data)
    best = 0.0
    for _ in range(n):
        step = rng.standard_normal(data.d)
        w = params.w.copy()
        w[m] += step * radius * rng.random() / np.linalg.norm(step)
        best = max(best, base - loss_zw(NetworkParams(params.z, w), data))
    return best


def boundary_suite(seed=0, accepted=6, rejected=14):
    """Boundary instances with a non-degenerate candidate point each.

    Returns tuples ``(cfg, data, solution, signs, params)`` with the requested
    number of accepted and rejected sign vectors.
    """
    from relu_landscape.nondiff import BoundaryConfig, lemma2_check, solve_nondiff

    rng = np.random.default_rng(seed)
    want = {True: accepted, False: rejected}
    out = []
    while want[True] or want[False]:
        N, d, K = int(rng.integers(4, 8)), int(rng.integers(2, 4)), int(rng.integers(1, 3))
        data, _, pattern = weight_instance(rng, N, K, d)
        cfg = BoundaryConfig(int(rng.integers(K)), int(rng.integers(N)), pattern)
        if not np.any(np.delete(cfg.pattern.column(cfg.m), cfg.n)):
            continue
        sol = solve_nondiff(cfg, data)
        if not sol.solvable:
            continue
        for signs, res in sol.sign_results.items():
            if not want[res.feasible]:
                continue
            params = boundary_candidate(sol, signs, data)
            if params is None or lemma2_check(cfg, params, data).degenerate:
                continue
            want[res.feasible] -= 1
            out.append((cfg, data, sol, signs, params))
            break
    return out


def two_weight_oracle(t_right, t_left, model):
    """Optimal offsets of an outward pair from inverse Mills ratios, equal priors."""
    from scipy.stats import norm

    def right(mu):
        a = (t_right - mu) / model.sigma
        return norm.sf(a), mu + model.sigma * norm.pdf(a) / norm.sf(a)

    def left(mu):
        a = (t_left - mu) / model.sigma
        return norm.cdf(a), mu - model.sigma * norm.pdf(a) / norm.cdf(a)

    out = []
    for side in (right, left):
        (Pp, xp), (Pm, xm) = side(model.mean_plus), side(model.mean_minus)
        out.append((Pp * xp + Pm * xm - Pp + Pm) / (Pp + Pm))
    return out


# criterion number -> (passed, detail), filled by the acceptance tests
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
