import itertools

import numpy as np
import pytest

from relu_landscape.cells import ActivationPattern
from relu_landscape.errors import InvalidInputError, NotASaddleError
from relu_landscape.model import Dataset, grad_R, loss_zw
from relu_landscape.saddle import (analyze_subset, assemble_saddle_system, exact_delta,
                                   perturbation_delta, proper_subsets, saddle_certificate,
                                   saddle_sweep, solve_saddle)

from conftest import random_instance, saddle_instances


@pytest.fixture(scope="module")
def saddle_case():
    return next(saddle_instances())


def test_system_hand_example():
    data = Dataset(np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]), [1.0, -1.0, 1.0],
                   homogeneous=False)
    pattern = ActivationPattern(np.array([[1, 1], [1, 0], [0, 1]]))
    B, b = assemble_saddle_system((0,), pattern, data)
    np.testing.assert_allclose(B, [[2.0, 1.0], [1.0, 1.0]])
    np.testing.assert_allclose(b, [0.0, -1.0])
    wide = ActivationPattern(np.array([[1, 1, 0], [1, 0, 0], [0, 1, 0]]))
    B2, _ = assemble_saddle_system((0, 1), wide, data)
    np.testing.assert_allclose(B2[:2, :2], B)
    # the off-diagonal block only sees samples active for both neurons
    np.testing.assert_allclose(B2[:2, 2:], [[1.0, 0.0], [0.0, 0.0]])


def test_empty_subset_residuals():
    rng = np.random.default_rng(3)
    data, pattern = random_instance(rng, N=6, K=2, d=3)
    try:
        cand = solve_saddle((), pattern, data)
    except NotASaddleError:
        pytest.skip("random pattern leaves a neuron with zero gradient")
    np.testing.assert_array_equal(cand.errors, -data.y)
    for j, v in cand.normals.items():
        np.testing.assert_allclose(v, -(data.y * pattern.column(j)) @ data.X)


def test_zero_gradient_neuron_is_not_a_saddle():
    # neuron 1 is never active, so its normal vanishes
    data = Dataset.from_features([[0.5], [-1.0], [2.0]], [1, -1, 1])
    pattern = ActivationPattern(np.array([[1, 0], [1, 0], [0, 0]]))
    with pytest.raises(NotASaddleError) as err:
        solve_saddle((0,), pattern, data)
    assert err.value.neurons == (1,) or list(err.value.neurons) == [1]
    assert analyze_subset((0,), pattern, data).status == "not-a-saddle"


@pytest.mark.parametrize("S", [(0, 0), (2,), (0, 1)])
def test_subset_validation(S):
    data = Dataset.from_features([[0.5], [-1.0]], [1, -1])
    with pytest.raises(InvalidInputError):
        solve_saddle(S, ActivationPattern(np.ones((2, 2), dtype=int)), data)


@pytest.mark.parametrize("seed", range(6))
def test_system_psd_and_stationary_split(seed):
    rng = np.random.default_rng(seed)
    data, pattern = random_instance(rng, K=3)
    for S in [(0,), (1, 2), ()]:
        B, b = assemble_saddle_system(S, pattern, data)
        np.testing.assert_allclose(B, B.T)
        if B.size:
            assert np.linalg.eigvalsh(B).min() >= -1e-9 * max(1.0, np.abs(B).max())
        try:
            cand = solve_saddle(S, pattern, data)
        except NotASaddleError:
            continue
        R = cand.R(rng.standard_normal(cand.R_tilde_set.size) if S else None)
        g = grad_R(R, pattern, data)
        for j in S:
            assert np.abs(g[j]).max() <= 1e-8 * (1 + np.abs(R).max())
        for j in cand.inactive:
            np.testing.assert_allclose(g[j], 2.0 / data.N * cand.normals[j], atol=1e-10)


def test_proper_subsets():
    assert list(proper_subsets(2)) == [(), (0,), (1,)]
    assert len(list(proper_subsets(4))) == 15


def test_sweep_cap():
    data = Dataset.from_features(np.linspace(-1, 1, 9)[:, None], [1] * 9)
    pattern = ActivationPattern(np.ones((9, 9), dtype=int))
    with pytest.raises(InvalidInputError):
        saddle_sweep(pattern, data)
    assert len(saddle_sweep(pattern, data, max_subsets=3)) == 3


def test_genuine_saddle_geometry(saddle_case):
    data, pattern, res = saddle_case
    cand = res.candidate
    for br in res.branches:
        if not br.feasible:
            continue
        params = br.params()
        for j in cand.inactive:
            assert params.z[j] == 0
            v = cand.normals[j]
            assert abs(v @ br.inactive_w[j]) <= 1e-12 * np.linalg.norm(v) * (
                1 + np.linalg.norm(br.inactive_w[j]))
        # the point reproduces the assumed pattern on the stationary neurons
        act = data.X @ params.w.T > 0
        for j in cand.subset:
            np.testing.assert_array_equal(act[:, j], pattern.column(j) == 1)


def test_perturbation_delta_examples():
    data = Dataset(np.array([[1.0, 0.0], [0.0, 1.0]]), [1.0, 1.0], homogeneous=False)
    pattern = ActivationPattern(np.array([[1, 1], [0, 1]]))
    cand = solve_saddle((0,), pattern, data)
    np.testing.assert_allclose(cand.errors, [0.0, -1.0])
    w = np.array([1.0, 0.0])
    dw = np.array([0.0, 0.1])
    # (1/N)[2 * (-1) * dz * 0.1 + dz^2 * 1]
    assert perturbation_delta(cand, 1, 0.2, dw, w, pattern, data) == pytest.approx(
        (2 * -1 * 0.2 * 0.1 + 0.04) / 2)
    with pytest.raises(InvalidInputError):
        perturbation_delta(cand, 0, 0.2, dw, w, pattern, data)


def test_certificate_has_both_signs(saddle_case):
    data, pattern, res = saddle_case
    for certs in res.certificates.values():
        for c in certs:
            assert c.delta_descent < 0 < c.delta_ascent
            assert c.exact_descent < 0 < c.exact_ascent


def richardson_ratio(cand, branch, k, pattern, data, dz, dw):
    params = branch.params()
    w_k = branch.inactive_w[k]
    errs = []
    for h in (1.0, 0.5):
        pred = perturbation_delta(cand, k, h * dz, h * dw, w_k, pattern, data)
        errs.append(exact_delta(params, k, h * dz, h * dw, data) - pred)
    return errs[0] / errs[1]


def test_expansion_remainder_is_third_order(saddle_case):
    data, pattern, res = saddle_case
    cand = res.candidate
    for signs, certs in res.certificates.items():
        br = next(b for b in res.branches if b.signs == signs)
        for c in certs:
            for dw in (c.dw_descent, c.dw_ascent):
                ratio = richardson_ratio(cand, br, c.neuron, pattern, data, c.dz, dw)
                assert ratio == pytest.approx(8.0, rel=0.3)


def test_saddle_loss_equals_stationary_subnetwork(saddle_case):
    data, pattern, res = saddle_case
    br = next(b for b in res.branches if b.feasible)
    e = res.candidate.errors
    assert loss_zw(br.params(), data) == pytest.approx(float(e @ e) / data.N, abs=1e-10)
