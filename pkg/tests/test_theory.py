import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pndlab.errors import ConstructionError, InputError
from pndlab.theory import (THEORY_GRID, TheoryParams, beta_exact, composition_degree,
                           correction_threshold, correction_threshold_raw, epsilon_bound,
                           exact_threshold, sample_tuples, verify_correction_empirical)


def test_threshold_hand_value_perfect_teacher():
    # h = p = 1, K = 2, γ = 1/2: the neighbors alone outweigh the star, so q_min = 0
    assert correction_threshold(1.0, 1.0, 2, 0.5) == 0.0
    assert correction_threshold_raw(1.0, 1.0, 2, 0.5) == pytest.approx(0.0)


def test_threshold_hand_value_general():
    # K = 5, h = 0.8, p = 0.9: C = 1.2·0.72 - 1.7/5 = 0.524; γ/(1-γ) = 1 at γ = 1/2
    assert correction_threshold_raw(0.8, 0.9, 5, 0.5) == pytest.approx(0.2 - 0.524)
    assert correction_threshold(0.8, 0.9, 5, 0.5) == 0.0


def test_epsilon_bound_hand_values():
    assert epsilon_bound(1.0, 2) == pytest.approx(0.5)
    assert epsilon_bound(0.8, 5) == pytest.approx(3.0 / 3.8)
    with pytest.raises(InputError):
        epsilon_bound(0.2, 5)


def test_weak_propagation_does_not_correct():
    t = TheoryParams(h=0.5, p=0.6, num_classes=5, gamma=0.01, q=0.0)
    b, bp = beta_exact(t)
    assert b < bp
    assert correction_threshold(0.5, 0.6, 5, 0.01) > 0.19


def test_gamma_one_rejected():
    with pytest.raises(InputError):
        correction_threshold(0.9, 0.9, 5, 1.0)
    with pytest.raises(InputError):
        TheoryParams(0.9, 0.9, 5, 1.0)


def test_beta_exact_at_zero_epsilon_matches_direct_count():
    h, p, k, g, q = 0.7, 0.8, 4, 0.6, 0.1
    k1 = k - 1
    off = (1 - p) / k1
    # star class-0 mass: own row, same-class neighbors (p), other-class neighbors (off)
    beta = (1 - g) * q + g * (h * p + (1 - h) * off)
    # class-1 mass: own row, same-class neighbors (off), class-1 neighbors (p),
    # neighbors of the remaining k-2 classes (off)
    share = (1 - h) / k1
    beta_p = (1 - g) * (1 - q) / k1 + g * (h * off + share * p + share * (k1 - 1) * off)
    b, bp = beta_exact(TheoryParams(h, p, k, g, 0.0, q))
    assert b == pytest.approx(beta, abs=1e-15)
    assert bp == pytest.approx(beta_p, abs=1e-15)


def test_star_row_sums_to_one():
    for h, p, k, g, e, q in [(0.6, 0.7, 5, 0.3, 0.2, 0.05), (1.0, 1.0, 3, 0.9, 0.1, 0.0)]:
        b, bp = beta_exact(TheoryParams(h, p, k, g, e, q))
        assert b + (k - 1) * bp == pytest.approx(1.0, abs=1e-14)


def test_threshold_monotone_in_gamma_and_epsilon():
    gammas = [0.1, 0.3, 0.5, 0.7]
    qs = [correction_threshold_raw(0.8, 0.8, 5, g) for g in gammas]
    assert all(a > b for a, b in zip(qs, qs[1:]))
    eps = [0.0, 0.1, 0.2, 0.3]
    qs = [correction_threshold_raw(0.8, 0.8, 5, 0.5, e) for e in eps]
    assert all(a < b for a, b in zip(qs, qs[1:]))


def test_exact_threshold_is_root_of_gap():
    t = TheoryParams(0.7, 0.7, 5, 0.3, 0.1)
    q = exact_threshold(t)
    assert 0 < q < 0.2
    b, bp = beta_exact(t.with_q(q))
    assert b - bp == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("k", [2, 3, 5, 10])
def test_closed_form_gap_at_zero_epsilon(k):
    # at ε = 0 the closed form undershoots the exact root by γ/(1-γ)·(1-h)(1-p)/(K(K-1))
    for h, p, g in [(0.9, 0.6, 0.2), (0.7, 0.8, 0.1), (0.95, 0.9, 0.05)]:
        raw = correction_threshold_raw(h, p, k, g)
        gap = g / (1 - g) * (1 - h) * (1 - p) / (k * (k - 1))
        exact = exact_threshold(TheoryParams(h, p, k, g))
        if 0 < raw and raw - gap < 1 / k and 0 < exact < 1 / k:
            assert exact == pytest.approx(raw - gap, abs=1e-10)


def test_composition_degree_values():
    assert composition_degree(0.8, 5) == 20
    assert composition_degree(1.0, 5) == 2
    assert composition_degree(0.5, 5, 0.2) == 160
    with pytest.raises(ConstructionError):
        composition_degree(0.7, 10, 0.1, max_degree=50)


@pytest.mark.parametrize("t", [
    TheoryParams(0.8, 0.9, 5, 0.5, 0.0, 0.1),
    TheoryParams(0.6, 0.7, 5, 0.1, 0.0, 0.15),
    TheoryParams(0.5, 0.6, 5, 0.3, 0.2, 0.05),
    TheoryParams(1.0, 0.8, 3, 0.2, 0.25, 0.3),
])
def test_propagation_on_graph_matches_exact_betas(t):
    chk = verify_correction_empirical(t)
    b, bp = beta_exact(t)
    assert chk.star_row[0] == pytest.approx(b, abs=1e-12)
    assert chk.star_row[1:] == pytest.approx(np.full(t.num_classes - 1, bp), abs=1e-12)
    assert chk.predicted == chk.observed
    assert chk.q_star_empirical == pytest.approx(exact_threshold(t), abs=1e-8)


def test_random_composition_runs():
    t = TheoryParams(0.8, 0.9, 5, 0.5, 0.1, 0.1)
    chk = verify_correction_empirical(t, composition="random")
    assert chk.star_row.shape == (5,)
    with pytest.raises(InputError):
        verify_correction_empirical(t, composition="bogus")


def test_sample_tuples_deterministic_and_admissible():
    a = sample_tuples(10, seed=3)
    assert a == sample_tuples(10, seed=3)
    for t in a:
        assert t.num_classes in THEORY_GRID["num_classes"]
        assert 0 <= t.q < 1 / t.num_classes
        b, bp = beta_exact(t)
        assert abs(b - bp) > 1e-3


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([2, 3, 5, 10]), st.floats(0, 1), st.floats(0.05, 0.95),
       st.floats(0, 0.9), st.floats(0, 1))
def test_gap_increasing_in_q(k, h, g, e, frac):
    p = 1 / k + (1 - 1 / k) * 0.5
    t = TheoryParams(h, p, k, g, e, frac / k)
    lo = np.subtract(*beta_exact(t.with_q(0.0)))
    hi = np.subtract(*beta_exact(t))
    assert hi >= lo - 1e-15
