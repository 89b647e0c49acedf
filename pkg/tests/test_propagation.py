import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pndlab.errors import ConfigError, InputError, NumericError
from pndlab.graph import build_graph, normalized_adjacency
from pndlab.propagation import (PropagationConfig, conjugate_gradient, inverse_propagate,
                                normalize_rows, ppr_exact, propagate_pnd, propagate_pnd_fix)

from conftest import random_graph
from oracles import dense_pnd, dense_pnd_fix, dense_ppr


def _probs(rng, n, k):
    P = rng.random((n, k))
    return P / P.sum(1, keepdims=True)


def test_pnd_matches_dense(small_graph, rng):
    g, _, An, m = small_graph
    P = _probs(rng, g.num_nodes, 4)
    for gamma, T in [(0.1, 1), (0.9, 5), (1.0, 3)]:
        out = propagate_pnd(P, m, PropagationConfig(gamma, T))
        np.testing.assert_allclose(out, dense_pnd(P, An, gamma, T), atol=1e-12)


def test_pnd_preserves_row_sums_only_approximately_but_input_untouched(small_graph, rng):
    g, _, _, m = small_graph
    P = _probs(rng, g.num_nodes, 3)
    before = P.copy()
    propagate_pnd(P, m, PropagationConfig(0.5, 4))
    np.testing.assert_array_equal(P, before)


def test_pnd_fix_pins_training_rows(small_graph, rng):
    g, _, An, m = small_graph
    P = _probs(rng, g.num_nodes, 3)
    train = [0, 3, 7]
    out = propagate_pnd_fix(P, m, PropagationConfig(0.9, 6), train)
    np.testing.assert_array_equal(out[train], P[train])
    np.testing.assert_allclose(out, dense_pnd_fix(P, An, 0.9, 6, train), atol=1e-12)


def test_pnd_fix_all_pinned_is_identity(small_graph, rng):
    g, _, _, m = small_graph
    P = _probs(rng, g.num_nodes, 3)
    out = propagate_pnd_fix(P, m, PropagationConfig(0.9, 3), np.arange(g.num_nodes))
    np.testing.assert_array_equal(out, P)


def test_pnd_fix_rejects_bad_index(small_graph, rng):
    g, _, _, m = small_graph
    with pytest.raises(InputError):
        propagate_pnd_fix(_probs(rng, g.num_nodes, 2), m, PropagationConfig(0.5, 1), [g.num_nodes])


def test_isolated_node_unchanged_by_pnd():
    m = normalized_adjacency(build_graph([[0, 1]], 3))
    P = np.array([[1.0, 0.0], [0.0, 1.0], [0.3, 0.7]])
    out = propagate_pnd(P, m, PropagationConfig(0.7, 10))
    np.testing.assert_allclose(out[2], P[2], atol=1e-15)


def test_ppr_matches_dense_solve(small_graph, rng):
    g, _, An, m = small_graph
    P = _probs(rng, g.num_nodes, 4)
    for gamma in (0.1, 0.5, 0.9):
        np.testing.assert_allclose(ppr_exact(P, m, gamma), dense_ppr(P, An, gamma), atol=1e-9)


def test_ppr_is_fixed_point_of_restart_recursion(small_graph, rng):
    g, _, _, m = small_graph
    P = _probs(rng, g.num_nodes, 3)
    Z = ppr_exact(P, m, 0.8)
    np.testing.assert_allclose(Z, 0.8 * m.to_dense() @ Z + 0.2 * P, atol=1e-9)


def test_ppr_rejects_gamma_one(small_graph, rng):
    g, _, _, m = small_graph
    with pytest.raises(InputError):
        ppr_exact(_probs(rng, g.num_nodes, 2), m, 1.0)


def test_cg_reports_non_convergence():
    S = np.diag([1.0, 10.0, 100.0, 1000.0])
    with pytest.raises(NumericError):
        conjugate_gradient(lambda V: S @ V, np.ones((4, 1)), tol=1e-14, max_iter=1)


def test_cg_zero_rhs_returns_zero():
    Z = conjugate_gradient(lambda V: 2 * V, np.zeros((3, 2)))
    np.testing.assert_array_equal(Z, 0.0)


def test_inverse_propagate_matches_dense(small_graph, rng):
    g, _, An, m = small_graph
    P = _probs(rng, g.num_nodes, 3)
    np.testing.assert_allclose(inverse_propagate(P, m, 0.7),
                               (2 * np.eye(g.num_nodes) - 0.7 * An) @ P, atol=1e-14)


def test_inverse_propagate_can_go_negative():
    m = normalized_adjacency(build_graph([[0, 1]], 2))
    P = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert inverse_propagate(P, m, 1.0).min() < 0


def test_normalize_rows_clamps_then_rescales():
    out = normalize_rows(np.array([[-1.0, 1.0], [0.0, 0.0]]))
    np.testing.assert_allclose(out.sum(1), 1.0)
    assert out[0, 0] == pytest.approx(1e-8 / (1 + 1e-8))
    np.testing.assert_allclose(out[1], [0.5, 0.5])
    with pytest.raises(InputError):
        normalize_rows(np.ones((2, 2)), floor=0.0)


def test_config_validation():
    with pytest.raises(ConfigError):
        PropagationConfig(0.0, 5)
    with pytest.raises(ConfigError):
        PropagationConfig(1.5, 5)
    with pytest.raises(ConfigError):
        PropagationConfig(0.5, 0)
    with pytest.raises(ConfigError):
        PropagationConfig(0.5, 2.5)


def test_non_finite_input_rejected(small_graph):
    g, _, _, m = small_graph
    P = np.ones((g.num_nodes, 2))
    P[0, 0] = np.nan
    with pytest.raises(InputError):
        propagate_pnd(P, m, PropagationConfig(0.5, 1))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 25), st.floats(0.05, 0.95), st.integers(0, 2**31 - 1))
def test_one_step_never_raises_energy(n, gamma, seed):
    from pndlab.graph import dirichlet_energy
    rng = np.random.default_rng(seed)
    g, _, _ = random_graph(rng, n=n, density=0.3)
    m = normalized_adjacency(g)
    F = rng.normal(size=(n, 3))
    after = propagate_pnd(F, m, PropagationConfig(gamma, 1))
    assert dirichlet_energy(after, m) <= dirichlet_energy(F, m) + 1e-9
