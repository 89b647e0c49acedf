import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pndlab.datasets import (Dataset, Split, find_dataset, gen_chains, gen_regular_homophily,
                             load_dataset, load_split, make_splits, remove_inductive_edges,
                             save_dataset, synth_teacher_output)
from pndlab.errors import ConfigError, ConstructionError, InputError, LoadError, SplitError
from pndlab.graph import build_graph, homophily

from conftest import CORA


def _tiny():
    g = build_graph([[0, 1], [1, 2], [2, 3]], 4)
    return Dataset(g, [[0.0, 1.5], [1.0, 0.0], [-0.25, 2.0], [3.0, 4.0]], [0, 1, 1, 0], 2, "tiny")


def test_round_trip(tmp_path):
    ds = _tiny()
    split = Split([0], [1], [2], [3])
    save_dataset(ds, tmp_path / "t", split)
    back = load_dataset(tmp_path / "t")
    np.testing.assert_array_equal(back.features, ds.features)
    np.testing.assert_array_equal(back.labels, ds.labels)
    assert back.graph.edges().tolist() == ds.graph.edges().tolist()
    assert back.name == "tiny"
    assert load_split(tmp_path / "t").to_dict() == split.to_dict()


def test_missing_directory_names_path(tmp_path):
    with pytest.raises(LoadError, match="nowhere"):
        load_dataset(tmp_path / "nowhere")


def test_bad_edge_reports_line(tmp_path):
    d = save_dataset(_tiny(), tmp_path / "t")
    (d / "edges.tsv").write_text("0\t1\n1\t9\n")
    with pytest.raises(LoadError) as exc:
        load_dataset(d)
    assert exc.value.line == 2 and exc.value.path.endswith("edges.tsv")


def test_bad_feature_and_label_files(tmp_path):
    d = save_dataset(_tiny(), tmp_path / "t")
    (d / "labels.tsv").write_text("0\n1\n5\n0\n")
    with pytest.raises(LoadError, match="outside"):
        load_dataset(d)
    d = save_dataset(_tiny(), tmp_path / "u")
    (d / "features.tsv").write_text("0\t1\n1\tx\n0\t0\n1\t1\n")
    with pytest.raises(LoadError, match="non-numeric"):
        load_dataset(d)
    (d / "features.tsv").write_text("0\t1\n1\n0\t0\n1\t1\n")
    with pytest.raises(LoadError):
        load_dataset(d)


def test_find_dataset_uses_env(tmp_path, monkeypatch):
    save_dataset(_tiny(), tmp_path / "mine")
    monkeypatch.setenv("PND_DATA_DIR", str(tmp_path))
    assert find_dataset("mine") == tmp_path / "mine"
    with pytest.raises(LoadError, match="not found"):
        find_dataset("absent-dataset")


def test_cora_shape():
    ds = load_dataset(CORA)
    assert ds.num_nodes == 2485
    assert ds.graph.num_edges == 5069
    assert ds.num_classes == 7
    ds.graph.validate()


def test_splits_per_class_counts_and_determinism():
    labels = np.repeat(np.arange(3), 60)
    s = make_splits(labels, seed=4)
    for c in range(3):
        assert np.sum(labels[s.train] == c) == 20
        assert np.sum(labels[s.val] == c) == 30
    assert len(s.test_obs) == 30 and not s.inductive
    assert make_splits(labels, seed=4).to_dict() == s.to_dict()
    assert make_splits(labels, seed=5).to_dict() != s.to_dict()


def test_inductive_split_fraction():
    labels = np.repeat(np.arange(2), 100)
    s = make_splits(labels, seed=0, inductive=True)
    pool = 200 - 100
    assert len(s.test_ind) == int(0.2 * pool)
    assert len(s.test_obs) == pool - len(s.test_ind)
    s.validate(200)


def test_small_class_fallback_and_strict_mode():
    labels = np.array([0] * 60 + [1] * 10)
    with pytest.warns(UserWarning):
        s = make_splits(labels, seed=0)
    assert np.sum(labels[s.train] == 1) == 4
    with pytest.raises(SplitError):
        make_splits(labels, seed=0, allow_fallback=False)


def test_split_validation():
    with pytest.raises(SplitError):
        Split([0], [0], [1], []).validate(2)
    with pytest.raises(SplitError):
        Split([0], [], [1], []).validate(3)


def test_remove_inductive_edges():
    g = build_graph([[0, 1], [1, 2], [2, 3], [0, 3]], 4)
    h = remove_inductive_edges(g, [2])
    assert h.edges().tolist() == [[0, 1], [0, 3]]
    assert h.degrees[2] == 0


def test_chains_structure():
    ds, starts, far, hops = gen_chains(num_chains=20, length=6, num_classes=5, seed=1)
    assert ds.num_nodes == 120 and ds.graph.num_edges == 20 * 5
    assert np.all(ds.graph.degrees[starts] == 1)
    assert np.all(hops[far] > 2) and len(far) == 20 * 3
    # only base nodes carry features, and they carry their class
    assert np.count_nonzero(ds.features) == 20
    assert np.all(ds.features[starts, ds.labels[starts]] == 1.0)
    assert homophily(ds.graph, ds.labels) == 1.0
    assert np.bincount(ds.labels[starts]).tolist() == [4] * 5


def test_chains_noise_and_errors():
    ds, *_ = gen_chains(num_chains=10, length=4, num_classes=10, noise=0.1, feature_dim=12)
    assert ds.feature_dim == 12 and np.abs(ds.features).max() <= 1.1
    with pytest.raises(ConfigError):
        gen_chains(num_chains=7, num_classes=5)


@pytest.mark.parametrize("d,h,k,n", [(10, 0.8, 5, 50), (6, 0.5, 4, 20), (4, 1.0, 2, 9),
                                     (5, 0.6, 4, 10), (3, 0.0, 4, 6)])
def test_regular_homophily_is_exact(d, h, k, n):
    ds = gen_regular_homophily(d, h, k, n, seed=3)
    g = ds.graph
    assert np.all(g.degrees == d)
    same = round(h * d)
    for v in range(g.num_nodes):
        assert np.sum(ds.labels[g.neighbors(v)] == ds.labels[v]) == same
    assert homophily(g, ds.labels) == pytest.approx(same / d)


def test_regular_homophily_rejects_impossible():
    with pytest.raises(ConstructionError):
        gen_regular_homophily(3, 1.0, 1, 5)       # odd d·|V|
    with pytest.raises(ConstructionError):
        gen_regular_homophily(10, 1.0, 2, 5)      # class too small
    with pytest.raises(ConstructionError):
        gen_regular_homophily(4, 0.0, 1, 8)       # cross edges with one class
    with pytest.raises(ConstructionError):
        gen_regular_homophily(6, 0.5, 3, 20)      # 3 cross edges cannot split over 2 other classes


def test_synth_teacher_output_rows():
    labels = np.array([0, 0, 1, 2, 1, 2])
    P = synth_teacher_output(labels, 3, p=0.8, epsilon=0.0, q=0.1, star=0)
    np.testing.assert_allclose(P.sum(1), 1.0)
    np.testing.assert_allclose(P[0], [0.1, 0.45, 0.45])
    np.testing.assert_allclose(P[3], [0.1, 0.1, 0.8])
    P = synth_teacher_output(labels, 3, 0.8, 0.4, 0.1, 0, flips={2: 0, 5: 1})
    assert P[2].argmax() == 0 and P[5].argmax() == 1
    P = synth_teacher_output(labels, 3, 0.8, 0.4, 0.1, 0, rng=np.random.default_rng(0))
    assert np.sum(P.argmax(1)[1:] != labels[1:]) == 2


def test_synth_teacher_output_validation():
    labels = np.array([0, 1])
    with pytest.raises(InputError):
        synth_teacher_output(labels, 2, 0.5, 0.0, 0.1, 0)    # p must exceed 1/K
    with pytest.raises(InputError):
        synth_teacher_output(labels, 2, 0.9, 0.0, 0.5, 0)    # q must be below 1/K
    with pytest.raises(InputError):
        synth_teacher_output(labels, 2, 0.9, 0.0, 0.1, 1)    # star must be class 0
    with pytest.raises(InputError):
        synth_teacher_output(labels, 2, 0.9, 0.0, 0.1, 0, flips={1: 1})


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 5), st.integers(2, 40), st.integers(0, 1000), st.booleans())
def test_splits_partition_nodes(k, per, seed, inductive):
    labels = np.repeat(np.arange(k), per)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        s = make_splits(labels, seed, per_class_train=3, per_class_val=4, inductive=inductive)
    s.validate(len(labels))
    assert json.loads(json.dumps(s.to_dict())) == s.to_dict()
