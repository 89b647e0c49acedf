import json

import numpy as np
import pytest

from pndlab.cli import main
from pndlab.datasets import load_dataset
from pndlab.report import mean_std

FAST = ["--teacher.hidden=8", "--teacher.max_epochs=15", "--student.hidden=8",
        "--student.max_epochs=15", "--per_class_train=5", "--per_class_val=5", "--plots=false"]


@pytest.fixture
def synth(tmp_path):
    assert main(["gen-synthetic", "--out", str(tmp_path / "data"), "--degree=4", "--h=0.5",
                 "--num_classes=3", "--nodes_per_class=20"]) == 0
    return tmp_path / "data" / "regular-d4-h0.5"


def test_missing_dataset_exits_2_and_names_path(tmp_path, capsys):
    code = main(["distill", "--out", str(tmp_path), "--dataset", str(tmp_path / "nope")])
    assert code == 2
    assert str(tmp_path / "nope") in capsys.readouterr().err


def test_unknown_key_exits_2(tmp_path, capsys):
    assert main(["theory-check", "--out", str(tmp_path), "--no_such_key=1"]) == 2
    assert "no_such_key" in capsys.readouterr().err


def test_bad_value_exits_2(tmp_path):
    assert main(["distill", "--out", str(tmp_path), "--dataset=cora", "--variant=pnd",
                 "--gamma=0.5"]) == 2
    assert main(["gen-chains", "--out", str(tmp_path), "--num_chains=7"]) == 2


def test_gen_synthetic_writes_loadable_dataset(synth):
    ds = load_dataset(synth)
    assert ds.num_nodes == 60 and np.all(ds.graph.degrees == 4)


def test_gen_chains_and_make_splits(tmp_path):
    assert main(["gen-chains", "--out", str(tmp_path), "--seed", "3"]) == 0
    d = tmp_path / "chains"
    assert (d / "splits.json").is_file() and (d / "hops.tsv").is_file()
    assert load_dataset(d).num_nodes == 30 * 8
    assert main(["make-splits", "--out", str(tmp_path), "--dataset", str(d), "--seeds=0-2",
                 "--per_class_train=2", "--per_class_val=2"]) == 0
    files = sorted(p.name for p in (tmp_path / "chains" / "splits").glob("[0-9]*.json"))
    assert files == ["0.json", "1.json", "2.json"]


def test_train_teacher_and_distill_are_byte_identical_on_rerun(tmp_path, synth):
    outs = []
    for run in ("a", "b"):
        out = tmp_path / run
        args = ["--out", str(out), "--dataset", str(synth), "--seeds=0-1"] + FAST
        assert main(["train-teacher"] + args) == 0
        assert main(["distill", "--variant=pnd_fix", "--gamma=0.9", "--iterations=5"] + args) == 0
        outs.append(out)
    rel = ["regular-d4-h0.5/teacher/report.json", "regular-d4-h0.5/teacher/0/teacher.pndt",
           "regular-d4-h0.5/teacher/1/p_teacher.tsv",
           "regular-d4-h0.5/pnd_fix_g0.9_T5/report.json",
           "regular-d4-h0.5/pnd_fix_g0.9_T5/1/metrics.jsonl"]
    for r in rel:
        assert (outs[0] / r).read_bytes() == (outs[1] / r).read_bytes(), r
    assert (outs[0] / "regular-d4-h0.5/pnd_fix_g0.9_T5/timing.json").is_file()


def test_report_summary_recomputes_from_per_seed(tmp_path, synth):
    args = ["--out", str(tmp_path), "--dataset", str(synth), "--seeds=0-2"] + FAST
    assert main(["distill", "--variant=glnn"] + args) == 0
    rep = json.loads((tmp_path / "regular-d4-h0.5/glnn/report.json").read_text())
    vals = [rep["per_seed"][s]["test_obs_acc"] for s in ("0", "1", "2")]
    assert rep["summary"]["test_obs_acc"]["mean"] == pytest.approx(np.mean(vals), abs=1e-15)
    assert rep["summary"]["test_obs_acc"]["std"] == pytest.approx(np.std(vals), abs=1e-15)
    assert rep["summary"]["test_obs_acc"]["n"] == 3


def test_single_seed_reports_zero_std(tmp_path, synth):
    args = ["--out", str(tmp_path), "--dataset", str(synth), "--seed", "4"] + FAST
    assert main(["distill", "--variant=mlp"] + args) == 0
    rep = json.loads((tmp_path / "regular-d4-h0.5/mlp/report.json").read_text())
    assert rep["summary"]["test_obs_acc"]["std"] == 0.0
    assert list(rep["per_seed"]) == ["4"]


def test_teacher_cache_is_reused_and_invalidated(tmp_path, synth):
    args = ["--out", str(tmp_path), "--dataset", str(synth), "--seed", "0"] + FAST
    assert main(["train-teacher"] + args) == 0
    ckpt = tmp_path / "regular-d4-h0.5/teacher/0/teacher.pndt"
    stamp = ckpt.stat().st_mtime_ns
    assert main(["train-teacher"] + args) == 0
    assert ckpt.stat().st_mtime_ns == stamp
    assert main(["train-teacher", "--teacher.lr=0.02"] + args) == 0
    assert ckpt.stat().st_mtime_ns != stamp


def test_inductive_mode_reports_both_test_sets(tmp_path, synth):
    args = ["--out", str(tmp_path), "--dataset", str(synth), "--seed", "0",
            "--mode=inductive"] + FAST
    assert main(["distill", "--variant=glnn"] + args) == 0
    rep = json.loads((tmp_path / "regular-d4-h0.5/glnn_ind/report.json").read_text())
    assert {"test_obs_acc", "test_ind_acc"} <= set(rep["summary"])


def test_sweep_and_energy_outputs(tmp_path, synth):
    args = ["--out", str(tmp_path), "--dataset", str(synth), "--seed", "0"] + FAST
    assert main(["sweep", "--variant=pnd", "--gamma_grid=0.1,0.9", "--t_grid=2,4"] + args) == 0
    table = (tmp_path / "regular-d4-h0.5/sweep/pnd/table.tsv").read_text().splitlines()
    assert table[0] == "T\tgamma=0.1\tgamma=0.9" and len(table) == 3
    assert main(["energy-trace"] + args) == 0
    rep = json.loads((tmp_path / "regular-d4-h0.5/energy/report.json").read_text())
    assert rep["seeds"] == 1 and "0" in rep["per_seed"]


def test_theory_check_small(tmp_path):
    assert main(["theory-check", "--out", str(tmp_path), "--count=5"]) == 0
    rep = json.loads((tmp_path / "theory/report.json").read_text())
    assert rep["tuples"] == 5 and rep["agree"] == 5
    assert (tmp_path / "theory/thresholds.png").is_file()


def test_mean_std_population():
    assert mean_std([0.5]) == {"mean": 0.5, "std": 0.0, "n": 1}
    assert mean_std([0.0, 1.0])["std"] == 0.5
