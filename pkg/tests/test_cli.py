import json
import subprocess
import sys

import numpy as np
import pytest

import fixtures as fx
from simpleshot.cli import main
from simpleshot.dataio import (
    format_multiway_split,
    read_features,
    write_codebook,
    write_csv_features,
    write_features,
)
from simpleshot.ecoc import Codebook
from simpleshot.features import FeatureSet


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def benefit(tmp_path_factory):
    d = tmp_path_factory.mktemp("benefit")
    assert main(["gen-synthetic", "--preset", "centering-benefit",
                 "--base-out", str(d / "base.fsfv"), "--novel-out", str(d / "novel.fsfv")]) == 0
    return d


def fewshot_args(d, *extra):
    return ["eval-fewshot", "--novel", d / "novel.fsfv", "--base", d / "base.fsfv",
            "--ways", 5, "--shots", 1, "--queries", 15, "--episodes", 200, "--seed", 42, *extra]


class TestEvalFewshot:
    def test_report_fields(self, benefit, capsys):
        code, out, err = run(fewshot_args(benefit, "--transform", "cl2n"), capsys)
        assert code == 0 and err == ""
        rep = json.loads(out)
        assert list(rep) == ["transform", "ways", "shots", "queries", "episodes", "seed",
                             "mean_accuracy", "ci95"]
        assert rep["transform"] == "cl2n" and 0 <= rep["mean_accuracy"] <= 1

    def test_emit_episodes_and_csv(self, benefit, capsys):
        _, out, _ = run(fewshot_args(benefit, "--emit-episodes"), capsys)
        assert len(json.loads(out)["per_episode"]) == 200
        _, out, _ = run(fewshot_args(benefit, "--format", "csv"), capsys)
        header, row = out.splitlines()
        assert header == "transform,ways,shots,queries,episodes,seed,mean_accuracy,ci95"
        assert row.startswith("un,5,1,15,200,42,")

    def test_repeatable_and_thread_independent(self, benefit, tmp_path, capsys):
        outs = []
        for i, threads in enumerate((1, 1, 8)):
            path = tmp_path / f"r{i}.json"
            code, _, _ = run(fewshot_args(benefit, "--transform", "l2n", "--threads", threads,
                                          "--output", path), capsys)
            assert code == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1] == outs[2]

    def test_threads_from_environment(self, benefit, capsys, monkeypatch):
        _, ref, _ = run(fewshot_args(benefit), capsys)
        monkeypatch.setenv("FEWSHOT_THREADS", "4")
        _, out, _ = run(fewshot_args(benefit), capsys)
        assert out == ref
        monkeypatch.setenv("FEWSHOT_THREADS", "many")
        assert run(fewshot_args(benefit), capsys)[0] == 1

    def test_cl2n_without_base(self, benefit, capsys):
        code, out, err = run(["eval-fewshot", "--novel", benefit / "novel.fsfv",
                              "--transform", "cl2n"], capsys)
        assert code == 1 and out == ""
        assert err.startswith("error: ") and err.count("\n") == 1

    @pytest.mark.parametrize("extra", [["--ways", 1], ["--threads", 0], ["--transform", "pca"],
                                       ["--bogus"]])
    def test_config_errors(self, benefit, capsys, extra):
        assert run(fewshot_args(benefit, *extra), capsys)[0] == 1

    def test_data_errors(self, benefit, tmp_path, capsys):
        assert run(fewshot_args(benefit, "--ways", 11), capsys)[0] == 2
        code, _, err = run(["eval-fewshot", "--novel", tmp_path / "missing.fsfv"], capsys)
        assert code == 2 and err.startswith("error: ")
        (tmp_path / "bad.fsfv").write_bytes(b"NOPE" + bytes(20))
        assert run(["eval-fewshot", "--novel", tmp_path / "bad.fsfv"], capsys)[0] == 2


class TestEvalMultiway:
    def write(self, d, labels, x, support, test):
        write_features(FeatureSet(labels, x), d / "f.fsfv")
        (d / "split.tsv").write_text(format_multiway_split(support, test))

    def test_hand_fixture(self, tmp_path, capsys):
        x = [[0.0], [10.0]] + [[0.5]] * 9 + [[6.0], [9.0], [4.0]]
        labels = [1, 2] + [1] * 10 + [2, 2]
        self.write(tmp_path, labels, x, [0, 1], range(2, 14))
        code, out, _ = run(["eval-multiway", "--features", tmp_path / "f.fsfv",
                            "--split", tmp_path / "split.tsv"], capsys)
        rep = json.loads(out)
        assert code == 0
        assert abs(rep["per_class_accuracy"] - 0.7) <= 1e-12
        assert abs(rep["mean_accuracy"] - 10 / 12) <= 1e-12
        assert rep["class_breakdown"] == [{"class": 1, "test_count": 10, "correct": 9},
                                          {"class": 2, "test_count": 2, "correct": 1}]

    def test_equal_counts(self, tmp_path, capsys):
        self.write(tmp_path, [1, 2, 1, 1, 2, 2], [[0.0], [10.0], [1.0], [7.0], [9.0], [8.0]],
                   [0, 1], [2, 3, 4, 5])
        _, out, _ = run(["eval-multiway", "--features", tmp_path / "f.fsfv",
                         "--split", tmp_path / "split.tsv"], capsys)
        rep = json.loads(out)
        assert rep["per_class_accuracy"] == rep["mean_accuracy"] == 0.75

    def test_missing_split(self, tmp_path, capsys):
        write_features(FeatureSet([1], [[0.0]]), tmp_path / "f.fsfv")
        code, _, err = run(["eval-multiway", "--features", tmp_path / "f.fsfv",
                            "--split", tmp_path / "nope.tsv"], capsys)
        assert code == 2 and err.startswith("error: ")

    def test_bad_split(self, tmp_path, capsys):
        self.write(tmp_path, [1, 2], [[0.0], [1.0]], [0], [1])
        code, _, err = run(["eval-multiway", "--features", tmp_path / "f.fsfv",
                            "--split", tmp_path / "split.tsv"], capsys)
        assert code == 2 and "zero support" in err


@pytest.fixture(scope="module")
def separable_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("ecoc")
    labels, x = fx.separable_ecoc_data()
    write_features(FeatureSet(labels, x), d / "train.fsfv")
    write_codebook(Codebook(fx.SEPARABLE_CODEBOOK, (0, 1, 2, 3)), d / "book.tsv")
    assert main(["ecoc", "train", "--features", str(d / "train.fsfv"),
                 "--codebook", str(d / "book.tsv"), "--learning-rate", "0.02",
                 "--epochs", "500", "--seed", "3", "--output", str(d / "model.json")]) == 0
    return d


class TestEcoc:
    def test_codebook_too_short(self, capsys):
        code, _, err = run(["ecoc", "codebook", "--classes", 5, "--bits", 2], capsys)
        assert code == 1 and "ceil(log2(5)) = 3" in err

    def test_codebook_deterministic(self, capsys):
        argv = ["ecoc", "codebook", "--classes", 16, "--bits", 64, "--seed", 9]
        _, a, _ = run(argv, capsys)
        _, b, _ = run(argv, capsys)
        assert a == b and len(a.splitlines()) == 16

    def test_codebook_labels_from(self, tmp_path, capsys):
        write_features(FeatureSet([40, 10, 40, 30], np.zeros((4, 1))), tmp_path / "f.fsfv")
        _, out, _ = run(["ecoc", "codebook", "--labels-from", tmp_path / "f.fsfv",
                         "--bits", 4], capsys)
        assert [line.split("\t")[0] for line in out.splitlines()] == ["10", "30", "40"]

    def test_train_eval_separable(self, separable_files, capsys):
        d = separable_files
        doc = json.loads((d / "model.json").read_text())
        assert doc["loss_trace"][-1] == pytest.approx(4.336818574617839, rel=1e-9)
        code, out, _ = run(["ecoc", "eval", "--model", d / "model.json", "--codebook",
                            d / "book.tsv", "--queries", d / "train.fsfv"], capsys)
        rep = json.loads(out)
        assert code == 0 and rep["accuracy"] == 1.0 and rep["queries"] == 200

    def test_add_class(self, separable_files, tmp_path, capsys):
        d = separable_files
        rng = np.random.default_rng(0)
        center = np.zeros(8)
        center[4:] = 2.0
        shots = center + 0.05 * rng.standard_normal((5, 8))
        queries = center + 0.05 * rng.standard_normal((10, 8))
        write_features(FeatureSet([7] * 5, shots), tmp_path / "shots.fsfv")
        write_features(FeatureSet([7] * 10, queries), tmp_path / "q.fsfv")
        code, out, _ = run(["ecoc", "eval", "--model", d / "model.json", "--codebook",
                            d / "book.tsv", "--queries", tmp_path / "q.fsfv",
                            "--add-class", 7, "--shots", tmp_path / "shots.fsfv"], capsys)
        rep = json.loads(out)
        assert code == 0 and rep["num_classes"] == 5 and rep["added_class"] == 7
        assert rep["accuracy"] == 1.0

    def test_add_class_needs_shots(self, separable_files, capsys):
        d = separable_files
        code, _, _ = run(["ecoc", "eval", "--model", d / "model.json", "--codebook",
                          d / "book.tsv", "--queries", d / "train.fsfv", "--add-class", 9],
                         capsys)
        assert code == 1

    def test_unknown_label(self, separable_files, tmp_path, capsys):
        write_features(FeatureSet([99], np.zeros((1, 8))), tmp_path / "bad.fsfv")
        code, _, err = run(["ecoc", "train", "--features", tmp_path / "bad.fsfv",
                            "--codebook", separable_files / "book.tsv"], capsys)
        assert code == 2 and "99" in err

    def test_short_codebook_file(self, tmp_path, capsys):
        write_features(FeatureSet([0], np.zeros((1, 2))), tmp_path / "f.fsfv")
        (tmp_path / "book.tsv").write_text("0\t0\n1\t1\n2\t0\n")
        code, _, _ = run(["ecoc", "train", "--features", tmp_path / "f.fsfv",
                          "--codebook", tmp_path / "book.tsv"], capsys)
        assert code == 2


class TestGenSynthetic:
    def gen(self, d, name, *extra):
        argv = ["gen-synthetic", "--classes", 4, "--dimension", 3, "--records-per-class", 5,
                "--class-spread", 1, "--within-spread", 0.5, "--offset-norm", 0,
                "--base-out", d / f"{name}_b.fsfv", "--novel-out", d / f"{name}_n.fsfv", *extra]
        return main([str(a) for a in argv])

    def test_deterministic_and_offset_matters(self, tmp_path):
        assert self.gen(tmp_path, "a") == 0 and self.gen(tmp_path, "b") == 0
        assert self.gen(tmp_path, "c", "--offset-norm", 50) == 0
        a, b, c = ((tmp_path / f"{n}_b.fsfv").read_bytes() for n in "abc")
        assert a == b != c

    def test_preset(self, tmp_path, benefit):
        base = read_features(benefit / "base.fsfv")
        novel = read_features(benefit / "novel.fsfv")
        assert (len(base), len(novel), base.dimension) == (1000, 1000, 64)
        assert novel.classes().tolist() == list(range(10, 20))

    def test_invalid_spec(self, tmp_path, capsys):
        assert self.gen(tmp_path, "x", "--classes", 1) == 1
        assert run(["gen-synthetic", "--base-out", tmp_path / "b.fsfv",
                    "--novel-out", tmp_path / "n.fsfv"], capsys)[0] == 1
        assert self.gen(tmp_path, "x", "--base-out", tmp_path / "b.npy") == 1


class TestConvert:
    def test_round_trip(self, tmp_path, capsys):
        rng = np.random.default_rng(1)
        fs = FeatureSet(rng.integers(0, 100, 30), rng.standard_normal((30, 6)))
        write_csv_features(fs, tmp_path / "a.csv")
        assert main(["convert", "--in", str(tmp_path / "a.csv"),
                     "--out", str(tmp_path / "a.fsfv")]) == 0
        assert main(["convert", "--in", str(tmp_path / "a.fsfv"),
                     "--out", str(tmp_path / "b.csv")]) == 0
        assert (tmp_path / "a.csv").read_text() == (tmp_path / "b.csv").read_text()
        assert read_features(tmp_path / "a.fsfv").vectors.tobytes() == fs.vectors.tobytes()

    def test_bad_magic(self, tmp_path, capsys):
        (tmp_path / "x.fsfv").write_bytes(b"JUNK" + bytes(14))
        code, _, err = run(["convert", "--in", tmp_path / "x.fsfv",
                            "--out", tmp_path / "x.csv"], capsys)
        assert code == 2 and "magic" in err

    def test_header_only_csv(self, tmp_path):
        (tmp_path / "e.csv").write_text("label,f0,f1\n")
        assert main(["convert", "--in", str(tmp_path / "e.csv"),
                     "--out", str(tmp_path / "e.fsfv")]) == 0
        data = (tmp_path / "e.fsfv").read_bytes()
        assert len(data) == 18 and data[-8:] == bytes(8)

    def test_ragged_csv(self, tmp_path, capsys):
        (tmp_path / "r.csv").write_text("label,f0,f1\n1,2\n")
        code, _, err = run(["convert", "--in", tmp_path / "r.csv",
                            "--out", tmp_path / "r.fsfv"], capsys)
        assert code == 2 and "row 2" in err


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "simpleshot", "ecoc", "codebook",
                           "--classes", "5", "--bits", "2"], capture_output=True, text=True)
    assert proc.returncode == 1
    assert proc.stderr.startswith("error: ") and proc.stderr.count("\n") == 1
