import csv
import json

import pytest

from kiddi.cli import main
from kiddi.corpus import save_corpus


@pytest.fixture(scope="module")
def synth_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("data") / "syn.jsonl"
    assert main(["gen-synthetic", "--num-diseases", "4", "--num-symptoms", "12", "--num-dialogues", "40", "--out", str(p)]) == 0
    return p


def train_args(corpus, out, *extra):
    return ["train", "--corpus", str(corpus), "--out", str(out), "--preset", "desk", "--dim", "16", "--epochs", "2", *extra]


class TestBuildKg:
    def test_toy_counts(self, tmp_path, toy_corpus, capsys):
        save_corpus(toy_corpus, tmp_path / "t.jsonl")
        assert main(["build-kg", "--corpus", str(tmp_path / "t.jsonl"), "--out", str(tmp_path / "g.json")]) == 0
        assert capsys.readouterr().out.strip() == "symptoms=3 diseases=2 sd_edges=4 ss_edges=4"

    def test_empty_corpus_fails(self, tmp_path):
        (tmp_path / "e.jsonl").write_text('{"vocab": {"symptoms": [], "diseases": []}}\n')
        assert main(["build-kg", "--corpus", str(tmp_path / "e.jsonl"), "--out", str(tmp_path / "g.json")]) == 1

    def test_rerun_identical(self, tmp_path, synth_file):
        for name in ("a.json", "b.json"):
            main(["build-kg", "--corpus", str(synth_file), "--out", str(tmp_path / name)])
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


class TestTrainPredict:
    def test_train_outputs(self, tmp_path, synth_file):
        out = tmp_path / "run"
        assert main(train_args(synth_file, out, "--k", "2")) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["variant"] == "KI_DDI" and report["config"]["train"]["K"] == 2
        assert (out / "checkpoint" / "params.bin").exists()
        lines = (out / "history.csv").read_text().splitlines()
        assert lines[0].startswith("# config ") and lines[1] == "epoch,train_loss,val_accuracy"
        assert len(lines) == 4

    def test_variant_label(self, tmp_path, synth_file):
        assert main(train_args(synth_file, tmp_path / "r", "--variant", "DE_linear")) == 0
        assert json.loads((tmp_path / "r" / "report.json").read_text())["variant"] == "DE_linear"

    def test_hierarchical_flag(self, tmp_path, synth_file):
        assert main(train_args(synth_file, tmp_path / "h", "--hierarchical")) == 0
        rep = json.loads((tmp_path / "h" / "report.json").read_text())
        assert rep["variant"] == "hierarchical" and "group_accuracy" in rep["test"]

    def test_missing_corpus(self, tmp_path):
        assert main(train_args(tmp_path / "nope.jsonl", tmp_path / "r")) == 2

    def test_missing_flag_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["train", "--out", "x"])
        assert exc.value.code == 2

    def test_predict(self, tmp_path, synth_file, capsys):
        out = tmp_path / "run"
        main(train_args(synth_file, out))
        capsys.readouterr()
        assert main(["predict", "--checkpoint", str(out / "checkpoint"), "--corpus", str(synth_file), "--top-k", "50"]) == 0
        res = json.loads(capsys.readouterr().out)
        assert len(res["predictions"]) == 40
        for p in res["predictions"]:
            assert len(p["ranked"]) == 4
            assert abs(sum(r["probability"] for r in p["ranked"]) - 1.0) <= 1e-9
        main(["predict", "--checkpoint", str(out / "checkpoint"), "--corpus", str(synth_file), "--top-k", "50"])
        assert json.loads(capsys.readouterr().out) == res

    def test_predict_vocab_mismatch(self, tmp_path, synth_file, toy_corpus):
        out = tmp_path / "run"
        main(train_args(synth_file, out))
        save_corpus(toy_corpus, tmp_path / "t.jsonl")
        main(["build-kg", "--corpus", str(tmp_path / "t.jsonl"), "--out", str(tmp_path / "g.json")])
        code = main(["predict", "--checkpoint", str(out / "checkpoint"), "--corpus", str(tmp_path / "t.jsonl"), "--kg", str(tmp_path / "g.json")])
        assert code == 1

    def test_predict_unlabelled_input(self, tmp_path, synth_file, capsys):
        out = tmp_path / "run"
        main(train_args(synth_file, out))
        (tmp_path / "q.jsonl").write_text(json.dumps({"id": "q1", "turns": [{"speaker": "patient", "text": "hello"}]}) + "\n")
        capsys.readouterr()
        assert main(["predict", "--checkpoint", str(out / "checkpoint"), "--corpus", str(tmp_path / "q.jsonl"), "--top-k", "2"]) == 0
        assert len(json.loads(capsys.readouterr().out)["predictions"][0]["ranked"]) == 2


class TestGenSynthetic:
    def test_deterministic(self, tmp_path):
        for name in ("a", "b"):
            main(["gen-synthetic", "--num-dialogues", "20", "--seed", "3", "--out", str(tmp_path / f"{name}.jsonl")])
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()

    def test_header_only(self, tmp_path):
        assert main(["gen-synthetic", "--num-dialogues", "0", "--out", str(tmp_path / "z.jsonl")]) == 0
        lines = (tmp_path / "z.jsonl").read_text().splitlines()
        assert len(lines) == 1 and "vocab" in json.loads(lines[0])

    def test_bad_bounds(self, tmp_path):
        assert main(["gen-synthetic", "--noise", "2", "--out", str(tmp_path / "z.jsonl")]) == 1

    def test_lexicon_out(self, tmp_path):
        main(["gen-synthetic", "--num-dialogues", "3", "--out", str(tmp_path / "s.jsonl"), "--lexicon-out", str(tmp_path / "lex.json")])
        assert len(json.loads((tmp_path / "lex.json").read_text())) == 40


@pytest.mark.slow
class TestAblate:
    def test_rows_and_rerun(self, tmp_path, synth_file):
        args = ["ablate", "--corpus", str(synth_file), "--preset", "desk", "--dim", "16", "--epochs", "1"]
        assert main(args + ["--out", str(tmp_path / "a.csv")]) == 0
        main(args + ["--out", str(tmp_path / "b.csv")])
        text = (tmp_path / "a.csv").read_text()
        assert text == (tmp_path / "b.csv").read_text()
        lines = text.splitlines()
        assert lines[0].startswith("# config ")
        rows = list(csv.DictReader(lines[1:]))
        assert len(rows) == 14
        assert len({r["split_fingerprint"] for r in rows}) == 1
