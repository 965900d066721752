import json

import pytest

from specreq.cli import main

from conftest import DEMO_CONFIG, DEMO_CORPUS, DEMO_DOCUMENTS


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


def test_preprocess_and_segment(tmp_path, capsys):
    clean, report = tmp_path / "clean.json", tmp_path / "report.json"
    code, _ = run(capsys, "preprocess", "--input", str(DEMO_DOCUMENTS[0]), "--output", str(clean), "--report", str(report))
    assert code == 0
    assert json.loads(report.read_text())["header_footer"]["detected_lines"]
    code, out = run(capsys, "segment", "--input", str(clean))
    assert code == 0
    reqs = [json.loads(line) for line in out.out.splitlines()]
    assert reqs and all(r["text"] for r in reqs)


def test_split_is_deterministic(tmp_path, capsys):
    ids = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["--seed", "7", "split", "--input", str(DEMO_CORPUS), "--output-dir", str(out)]) == 0
        ids.append([json.loads(line)["id"] for line in (out / "train.jsonl").read_text().splitlines()])
    assert ids[0] == ids[1] and len(ids[0]) == 13
    capsys.readouterr()


def test_stats(capsys):
    code, out = run(capsys, "stats", "--input", str(DEMO_CORPUS))
    assert code == 0 and "hasDimension" in out.out


def test_eval_ner_rules(tmp_path, capsys):
    csv_path = tmp_path / "ner.csv"
    code, out = run(capsys, "eval-ner", "--test", str(DEMO_CORPUS), "--csv", str(csv_path))
    assert code == 0
    assert json.loads(out.out)["span_level"]["micro"]["f1"] == 1.0
    assert csv_path.read_text().startswith("model,Door_Assembly_P")


def test_train_and_eval_re(tmp_path, capsys):
    model = tmp_path / "re.json"
    code, _ = run(capsys, "--seed", "1", "train-re", "--train", str(DEMO_CORPUS), "--output", str(model),
                  "--kind", "dt", "--params", '{"max_depth": 10}')
    assert code == 0 and model.exists()
    code, out = run(capsys, "eval-re", "--model", str(model), "--test", str(DEMO_CORPUS))
    assert code == 0 and "macro" in json.loads(out.out)


def test_train_ner_crf(tmp_path, capsys):
    model = tmp_path / "crf.json"
    code, _ = run(capsys, "train-ner-crf", "--train", str(DEMO_CORPUS), "--output", str(model), "--max-iter", "5")
    assert code == 0
    code, out = run(capsys, "eval-ner", "--engine", "crf", "--crf-model", str(model), "--test", str(DEMO_CORPUS))
    assert code == 0 and "token_level" in json.loads(out.out)


def test_extract(tmp_path, capsys):
    out = tmp_path / "out.json"
    code, _ = run(capsys, "--config", str(DEMO_CONFIG), "extract", "--input", *map(str, DEMO_DOCUMENTS[:2]),
                  "--output", str(out))
    assert code == 0 and len(json.loads(out.read_text())) == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["preprocess", "--input", "/nonexistent.json"],
        ["eval-re", "--model", "/nonexistent.json", "--test", "/nonexistent.jsonl"],
        ["train-re", "--train", "CORPUS", "--output", "x", "--params", "{bad"],
        ["train-re", "--train", "CORPUS", "--output", "x", "--combination", "5"],
        ["--config", "/nonexistent.cfg", "extract", "--input", "x"],
    ],
)
def test_invalid_input_exits_2(tmp_path, capsys, argv):
    argv = [str(DEMO_CORPUS) if a == "CORPUS" else str(tmp_path / a) if a == "x" else a for a in argv]
    assert main(argv) == 2
    capsys.readouterr()


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    capsys.readouterr()
