import pytest

from support import FIXTURES
from tdparse.cli import EXIT_ERROR, EXIT_GARDEN_PATH, EXIT_OK, main


@pytest.fixture(scope="module")
def g1_model_path(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "g1.model"
    rc = main([
        "train",
        "--trees", str(FIXTURES / "g1.trees"),
        "--heldout", str(FIXTURES / "g1.trees"),
        "--out", str(out),
    ])
    assert rc == EXIT_OK
    return out


def _run(capsys, argv):
    rc = main(argv)
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def test_train_report(tmp_path, capsys):
    out = tmp_path / "m.model"
    rc, stdout, _ = _run(capsys, [
        "train",
        "--trees", str(FIXTURES / "g1.trees"),
        "--heldout", str(FIXTURES / "g1.trees"),
        "--out", str(out),
        "--conditioning", "2,2,2",
    ])
    assert rc == EXIT_OK
    assert out.exists()
    report = dict(line.split("=", 1) for line in stdout.splitlines())
    assert report["train_trees"] == "4"
    assert report["conditioning"] == "2,2,2"
    assert report["model"] == str(out)


def test_train_rejects_bad_conditioning(tmp_path, capsys):
    rc, _, stderr = _run(capsys, [
        "train",
        "--trees", str(FIXTURES / "g1.trees"),
        "--heldout", str(FIXTURES / "g1.trees"),
        "--out", str(tmp_path / "m.model"),
        "--conditioning", "1,2",
    ])
    assert rc == EXIT_ERROR
    assert "bad conditioning depths" in stderr


def test_parse_success(g1_model_path, capsys):
    rc, stdout, _ = _run(capsys, [
        "parse",
        "--model", str(g1_model_path),
        "--input", str(FIXTURES / "g1.sents"),
    ])
    assert rc == EXIT_OK
    lines = stdout.splitlines()
    assert len(lines) == 4
    assert lines[0].startswith("sent=1 status=parsed logprob=")
    assert "tree=(TOP (S (NP (NN Spot)) (VP (VBD ran)))" in lines[0]
    assert all("status=parsed" in l for l in lines)


def test_parse_garden_path_exit_code(g1_model_path, tmp_path, capsys):
    bad = tmp_path / "bad.sents"
    bad.write_text("Spot ran\nthe the\n")
    rc, stdout, _ = _run(capsys, [
        "parse",
        "--model", str(g1_model_path),
        "--input", str(bad),
    ])
    assert rc == EXIT_GARDEN_PATH
    lines = stdout.splitlines()
    assert "status=parsed" in lines[0]
    assert "sent=2 status=partial" in lines[1]


def test_parse_max_len_skips(g1_model_path, capsys):
    rc, stdout, _ = _run(capsys, [
        "parse",
        "--model", str(g1_model_path),
        "--input", str(FIXTURES / "g1.sents"),
        "--max-len", "2",
    ])
    assert rc == EXIT_OK
    assert "skipped=2" in stdout.splitlines()
    assert sum("status=parsed" in l for l in stdout.splitlines()) == 2


def test_parse_is_deterministic(g1_model_path, capsys):
    argv = ["parse", "--model", str(g1_model_path), "--input", str(FIXTURES / "g1.sents")]
    _, first, _ = _run(capsys, argv)
    _, second, _ = _run(capsys, argv)
    assert first == second


def test_parse_missing_model(tmp_path, capsys):
    rc, _, stderr = _run(capsys, [
        "parse",
        "--model", str(tmp_path / "nope.model"),
        "--input", str(FIXTURES / "g1.sents"),
    ])
    assert rc == EXIT_ERROR
    assert stderr.startswith("error=")


def test_ppl_report(g1_model_path, capsys):
    rc, stdout, _ = _run(capsys, [
        "ppl",
        "--model", str(g1_model_path),
        "--input", str(FIXTURES / "g1.sents"),
    ])
    assert rc == EXIT_OK
    report = dict(line.split("=", 1) for line in stdout.splitlines())
    assert report["sentences"] == "4"
    assert report["words"] == "15"
    assert report["failed_sentences"] == "0"
    assert report["fallback_words"] == "0"
    assert float(report["parser_ppl"]) > 1.0
    assert float(report["trigram_ppl"]) > 1.0
    assert float(report["mixed_ppl"]) > 1.0
    assert report["trigram_share"] == "0.36"


def test_ppl_empty_input(g1_model_path, tmp_path, capsys):
    empty = tmp_path / "empty.sents"
    empty.write_text("\n")
    rc, _, stderr = _run(capsys, [
        "ppl",
        "--model", str(g1_model_path),
        "--input", str(empty),
    ])
    assert rc == EXIT_ERROR
    assert "no sentences" in stderr


def test_eval_report(g1_model_path, capsys):
    rc, stdout, _ = _run(capsys, [
        "eval",
        "--model", str(g1_model_path),
        "--gold", str(FIXTURES / "g1.trees"),
    ])
    assert rc == EXIT_OK
    report = dict(line.split("=", 1) for line in stdout.splitlines())
    # the model was trained on these trees; it must reproduce them
    assert report["labeled_recall"] == "100.00"
    assert report["labeled_precision"] == "100.00"
    assert report["exact_match_pct"] == "100.00"
    assert report["failure_pct"] == "0.00"
    assert int(report["total_pops"]) > 0
    assert float(report["avg_pops_per_word"]) > 0.0


def test_eval_max_len(g1_model_path, capsys):
    rc, stdout, _ = _run(capsys, [
        "eval",
        "--model", str(g1_model_path),
        "--gold", str(FIXTURES / "g1.trees"),
        "--max-len", "2",
    ])
    assert rc == EXIT_OK
    assert dict(l.split("=", 1) for l in stdout.splitlines())["sentences"] == "2"


@pytest.mark.parametrize("name", ["g1", "g2"])
def test_oracle_check(name, capsys):
    rc, stdout, _ = _run(capsys, [
        "oracle-check",
        "--trees", str(FIXTURES / f"{name}.trees"),
        "--sentences", str(FIXTURES / f"{name}.sents"),
    ])
    assert rc == EXIT_OK
    lines = stdout.splitlines()
    assert lines[-1] == "summary=ok"
    assert all("ok=yes" in l for l in lines[:-1])
    assert all("derivations=match" in l for l in lines[:-1])
