import json
import shlex
import sys

import pytest

from edacsc import ParallelSample, read_corpus, write_corpus
from edacsc.cli import main

MOCK = f"{shlex.quote(sys.executable)} -m edacsc mock-corrector"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def last_json(out: str) -> dict:
    return json.loads(out.strip().splitlines()[-1])


def write_rows(path, rows):
    path.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows),
                    encoding="utf-8")


@pytest.fixture
def corpus(tmp_path):
    p = tmp_path / "corpus.jsonl"
    write_corpus(
        [
            ParallelSample("s1", "今天天汽很好，我们出趣玩，好吗？", "今天天气很好，我们出去玩，好吗？"),
            ParallelSample("s2", "天汽好。", "天气好。"),
            ParallelSample("s3", "没有错误。", "没有错误。"),
        ],
        str(p),
    )
    return p


def test_version(capsys):
    code, out, _ = run(capsys, "--version")
    assert code == 0 and "edacsc" in out


def test_help_shows_subcommands(capsys):
    code, out, _ = run(capsys, "--help")
    assert code == 0
    for name in ("validate", "augment", "merge", "stats", "schedule", "correct", "eval"):
        assert name in out


def test_validate_clean(corpus, capsys):
    code, out, _ = run(capsys, "validate", "--in", str(corpus))
    assert code == 0
    report = last_json(out)
    assert report["ok"] is True and report["valid"] == 3


def test_validate_broken_corpus_exits_3(tmp_path, capsys):
    p = tmp_path / "bad.jsonl"
    write_rows(p, [
        {"id": "a", "source": "xy", "target": "xy"},
        {"id": "b", "source": "xyz", "target": "xy"},
    ])
    with open(p, "a", encoding="utf-8") as fh:
        fh.write("not json\n")
    code, out, _ = run(capsys, "validate", "--in", str(p))
    assert code == 3
    report = last_json(out)
    assert report["valid"] == 1 and report["invalid"] == 2
    reasons = {v["reason"] for v in report["violations"]}
    assert reasons == {"length-mismatch", "malformed-line"}
    assert any(v["record"] == "line 3" for v in report["violations"])


def test_stats_output(corpus, capsys):
    code, out, _ = run(capsys, "stats", "--in", str(corpus))
    assert code == 0
    assert last_json(out) == {"sentences": 3, "avg_length": 8.3, "errors": 3}


def test_augment_split_end_to_end(corpus, tmp_path, capsys):
    out_path = tmp_path / "short.jsonl"
    code, out, _ = run(capsys, "augment", "split", "--in", str(corpus), "--out", str(out_path))
    assert code == 0
    report = last_json(out)
    assert report["samples_in"] == 3
    assert report["records_out"] == 5
    assert report["stats"]["sentences"] == 5

    records = list(read_corpus(str(out_path)))
    assert [r.id for r in records] == ["s1#s0", "s1#s1", "s1#s2", "s2#s0", "s3#s0"]
    assert "".join(r.source for r in records[:3]) == "今天天汽很好，我们出趣玩，好吗？"

    snapshot = json.loads((tmp_path / "short.jsonl.runconfig.json").read_text(encoding="utf-8"))
    assert snapshot["command"] == "augment split"
    assert snapshot["params"]["min_seg"] == 2
    assert snapshot["params"]["input"] == str(corpus)


def test_augment_split_flags(corpus, tmp_path, capsys):
    out_path = tmp_path / "short.jsonl"
    code, out, _ = run(
        capsys, "augment", "split", "--in", str(corpus), "--out", str(out_path),
        "--keep-error-free", "false", "--min-seg", "0",
    )
    assert code == 0
    records = list(read_corpus(str(out_path)))
    assert [r.id for r in records] == ["s1#s0", "s1#s1", "s2#s0"]


def test_augment_split_custom_delims(tmp_path, capsys):
    corpus = tmp_path / "c.jsonl"
    write_corpus([ParallelSample("a", "ab|cd", "ab|cd")], str(corpus))
    delims = tmp_path / "delims.txt"
    delims.write_text("|\n", encoding="utf-8")
    out_path = tmp_path / "out.jsonl"
    code, _, _ = run(capsys, "augment", "split", "--in", str(corpus), "--out", str(out_path),
                     "--delims", str(delims), "--min-seg", "0")
    assert code == 0
    assert [r.source for r in read_corpus(str(out_path))] == ["ab|", "cd"]


def test_augment_reduce_end_to_end(corpus, tmp_path, capsys):
    out_path = tmp_path / "reduced.jsonl"
    code, out, _ = run(capsys, "augment", "reduce", "--in", str(corpus), "--out", str(out_path))
    assert code == 0
    report = last_json(out)
    assert report == {
        "samples_in": 3,
        "records_out": 5,
        "variants_out": 3,
        "passthroughs": 2,
        "stats": report["stats"],
    }
    ids = [r.id for r in read_corpus(str(out_path))]
    assert ids == ["s1#r0", "s1#r1", "s1#r2", "s2", "s3"]


def test_merge_prefixes_collisions(tmp_path, capsys):
    a, b, out_path = tmp_path / "a.jsonl", tmp_path / "b.jsonl", tmp_path / "m.jsonl"
    write_corpus([ParallelSample("dup", "x", "x"), ParallelSample("a1", "p", "p")], str(a))
    write_corpus([ParallelSample("dup", "y", "y"), ParallelSample("b1", "q", "q")], str(b))
    code, out, _ = run(capsys, "merge", "--a", str(a), "--b", str(b), "--out", str(out_path))
    assert code == 0
    summary = last_json(out)
    assert summary["collisions"] == 1
    assert summary["stats"]["sentences"] == 4
    ids = [r.id for r in read_corpus(str(out_path))]
    assert ids == ["A:dup", "a1", "B:dup", "b1"]


def test_merge_of_empty_left_is_b(tmp_path, capsys):
    a, b, out_path = tmp_path / "a.jsonl", tmp_path / "b.jsonl", tmp_path / "m.jsonl"
    a.write_text("", encoding="utf-8")
    write_corpus([ParallelSample("b1", "q", "q")], str(b))
    code, _, _ = run(capsys, "merge", "--a", str(a), "--b", str(b), "--out", str(out_path))
    assert code == 0
    assert out_path.read_bytes() == b.read_bytes()


def test_merge_preserves_provenance(tmp_path, capsys):
    a, b, out_path = tmp_path / "a.jsonl", tmp_path / "b.jsonl", tmp_path / "m.jsonl"
    write_rows(a, [{"id": "x#r0", "source": "p", "target": "q",
                    "origin": "x", "method": "reduce", "retained": [0]}])
    write_rows(b, [{"id": "y#s0", "source": "r", "target": "r",
                    "origin": "y", "method": "split", "segment": 0}])
    code, _, _ = run(capsys, "merge", "--a", str(a), "--b", str(b), "--out", str(out_path))
    assert code == 0
    rows = [json.loads(line) for line in out_path.read_text(encoding="utf-8").splitlines()]
    assert rows[0]["method"] == "reduce" and rows[0]["retained"] == [0]
    assert rows[1]["method"] == "split" and rows[1]["segment"] == 0


def test_schedule_named_procedure(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code, out, _ = run(capsys, "schedule", "--procedure", "g",
                       "--reduce", "r.jsonl", "--short", "s.jsonl")
    assert code == 0
    assert last_json(out) == {"manifest": "schedule_g.json", "name": "g", "stages": 2}
    manifest = json.loads((tmp_path / "schedule_g.json").read_text(encoding="utf-8"))
    assert manifest == {
        "name": "g",
        "stages": [
            {"dataset": "r.jsonl", "init": "fresh"},
            {"dataset": "s.jsonl", "init": "best_of_previous"},
        ],
    }


def test_schedule_missing_role_is_validation_error(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code, _, err = run(capsys, "schedule", "--procedure", "g", "--reduce", "r.jsonl")
    assert code == 3
    error = json.loads(err.strip().splitlines()[-1])
    assert error["error"] == "validation" and "short" in error["message"]


def test_schedule_custom(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code, _, _ = run(capsys, "schedule", "--procedure", "custom",
                     "--stage1", "x.jsonl", "--stage2", "y.jsonl", "--out", "c.json")
    assert code == 0
    manifest = json.loads((tmp_path / "c.json").read_text(encoding="utf-8"))
    assert manifest["name"] == "custom"
    assert [s["dataset"] for s in manifest["stages"]] == ["x.jsonl", "y.jsonl"]


def test_correct_with_mock_and_eval(corpus, tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"substitutions": {"汽": "气", "趣": "去"}}, ensure_ascii=False),
                    encoding="utf-8")
    pred = tmp_path / "pred.jsonl"
    code, out, _ = run(
        capsys, "correct", "--cmd", f"{MOCK} --spec {shlex.quote(str(spec))}",
        "--in", str(corpus), "--out", str(pred), "--batch-size", "2",
    )
    assert code == 0
    assert last_json(out) == {"sentences": 3, "changed": 2}

    code, out, _ = run(capsys, "eval", "--gold", str(corpus), "--pred", str(pred),
                       "--report", "json")
    assert code == 0
    report = last_json(out)
    assert report["detection"] == {"accuracy": 1.0, "precision": 1.0, "recall": 1.0, "f1": 1.0}
    assert report["correction"]["f1"] == 1.0
    assert report["fpr"] == 0.0


def test_correct_cic_summary(corpus, tmp_path, capsys):
    pred = tmp_path / "pred.jsonl"
    code, out, _ = run(
        capsys, "correct", "--cmd", MOCK, "--in", str(corpus), "--out", str(pred),
        "--cic", "--max-iters", "2",
    )
    assert code == 0
    summary = last_json(out)
    assert summary["sentences"] == 3
    assert summary["converged"] == 3  # identity mock proposes nothing
    assert summary["cycles"] == 0


def test_correct_protocol_failure_exits_4(corpus, tmp_path, capsys):
    rogue = tmp_path / "rogue.py"
    rogue.write_text(
        "import sys, json\n"
        "print('{\"protocol\":\"edacsc-corrector\",\"version\":1}', flush=True)\n"
        "sys.stdin.readline()\n"
        "for line in sys.stdin:\n"
        "    msg = json.loads(line)\n"
        "    msg['text'] += '!'\n"
        "    print(json.dumps(msg), flush=True)\n",
        encoding="utf-8",
    )
    pred = tmp_path / "pred.jsonl"
    code, _, err = run(
        capsys, "correct", "--cmd", f"{shlex.quote(sys.executable)} {shlex.quote(str(rogue))}",
        "--in", str(corpus), "--out", str(pred),
    )
    assert code == 4
    assert json.loads(err.strip().splitlines()[-1])["error"] == "protocol"


def test_eval_table_and_both(corpus, tmp_path, capsys):
    pred = tmp_path / "pred.jsonl"
    rows = [{"id": s.id, "prediction": s.target} for s in read_corpus(str(corpus))]
    write_rows(pred, rows)
    code, out, _ = run(capsys, "eval", "--gold", str(corpus), "--pred", str(pred),
                       "--report", "table")
    assert code == 0
    assert "Detection" in out and "Correction" in out and not out.lstrip().startswith("{")

    code, out, _ = run(capsys, "eval", "--gold", str(corpus), "--pred", str(pred))
    first_line = out.strip().splitlines()[0]
    assert json.loads(first_line)["fpr"] == 0.0
    assert "Detection" in out


def test_eval_aux_chars(tmp_path, capsys):
    gold = tmp_path / "gold.jsonl"
    write_corpus([ParallelSample("a", "他的书", "他的书")], str(gold))
    pred = tmp_path / "pred.jsonl"
    write_rows(pred, [{"id": "a", "prediction": "他地书"}])
    aux = tmp_path / "aux.txt"
    aux.write_text("的地得\n", encoding="utf-8")

    code, out, _ = run(capsys, "eval", "--gold", str(gold), "--pred", str(pred),
                       "--report", "json")
    assert last_json(out)["fpr"] == 1.0
    code, out, _ = run(capsys, "eval", "--gold", str(gold), "--pred", str(pred),
                       "--report", "json", "--aux-chars", str(aux))
    assert last_json(out)["fpr"] == 0.0


def test_eval_prediction_mismatch_is_validation_error(corpus, tmp_path, capsys):
    pred = tmp_path / "pred.jsonl"
    write_rows(pred, [{"id": "s1", "prediction": "今天天气很好，我们出去玩,好吗？"}])
    code, _, err = run(capsys, "eval", "--gold", str(corpus), "--pred", str(pred))
    assert code == 3
    assert json.loads(err.strip().splitlines()[-1])["error"] == "validation"


def test_config_file_supplies_defaults(corpus, tmp_path, capsys):
    cfg = tmp_path / "edacsc.toml"
    cfg.write_text("[augment.split]\nmin_seg = 4\n", encoding="utf-8")
    out_path = tmp_path / "short.jsonl"
    code, _, _ = run(capsys, "--config", str(cfg), "augment", "split",
                     "--in", str(corpus), "--out", str(out_path))
    assert code == 0
    snapshot = json.loads((tmp_path / "short.jsonl.runconfig.json").read_text(encoding="utf-8"))
    assert snapshot["params"]["min_seg"] == 4
    # 好吗？ is shorter than 4, so it merges backward into the second clause.
    ids = [r.id for r in read_corpus(str(out_path))]
    assert ids == ["s1#s0", "s1#s1", "s2#s0", "s3#s0"]


def test_flag_beats_config(corpus, tmp_path, capsys):
    cfg = tmp_path / "edacsc.toml"
    cfg.write_text("[augment.split]\nmin_seg = 4\n", encoding="utf-8")
    out_path = tmp_path / "short.jsonl"
    code, _, _ = run(capsys, "--config", str(cfg), "augment", "split",
                     "--in", str(corpus), "--out", str(out_path), "--min-seg", "2")
    assert code == 0
    snapshot = json.loads((tmp_path / "short.jsonl.runconfig.json").read_text(encoding="utf-8"))
    assert snapshot["params"]["min_seg"] == 2


def test_global_threads_config(corpus, tmp_path, capsys):
    cfg = tmp_path / "edacsc.toml"
    cfg.write_text("[global]\nthreads = 2\n", encoding="utf-8")
    out_path = tmp_path / "short.jsonl"
    code, _, _ = run(capsys, "--config", str(cfg), "augment", "split",
                     "--in", str(corpus), "--out", str(out_path))
    assert code == 0


def test_bad_config_file_is_validation_error(corpus, tmp_path, capsys):
    cfg = tmp_path / "broken.toml"
    cfg.write_text("not valid toml [", encoding="utf-8")
    code, _, err = run(capsys, "--config", str(cfg), "stats", "--in", str(corpus))
    assert code == 3
    assert json.loads(err.strip().splitlines()[-1])["error"] == "validation"


def test_usage_errors_exit_2(tmp_path, capsys):
    code, _, err = run(capsys, "augment", "split", "--out", "x.jsonl")
    assert code == 2
    code, _, err = run(capsys, "stats", "--in", str(tmp_path / "missing.jsonl"))
    assert code == 2
    code, _, err = run(capsys, "no-such-command")
    assert code == 2


def test_library_validation_exits_3(corpus, tmp_path, capsys):
    code, _, err = run(capsys, "augment", "reduce", "--in", str(corpus),
                       "--out", str(tmp_path / "o.jsonl"), "--max-typos", "0")
    assert code == 3
    error = json.loads(err.strip().splitlines()[-1])
    assert error["error"] == "validation" and "max_variant_typos" in error["message"]


def test_io_failure_exits_5(corpus, tmp_path, capsys):
    code, _, err = run(capsys, "augment", "split", "--in", str(corpus),
                       "--out", str(tmp_path / "no-dir" / "x.jsonl"))
    assert code == 5
    assert json.loads(err.strip().splitlines()[-1])["error"] == "io"


def test_pipeline_runs_are_byte_identical(corpus, tmp_path, capsys):
    outs = []
    for tag in ("one", "two"):
        d = tmp_path / tag
        d.mkdir()
        short, reduced, merged = d / "s.jsonl", d / "r.jsonl", d / "m.jsonl"
        assert run(capsys, "augment", "split", "--in", str(corpus), "--out", str(short))[0] == 0
        assert run(capsys, "augment", "reduce", "--in", str(corpus), "--out", str(reduced))[0] == 0
        assert run(capsys, "merge", "--a", str(short), "--b", str(reduced),
                   "--out", str(merged))[0] == 0
        outs.append((short.read_bytes(), reduced.read_bytes(), merged.read_bytes(),
                     (d / "m.jsonl.runconfig.json").read_bytes()))
    assert outs[0][:3] == outs[1][:3]
    # Snapshots differ only in the paths they mention.
    snap1 = json.loads(outs[0][3])
    snap2 = json.loads(outs[1][3])
    assert snap1["command"] == snap2["command"] == "merge"
