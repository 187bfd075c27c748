from __future__ import annotations

import json
from pathlib import Path

import pytest

from sumtag.cli import main

DOCS = [
    {"id": "d0", "body": "新算法改进电力系统。其余内容。"},
    {"id": "d1", "body": "plain sentence only. second part."},
    {"id": "d2", "body": "算法与数据都重要。后续。"},
]


def write_docs(path: Path, docs=None) -> Path:
    lines = "".join(json.dumps(d, ensure_ascii=False) + "\n" for d in (docs or DOCS))
    path.write_text(lines, encoding="utf-8")
    return path


def write_config(tmp_path: Path, gazetteer: Path, **extra) -> Path:
    out = tmp_path / "out"
    config = {
        "backend": {"kind": "mock-first-sentence"},
        "prompt": {"template": "Summarize: {text}"},
        "gazetteer": str(gazetteer),
        "rules": [
            {"name": "algo", "require": ["ALGORITHM"], "destination": "algo-desk"},
        ],
        "sinks": {
            "algo-desk": str(out / "algo.jsonl"),
            "general": str(out / "general.jsonl"),
            "failed": str(out / "failed.jsonl"),
        },
        "default_sink": "general",
        "failed_sink": "failed",
        "parallelism": 2,
    }
    config.update(extra)
    path = tmp_path / "config.yaml"
    import yaml

    path.write_text(yaml.safe_dump(config, allow_unicode=True), encoding="utf-8")
    return path


def write_gazetteer(tmp_path: Path) -> Path:
    path = tmp_path / "gazetteer.tsv"
    path.write_text(
        "算法\tALGORITHM\n电力系统\tORGANIZATION\n数据\tCONCEPT/TERM\n",
        encoding="utf-8",
    )
    return path


class TestDispatch:
    def test_unknown_subcommand_exits_1(self, capsys):
        assert main(["frobnicate"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_unknown_flag_exits_1(self, capsys):
        assert main(["evaluate", "--nope"]) == 1

    def test_help_exits_0(self, capsys):
        assert main(["--help"]) == 0
        out = capsys.readouterr().out
        for command in ("evaluate", "split", "summarize", "tag", "run", "bench"):
            assert command in out

    @pytest.mark.parametrize(
        "command", ["evaluate", "split", "summarize", "tag", "run", "bench"]
    )
    def test_subcommand_help_documents_flags(self, command, capsys):
        assert main([command, "--help"]) == 0
        assert "--format" in capsys.readouterr().out


class TestEvaluateCommand:
    def test_identical_files_score_100(self, tmp_path, capsys):
        text = "the cat sat on the mat\n新的算法来了\n"
        (tmp_path / "p.txt").write_text(text, encoding="utf-8")
        (tmp_path / "r.txt").write_text(text, encoding="utf-8")
        code = main([
            "evaluate",
            "--predictions", str(tmp_path / "p.txt"),
            "--references", str(tmp_path / "r.txt"),
            "--format", "json-lines",
        ])
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["bleu4"] == 100.0
        assert report["rouge1"]["f1"] == 100.0

    def test_table_output_rounds_two_decimals(self, tmp_path, capsys):
        (tmp_path / "p.txt").write_text("the cat\n", encoding="utf-8")
        (tmp_path / "r.txt").write_text("the cat sat\n", encoding="utf-8")
        assert main([
            "evaluate",
            "--predictions", str(tmp_path / "p.txt"),
            "--references", str(tmp_path / "r.txt"),
            "--tokenization", "word",
        ]) == 0
        out = capsys.readouterr().out
        assert "rouge1  P 100.00  R 66.67  F1 80.00" in out

    def test_line_count_mismatch_exits_1(self, tmp_path, capsys):
        (tmp_path / "p.txt").write_text("a\nb\n", encoding="utf-8")
        (tmp_path / "r.txt").write_text("a\n", encoding="utf-8")
        assert main([
            "evaluate",
            "--predictions", str(tmp_path / "p.txt"),
            "--references", str(tmp_path / "r.txt"),
        ]) == 1
        assert "mismatch" in capsys.readouterr().err

    def test_missing_file_exits_1(self, tmp_path):
        assert main([
            "evaluate",
            "--predictions", str(tmp_path / "absent.txt"),
            "--references", str(tmp_path / "absent.txt"),
        ]) == 1

    def test_auto_tokenization_prefers_char_for_cjk(self, tmp_path, capsys):
        (tmp_path / "p.txt").write_text("新的算法\n", encoding="utf-8")
        (tmp_path / "r.txt").write_text("新算法\n", encoding="utf-8")
        assert main([
            "evaluate",
            "--predictions", str(tmp_path / "p.txt"),
            "--references", str(tmp_path / "r.txt"),
            "--format", "json-lines",
        ]) == 0
        report = json.loads(capsys.readouterr().out)
        # char-level: 3 of 4 candidate chars match
        assert report["rouge1"]["precision"] == pytest.approx(75.0)


class TestSplitCommand:
    def test_split_twice_is_byte_identical(self, tmp_path, capsys):
        records = [{"instruction": f"i{k}", "output": f"o{k}"} for k in range(50)]
        dataset = tmp_path / "data.json"
        dataset.write_text(json.dumps(records), encoding="utf-8")
        for out in ("a", "b"):
            code = main([
                "split",
                "--dataset", str(dataset),
                "--ratios", "8:1:1",
                "--seed", "7",
                "--out", str(tmp_path / out),
            ])
            assert code == 0
        for name in ("train.ids", "validation.ids", "test.ids", "metadata.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_bad_ratios_exit_1(self, tmp_path, capsys):
        dataset = tmp_path / "data.json"
        dataset.write_text(json.dumps([{"instruction": "i", "output": "o"}] * 12),
                           encoding="utf-8")
        assert main([
            "split", "--dataset", str(dataset), "--ratios", "8:1", "--out", str(tmp_path / "x"),
        ]) == 1


class TestTagCommand:
    def test_tag_reproduces_annotated_fixture(self, tmp_path, fixtures_dir, capsys):
        out = tmp_path / "tagged.txt"
        code = main([
            "tag",
            "--gazetteer", str(fixtures_dir / "zh_gazetteer.tsv"),
            "--input", str(fixtures_dir / "zh_plain.txt"),
            "--output", str(out),
        ])
        assert code == 0
        assert out.read_bytes() == (fixtures_dir / "zh_annotated.txt").read_bytes()

    def test_tag_json_lines(self, tmp_path, capsys):
        gazetteer = write_gazetteer(tmp_path)
        text_file = tmp_path / "text.txt"
        text_file.write_text("新算法来了", encoding="utf-8")
        assert main([
            "tag", "--gazetteer", str(gazetteer), "--input", str(text_file),
            "--format", "json-lines",
        ]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["tags"] == ["ALGORITHM"]
        assert payload["spans"][0]["surface"] == "算法"

    def test_unknown_label_in_gazetteer_exits_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.tsv"
        bad.write_text("x\tNOPE\n", encoding="utf-8")
        text_file = tmp_path / "t.txt"
        text_file.write_text("x", encoding="utf-8")
        assert main(["tag", "--gazetteer", str(bad), "--input", str(text_file)]) == 1


class TestSummarizeCommand:
    def test_summarize_to_jsonl(self, tmp_path, capsys):
        gazetteer = write_gazetteer(tmp_path)
        config = write_config(tmp_path, gazetteer)
        docs = write_docs(tmp_path / "docs.jsonl")
        out = tmp_path / "summaries.jsonl"
        code = main([
            "summarize", "--config", str(config), "--input", str(docs),
            "--output", str(out), "--format", "json-lines",
        ])
        assert code == 0
        lines = [json.loads(line) for line in out.read_text(encoding="utf-8").splitlines()]
        assert [line["document_id"] for line in lines] == ["d0", "d1", "d2"]
        assert lines[0]["summary"] == "新算法改进电力系统。"


class TestRunCommand:
    def test_full_pipeline_run(self, tmp_path, capsys):
        gazetteer = write_gazetteer(tmp_path)
        config = write_config(tmp_path, gazetteer)
        docs = write_docs(tmp_path / "docs.jsonl")
        code = main(["run", "--config", str(config), "--input", str(docs),
                     "--format", "json-lines"])
        assert code == 0
        stats = json.loads(capsys.readouterr().out)
        assert stats == {"ingested": 3, "delivered": 2, "defaulted": 1, "failed": 0}
        algo_records = [
            json.loads(line)
            for line in (tmp_path / "out" / "algo.jsonl").read_text(encoding="utf-8").splitlines()
        ]
        assert {r["document_id"] for r in algo_records} == {"d0", "d2"}

    def test_missing_gazetteer_is_validation_error(self, tmp_path, capsys):
        gazetteer = tmp_path / "missing.tsv"
        config = write_config(tmp_path, gazetteer)
        docs = write_docs(tmp_path / "docs.jsonl")
        assert main(["run", "--config", str(config), "--input", str(docs)]) == 1
        assert "gazetteer" in capsys.readouterr().err

    def test_rule_to_unknown_sink_is_validation_error(self, tmp_path, capsys):
        gazetteer = write_gazetteer(tmp_path)
        config = write_config(
            tmp_path, gazetteer,
            rules=[{"name": "r", "require": ["ALGORITHM"], "destination": "nowhere"}],
        )
        docs = write_docs(tmp_path / "docs.jsonl")
        assert main(["run", "--config", str(config), "--input", str(docs)]) == 1

    def test_source_failure_exits_2_with_partial_stats(self, tmp_path, capsys):
        gazetteer = write_gazetteer(tmp_path)
        config = write_config(tmp_path, gazetteer)
        docs = tmp_path / "docs.jsonl"
        docs.write_text(
            json.dumps(DOCS[0], ensure_ascii=False) + "\n" + "{broken json\n",
            encoding="utf-8",
        )
        assert main(["run", "--config", str(config), "--input", str(docs)]) == 2
        err = capsys.readouterr().err
        assert "aborted" in err
        assert "ingested" in err


class TestBenchCommand:
    def test_latency_model_sweep(self, tmp_path, capsys):
        config = tmp_path / "bench.yaml"
        config.write_text(
            "backend:\n"
            "  kind: mock-latency-model\n"
            "  fixed_overhead_s: 4.0\n"
            "  per_sample_cost_s: 1.0\n",
            encoding="utf-8",
        )
        docs = write_docs(
            tmp_path / "workload.jsonl",
            [{"id": f"w{i}", "body": f"Doc {i} text. Tail."} for i in range(32)],
        )
        out = tmp_path / "sweep.jsonl"
        plot = tmp_path / "plot.tsv"
        code = main([
            "bench", "--config", str(config), "--workload", str(docs),
            "--batch-sizes", "1,2,4,8,16,32", "--warmup", "1",
            "--output", str(out), "--plot-data", str(plot),
            "--format", "json-lines",
        ])
        assert code == 0
        points = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
        assert [p["batch_size"] for p in points] == [1, 2, 4, 8, 16, 32]
        at16 = next(p for p in points if p["batch_size"] == 16)
        assert at16["steps_per_sec"] == pytest.approx(0.05)
        assert at16["samples_per_sec"] == pytest.approx(0.8)
        assert plot.read_text(encoding="utf-8").startswith("batch_size\t")

    def test_workload_smaller_than_batch_exits_1(self, tmp_path, capsys):
        config = tmp_path / "bench.yaml"
        config.write_text("backend:\n  kind: mock-latency-model\n", encoding="utf-8")
        docs = write_docs(tmp_path / "w.jsonl", [{"id": "a", "body": "Text. More."}])
        assert main([
            "bench", "--config", str(config), "--workload", str(docs),
            "--batch-sizes", "4",
        ]) == 1
