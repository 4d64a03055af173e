import json
from pathlib import Path

import pytest

from ctcalign.cli import main

SYNTH_SPEC = {
    "letter_id": "demo",
    "lines": ["hello world ", "and more text", "", "last line"],
    "steps_per_char": 2,
    "epsilon_run": 2,
    "noise": 0.0,
    "seed": 7,
}


def make_letter(tmp_path, spec=None, name="demo") -> Path:
    spec_path = tmp_path / f"{name}_spec.json"
    doc = dict(SYNTH_SPEC if spec is None else spec)
    doc["letter_id"] = name
    spec_path.write_text(json.dumps(doc), encoding="utf-8")
    out_dir = tmp_path / name
    assert main(["synth", "--spec", str(spec_path), "--out-dir", str(out_dir)]) == 0
    return out_dir


class TestSynthCommand:
    def test_emits_manifest_matrices_and_metadata(self, tmp_path):
        out = make_letter(tmp_path)
        manifest = json.loads((out / "demo.json").read_text())
        assert manifest["letter_id"] == "demo"
        assert len(manifest["lines"]) == 4
        assert (out / "alphabet.txt").exists()
        assert (out / "demo.txt").read_text().rstrip("\n") == (
            "hello world and more textlast line"
        )
        meta = json.loads((out / "synth_meta.json").read_text())
        assert meta["generator"] == "pcg64"
        assert meta["seed"] == 7

    def test_deterministic_outputs(self, tmp_path):
        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        a = make_letter(tmp_path / "a")
        b = make_letter(tmp_path / "b")
        for name in ("line_000.ctcp", "line_001.ctcp", "alphabet.txt"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_invalid_spec(self, tmp_path):
        spec_path = tmp_path / "bad.json"
        spec_path.write_text(json.dumps({"lines": ["a"], "noise": 2.0}))
        assert main(["synth", "--spec", str(spec_path),
                     "--out-dir", str(tmp_path / "out")]) == 1


class TestAlignCommand:
    def test_round_trip_single_letter(self, tmp_path, capsys):
        out_dir = make_letter(tmp_path)
        result_path = tmp_path / "aligned.json"
        code = main([
            "align", str(out_dir / "demo.json"),
            "--transcription", str(out_dir / "demo.txt"),
            "--out", str(result_path),
        ])
        assert code == 0
        doc = json.loads(result_path.read_text())
        assert [l["text"] for l in doc["lines"]] == [
            "hello world", "and more text", "", "last line"
        ]
        assert all(l["gamma"] in (0.0, 1.0) for l in doc["lines"])

    def test_missing_matrix_file_names_path(self, tmp_path, caplog):
        out_dir = make_letter(tmp_path)
        (out_dir / "line_000.ctcp").unlink()
        code = main([
            "align", str(out_dir / "demo.json"),
            "--transcription", str(out_dir / "demo.txt"),
            "--out", str(tmp_path / "x.json"),
        ])
        assert code == 1
        assert "line_000.ctcp" in caplog.text

    def test_infeasible_exits_two(self, tmp_path):
        out_dir = make_letter(tmp_path)
        longer = tmp_path / "too_long.txt"
        longer.write_text("hello world and more textlast line" * 20)
        code = main([
            "align", str(out_dir / "demo.json"),
            "--transcription", str(longer),
            "--out", str(tmp_path / "x.json"),
        ])
        assert code == 2

    def test_multi_letter_directory_output(self, tmp_path):
        first = make_letter(tmp_path, name="one")
        second = make_letter(
            tmp_path, name="two",
            spec={**SYNTH_SPEC, "lines": ["different text", "here"]},
        )
        out_dir = tmp_path / "aligned"
        code = main([
            "align", str(first / "one.json"), str(second / "two.json"),
            "--transcription", str(first / "one.txt"), str(second / "two.txt"),
            "--out", str(out_dir),
        ])
        assert code == 0
        assert (out_dir / "one.json").exists()
        assert (out_dir / "two.json").exists()

    def test_worker_counts_agree_modulo_runtime(self, tmp_path):
        letters = [
            make_letter(tmp_path, name=f"l{k}",
                        spec={**SYNTH_SPEC, "lines": [f"letter {k} text", "tail"]})
            for k in range(3)
        ]
        manifests = [str(d / f"l{k}.json") for k, d in enumerate(letters)]
        texts = [str(d / f"l{k}.txt") for k, d in enumerate(letters)]

        outputs = []
        for workers, name in ((1, "w1"), (2, "w2")):
            out = tmp_path / name
            code = main(["align", *manifests, "--transcription", *texts,
                         "--out", str(out), "--workers", str(workers)])
            assert code == 0
            docs = []
            for k in range(3):
                doc = json.loads((out / f"l{k}.json").read_text())
                doc.pop("runtime_seconds")
                docs.append(doc)
            outputs.append(docs)
        assert outputs[0] == outputs[1]


def align_demo(tmp_path, name="demo", spec=None):
    out_dir = make_letter(tmp_path, name=name, spec=spec)
    result = tmp_path / f"{name}_aligned.json"
    assert main([
        "align", str(out_dir / f"{name}.json"),
        "--transcription", str(out_dir / f"{name}.txt"),
        "--out", str(result),
    ]) == 0
    return result


class TestEvalCommand:
    def test_identical_line_sets(self, tmp_path, capsys):
        gt = tmp_path / "gt.json"
        gt.write_text(json.dumps(
            {"letter_id": "L", "lines": ["abc", "def"]}
        ))
        code = main(["eval", "--gt", str(gt), "--pred", str(gt)])
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["line_accuracy"] == 1.0
        assert report["cer"] == 0.0

    def test_worked_accuracy_example(self, tmp_path, capsys):
        gt = tmp_path / "gt.json"
        pred = tmp_path / "pred.json"
        gt.write_text(json.dumps(
            {"letter_id": "L", "lines": ["one", "two", "three", "four"]}
        ))
        pred.write_text(json.dumps(
            {"letter_id": "L", "lines": ["one", "two", "x", "four"]}
        ))
        assert main(["eval", "--gt", str(gt), "--pred", str(pred)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["line_accuracy"] == 0.75

    def test_alignment_output_as_prediction_with_figures(self, tmp_path, capsys):
        aligned = align_demo(tmp_path)
        gt = tmp_path / "gt.json"
        gt.write_text(json.dumps({
            "letter_id": "demo",
            "lines": ["hello world", "and more text", "", "last line"],
        }))
        fig_dir = tmp_path / "figs"
        out = tmp_path / "report.json"
        code = main(["eval", "--gt", str(gt), "--pred", str(aligned),
                     "--out", str(out), "--fig-dir", str(fig_dir)])
        assert code == 0
        report = json.loads(out.read_text())
        assert report["line_accuracy"] == 1.0
        assert report["confidence_buckets"]
        assert (fig_dir / "confidence_curve.png").stat().st_size > 0
        assert (fig_dir / "confidence_buckets.csv").exists()

    def test_malformed_json_exits_one(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{oops")
        assert main(["eval", "--gt", str(bad), "--pred", str(bad)]) == 1


class TestFilterCommand:
    def test_kept_counts_and_manifest(self, tmp_path, capsys):
        aligned = align_demo(tmp_path)
        out = tmp_path / "train.jsonl"
        code = main(["filter", str(aligned), "--threshold", "0.5",
                     "--out", str(out)])
        assert code == 0
        stdout = capsys.readouterr().out
        # "hello world" (11 chars) and "last line" carry gamma6 = 0, the
        # gap line is empty: only "and more text" survives
        assert "kept 1 of 4 lines" in stdout
        rows = out.read_text().splitlines()
        header = json.loads(rows[0])
        assert header["threshold"] == 0.5
        assert header["sources"][0]["sha256"]
        assert len(rows) == 2  # header + 1 entry
        assert json.loads(rows[1])["text"] == "and more text"

    def test_sweep_table_monotone(self, tmp_path, capsys):
        aligned = align_demo(tmp_path)
        fig_dir = tmp_path / "figs"
        code = main(["filter", str(aligned), "--threshold", "0.5",
                     "--out", str(tmp_path / "m.jsonl"),
                     "--sweep", "0:0.9:0.1", "--fig-dir", str(fig_dir)])
        assert code == 0
        lines = [l for l in capsys.readouterr().out.splitlines()
                 if "\t" in l and not l.startswith("threshold")]
        counts = [int(l.split("\t")[1]) for l in lines]
        assert len(counts) == 10
        assert counts == sorted(counts, reverse=True)
        assert (fig_dir / "threshold_sweep.png").stat().st_size > 0
        assert (fig_dir / "threshold_sweep.csv").exists()

    def test_empty_glob_exits_one(self, tmp_path):
        assert main(["filter", str(tmp_path / "none-*.json"),
                     "--threshold", "0.5",
                     "--out", str(tmp_path / "m.jsonl")]) == 1

    def test_manifest_bytes_stable_across_worker_counts(self, tmp_path):
        letters = [
            make_letter(tmp_path, name=f"l{k}",
                        spec={**SYNTH_SPEC,
                              "lines": [f"stable text number {k}", "more here"]})
            for k in range(3)
        ]
        manifests = [str(d / f"l{k}.json") for k, d in enumerate(letters)]
        texts = [str(d / f"l{k}.txt") for k, d in enumerate(letters)]
        blobs = []
        for workers in (1, 2):
            aligned_dir = tmp_path / f"aligned_w{workers}"
            assert main(["align", *manifests, "--transcription", *texts,
                         "--out", str(aligned_dir),
                         "--workers", str(workers)]) == 0
            out = tmp_path / f"train_w{workers}.jsonl"
            assert main(["filter", str(aligned_dir / "*.json"),
                         "--threshold", "0.1", "--out", str(out)]) == 0
            text = out.read_text()
            blobs.append(text.replace(f"aligned_w{workers}", "aligned"))
        assert blobs[0] == blobs[1]


class TestStatsCommand:
    def test_table_and_figure(self, tmp_path, capsys):
        out_dir = make_letter(tmp_path)
        csv_path = tmp_path / "stats.csv"
        fig_dir = tmp_path / "figs"
        code = main(["stats", str(out_dir / "demo.json"),
                     "--out", str(csv_path), "--fig-dir", str(fig_dir)])
        assert code == 0
        rows = csv_path.read_text().splitlines()
        assert rows[0].startswith("letter_id,lines,avg_line_steps")
        fields = rows[1].split(",")
        assert fields[0] == "demo"
        assert float(fields[5]) > 1.0
        assert (fig_dir / "compression.png").stat().st_size > 0

    def test_stdout_table(self, tmp_path, capsys):
        out_dir = make_letter(tmp_path)
        assert main(["stats", str(out_dir / "demo.json")]) == 0
        assert "demo" in capsys.readouterr().out
