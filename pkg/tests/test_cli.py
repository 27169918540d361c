"""Command-line pipeline: gen-toy -> build-vocab -> prepare -> train ->
translate -> score-bleu, plus grad-check and inspect-attention."""
import numpy as np
import pytest

from treenmt.cli import cli, read_config_file
from treenmt.corpus import read_lines


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Run the whole CLI chain once on a small copy task."""
    root = tmp_path_factory.mktemp("pipeline")

    def run(*argv):
        return cli([str(a) for a in argv])

    assert run("gen-toy", "--task", "copy", "--size", "400", "--vocab-size", "10",
               "--seed", "5", "--out-prefix", root / "train") == 0
    assert run("gen-toy", "--task", "copy", "--size", "25", "--vocab-size", "10",
               "--seed", "6", "--out-prefix", root / "dev") == 0
    assert run("build-vocab", "--corpus", root / "train.src", "--min-count", "1",
               "--out", root / "vocab.src") == 0
    assert run("build-vocab", "--corpus", root / "train.tgt", "--min-count", "1",
               "--out", root / "vocab.tgt") == 0
    assert run("prepare", "--src", root / "train.src", "--tgt", root / "train.tgt",
               "--trees", root / "train.trees", "--src-vocab", root / "vocab.src",
               "--tgt-vocab", root / "vocab.tgt", "--mode", "train",
               "--length-model", root / "train.lens",
               "--out-prefix", root / "prepared") == 0
    config = root / "train.conf"
    config.write_text(
        "d = 24\ne = 24\nbatch_size = 4\nmax_epochs = 24\nseed = 5\n"
        "loss_mode = softmax\nmin_count = 1\n"
        f"train_src = {root}/prepared.src\ntrain_tgt = {root}/prepared.tgt\n"
        f"train_trees = {root}/prepared.trees\n"
        f"dev_src = {root}/dev.src\ndev_tgt = {root}/dev.tgt\n"
        f"dev_trees = {root}/dev.trees\n"
        f"src_vocab = {root}/vocab.src\ntgt_vocab = {root}/vocab.tgt\n"
        "# comment line\n"
    )
    assert run("train", "--config", config, "--ckpt-dir", root / "run") == 0
    assert run("translate", "--ckpt", root / "run" / "final.ckpt",
               "--src", root / "dev.src", "--trees", root / "dev.trees",
               "--out", root / "dev.hyp", "--beam", "3") == 0
    assert run("translate", "--ckpt", root / "run" / "final.ckpt",
               "--src", root / "dev.src", "--trees", root / "dev.trees",
               "--out", root / "dev.hyp2", "--beam", "3",
               "--scoring", "proposed", "--length-model", root / "train.lens") == 0
    return root


class TestPipeline:
    def test_outputs_line_aligned(self, pipeline):
        assert len(read_lines(pipeline / "dev.hyp")) == 25
        assert len(read_lines(pipeline / "dev.hyp2")) == 25

    def test_training_log_one_line_per_epoch(self, pipeline):
        log = read_lines(pipeline / "run" / "train.log")
        assert len(log) == 24
        assert all(line.startswith("epoch ") and "dev_loss" in line for line in log)

    def test_checkpoints_written(self, pipeline):
        assert (pipeline / "run" / "epoch_001.ckpt").exists()
        assert (pipeline / "run" / "final.ckpt").exists()

    def test_copy_task_learned(self, pipeline, capsys):
        assert cli(["score-bleu", "--hyp", str(pipeline / "dev.hyp2"),
                    "--ref", str(pipeline / "dev.tgt")]) == 0
        out = capsys.readouterr().out
        score = float(out.split("BLEU = ")[1].split()[0])
        assert score > 50.0

    def test_length_model_file_format(self, pipeline):
        rows = read_lines(pipeline / "train.lens")
        parts = rows[0].split()
        assert len(parts) == 3
        int(parts[0]), int(parts[1]), float(parts[2])

    def test_config_file_parsing(self, pipeline):
        values = read_config_file(pipeline / "train.conf")
        assert values["d"] == "24"
        assert values["loss_mode"] == "softmax"
        assert "comment" not in " ".join(values)

    def test_inspect_attention_dump(self, pipeline, capsys):
        out_path = pipeline / "attn.txt"
        assert cli(["inspect-attention", "--ckpt", str(pipeline / "run" / "final.ckpt"),
                    "--src", str(pipeline / "dev.src"),
                    "--trees", str(pipeline / "dev.trees"),
                    "--out", str(out_path)]) == 0
        lines = read_lines(out_path)
        src_lines = read_lines(pipeline / "dev.src")
        headers = [l for l in lines if l.startswith("#")]
        assert len(headers) == len(src_lines)
        # first sentence: every step row carries 2n candidates summing to 1
        n = len(src_lines[0].split())
        step_rows = []
        for line in lines[1:]:
            if line.startswith("#"):
                break
            step_rows.append(line)
        assert step_rows
        for row in step_rows:
            cells = row.split("\t")[2:]
            assert len(cells) == 2 * n
            weights = [float(c.rsplit(":", 1)[1]) for c in cells]
            assert abs(sum(weights) - 1.0) < 1e-5
            spans = [c.rsplit(":", 1)[0] for c in cells]
            assert spans[:n] == [str(i) for i in range(n)]
            assert spans[n] == "eos"
            assert spans[-1] == f"0-{n - 1}"


class TestPrepareFilters:
    def test_drops_long_and_unparsed(self, tmp_path):
        (tmp_path / "x.src").write_text("a b\n" + " ".join(["a"] * 51) + "\na b\n")
        (tmp_path / "x.tgt").write_text("c d\nc\nc d\n")
        (tmp_path / "x.trees").write_text("( a b )\nNOPARSE\nNOPARSE\n")
        (tmp_path / "v.src").write_text("unk\neos\na\nb\n")
        (tmp_path / "v.tgt").write_text("unk\neos\nc\nd\n")
        assert cli(["prepare", "--src", str(tmp_path / "x.src"),
                    "--tgt", str(tmp_path / "x.tgt"),
                    "--trees", str(tmp_path / "x.trees"),
                    "--src-vocab", str(tmp_path / "v.src"),
                    "--tgt-vocab", str(tmp_path / "v.tgt"),
                    "--mode", "train", "--out-prefix", str(tmp_path / "out")]) == 0
        assert read_lines(tmp_path / "out.src") == ["a b"]
        assert read_lines(tmp_path / "out.tgt") == ["c d"]
        assert read_lines(tmp_path / "out.trees") == ["( a b )"]

    def test_eval_mode_keeps_unparsed(self, tmp_path):
        (tmp_path / "x.src").write_text("a b\n")
        (tmp_path / "x.tgt").write_text("c d\n")
        (tmp_path / "x.trees").write_text("NOPARSE\n")
        (tmp_path / "v.src").write_text("unk\neos\na\nb\n")
        (tmp_path / "v.tgt").write_text("unk\neos\nc\nd\n")
        assert cli(["prepare", "--src", str(tmp_path / "x.src"),
                    "--tgt", str(tmp_path / "x.tgt"),
                    "--trees", str(tmp_path / "x.trees"),
                    "--src-vocab", str(tmp_path / "v.src"),
                    "--tgt-vocab", str(tmp_path / "v.tgt"),
                    "--mode", "eval", "--out-prefix", str(tmp_path / "out")]) == 0
        assert read_lines(tmp_path / "out.src") == ["a b"]
        assert read_lines(tmp_path / "out.trees") == ["NOPARSE"]


class TestGradCheckCommand:
    def test_passes_at_small_size(self, capsys):
        code = cli(["grad-check", "--d", "4", "--e", "4", "--n", "3", "--m", "2",
                    "--k-negatives", "2", "--seed", "1"])
        out = capsys.readouterr().out
        assert code == 0
        assert "OK" in out
        assert out.count("grad-check") == 4  # all four configurations reported

    def test_nonzero_exit_when_tolerance_exceeded(self, capsys):
        code = cli(["grad-check", "--d", "4", "--e", "4", "--n", "3", "--m", "2",
                    "--k-negatives", "2", "--seed", "1", "--tolerance", "1e-12"])
        assert code == 1
        assert "FAIL" in capsys.readouterr().out


class TestErrorPaths:
    def test_unknown_subcommand(self, capsys):
        assert cli(["frobnicate"]) not in (0, None)

    def test_unknown_flag(self, capsys):
        assert cli(["score-bleu", "--bogus", "x"]) not in (0, None)

    def test_missing_file(self, capsys, tmp_path):
        code = cli(["score-bleu", "--hyp", str(tmp_path / "no.txt"),
                    "--ref", str(tmp_path / "no.txt")])
        assert code == 1
        assert "error" in capsys.readouterr().err.lower()

    def test_proposed_scoring_needs_length_model(self, tmp_path, capsys):
        (tmp_path / "s.src").write_text("a\n")
        code = cli(["translate", "--ckpt", str(tmp_path / "missing.ckpt"),
                    "--src", str(tmp_path / "s.src"),
                    "--out", str(tmp_path / "o.txt"), "--scoring", "proposed"])
        assert code == 1
