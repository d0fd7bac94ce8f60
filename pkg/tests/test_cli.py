import json

import pytest
from click.testing import CliRunner

from siftlab.cli import EXIT_FORMAT, main, parse_engine_spec


@pytest.fixture()
def runner():
    return CliRunner()


def gen(runner, tmp_path, name, *extra):
    out = tmp_path / name
    args = ["gen-trace", "--steps", "64", "--out", str(out), *extra]
    result = runner.invoke(main, args)
    assert result.exit_code == 0, result.output
    return out


class TestGenTrace:
    def test_writes_valid_file(self, runner, tmp_path):
        from siftlab.tracefile import read_trace

        path = gen(runner, tmp_path, "t.trc", "--alpha", "2", "--beta", "0.7",
                   "--noise", "0.1", "--seed", "42")
        trace = read_trace(path)
        assert trace.header.num_steps == 64

    def test_missing_out_is_usage_error(self, runner):
        result = runner.invoke(main, ["gen-trace", "--steps", "8"])
        assert result.exit_code == 2

    def test_deterministic_bytes(self, runner, tmp_path):
        a = gen(runner, tmp_path, "a.trc", "--seed", "5")
        b = gen(runner, tmp_path, "b.trc", "--seed", "5")
        assert a.read_bytes() == b.read_bytes()


class TestFit:
    def test_report_structure(self, runner, tmp_path):
        trace = gen(runner, tmp_path, "t.trc", "--alpha", "0.9", "--beta", "0.5")
        out = tmp_path / "report.json"
        result = runner.invoke(
            main,
            ["fit", "--trace", str(trace), "--warmups", "8,16,32", "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        report = json.loads(out.read_text())
        pairs = {(e["tau"], e["warmup"]) for e in report["entries"]}
        assert pairs == {
            (t, w) for t in (0.5, 0.75, 0.875) for w in (8, 16, 32)
        }
        for e in report["entries"]:
            assert e["r2"] == pytest.approx(1.0, abs=1e-6)

    def test_corrupt_trace_exit_code(self, runner, tmp_path):
        bad = tmp_path / "bad.trc"
        bad.write_bytes(b"not a trace at all")
        result = runner.invoke(main, ["fit", "--trace", str(bad)])
        assert result.exit_code == EXIT_FORMAT

    def test_rerun_byte_identical(self, runner, tmp_path):
        trace = gen(runner, tmp_path, "t.trc")
        outs = []
        for name in ("r1.json", "r2.json"):
            out = tmp_path / name
            result = runner.invoke(
                main, ["fit", "--trace", str(trace), "--warmups", "8,16", "--out", str(out)]
            )
            assert result.exit_code == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestCompare:
    def test_synthetic_compare_csv(self, runner, tmp_path):
        out = tmp_path / "metrics.csv"
        result = runner.invoke(
            main,
            [
                "compare", "--steps", "96", "--seed", "4",
                "--engine", "full", "--engine", "topk:1.0",
                "--engine", "sift:0.5:16", "--engine", "evict:0.5:0.1",
                "--head-dim", "8", "--out-csv", str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        lines = out.read_text().splitlines()
        assert lines[0] == "# siftlab-metrics v1"
        data = [line.split(",") for line in lines[2:]]
        assert len(data) == 4
        # full and topk:1.0 both have zero error
        assert float(data[0][3]) == 0.0
        assert float(data[1][3]) < 1e-12

    def test_no_engine_is_usage_error(self, runner):
        result = runner.invoke(main, ["compare", "--steps", "8"])
        assert result.exit_code == 2

    def test_config_file_precedence(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"steps": 48, "engines": ["full"], "head_dim": 8}))
        out = tmp_path / "m.csv"
        result = runner.invoke(
            main,
            ["compare", "--config", str(cfg), "--out-csv", str(out)],
        )
        assert result.exit_code == 0, result.output
        assert out.read_text().splitlines()[2].split(",")[-1] == "48"
        # flag overrides config
        result = runner.invoke(
            main,
            ["compare", "--config", str(cfg), "--steps", "24", "--out-csv", str(out)],
        )
        assert result.exit_code == 0
        assert out.read_text().splitlines()[2].split(",")[-1] == "24"


class TestMask:
    def test_mask_from_trace(self, runner, tmp_path):
        trace = gen(runner, tmp_path, "s.trc", "--kind", "scores")
        out = tmp_path / "mask.csv"
        result = runner.invoke(
            main, ["mask", "--trace", str(trace), "--engine", "full", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        lines = out.read_text().splitlines()
        assert len(lines) == 64
        assert [int(x) for x in lines[0].split(",")][:2] == [1, 0]

    def test_step_beyond_trace_fails(self, runner, tmp_path):
        trace = gen(runner, tmp_path, "s.trc", "--kind", "scores")
        result = runner.invoke(
            main,
            ["mask", "--trace", str(trace), "--engine", "full", "--step", "100",
             "--out", str(tmp_path / "m.csv")],
        )
        assert result.exit_code != 0


class TestEngineSpecParsing:
    def test_specs(self):
        assert parse_engine_spec("full") == {"kind": "full"}
        assert parse_engine_spec("topk:0.25") == {"kind": "topk", "k_fraction": 0.25}
        assert parse_engine_spec("sift:0.875:512") == {
            "kind": "sift", "tau": 0.875, "warmup_steps": 512,
        }
        assert parse_engine_spec("sift:0.5:64:oracle")["threshold_mode"] == "oracle"
        assert parse_engine_spec("evict:0.25:0.1") == {
            "kind": "evict", "budget_fraction": 0.25, "recent_window_fraction": 0.1,
        }

    def test_bad_spec(self):
        import click

        with pytest.raises(click.UsageError):
            parse_engine_spec("sift:0.5")
