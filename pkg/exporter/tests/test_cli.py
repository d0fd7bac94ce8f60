from click.testing import CliRunner

from trace_exporter.cli import main
from trace_exporter.format import read_trace_file


def test_export_command(tmp_path):
    text = tmp_path / "input.txt"
    text.write_text("byte level tokens for a tiny deterministic model " * 8)
    out = tmp_path / "traces"
    runner = CliRunner()
    result = runner.invoke(
        main,
        [
            "export", "--model", "random-gpt2:2,2,64",
            "--text-file", str(text), "--layers", "0,1", "--heads", "0",
            "--max-steps", "64", "--kind", "quantiles", "--taus", "0.5,0.875",
            "--out", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    paths = result.output.strip().splitlines()
    assert len(paths) == 2
    header, records = read_trace_file(paths[0])
    assert header["record_kind"] == "QUANTILES"
    assert header["quantile_levels"] == [0.5, 0.875]
    assert header["dataset"] == "input.txt"
    assert len(records) == 64


def test_export_command_bad_head(tmp_path):
    text = tmp_path / "input.txt"
    text.write_text("short but long enough input text for the model")
    runner = CliRunner()
    result = runner.invoke(
        main,
        [
            "export", "--model", "random-gpt2:2,2,64",
            "--text-file", str(text), "--heads", "9",
            "--out", str(tmp_path / "o"),
        ],
    )
    assert result.exit_code == 1
    assert "export failed" in result.output
