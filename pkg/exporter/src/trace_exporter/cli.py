"""CLI: sift-export export --model <id> --text-file <p> --layers 0,3
--heads 0,2 --max-steps 1024 --kind quantiles --taus 0.5,0.75,0.875 --out <dir>"""

import sys
from pathlib import Path

import click

from .export import ExportSpec, export_trace
from .format import FULL_SCORES, QUANTILES


@click.group()
def main():
    """Attention-trace exporter for small causal language models."""


@main.command("export")
@click.option("--model", "model_id", required=True, help="Model id, local path, or random-gpt2[:L,H,D].")
@click.option("--text-file", required=True, type=click.Path(exists=True))
@click.option("--layers", default="0", show_default=True, help="Comma-separated layer indices.")
@click.option("--heads", default="0", show_default=True, help="Comma-separated head indices.")
@click.option("--max-steps", type=int, default=1024, show_default=True)
@click.option(
    "--kind",
    type=click.Choice(["quantiles", "scores"]),
    default="quantiles",
    show_default=True,
)
@click.option("--taus", default="0.5,0.75,0.875", show_default=True)
@click.option("--out", required=True, help="Output directory.")
@click.option("--prompt-id", type=int, default=0, show_default=True)
def export(model_id, text_file, layers, heads, max_steps, kind, taus, out, prompt_id):
    """Teacher-force the model over a text and write per-(layer, head) traces."""
    spec = ExportSpec(
        model_id=model_id,
        text=Path(text_file).read_text(encoding="utf-8"),
        layers=[int(x) for x in layers.split(",") if x],
        heads=[int(x) for x in heads.split(",") if x],
        max_steps=max_steps,
        record_kind=QUANTILES if kind == "quantiles" else FULL_SCORES,
        quantile_levels=[float(x) for x in taus.split(",") if x],
        dataset=Path(text_file).name,
        prompt_id=prompt_id,
    )
    try:
        written = export_trace(spec, out)
    except (ValueError, OSError) as exc:
        click.echo(f"export failed: {exc}", err=True)
        sys.exit(1)
    for path in written:
        click.echo(str(path))


if __name__ == "__main__":
    main()
