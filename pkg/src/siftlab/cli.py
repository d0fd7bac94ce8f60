"""Command-line driver. Thin client of the HTTP service: every subcommand
builds a request, sends it to a server (remote via --server-url / SIFTLAB_SERVER,
otherwise an in-process instance of the app), and writes the response locally.

Exit codes: 0 success, 2 usage error, 3 malformed trace file, 4 runtime error.
"""

import base64
import json
import os
import sys
from pathlib import Path

import click

EXIT_FORMAT = 3
EXIT_RUNTIME = 4

DEFAULT_TAUS = "0.5,0.75,0.875"
DEFAULT_WARMUPS = "64,128,256,512"


def _client(server_url):
    if server_url:
        import httpx

        return httpx.Client(base_url=server_url, timeout=600.0)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

        from .service.app import create_app

        return TestClient(create_app())


def _post(ctx, path, payload):
    resp = ctx.obj["client"].post(path, json=payload)
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("detail", {})
        except ValueError:
            detail = {}
        message = detail.get("message", resp.text) if isinstance(detail, dict) else str(detail)
        kind = detail.get("error", "runtime") if isinstance(detail, dict) else "runtime"
        click.echo(f"error: {message}", err=True)
        sys.exit(EXIT_FORMAT if kind == "format" else EXIT_RUNTIME)
    return resp.json()


def _out_path(path):
    p = Path(path)
    if not p.is_absolute():
        base = os.environ.get("SIFTLAB_OUT_DIR")
        if base:
            p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _floats(text):
    return [float(x) for x in text.split(",") if x]


def _ints(text):
    return [int(x) for x in text.split(",") if x]


def _trace_b64(path):
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        click.echo(f"error: cannot read trace: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    return base64.b64encode(raw).decode("ascii")


def _dump_json(data, out):
    text = json.dumps(data, sort_keys=True, indent=2) + "\n"
    if out:
        _out_path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)


def parse_engine_spec(text):
    """Engine spec strings:

    full | topk:K | sift:TAU:W[:oracle] | evict:BUDGET:RECENT
    """
    parts = text.split(":")
    kind = parts[0]
    try:
        if kind == "full":
            return {"kind": "full"}
        if kind == "topk":
            return {"kind": "topk", "k_fraction": float(parts[1])}
        if kind == "sift":
            spec = {
                "kind": "sift",
                "tau": float(parts[1]),
                "warmup_steps": int(parts[2]),
            }
            if len(parts) > 3:
                spec["threshold_mode"] = parts[3]
            return spec
        if kind == "evict":
            return {
                "kind": "evict",
                "budget_fraction": float(parts[1]),
                "recent_window_fraction": float(parts[2]),
            }
    except (IndexError, ValueError):
        pass
    raise click.UsageError(f"bad engine spec {text!r}")


@click.group()
@click.option(
    "--server-url",
    envvar="SIFTLAB_SERVER",
    default=None,
    help="Remote service URL; default runs the service in-process.",
)
@click.pass_context
def main(ctx, server_url):
    """Quantile-threshold sparse attention lab."""
    ctx.ensure_object(dict)
    ctx.obj["client"] = _client(server_url)


@main.command("gen-trace")
@click.option("--steps", type=int, default=1024, show_default=True)
@click.option("--alpha", type=float, default=1.0, show_default=True)
@click.option("--beta", type=float, default=0.5, show_default=True)
@click.option("--noise", type=float, default=0.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--concentration", type=float, default=1.0, show_default=True)
@click.option(
    "--kind",
    type=click.Choice(["quantiles", "scores"]),
    default="quantiles",
    show_default=True,
)
@click.option("--taus", default=DEFAULT_TAUS, show_default=True)
@click.option("--out", required=True, help="Output trace file path.")
@click.pass_context
def gen_trace(ctx, steps, alpha, beta, noise, seed, concentration, kind, taus, out):
    """Generate a synthetic trace file."""
    payload = {
        "kind": kind,
        "taus": _floats(taus),
        "params": {
            "alpha": alpha,
            "beta": beta,
            "noise_sigma": noise,
            "steps": steps,
            "seed": seed,
            "concentration": concentration,
        },
    }
    data = _post(ctx, "/trace/generate", payload)
    path = _out_path(out)
    path.write_bytes(base64.b64decode(data["trace_b64"]))
    h = data["header"]
    click.echo(
        f"wrote {path}: kind={h['record_kind']} steps={h['num_steps']} "
        f"levels={h['quantile_levels']}"
    )


@main.command("fit")
@click.option("--trace", required=True, help="Input trace file.")
@click.option("--taus", default=None, help="Comma-separated tau levels.")
@click.option("--warmups", default=DEFAULT_WARMUPS, show_default=True)
@click.option("--skip-first", type=int, default=0, show_default=True)
@click.option("--out", default=None, help="Report JSON path (default stdout).")
@click.pass_context
def fit(ctx, trace, taus, warmups, skip_first, out):
    """Fit power laws to a trace's quantile series and report R^2 per (tau, w)."""
    payload = {
        "trace_b64": _trace_b64(trace),
        "warmups": _ints(warmups),
        "skip_first": skip_first,
    }
    if taus:
        payload["taus"] = _floats(taus)
    data = _post(ctx, "/fit", payload)
    _dump_json(data, out)


@main.command("compare")
@click.option("--trace", default=None, help="Input FULL_SCORES trace file.")
@click.option("--steps", type=int, default=1024, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--concentration", type=float, default=1.0, show_default=True)
@click.option(
    "--engine",
    "engines",
    multiple=True,
    help="Engine spec (repeatable): full | topk:K | sift:TAU:W[:oracle] | evict:B:R",
)
@click.option("--head-dim", type=int, default=64, show_default=True)
@click.option("--bytes-per-element", type=int, default=2, show_default=True)
@click.option("--step-range", default=None, help="Metric window, e.g. 256:1024.")
@click.option("--config", "config_path", default=None, help="JSON config file; flags override it.")
@click.option("--out-csv", default=None)
@click.option("--out-json", default=None)
@click.pass_context
def compare(
    ctx, trace, steps, seed, concentration, engines, head_dim,
    bytes_per_element, step_range, config_path, out_csv, out_json,
):
    """Replay one trace through several engines and emit a metrics table."""
    config = {}
    if config_path:
        try:
            config = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise click.UsageError(f"cannot read config: {exc}")

    def pick(name, flag_value):
        source = ctx.get_parameter_source(name)
        if source is not None and source.name == "COMMANDLINE":
            return flag_value
        return config.get(name, flag_value)

    trace = pick("trace", trace)
    steps = pick("steps", steps)
    seed = pick("seed", seed)
    concentration = pick("concentration", concentration)
    head_dim = pick("head_dim", head_dim)
    bytes_per_element = pick("bytes_per_element", bytes_per_element)
    step_range = pick("step_range", step_range)
    engine_list = list(engines) or config.get("engines", [])
    if not engine_list:
        raise click.UsageError("at least one --engine is required")

    payload = {
        "engines": [parse_engine_spec(e) for e in engine_list],
        "head_dim": head_dim,
        "bytes_per_element": bytes_per_element,
        "seed": seed,
    }
    if trace:
        payload["trace_b64"] = _trace_b64(trace)
    else:
        payload["synth"] = {
            "steps": steps,
            "seed": seed,
            "concentration": concentration,
        }
    if step_range:
        lo, _, hi = str(step_range).partition(":")
        payload["step_range"] = [int(lo), int(hi)]

    data = _post(ctx, "/compare", payload)
    if out_csv:
        _out_path(out_csv).write_text(data["csv"], encoding="utf-8")
    if out_json:
        _dump_json({"rows": data["rows"]}, out_json)
    if not out_csv and not out_json:
        click.echo(data["csv"], nl=False)


@main.command("mask")
@click.option("--trace", default=None, help="Input FULL_SCORES trace file.")
@click.option("--steps", type=int, default=256, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--concentration", type=float, default=1.0, show_default=True)
@click.option("--engine", required=True, help="Engine spec, see compare --help.")
@click.option("--step", type=int, default=None, help="Single 1-based step; default all.")
@click.option("--head-dim", type=int, default=64, show_default=True)
@click.option("--out", required=True)
@click.pass_context
def mask(ctx, trace, steps, seed, concentration, engine, step, head_dim, out):
    """Export a 0/1 attended-token mask (rows = steps)."""
    payload = {
        "engine": parse_engine_spec(engine),
        "head_dim": head_dim,
        "seed": seed,
    }
    if trace:
        payload["trace_b64"] = _trace_b64(trace)
    else:
        payload["synth"] = {
            "steps": steps,
            "seed": seed,
            "concentration": concentration,
        }
    if step is not None:
        payload["step"] = step
    data = _post(ctx, "/mask", payload)
    path = _out_path(out)
    path.write_text(data["csv"], encoding="utf-8")
    click.echo(f"wrote {path}: {data['steps']} rows")


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("siftlab.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
