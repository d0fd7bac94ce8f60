"""FastAPI service wrapping the core package.

The CLI is a thin client of these endpoints; trace payloads travel as base64
so a remote service never needs access to the client's filesystem.
"""

import base64
import dataclasses
import io

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..errors import FormatError, SiftLabError
from ..powerlaw import evaluate_warmup_fit, fit_power_law, r_squared
from ..runner import EngineSpec, compare, replay, score_rows_from_trace, synth_value_matrix
from ..synth import SynthParams, generate_quantile_trace, generate_score_trace
from ..tracefile import (
    QUANTILES,
    quantile_series_from_trace,
    trace_from_bytes,
    trace_to_bytes,
)
from .schemas import (
    DEFAULT_TAUS,
    CompareRequest,
    CompareResponse,
    CompareRow,
    FitEntry,
    FitRequest,
    FitResponse,
    FullFitEntry,
    GenTraceRequest,
    GenTraceResponse,
    MaskRequest,
    MaskResponse,
)

CSV_SCHEMA_LINE = "# siftlab-metrics v1"

CSV_COLUMNS = [
    "engine",
    "intended_sparsity",
    "realized_sparsity",
    "mean_rel_l2_error",
    "fallback_count",
    "value_bytes_loaded",
    "value_bytes_full",
    "bytes_reduction_fraction",
    "steps",
]


def _fmt(x):
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def metrics_csv(rows):
    lines = [CSV_SCHEMA_LINE, ",".join(CSV_COLUMNS)]
    for row in rows:
        if isinstance(row, dict):
            d = row
        elif dataclasses.is_dataclass(row):
            d = dataclasses.asdict(row)
        else:
            d = row.model_dump()
        lines.append(",".join(_fmt(d[c]) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def _synth_params(model):
    return SynthParams(
        alpha=model.alpha,
        beta=model.beta,
        noise_sigma=model.noise_sigma,
        steps=model.steps,
        seed=model.seed,
        concentration=model.concentration,
    )


def _decode_trace(b64):
    try:
        raw = base64.b64decode(b64, validate=True)
    except Exception as exc:
        raise HTTPException(400, detail={"error": "invalid", "message": f"bad base64: {exc}"})
    return trace_from_bytes(raw)


def _resolve_rows(trace_b64, synth):
    if trace_b64 is not None:
        trace = _decode_trace(trace_b64)
    elif synth is not None:
        trace = generate_score_trace(_synth_params(synth))
    else:
        raise HTTPException(
            400,
            detail={"error": "invalid", "message": "need trace_b64 or synth"},
        )
    return score_rows_from_trace(trace), trace


def _engine_spec(model):
    return EngineSpec(**model.model_dump())


def _summary(values):
    arr = np.asarray(values, dtype=np.float64)
    return {
        "median": float(np.median(arr)),
        "p5": float(np.percentile(arr, 5)),
        "p25": float(np.percentile(arr, 25)),
        "p75": float(np.percentile(arr, 75)),
        "p95": float(np.percentile(arr, 95)),
    }


def create_app():
    app = FastAPI(title="siftlab", version=__version__)

    @app.exception_handler(FormatError)
    async def _format_error(request, exc):
        from fastapi.responses import JSONResponse

        return JSONResponse(
            status_code=422,
            content={"detail": {"error": "format", "message": str(exc)}},
        )

    @app.exception_handler(SiftLabError)
    async def _siftlab_error(request, exc):
        from fastapi.responses import JSONResponse

        return JSONResponse(
            status_code=400,
            content={"detail": {"error": "invalid", "message": str(exc)}},
        )

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/trace/generate", response_model=GenTraceResponse)
    def gen_trace(req: GenTraceRequest):
        params = _synth_params(req.params)
        if req.kind == "scores":
            trace = generate_score_trace(params, req.model_name, req.dataset)
        elif req.kind == "quantiles":
            trace = generate_quantile_trace(
                params, req.taus, req.model_name, req.dataset
            )
        else:
            raise HTTPException(
                400,
                detail={"error": "invalid", "message": f"unknown kind {req.kind!r}"},
            )
        raw = trace_to_bytes(trace)
        return GenTraceResponse(
            header=dataclasses.asdict(trace.header),
            num_steps=trace.header.num_steps,
            trace_b64=base64.b64encode(raw).decode("ascii"),
        )

    @app.post("/fit", response_model=FitResponse)
    def fit(req: FitRequest):
        trace = _decode_trace(req.trace_b64)
        if req.taus is not None:
            taus = req.taus
        elif trace.header.record_kind == QUANTILES:
            taus = trace.header.quantile_levels
        else:
            taus = DEFAULT_TAUS

        n = trace.header.num_steps
        start = 1 + req.skip_first
        full_fits, entries = [], []
        for tau in taus:
            series = quantile_series_from_trace(trace, tau)
            full = fit_power_law(series, (start, n))
            full_q = r_squared(series, full, (start, n))
            full_fits.append(
                FullFitEntry(tau=tau, alpha=full.alpha, beta=full.beta, r2=full_q.r2)
            )
            for w in req.warmups:
                if w >= n or w - start + 1 < 2:
                    continue
                fit_w = fit_power_law(series, (start, w))
                quality = r_squared(series, fit_w, (start, n))
                entries.append(
                    FitEntry(
                        tau=tau, warmup=w, alpha=fit_w.alpha,
                        beta=fit_w.beta, r2=quality.r2,
                    )
                )
        summary = _summary([e.r2 for e in entries]) if entries else {}
        return FitResponse(
            header=dataclasses.asdict(trace.header),
            full_fits=full_fits,
            entries=entries,
            r2_summary=summary,
        )

    @app.post("/compare", response_model=CompareResponse)
    def compare_engines(req: CompareRequest):
        rows, _ = _resolve_rows(req.trace_b64, req.synth)
        specs = [_engine_spec(m) for m in req.engines]
        results = compare(
            rows,
            specs,
            head_dim=req.head_dim,
            seed=req.seed,
            bytes_per_element=req.bytes_per_element,
            step_range=req.step_range,
        )
        metric_rows = [CompareRow(**dataclasses.asdict(m)) for _, m in results]
        return CompareResponse(rows=metric_rows, csv=metrics_csv(metric_rows))

    @app.post("/mask", response_model=MaskResponse)
    def mask(req: MaskRequest):
        rows, _ = _resolve_rows(req.trace_b64, req.synth)
        steps = len(rows)
        if req.step is not None and not (1 <= req.step <= steps):
            raise HTTPException(
                400,
                detail={
                    "error": "index",
                    "message": f"step {req.step} beyond trace of {steps} steps",
                },
            )
        values = synth_value_matrix(steps, req.head_dim, req.seed)
        result = replay(rows, values, _engine_spec(req.engine), collect_masks=True)
        selected = result.retained_indices
        if req.step is not None:
            selected = [selected[req.step - 1]]
        buf = io.StringIO()
        for indices in selected:
            line = np.zeros(steps, dtype=np.int8)
            line[indices] = 1
            buf.write(",".join(map(str, line.tolist())) + "\n")
        return MaskResponse(csv=buf.getvalue(), steps=len(selected))

    return app


app = create_app()
