"""Binary attention-trace file format.

Layout (all integers little-endian unsigned 32-bit, floats IEEE-754 f32 LE):

    magic    8 bytes  b"SIFTTRC1"
    version  u32      currently 1
    hlen     u32      byte length of the JSON header
    header   hlen bytes of UTF-8 JSON (canonical: sorted keys, no spaces)
    records  in step order, step index i = 1..num_steps:
        FULL_SCORES:  u32 count (== i), then i f32 scores
        QUANTILES:    len(quantile_levels) f32 values, no count prefix

The canonical JSON header makes write -> read -> write byte-identical, which
is what the golden-file checksum test pins down.
"""

import json
import struct
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .errors import FormatError, InvalidInput

MAGIC = b"SIFTTRC1"
VERSION = 1

FULL_SCORES = "FULL_SCORES"
QUANTILES = "QUANTILES"

# Ingested score rows may come from float32 pipelines; 1e-3 is the accepted
# slack on sum-to-one.
ROW_SUM_TOL = 1e-3


@dataclass
class TraceHeader:
    model_name: str
    dataset: str
    prompt_id: int
    layer: int
    head: int
    num_steps: int
    record_kind: str
    quantile_levels: List[float] = field(default_factory=list)
    score_precision: str = "f32"

    def validate(self):
        if self.num_steps < 1:
            raise InvalidInput(f"num_steps must be >= 1, got {self.num_steps}")
        if self.record_kind not in (FULL_SCORES, QUANTILES):
            raise InvalidInput(f"unknown record_kind {self.record_kind!r}")
        if self.record_kind == QUANTILES and not self.quantile_levels:
            raise InvalidInput("QUANTILES trace needs at least one tau level")
        if self.score_precision != "f32":
            raise InvalidInput(
                f"unsupported score_precision {self.score_precision!r}"
            )

    def to_json_bytes(self):
        return json.dumps(
            {
                "model_name": self.model_name,
                "dataset": self.dataset,
                "prompt_id": self.prompt_id,
                "layer": self.layer,
                "head": self.head,
                "num_steps": self.num_steps,
                "record_kind": self.record_kind,
                "quantile_levels": self.quantile_levels,
                "score_precision": self.score_precision,
            },
            sort_keys=True,
            separators=(",", ":"),
        ).encode("utf-8")


@dataclass
class AttentionTrace:
    header: TraceHeader
    # FULL_SCORES: records[i-1] is the length-i float32 score row of step i.
    # QUANTILES: records[i-1] holds one float32 value per tau level.
    records: List[np.ndarray]


def _validate_records(header, records):
    if len(records) != header.num_steps:
        raise InvalidInput(
            f"{len(records)} records for num_steps={header.num_steps}"
        )
    for i, row in enumerate(records, start=1):
        if header.record_kind == FULL_SCORES:
            if len(row) != i:
                raise InvalidInput(
                    f"step {i}: FULL_SCORES row has {len(row)} elements"
                )
            total = float(np.asarray(row, dtype=np.float64).sum())
            if abs(total - 1.0) > ROW_SUM_TOL:
                raise InvalidInput(
                    f"step {i}: score row sums to {total:.6f}, expected 1"
                )
        else:
            if len(row) != len(header.quantile_levels):
                raise InvalidInput(
                    f"step {i}: expected {len(header.quantile_levels)} quantile "
                    f"values, got {len(row)}"
                )
            arr = np.asarray(row, dtype=np.float64)
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise InvalidInput(
                    f"step {i}: quantile values must be positive and finite"
                )


def _write_stream(trace, f):
    trace.header.validate()
    _validate_records(trace.header, trace.records)
    header_bytes = trace.header.to_json_bytes()
    f.write(MAGIC)
    f.write(struct.pack("<II", VERSION, len(header_bytes)))
    f.write(header_bytes)
    for i, row in enumerate(trace.records, start=1):
        data = np.asarray(row, dtype="<f4")
        if trace.header.record_kind == FULL_SCORES:
            f.write(struct.pack("<I", i))
        f.write(data.tobytes())


def write_trace(trace, path):
    with open(path, "wb") as f:
        _write_stream(trace, f)


def trace_to_bytes(trace):
    import io

    buf = io.BytesIO()
    _write_stream(trace, buf)
    return buf.getvalue()


def _read_exact(f, n, what):
    buf = f.read(n)
    if len(buf) != n:
        raise FormatError(
            f"truncated file while reading {what}", offset=f.tell() - len(buf)
        )
    return buf


def _read_stream(f):
    magic = _read_exact(f, len(MAGIC), "magic")
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}", offset=0)
    version, hlen = struct.unpack("<II", _read_exact(f, 8, "version/header length"))
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", offset=8)
    header_raw = _read_exact(f, hlen, "header JSON")
    try:
        fields = json.loads(header_raw.decode("utf-8"))
        header = TraceHeader(**fields)
        header.validate()
    except (ValueError, TypeError) as exc:
        raise FormatError(f"invalid header: {exc}", offset=16) from exc

    records = []
    for i in range(1, header.num_steps + 1):
        if header.record_kind == FULL_SCORES:
            offset = f.tell()
            (count,) = struct.unpack("<I", _read_exact(f, 4, f"step {i} count"))
            if count != i:
                raise FormatError(
                    f"step {i}: count field is {count}", offset=offset
                )
            n = i
        else:
            n = len(header.quantile_levels)
        row = np.frombuffer(
            _read_exact(f, 4 * n, f"step {i} records"), dtype="<f4"
        )
        records.append(row)
    trailing = f.read(1)
    if trailing:
        raise FormatError("trailing bytes after last record", offset=f.tell() - 1)

    try:
        _validate_records(header, records)
    except InvalidInput as exc:
        raise FormatError(str(exc)) from exc
    return AttentionTrace(header=header, records=records)


def read_trace(path):
    with open(path, "rb") as f:
        return _read_stream(f)


def trace_from_bytes(data):
    import io

    return _read_stream(io.BytesIO(data))


def quantile_series_from_trace(trace, tau):
    """Per-step tau-quantile series extracted from a trace.

    FULL_SCORES traces are reduced with the toolkit's quantile rule;
    QUANTILES traces must carry tau as one of their recorded levels.
    """
    from .core import quantile
    from .powerlaw import QuantileSeries

    header = trace.header
    if header.record_kind == FULL_SCORES:
        values = np.array(
            [quantile(row, tau) for row in trace.records]
        )
    else:
        try:
            col = header.quantile_levels.index(tau)
        except ValueError:
            raise InvalidInput(
                f"tau={tau} not recorded; trace has {header.quantile_levels}"
            ) from None
        values = np.array([float(row[col]) for row in trace.records])
    return QuantileSeries(tau=tau, values=values)
