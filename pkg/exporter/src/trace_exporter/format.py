"""Writer (and a checking reader) for the shared binary trace format.

Implemented independently of the analysis toolkit so the two components only
meet at the byte level:

    magic "SIFTTRC1" | version u32 LE | header length u32 LE |
    canonical JSON header (sorted keys, compact separators) |
    per-step records: FULL_SCORES -> u32 count (== step) + step f32 LE,
    QUANTILES -> len(quantile_levels) f32 LE.
"""

import json
import struct

import numpy as np

MAGIC = b"SIFTTRC1"
VERSION = 1

FULL_SCORES = "FULL_SCORES"
QUANTILES = "QUANTILES"


def header_bytes(
    model_name, dataset, prompt_id, layer, head, num_steps, record_kind,
    quantile_levels=(),
):
    return json.dumps(
        {
            "model_name": model_name,
            "dataset": dataset,
            "prompt_id": prompt_id,
            "layer": layer,
            "head": head,
            "num_steps": num_steps,
            "record_kind": record_kind,
            "quantile_levels": list(quantile_levels),
            "score_precision": "f32",
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")


def write_trace_file(path, header_fields, records):
    """header_fields: dict matching header_bytes kwargs; records: list of
    per-step float sequences (length i for FULL_SCORES)."""
    kind = header_fields["record_kind"]
    with open(path, "wb") as f:
        hb = header_bytes(**header_fields)
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(hb)))
        f.write(hb)
        for i, row in enumerate(records, start=1):
            data = np.asarray(row, dtype="<f4")
            if kind == FULL_SCORES:
                if len(data) != i:
                    raise ValueError(f"step {i}: row has {len(data)} scores")
                f.write(struct.pack("<I", i))
            f.write(data.tobytes())


def read_trace_file(path):
    """Minimal reader used by the exporter's own tests."""
    with open(path, "rb") as f:
        if f.read(8) != MAGIC:
            raise ValueError("bad magic")
        version, hlen = struct.unpack("<II", f.read(8))
        if version != VERSION:
            raise ValueError(f"unsupported version {version}")
        header = json.loads(f.read(hlen).decode("utf-8"))
        records = []
        for i in range(1, header["num_steps"] + 1):
            if header["record_kind"] == FULL_SCORES:
                (count,) = struct.unpack("<I", f.read(4))
                if count != i:
                    raise ValueError(f"step {i}: bad count {count}")
                n = i
            else:
                n = len(header["quantile_levels"])
            records.append(np.frombuffer(f.read(4 * n), dtype="<f4"))
    return header, records
