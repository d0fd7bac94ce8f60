"""Teacher-forced attention-trace extraction from a small causal LM.

The model is run once over a fixed text (no sampling), attention weights are
captured per layer, and each requested (layer, head) becomes one trace file:
row i is the causal post-softmax score row over positions 1..i. All positions
of the teacher-forced sequence are recorded, prompt included.

Model identifiers:
  - a local directory / hub id loadable by transformers, or
  - "random-gpt2[:layers,heads,dim]" for a deterministic randomly initialized
    GPT-2 over byte-level token ids (vocab 256), useful where no pretrained
    checkpoint is available.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import List

import numpy as np
import torch

from .format import FULL_SCORES, QUANTILES, write_trace_file

RANDOM_PREFIX = "random-gpt2"
RANDOM_SEED = 1234


@dataclass
class ExportSpec:
    model_id: str
    text: str
    layers: List[int]
    heads: List[int]
    max_steps: int = 1024
    record_kind: str = QUANTILES
    quantile_levels: List[float] = field(default_factory=lambda: [0.5, 0.75, 0.875])
    dataset: str = "text"
    prompt_id: int = 0

    def validate(self):
        if self.max_steps < 2 or self.max_steps > 4096:
            raise ValueError(f"max_steps must be in [2, 4096], got {self.max_steps}")
        if self.record_kind == FULL_SCORES and self.max_steps > 1024:
            raise ValueError("FULL_SCORES export is limited to 1024 steps")
        if self.record_kind == QUANTILES and not self.quantile_levels:
            raise ValueError("QUANTILES export needs at least one tau level")


def _random_gpt2(spec_tail):
    from transformers import GPT2Config, GPT2LMHeadModel

    layers, heads, dim = 4, 4, 128
    if spec_tail:
        layers, heads, dim = (int(x) for x in spec_tail.split(","))
    torch.manual_seed(RANDOM_SEED)
    config = GPT2Config(
        vocab_size=256,
        n_positions=4096,
        n_embd=dim,
        n_layer=layers,
        n_head=heads,
        bos_token_id=0,
        eos_token_id=0,
        attn_implementation="eager",
    )
    return GPT2LMHeadModel(config)


def load_model(model_id):
    if model_id == RANDOM_PREFIX or model_id.startswith(RANDOM_PREFIX + ":"):
        tail = model_id[len(RANDOM_PREFIX) + 1 :]
        return _random_gpt2(tail), None
    from transformers import AutoModelForCausalLM, AutoTokenizer

    model = AutoModelForCausalLM.from_pretrained(
        model_id, attn_implementation="eager"
    )
    tokenizer = AutoTokenizer.from_pretrained(model_id)
    return model, tokenizer


def tokenize(text, tokenizer, max_steps):
    if tokenizer is None:
        ids = list(text.encode("utf-8"))  # byte-level ids for random models
    else:
        ids = tokenizer(text)["input_ids"]
    if len(ids) < 2:
        raise ValueError("tokenized input must have at least 2 tokens")
    return ids[:max_steps]


def capture_attentions(model, input_ids):
    """One teacher-forced pass; returns per-layer (heads, S, S) arrays."""
    model.eval()
    with torch.no_grad():
        out = model(
            torch.tensor([input_ids], dtype=torch.long), output_attentions=True
        )
    return [a[0].to(torch.float32).numpy() for a in out.attentions]


def _quantile_row(row, levels):
    return [float(np.quantile(row.astype(np.float64), t)) for t in levels]


def export_trace(spec, out_dir):
    """Run the model and write one trace file per (layer, head).

    Returns the list of written paths.
    """
    spec.validate()
    model, tokenizer = load_model(spec.model_id)
    input_ids = tokenize(spec.text, tokenizer, spec.max_steps)
    attentions = capture_attentions(model, input_ids)

    n_layers = len(attentions)
    n_heads = attentions[0].shape[0]
    for layer in spec.layers:
        if not (0 <= layer < n_layers):
            raise ValueError(f"layer {layer} outside model's {n_layers} layers")
    for head in spec.heads:
        if not (0 <= head < n_heads):
            raise ValueError(f"head {head} outside model's {n_heads} heads")

    steps = len(input_ids)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    safe_model = (
        spec.model_id.replace("/", "_").replace(":", "_").replace(",", "-")
    )
    for layer in spec.layers:
        for head in spec.heads:
            rows = [attentions[layer][head, i - 1, :i] for i in range(1, steps + 1)]
            if spec.record_kind == QUANTILES:
                records = [_quantile_row(r, spec.quantile_levels) for r in rows]
                levels = spec.quantile_levels
            else:
                records = rows
                levels = []
            path = out_dir / f"{safe_model}_p{spec.prompt_id}_L{layer}_H{head}.trc"
            write_trace_file(
                path,
                {
                    "model_name": spec.model_id,
                    "dataset": spec.dataset,
                    "prompt_id": spec.prompt_id,
                    "layer": layer,
                    "head": head,
                    "num_steps": steps,
                    "record_kind": spec.record_kind,
                    "quantile_levels": levels,
                },
                records,
            )
            written.append(path)
    return written
