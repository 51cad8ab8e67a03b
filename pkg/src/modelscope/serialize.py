"""Versioned JSON schemas for vis/af results.

The same JSON feeds the HTTP API, the static SVG plots and the browser
explorer, so every number a view displays is present verbatim here.  Files
are written deterministically (sorted keys, no timestamps): re-running the
embedded config reproduces them byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path

from . import masks
from .fence import AfResult
from .fitting import fit
from .stability import VisResult, vip

SCHEMA_VERSION = "1.0"
ENGINE_VERSION = "0.1.0"


def _dataset_block(d):
    return {
        "response": d.response_name,
        "names": list(d.names),
        "n": d.n,
        "p": d.p,
        "family": d.family.kind,
        "rv_index": d.rv_index,
    }


def _variables(mask, names):
    return [names[j] for j in masks.indices(mask)]


def vis_to_dict(v: VisResult, config: dict | None = None) -> dict:
    """JSON-able form of a vis run: stability, inclusion curves, loss table."""
    d = v.dataset
    refit_cache: dict = {}

    def loglik_of(mask):
        if mask not in refit_cache:
            refit_cache[mask] = fit(d, mask).loglik
        return refit_cache[mask]

    stability_block = []
    for size in sorted(v.stability):
        models = []
        for mask, prob in sorted(v.stability[size].items(), key=lambda t: (-t[1], t[0])):
            models.append({
                "mask": int(mask),
                "formula": d.formula(mask),
                "variables": _variables(mask, d.names),
                "prob": prob,
                "loglik": loglik_of(mask),
            })
        stability_block.append({"size": size, "models": models})

    table_block = []
    for k in v.original_table.sizes():
        models = [
            {
                "mask": int(m),
                "formula": d.formula(m),
                "variables": _variables(m, d.names),
                "q_hat": q,
                "loglik": -0.5 * q,
            }
            for m, q in v.original_table.entries[k]
        ]
        table_block.append({"size": k + 1, "models": models})

    _, legend = vip(v)
    return {
        "schema_version": SCHEMA_VERSION,
        "engine_version": ENGINE_VERSION,
        "kind": "vis",
        "config": config or {},
        "seed": v.seed,
        "B": v.B,
        "skipped": v.skipped,
        "dataset": _dataset_block(d),
        "lambda_grid": [float(x) for x in v.lambda_grid],
        "inclusion": [[float(x) for x in row] for row in v.inclusion],
        "legend_order": [int(j) for j in legend],
        "stability": stability_block,
        "original_table": table_block,
        "search_method": v.original_table.search_method,
    }


def af_to_dict(a: AfResult, config: dict | None = None) -> dict:
    """JSON-able form of an adaptive-fence run: both tally modes."""
    d = a.dataset

    def curve_block(mode):
        curve = a.curves[mode]
        return {
            "p_star": [float(x) for x in curve.p_star],
            "argmax_mask": [int(m) for m in curve.argmax],
            "argmax_formula": [d.formula(int(m)) if m >= 0 else None for m in curve.argmax],
            "c_star": a.c_star[mode],
        }

    return {
        "schema_version": SCHEMA_VERSION,
        "engine_version": ENGINE_VERSION,
        "kind": "af",
        "config": config or {},
        "seed": a.seed,
        "B": a.B,
        "skipped": a.skipped,
        "dataset": _dataset_block(d),
        "c_grid": [float(x) for x in a.c_grid],
        "c_max": a.meta.get("c_max"),
        "screening": list(a.screening) if a.screening is not None else None,
        "curves": {
            "best_only_true": curve_block(True),
            "best_only_false": curve_block(False),
        },
    }


def write_json(payload: dict, path) -> Path:
    """Write deterministically: sorted keys, fixed separators, trailing newline."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(payload, sort_keys=True, indent=1, allow_nan=False)
    path.write_text(text + "\n")
    return path


def read_json(path) -> dict:
    payload = json.loads(Path(path).read_text())
    got = str(payload.get("schema_version", ""))
    if got.split(".")[0] != SCHEMA_VERSION.split(".")[0]:
        raise ValueError(f"schema major version mismatch: file {got!r}, engine {SCHEMA_VERSION!r}")
    return payload
