"""Checkpoint format: a JSON manifest plus one little-endian float64 blob."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .config import ModelConfig, TrainConfig
from .model import Model

FORMAT_VERSION = 1
MANIFEST = "manifest.json"
BLOB = "params.bin"
_DTYPE = np.dtype("<f8")


class CheckpointError(ValueError):
    pass


def save_checkpoint(model: Model, train_cfg: TrainConfig, directory: str | Path) -> Path:
    """Write ``manifest.json`` and ``params.bin`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries, offset, chunks = [], 0, []
    for name, p in model.named_parameters():
        arr = np.ascontiguousarray(p.data, dtype=_DTYPE)
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset, "count": int(arr.size)})
        offset += arr.size
        chunks.append(arr.tobytes())
    manifest = {
        "format_version": FORMAT_VERSION,
        "variant": model.variant,
        "seed": model.seed,
        "model_config": model.cfg.to_json(),
        "train_config": train_cfg.to_json(),
        "symptoms": model.symptoms,
        "diseases": model.diseases,
        "group_map": model.group_map,
        "vocab_hash": model.vocab_hash(),
        "dtype": "<f8",
        "params": entries,
    }
    (directory / BLOB).write_bytes(b"".join(chunks))
    (directory / MANIFEST).write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return directory


def load_checkpoint(directory: str | Path) -> tuple[Model, dict]:
    """Rebuild the model from a checkpoint directory; returns (model, manifest)."""
    directory = Path(directory)
    manifest = json.loads((directory / MANIFEST).read_text(encoding="utf-8"))
    if manifest.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {manifest.get('format_version')!r}")
    blob = np.frombuffer((directory / BLOB).read_bytes(), dtype=_DTYPE)
    model = Model(
        ModelConfig.from_json(manifest["model_config"]),
        manifest["variant"],
        manifest["symptoms"],
        manifest["diseases"],
        manifest.get("group_map"),
        seed=manifest["seed"],
    )
    if model.vocab_hash() != manifest["vocab_hash"]:
        raise CheckpointError("vocabulary hash in manifest does not match its vocab lists")
    state = {}
    for e in manifest["params"]:
        end = e["offset"] + e["count"]
        if end > blob.size:
            raise CheckpointError(f"parameter blob truncated at {e['name']!r}")
        state[e["name"]] = blob[e["offset"] : end].reshape(e["shape"])
    model.load_state_dict(state)
    return model, manifest


def train_config_from_manifest(manifest: dict, extraction=None) -> TrainConfig:
    return TrainConfig.from_json(manifest["train_config"], extraction)
