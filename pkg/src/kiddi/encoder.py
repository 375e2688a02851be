"""Frozen text encoders producing the self-report and dialog vectors.

``hash`` mode is a signed feature-hashing bag of n-grams, L2-normalized.
``precomputed`` mode reads vectors exported offline by any external encoder
from a JSONL file keyed ``<dialogue_id>/<self_report|full_dialog>``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

HASH = "hash"
PRECOMPUTED = "precomputed"


class EncoderError(ValueError):
    pass


@dataclass(frozen=True)
class EncoderConfig:
    kind: str = HASH
    dim: int = 768
    ngram_orders: tuple[int, ...] = (1, 2)
    seed: int = 0
    embedding_path: str | None = None

    def __post_init__(self):
        if self.kind not in (HASH, PRECOMPUTED):
            raise ValueError(f"unknown encoder kind {self.kind!r}")
        if self.dim < 2:
            raise ValueError("encoder dim must be >= 2")
        if not self.ngram_orders or any(n < 1 for n in self.ngram_orders):
            raise ValueError("ngram_orders must be non-empty positive integers")
        if self.seed < 0:
            raise ValueError("hash seed must be non-negative")
        if self.kind == PRECOMPUTED and not self.embedding_path:
            raise ValueError("precomputed encoder needs embedding_path")

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "dim": self.dim,
            "ngram_orders": list(self.ngram_orders),
            "seed": self.seed,
            "embedding_path": self.embedding_path,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EncoderConfig":
        return cls(
            kind=obj["kind"],
            dim=int(obj["dim"]),
            ngram_orders=tuple(obj["ngram_orders"]),
            seed=int(obj["seed"]),
            embedding_path=obj.get("embedding_path"),
        )


@dataclass(frozen=True)
class Encoding:
    vector: np.ndarray = field(compare=False)

    def __len__(self) -> int:
        return len(self.vector)


@lru_cache(maxsize=1 << 18)
def _bucket(gram: str, seed: int, dim: int) -> tuple[int, float]:
    digest = hashlib.blake2b(
        gram.encode("utf-8"), digest_size=8, key=seed.to_bytes(8, "little")
    ).digest()
    h = int.from_bytes(digest, "little")
    return h % dim, (1.0 if (h >> 63) == 0 else -1.0)


def hash_encode(tokens: Sequence[str], dim: int, ngram_orders: Sequence[int], seed: int) -> np.ndarray:
    vec = np.zeros(dim)
    for n in ngram_orders:
        for i in range(len(tokens) - n + 1):
            idx, sign = _bucket(" ".join(tokens[i : i + n]), seed, dim)
            vec[idx] += sign
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec


@lru_cache(maxsize=8)
def load_embeddings(path: str, dim: int) -> dict[str, np.ndarray]:
    table: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            vec = np.asarray(obj["vec"], dtype=np.float64)
            if vec.shape != (dim,):
                raise EncoderError(
                    f"{path}:{lineno}: vector for {obj['key']!r} has dim {vec.size}, expected {dim}"
                )
            if not np.all(np.isfinite(vec)):
                raise EncoderError(f"{path}:{lineno}: non-finite vector for {obj['key']!r}")
            vec.setflags(write=False)
            table[obj["key"]] = vec
    return table


def encode(tokens: Sequence[str], cfg: EncoderConfig, key: str | None = None) -> Encoding:
    if cfg.kind == HASH:
        return Encoding(hash_encode(tokens, cfg.dim, cfg.ngram_orders, cfg.seed))
    table = load_embeddings(str(Path(cfg.embedding_path)), cfg.dim)
    if key is None or key not in table:
        raise EncoderError(f"no precomputed embedding for key {key!r}")
    return Encoding(table[key].copy())


def write_embeddings(path: str | Path, vectors: dict[str, np.ndarray]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for key, vec in vectors.items():
            fh.write(json.dumps({"key": key, "vec": [float(x) for x in vec]}) + "\n")
