"""Model and training configuration, with full-scale and desk-scale presets."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

from .encoder import EncoderConfig
from .nlu import ExtractionConfig

VARIANTS = (
    "SRE_linear",
    "SRE_knowledge",
    "DE_linear",
    "DE_knowledge",
    "KI_DDI",
    "knowledge_only",
    "hierarchical",
)
GRAPH_VARIANTS = frozenset({"SRE_knowledge", "DE_knowledge", "KI_DDI", "knowledge_only", "hierarchical"})
LINEAR_VARIANTS = frozenset({"SRE_linear", "DE_linear"})
FUSION_VARIANTS = frozenset({"KI_DDI", "hierarchical"})
SELF_REPORT_VARIANTS = frozenset({"SRE_linear", "SRE_knowledge"})


@dataclass(frozen=True)
class ModelConfig:
    d1: int = 384
    d3: int = 64
    gat_layers: int = 2
    gat_hidden: int = 384
    gat_heads: int = 3
    gat_dropout: float = 0.5
    leaky_slope: float = 0.2
    edge_weight_attention: bool = False
    max_seq_len: int = 512
    encoder: EncoderConfig = field(default_factory=EncoderConfig)

    def __post_init__(self):
        if min(self.d1, self.d3, self.gat_layers, self.gat_hidden, self.gat_heads) < 1:
            raise ValueError("dimensions, layers and heads must be positive")
        if self.gat_hidden % self.gat_heads:
            raise ValueError("gat_hidden must be divisible by gat_heads")
        if not 0.0 <= self.gat_dropout < 1.0:
            raise ValueError("gat_dropout must lie in [0, 1)")
        if self.max_seq_len < 8:
            raise ValueError("max_seq_len must be >= 8")

    @property
    def d2(self) -> int:
        return self.encoder.dim

    def to_json(self) -> dict:
        obj = asdict(self)
        obj["encoder"] = self.encoder.to_json()
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "ModelConfig":
        obj = dict(obj)
        obj["encoder"] = EncoderConfig.from_json(obj["encoder"])
        return cls(**obj)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 16
    epochs: int = 25
    K: int = 1
    seed: int = 0
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    loss: str = "cross_entropy"
    variant: str = "KI_DDI"
    extraction: ExtractionConfig = field(default_factory=ExtractionConfig)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.optimizer != "adam":
            raise ValueError("only the adam optimizer is supported")
        if self.learning_rate < 0 or self.batch_size < 1 or self.epochs < 1 or self.K < 1:
            raise ValueError("learning rate must be >= 0; batch size, epochs and K must be >= 1")

    def to_json(self) -> dict:
        obj = asdict(self)
        obj["extraction"] = {"mode": self.extraction.mode, "lexicon_size": len(self.extraction.lexicon)}
        return obj

    @classmethod
    def from_json(cls, obj: dict, extraction: ExtractionConfig | None = None) -> "TrainConfig":
        obj = {k: v for k, v in obj.items() if k != "extraction"}
        return cls(**obj, extraction=extraction or ExtractionConfig())

    def with_(self, **changes) -> "TrainConfig":
        return replace(self, **changes)


def paper_model_config() -> ModelConfig:
    return ModelConfig()


def desk_model_config(**overrides) -> ModelConfig:
    """Scaled-down dims for laptop runs (3 heads x 16 since 32 is not divisible by 3)."""
    base = dict(
        d1=32, d3=16, gat_hidden=48,
        encoder=EncoderConfig(dim=64),
    )
    base.update(overrides)
    return ModelConfig(**base)


def hyperparameter_summary(model: ModelConfig, train: TrainConfig) -> dict:
    return {
        "max_sequence_length": model.max_seq_len,
        "batch_size": train.batch_size,
        "gat_layers": model.gat_layers,
        "gat_hidden_dim": model.gat_hidden,
        "gat_attention_heads": model.gat_heads,
        "gat_dropout": model.gat_dropout,
        "attention_hidden_dim_1": model.d2,
        "attention_hidden_dim_2": model.d1,
        "attention_projection_dim": model.d3,
        "optimizer": train.optimizer,
        "loss_function": train.loss,
        "learning_rate": train.learning_rate,
        "epochs": train.epochs,
    }


def dumps_config(model: ModelConfig, train: TrainConfig) -> str:
    return json.dumps({"model": model.to_json(), "train": train.to_json()}, sort_keys=True)
