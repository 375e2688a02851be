"""Forward pass per variant, gradients, Adam training, evaluation and ablation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .classifier import Prediction, head_logits, hierarchical_predict, prediction_from_probs
from .config import (
    FUSION_VARIANTS,
    GRAPH_VARIANTS,
    LINEAR_VARIANTS,
    SELF_REPORT_VARIANTS,
    ModelConfig,
    TrainConfig,
)
from .corpus import FULL_DIALOG, SELF_REPORT, Corpus, Dialogue, serialize_dialogue, split_corpus
from .distill import Subgraph, distill
from .encoder import encode
from .fusion import fuse
from .gnn import JointGraph, build_joint_graph, gat_forward, mean_pool
from .kgraph import KnowledgeGraph, build_graph
from .metrics import EvalReport, report_from_predictions
from .model import Model
from .nlu import extract_symptoms
from .optim import Adam

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass
class DialogueFeatures:
    self_report: np.ndarray
    dialog: np.ndarray
    symptoms: list[str]
    subgraph: Subgraph
    linear: np.ndarray | None = None


class FeatureCache:
    """Frozen per-dialogue inputs: encodings, extracted symptoms, distilled subgraph.

    Everything here is independent of the trainable parameters, so it is
    computed once per dialogue id.
    """

    def __init__(self, model_cfg: ModelConfig, kg: KnowledgeGraph, cfg: TrainConfig):
        self.model_cfg = model_cfg
        self.kg = kg
        self.cfg = cfg
        self._sd_index = {
            (s, d): i * len(kg.diseases) + j
            for i, s in enumerate(kg.symptoms)
            for j, d in enumerate(kg.diseases)
        }
        self._store: dict[str, DialogueFeatures] = {}

    def _encode(self, dialogue: Dialogue, mode: str) -> np.ndarray:
        tokens = serialize_dialogue(dialogue, mode, self.model_cfg.max_seq_len)
        return encode(tokens, self.model_cfg.encoder, key=f"{dialogue.id}/{mode}").vector

    def get(self, dialogue: Dialogue) -> DialogueFeatures:
        feats = self._store.get(dialogue.id)
        if feats is not None:
            return feats
        symptoms = extract_symptoms(dialogue, self.cfg.extraction)
        sub = distill(self.kg, symptoms, self.cfg.K)
        linear = np.zeros(len(self._sd_index))
        for src, dst, w, kind in sub.edges:
            if kind == "sd":
                linear[self._sd_index[(src, dst)]] = w
        feats = DialogueFeatures(
            self._encode(dialogue, SELF_REPORT),
            self._encode(dialogue, FULL_DIALOG),
            symptoms,
            sub,
            linear,
        )
        self._store[dialogue.id] = feats
        return feats


@dataclass
class Intermediates:
    symptoms: list[str]
    subgraph: Subgraph
    graph: JointGraph | None
    attentions: list = field(default_factory=list)
    s: Tensor | None = None
    alpha: Tensor | None = None
    context: Tensor | None = None
    logits: Tensor | None = None


def _check_model(model: Model, cfg: TrainConfig, kg: KnowledgeGraph) -> None:
    if model.variant != cfg.variant:
        raise ValueError(f"model variant {model.variant!r} does not match config {cfg.variant!r}")
    if model.symptoms != kg.symptoms or model.diseases != kg.diseases:
        raise ValueError("model vocabulary does not match the knowledge graph")


def _representation(model: Model, feats: DialogueFeatures, rng) -> tuple[Tensor, Intermediates]:
    """Knowledge vector s and head context for one dialogue.

    Every variant shares the same extracted symptoms and subgraph. The
    self-report variants see the S encoding wherever the others see C.
    """
    variant = model.variant
    inter = Intermediates(feats.symptoms, feats.subgraph, None)
    if variant in GRAPH_VARIANTS:
        enc = feats.self_report if variant in SELF_REPORT_VARIANTS else feats.dialog
        graph = build_joint_graph(feats.subgraph, enc, model.node_table, model.dialog_proj)
        h, attentions = gat_forward(graph, model.gat, rng=rng)
        inter.graph, inter.attentions = graph, attentions
        s = mean_pool(h)
    elif variant in LINEAR_VARIANTS:
        s = model.params["linear.W"] @ feats.linear + model.params["linear.b"]
    else:
        raise ValueError(f"unknown variant {variant!r}")
    inter.s = s

    if variant in FUSION_VARIANTS:
        alpha, context = fuse(s, feats.self_report, feats.dialog, model.fusion)
        inter.alpha = alpha
    elif variant in ("DE_knowledge", "DE_linear"):
        context = ad.Tensor(feats.dialog)
    elif variant in SELF_REPORT_VARIANTS:
        context = ad.Tensor(feats.self_report)
    else:  # knowledge_only
        context = ad.Tensor(np.zeros(model.cfg.d2))
    inter.context = context
    return s, inter


def forward(
    model: Model,
    dialogue: Dialogue,
    kg: KnowledgeGraph,
    cfg: TrainConfig,
    *,
    cache: FeatureCache | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[Prediction, Intermediates]:
    """Score one dialogue. Dropout is active only when ``rng`` is supplied."""
    _check_model(model, cfg, kg)
    cache = cache or FeatureCache(model.cfg, kg, cfg)
    feats = cache.get(dialogue)
    s, inter = _representation(model, feats, rng)
    if model.variant == "hierarchical":
        pred = hierarchical_predict(
            s, inter.context, model.group_head, model.group_heads, model.group_map, model.diseases
        )
    else:
        inter.logits = head_logits(s, inter.context, model.head)
        pred = prediction_from_probs(model.diseases, ad.softmax(inter.logits).data)
    return pred, inter


def _dialogue_loss(model: Model, dialogue: Dialogue, feats: DialogueFeatures, rng) -> Tensor:
    s, inter = _representation(model, feats, rng)
    if model.variant == "hierarchical":
        group = model.group_map[dialogue.disease_label]
        gh = model.group_head
        loss = ad.nll(ad.softmax(head_logits(s, inter.context, gh)), gh.labels.index(group))
        dh = model.group_heads[group]
        return loss + ad.nll(
            ad.softmax(head_logits(s, inter.context, dh)), dh.labels.index(dialogue.disease_label)
        )
    probs = ad.softmax(head_logits(s, inter.context, model.head))
    return ad.nll(probs, model.diseases.index(dialogue.disease_label))


def batch_loss(
    model: Model,
    dialogues: Sequence[Dialogue],
    cache: FeatureCache,
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Cross entropy summed over the batch."""
    total: Tensor | None = None
    for dlg in dialogues:
        term = _dialogue_loss(model, dlg, cache.get(dlg), rng)
        total = term if total is None else total + term
    return total


def loss_and_grads(
    model: Model,
    dialogues: Sequence[Dialogue],
    kg: KnowledgeGraph,
    cfg: TrainConfig,
    *,
    cache: FeatureCache | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    _check_model(model, cfg, kg)
    cache = cache or FeatureCache(model.cfg, kg, cfg)
    model.zero_grad()
    loss = batch_loss(model, dialogues, cache, rng)
    loss.backward()
    grads = {}
    for name, p in model.named_parameters():
        g = np.zeros_like(p.data) if p.grad is None else p.grad
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient for parameter {name!r}")
        grads[name] = g
    return float(loss.data), grads


def backward(model, dialogue, kg, cfg, *, cache=None, rng=None) -> dict[str, np.ndarray]:
    """Gradients of one dialogue's loss for every trainable parameter."""
    return loss_and_grads(model, [dialogue], kg, cfg, cache=cache, rng=rng)[1]


def numerical_gradients(
    loss_fn: Callable[[], float], params: dict[str, Tensor], step: float = 1e-5
) -> dict[str, np.ndarray]:
    """Central differences of ``loss_fn`` with respect to every entry of ``params``."""
    out = {}
    for name, p in params.items():
        g = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = loss_fn()
            flat[i] = orig - step
            down = loss_fn()
            flat[i] = orig
            gflat[i] = (up - down) / (2 * step)
        out[name] = g
    return out


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    """Max elementwise |a - n| / max(|a|, |n|, floor)."""
    if analytic.size == 0:
        return 0.0
    den = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / den))


def gradient_check(
    model: Model,
    dialogues: Sequence[Dialogue],
    kg: KnowledgeGraph,
    cfg: TrainConfig,
    step: float = 1e-5,
) -> dict[str, float]:
    """Max relative error between analytic and finite-difference gradients, per parameter."""
    cache = FeatureCache(model.cfg, kg, cfg)
    _, analytic = loss_and_grads(model, dialogues, kg, cfg, cache=cache)
    numeric = numerical_gradients(lambda: float(batch_loss(model, dialogues, cache).data), model.params, step)
    return {name: relative_error(analytic[name], numeric[name]) for name in model.params}


def evaluate(
    model: Model,
    corpus: Corpus,
    kg: KnowledgeGraph,
    cfg: TrainConfig,
    *,
    cache: FeatureCache | None = None,
) -> EvalReport:
    if len(corpus) == 0:
        raise ValueError("cannot evaluate on an empty corpus")
    cache = cache or FeatureCache(model.cfg, kg, cfg)
    y_true, y_pred, rankings = [], [], []
    group_hits = 0
    for dlg in corpus.dialogues:
        pred, _ = forward(model, dlg, kg, cfg, cache=cache)
        y_true.append(dlg.disease_label)
        y_pred.append(pred.top_label)
        rankings.append([lab for lab, _ in pred.ranked])
        if pred.group is not None and pred.group == model.group_map[dlg.disease_label]:
            group_hits += 1
    report = report_from_predictions(y_true, y_pred, rankings, model.diseases)
    if model.variant == "hierarchical":
        report.group_accuracy = group_hits / len(corpus)
    return report


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_accuracy: float


def fit(
    model: Model,
    train: Corpus,
    val: Corpus,
    kg: KnowledgeGraph,
    cfg: TrainConfig,
    *,
    on_epoch: Callable[[EpochRecord], None] | None = None,
) -> tuple[Model, list[EpochRecord]]:
    """Adam over shuffled mini-batches; keeps the epoch with best validation accuracy.

    ``train_loss`` in the history is the mean per-dialogue loss over the epoch.
    """
    if len(train) == 0 or len(val) == 0:
        raise ValueError("training and validation corpora must be non-empty")
    _check_model(model, cfg, kg)
    cache = FeatureCache(model.cfg, kg, cfg)
    opt = Adam(model.parameters(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps)
    order_rng = np.random.default_rng(cfg.seed)
    dropout_rng = np.random.default_rng([cfg.seed, 1])

    history: list[EpochRecord] = []
    best_acc, best_state = -1.0, model.state_dict()
    dialogues = train.dialogues
    for epoch in range(1, cfg.epochs + 1):
        perm = order_rng.permutation(len(dialogues))
        total = 0.0
        for b, start in enumerate(range(0, len(perm), cfg.batch_size)):
            batch = [dialogues[i] for i in perm[start : start + cfg.batch_size]]
            opt.zero_grad()
            loss = batch_loss(model, batch, cache, dropout_rng)
            value = float(loss.data)
            if not np.isfinite(value):
                raise TrainingError(f"loss diverged at epoch {epoch}, batch {b}")
            loss.backward()
            for name, p in model.named_parameters():
                if p.grad is not None and not np.all(np.isfinite(p.grad)):
                    raise TrainingError(
                        f"non-finite gradient for {name!r} at epoch {epoch}, batch {b}"
                    )
            opt.step()
            total += value
        val_acc = evaluate(model, val, kg, cfg, cache=cache).accuracy
        record = EpochRecord(epoch, total / len(dialogues), val_acc)
        history.append(record)
        log.info("epoch %d  train_loss %.6f  val_acc %.4f", epoch, record.train_loss, val_acc)
        if on_epoch is not None:
            on_epoch(record)
        if val_acc >= best_acc:
            best_acc, best_state = val_acc, model.state_dict()
    model.load_state_dict(best_state)
    return model, history


def ablation_plan(base_cfg: TrainConfig, ks: Sequence[int] = (1, 2, 3)) -> list[TrainConfig]:
    """Linear baselines at the base K, every graph variant at each K."""
    plan = [base_cfg.with_(variant="SRE_linear")]
    plan += [base_cfg.with_(variant="SRE_knowledge", K=k) for k in ks]
    plan += [base_cfg.with_(variant="knowledge_only", K=k) for k in ks]
    plan.append(base_cfg.with_(variant="DE_linear"))
    plan += [base_cfg.with_(variant="DE_knowledge", K=k) for k in ks]
    plan += [base_cfg.with_(variant="KI_DDI", K=k) for k in ks]
    return plan


def train_and_evaluate(
    train: Corpus,
    val: Corpus,
    test: Corpus,
    kg: KnowledgeGraph,
    model_cfg: ModelConfig,
    cfg: TrainConfig,
) -> tuple[Model, list[EpochRecord], EvalReport]:
    model = Model(model_cfg, cfg.variant, kg.symptoms, kg.diseases, train.group_map, seed=cfg.seed)
    model, history = fit(model, train, val, kg, cfg)
    return model, history, evaluate(model, test, kg, cfg)


def ablate(
    corpus: Corpus,
    kg: KnowledgeGraph | None,
    base_cfg: TrainConfig,
    model_cfg: ModelConfig,
    *,
    ratios: Sequence[float] = (0.7, 0.1, 0.2),
    ks: Sequence[int] = (1, 2, 3),
) -> list[dict]:
    """Train every ablation variant on one shared split; one result row per variant."""
    train, val, test = split_corpus(corpus, ratios, base_cfg.seed)
    kg = kg or build_graph(train)
    fingerprint = "-".join(part.fingerprint()[:8] for part in (train, val, test))
    rows = []
    for cfg in ablation_plan(base_cfg, ks):
        _, _, report = train_and_evaluate(train, val, test, kg, model_cfg, cfg)
        rows.append(
            {
                "variant": cfg.variant,
                "K": cfg.K,
                "accuracy": report.accuracy,
                "macro_f1": report.macro_f1,
                "macro_jaccard": report.macro_jaccard,
                "top1": report.top_k_accuracy[1],
                "top3": report.top_k_accuracy[3],
                "top5": report.top_k_accuracy[5],
                "split_fingerprint": fingerprint,
                "seed": cfg.seed,
            }
        )
        log.info("ablation %s K=%d acc=%.4f", cfg.variant, cfg.K, report.accuracy)
    return rows
