"""Command-line entry points: build-kg, train, predict, gen-synthetic, ablate.

Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint, train_config_from_manifest
from .config import VARIANTS, ModelConfig, TrainConfig, desk_model_config, dumps_config, paper_model_config
from .corpus import Corpus, CorpusError, _dialogue_from_json, load_corpus, save_corpus, split_corpus
from .encoder import EncoderConfig, EncoderError
from .kgraph import GraphError, build_graph, load_graph, save_graph
from .model import Model, vocab_hash
from .nlu import GOLD, LEXICON, ExtractionConfig, load_lexicon
from .synthetic import SyntheticSpec, generate
from .train import TrainingError, ablate, evaluate, fit, forward

log = logging.getLogger("kiddi")

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 1, 2
RATIOS = (0.7, 0.1, 0.2)


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _model_config(args) -> ModelConfig:
    encoder = EncoderConfig(
        kind=args.encoder,
        dim=args.dim if args.dim else (64 if args.preset == "desk" else 768),
        seed=args.encoder_seed,
        embedding_path=args.embeddings,
    )
    if args.preset == "desk":
        return desk_model_config(encoder=encoder)
    return replace(paper_model_config(), encoder=encoder)


def _extraction(args) -> ExtractionConfig:
    if args.extraction == LEXICON:
        if not args.lexicon:
            raise ValueError("--extraction lexicon needs --lexicon")
        return ExtractionConfig(LEXICON, load_lexicon(args.lexicon))
    return ExtractionConfig()


def _train_config(args) -> TrainConfig:
    variant = "hierarchical" if args.hierarchical else args.variant
    return TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        K=args.k,
        seed=args.seed,
        variant=variant,
        extraction=_extraction(args),
    )


def _load_corpus_with_groups(args) -> Corpus:
    corpus = load_corpus(args.corpus)
    if getattr(args, "group_map", None):
        groups = json.loads(Path(args.group_map).read_text(encoding="utf-8"))
        corpus = Corpus(corpus.dialogues, corpus.symptom_vocab, corpus.disease_vocab, dict(groups))
        corpus.validate()
    return corpus


def _run_header(model_cfg: ModelConfig, cfg: TrainConfig) -> str:
    return "# config " + dumps_config(model_cfg, cfg)


# -- commands ---------------------------------------------------------------
def cmd_build_kg(args) -> int:
    corpus = load_corpus(args.corpus)
    kg = build_graph(corpus)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_graph(kg, out, meta={"corpus_fingerprint": corpus.fingerprint(), "num_dialogues": len(corpus)})
    print(
        f"symptoms={len(kg.symptoms)} diseases={len(kg.diseases)} "
        f"sd_edges={len(kg.sd_edges)} ss_edges={len(kg.ss_edges)}"
    )
    return EXIT_OK


def cmd_train(args) -> int:
    corpus = _load_corpus_with_groups(args)
    model_cfg, cfg = _model_config(args), _train_config(args)
    train, val, test = split_corpus(corpus, RATIOS, args.seed)
    kg = load_graph(args.kg) if args.kg else build_graph(train)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    model = Model(model_cfg, cfg.variant, kg.symptoms, kg.diseases, corpus.group_map, seed=cfg.seed)
    model, history = fit(model, train, val, kg, cfg)
    report = evaluate(model, test, kg, cfg)

    save_checkpoint(model, cfg, out / "checkpoint")
    save_graph(kg, out / "kg.json")
    with (out / "history.csv").open("w", encoding="utf-8", newline="") as fh:
        fh.write(_run_header(model_cfg, cfg) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "val_accuracy"])
        for rec in history:
            w.writerow([rec.epoch, repr(rec.train_loss), repr(rec.val_accuracy)])
    _write_json(
        out / "report.json",
        {
            "variant": cfg.variant,
            "seed": cfg.seed,
            "config": {"model": model_cfg.to_json(), "train": cfg.to_json()},
            "splits": {"train": len(train), "val": len(val), "test": len(test)},
            "test": report.to_json(),
        },
    )
    print(f"variant={cfg.variant} test_accuracy={report.accuracy:.4f} macro_f1={report.macro_f1:.4f}")
    return EXIT_OK


def _read_dialogues(path: str):
    dialogues = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from None
            if isinstance(obj, dict) and "vocab" in obj:
                continue
            obj.setdefault("disease", "")
            try:
                dlg = _dialogue_from_json(obj, None)
                dlg.validate()
            except CorpusError as exc:
                raise CorpusError(f"{path}:{lineno}: {exc}") from None
            dialogues.append(dlg)
    return dialogues


def cmd_predict(args) -> int:
    model, manifest = load_checkpoint(args.checkpoint)
    kg = load_graph(args.kg) if args.kg else load_graph(Path(args.checkpoint).parent / "kg.json")
    if vocab_hash(kg.symptoms, kg.diseases) != model.vocab_hash():
        raise CheckpointError("knowledge graph vocabulary does not match the checkpoint")
    cfg = train_config_from_manifest(manifest, _extraction(args))
    k = max(1, args.top_k)
    results = []
    for dlg in _read_dialogues(args.corpus):
        pred, _ = forward(model, dlg, kg, cfg)
        results.append(
            {
                "id": dlg.id,
                "ranked": [{"disease": d, "probability": p} for d, p in pred.top_k(k)],
            }
        )
    print(json.dumps({"vocab_hash": model.vocab_hash(), "variant": model.variant, "predictions": results}))
    return EXIT_OK


def cmd_gen_synthetic(args) -> int:
    spec = SyntheticSpec(
        num_diseases=args.num_diseases,
        num_symptoms=args.num_symptoms,
        num_dialogues=args.num_dialogues,
        noise=args.noise,
        seed=args.seed,
        num_groups=args.num_groups,
    )
    synth = generate(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_corpus(synth.corpus, out, meta={"generator": spec.__dict__})
    if args.lexicon_out:
        _write_json(Path(args.lexicon_out), synth.lexicon())
    print(f"wrote {len(synth.corpus)} dialogues to {out}")
    return EXIT_OK


def cmd_ablate(args) -> int:
    corpus = _load_corpus_with_groups(args)
    model_cfg, cfg = _model_config(args), _train_config(args)
    kg = load_graph(args.kg) if args.kg else None
    rows = ablate(corpus, kg, cfg, model_cfg, ratios=RATIOS, ks=tuple(args.ks))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8", newline="") as fh:
        fh.write(_run_header(model_cfg, cfg) + "\n")
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    print(f"wrote {len(rows)} ablation rows to {out}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------
def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", required=True, help="JSONL corpus")
    p.add_argument("--kg", help="knowledge graph JSON (default: built from the training split)")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=1, help="diseases kept per symptom when distilling")
    p.add_argument("--variant", choices=VARIANTS, default="KI_DDI")
    p.add_argument("--hierarchical", action="store_true", help="shorthand for --variant hierarchical")
    p.add_argument("--group-map", help="JSON disease -> group map (overrides the corpus header)")
    p.add_argument("--encoder", choices=("hash", "precomputed"), default="hash")
    p.add_argument("--embeddings", help="JSONL embeddings for the precomputed encoder")
    p.add_argument("--encoder-seed", type=int, default=0)
    p.add_argument("--dim", type=int, help="encoder dimension (default 768, or 64 with --preset desk)")
    p.add_argument("--preset", choices=("paper", "desk"), default="paper")
    p.add_argument("--epochs", type=int, default=25)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--extraction", choices=(GOLD, LEXICON), default=GOLD)
    p.add_argument("--lexicon", help="lexicon JSON for --extraction lexicon")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kiddi", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-kg", help="build the symptom-disease knowledge graph")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_kg)

    p = sub.add_parser("train", help="train one variant; writes checkpoint, history and report")
    _add_model_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="rank diseases for dialogues with a trained checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", required=True, help="JSONL dialogues (disease label optional)")
    p.add_argument("--kg", help="graph JSON (default: kg.json next to the checkpoint)")
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--extraction", choices=(GOLD, LEXICON), default=GOLD)
    p.add_argument("--lexicon")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("gen-synthetic", help="write a synthetic corpus with signature symptoms")
    p.add_argument("--num-diseases", type=int, default=10)
    p.add_argument("--num-symptoms", type=int, default=40)
    p.add_argument("--num-dialogues", type=int, default=500)
    p.add_argument("--num-groups", type=int, default=3)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--lexicon-out", help="also write the surface-form lexicon here")
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("ablate", help="train every ablation variant on one shared split")
    _add_model_flags(p)
    p.add_argument("--ks", type=int, nargs="+", default=[1, 2, 3])
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (CorpusError, GraphError, EncoderError, CheckpointError, TrainingError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
