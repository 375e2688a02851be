"""Symptom extraction from dialogue turns.

Two extractors share one interface: ``gold`` returns the annotated mentions,
``lexicon`` scans the turn text for known surface forms (longest match wins,
matched on whole tokens).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Dialogue, tokenize

GOLD = "gold"
LEXICON = "lexicon"


@dataclass(frozen=True)
class ExtractionConfig:
    mode: str = GOLD
    lexicon: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in (GOLD, LEXICON):
            raise ValueError(f"unknown extraction mode {self.mode!r}")
        if self.mode == LEXICON and not self.lexicon:
            raise ValueError("lexicon mode needs a non-empty lexicon")

    def __hash__(self):
        return hash((self.mode, tuple(sorted(self.lexicon.items()))))


class LexiconMatcher:
    def __init__(self, lexicon: dict[str, str]):
        self._forms: dict[tuple[str, ...], str] = {}
        for surface, symptom in lexicon.items():
            toks = tuple(tokenize(surface))
            if toks:
                self._forms[toks] = symptom
        self._max_len = max((len(t) for t in self._forms), default=0)

    def scan(self, text: str) -> list[str]:
        tokens = tokenize(text)
        found: list[str] = []
        i = 0
        while i < len(tokens):
            for n in range(min(self._max_len, len(tokens) - i), 0, -1):
                hit = self._forms.get(tuple(tokens[i : i + n]))
                if hit is not None:
                    found.append(hit)
                    i += n
                    break
            else:
                i += 1
        return found


_matchers: dict[ExtractionConfig, LexiconMatcher] = {}


def _matcher(cfg: ExtractionConfig) -> LexiconMatcher:
    if cfg not in _matchers:
        _matchers[cfg] = LexiconMatcher(cfg.lexicon)
    return _matchers[cfg]


def extract_symptoms(dialogue: Dialogue, cfg: ExtractionConfig = ExtractionConfig()) -> list[str]:
    found: dict[str, None] = {}
    if cfg.mode == GOLD:
        for turn in dialogue.turns:
            for s in turn.symptom_mentions:
                found.setdefault(s, None)
    else:
        matcher = _matcher(cfg)
        for turn in dialogue.turns:
            for s in matcher.scan(turn.text):
                found.setdefault(s, None)
    return list(found)


def load_lexicon(path: str | Path) -> dict[str, str]:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(obj, dict) or not all(isinstance(v, str) for v in obj.values()):
        raise ValueError(f"{path}: lexicon must map surface forms to symptom ids")
    return obj
