import json

import pytest

from kiddi.corpus import Dialogue, Utterance
from kiddi.nlu import ExtractionConfig, LexiconMatcher, extract_symptoms, load_lexicon

from conftest import make_dialogue


class TestGold:
    def test_passthrough(self):
        dlg = make_dialogue("a", "flu", [["fever", "cough"]])
        assert extract_symptoms(dlg) == ["fever", "cough"]

    def test_dedup_first_mention_order(self):
        dlg = make_dialogue("a", "flu", [["cough"], ["fever", "cough"], []])
        assert extract_symptoms(dlg, ExtractionConfig()) == ["cough", "fever"]

    def test_doctor_mentions_count(self):
        turns = (
            Utterance("patient", "hello", "symptom", ("fever",)),
            Utterance("doctor", "rash?", None, ("rash",)),
            Utterance("patient", "yes", "affirmative"),
        )
        assert extract_symptoms(Dialogue("a", turns, "flu")) == ["fever", "rash"]


class TestLexicon:
    LEX = {"short of breath": "dyspnea", "breath": "breath_sym", "fever": "fever", "high fever": "hyperpyrexia"}

    def _dlg(self, *texts):
        turns = tuple(Utterance("patient" if i % 2 == 0 else "doctor", t) for i, t in enumerate(texts))
        return Dialogue("a", turns, "flu")

    def test_longest_match_wins(self):
        cfg = ExtractionConfig("lexicon", self.LEX)
        assert extract_symptoms(self._dlg("I am short of breath"), cfg) == ["dyspnea"]

    def test_word_boundaries(self):
        m = LexiconMatcher({"ache": "ache"})
        assert m.scan("my headache is bad") == []
        assert m.scan("an ache, here") == ["ache"]

    def test_case_and_punctuation(self):
        cfg = ExtractionConfig("lexicon", self.LEX)
        assert extract_symptoms(self._dlg("HIGH FEVER!", "and fever?"), cfg) == ["hyperpyrexia", "fever"]

    def test_dedup_across_turns(self):
        cfg = ExtractionConfig("lexicon", self.LEX)
        assert extract_symptoms(self._dlg("fever", "breath", "fever"), cfg) == ["fever", "breath_sym"]

    def test_empty_lexicon_rejected(self):
        with pytest.raises(ValueError):
            ExtractionConfig("lexicon", {})

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            ExtractionConfig("bert")

    def test_config_hashable_and_equal(self):
        a = ExtractionConfig("lexicon", dict(self.LEX))
        b = ExtractionConfig("lexicon", dict(reversed(list(self.LEX.items()))))
        assert a == b and hash(a) == hash(b)

    def test_load_lexicon(self, tmp_path):
        p = tmp_path / "lex.json"
        p.write_text(json.dumps(self.LEX))
        assert load_lexicon(p) == self.LEX
