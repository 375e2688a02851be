import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kiddi.encoder import EncoderConfig, EncoderError, encode, hash_encode, write_embeddings


class TestHash:
    cfg = EncoderConfig(dim=64)

    def test_deterministic(self):
        toks = ["[pat]", "i", "have", "a", "fever"]
        np.testing.assert_array_equal(encode(toks, self.cfg).vector, encode(list(toks), self.cfg).vector)

    def test_empty_is_zero(self):
        np.testing.assert_array_equal(encode([], self.cfg).vector, np.zeros(64))

    def test_markers_only_nonzero(self):
        v = encode(["[sr_start]", "[sr_end]"], self.cfg).vector
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.text(min_size=1, max_size=8), min_size=1, max_size=30))
    def test_unit_norm(self, toks):
        assert np.linalg.norm(encode(toks, self.cfg).vector) == pytest.approx(1.0, abs=1e-12)

    def test_swap_changes_vector(self):
        a = ["fever", "since", "two", "days", "and", "cough"]
        b = ["cough", "since", "two", "days", "and", "fever"]
        assert not np.array_equal(encode(a, self.cfg).vector, encode(b, self.cfg).vector)

    def test_seed_changes_vector(self):
        toks = ["dry", "cough"]
        a = hash_encode(toks, 64, (1, 2), 0)
        b = hash_encode(toks, 64, (1, 2), 1)
        assert not np.array_equal(a, b)

    def test_unigram_counts(self):
        # two identical unigrams collide in the same bucket with the same sign
        v = hash_encode(["x", "x"], 16, (1,), 3)
        assert np.count_nonzero(v) == 1 and np.abs(v).max() == pytest.approx(1.0)

    @pytest.mark.parametrize("kw", [dict(dim=1), dict(ngram_orders=()), dict(kind="bert"), dict(kind="precomputed")])
    def test_invalid_config(self, kw):
        with pytest.raises(ValueError):
            EncoderConfig(**kw)

    def test_json_round_trip(self):
        cfg = EncoderConfig(dim=32, ngram_orders=(1, 2, 3), seed=7)
        assert EncoderConfig.from_json(cfg.to_json()) == cfg


class TestPrecomputed:
    def test_lookup(self, tmp_path):
        p = tmp_path / "emb.jsonl"
        write_embeddings(p, {"d1/self_report": np.arange(4.0), "d1/full_dialog": np.ones(4)})
        cfg = EncoderConfig(kind="precomputed", dim=4, embedding_path=str(p))
        np.testing.assert_array_equal(encode([], cfg, key="d1/self_report").vector, np.arange(4.0))

    def test_missing_key_named(self, tmp_path):
        p = tmp_path / "emb.jsonl"
        write_embeddings(p, {"d1/self_report": np.zeros(4)})
        cfg = EncoderConfig(kind="precomputed", dim=4, embedding_path=str(p))
        with pytest.raises(EncoderError, match="d2/full_dialog"):
            encode([], cfg, key="d2/full_dialog")

    def test_dim_mismatch(self, tmp_path):
        p = tmp_path / "emb.jsonl"
        write_embeddings(p, {"k": np.zeros(3)})
        cfg = EncoderConfig(kind="precomputed", dim=4, embedding_path=str(p))
        with pytest.raises(EncoderError, match="dim"):
            encode([], cfg, key="k")
