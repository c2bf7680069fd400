"""Scoring, aggregation, report JSON, the ablation sweep, and dumps."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import micro_f1_ref
from protoverb.core import EmbeddingBatch, LossWeights, VerbalizerModel
from protoverb.encode import EmbeddingStore, MaskEmbedding, load_embeddings
from protoverb.errors import DataError, ShapeError
from protoverb.optim import OptimConfig, init_model
from protoverb.report import (
    CANONICAL_ABLATION,
    RunRecord,
    RunReport,
    ablation_sweep,
    aggregate,
    count_params,
    dump_embeddings,
    evaluate_model,
    micro_f1,
)


class TestMicroF1:
    def test_perfect(self):
        assert micro_f1([0, 1, 2], [0, 1, 2]) == 1.0

    def test_all_wrong(self):
        assert micro_f1([1, 2, 0], [0, 1, 2]) == 0.0

    def test_partial(self):
        assert micro_f1([0, 1, 1, 0], [0, 1, 0, 0]) == pytest.approx(0.75)

    @given(st.integers(min_value=1, max_value=40), st.integers(min_value=2, max_value=6),
           st.integers(min_value=0, max_value=2**31))
    @settings(max_examples=100, deadline=None)
    def test_equals_accuracy(self, n, k, seed):
        # micro F1 over single-label multiclass predictions is accuracy
        rng = np.random.default_rng(seed)
        pred = rng.integers(0, k, size=n).tolist()
        gold = rng.integers(0, k, size=n).tolist()
        assert micro_f1(pred, gold, n_classes=k) == pytest.approx(
            micro_f1_ref(pred, gold), rel=1e-12
        )

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            micro_f1([0, 1], [0])

    def test_empty(self):
        with pytest.raises(ShapeError):
            micro_f1([], [])

    def test_out_of_range_prediction(self):
        with pytest.raises(DataError):
            micro_f1([0, 5], [0, 1], n_classes=2)

    def test_negative_gold(self):
        with pytest.raises(DataError):
            micro_f1([0, 1], [0, -1], n_classes=2)


class TestAggregate:
    def test_fixture(self):
        mean, std, mx = aggregate([1.0, 2.0, 3.0])
        assert mean == pytest.approx(2.0)
        assert std == pytest.approx(0.816497, abs=1e-6)
        assert mx == pytest.approx(3.0)

    def test_singleton(self):
        assert aggregate([0.42]) == (0.42, 0.0, 0.42)

    def test_permutation_invariant(self):
        vals = [0.3, 0.9, 0.1, 0.55]
        assert aggregate(vals) == aggregate(list(reversed(vals)))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate([])


class TestCountParams:
    def test_reference_head(self):
        assert count_params(1024, 256, 10, "ppv") == 264_704

    def test_soft_baseline(self):
        assert count_params(1024, None, 10, "spv") == 10_240
        assert count_params(1024, 256, 10, "spv") == 10_240

    def test_degenerate_dims(self):
        assert count_params(1, 1, 1, "ppv") == 2

    def test_unknown_head(self):
        with pytest.raises(ValueError, match="xyz"):
            count_params(8, 4, 2, "xyz")

    def test_nonpositive(self):
        with pytest.raises(ValueError):
            count_params(0, 4, 2, "ppv")
        with pytest.raises(ValueError):
            count_params(8, 0, 2, "ppv")
        with pytest.raises(ValueError):
            count_params(8, 4, -1, "spv")


def _report():
    rep = RunReport(config={"k": 4, "encoder": "toy"})
    rep.runs.append(RunRecord(seed=0, template=1, k=4, lam=(1.0, 1.0, 1.0), micro_f1=0.5))
    rep.runs.append(RunRecord(seed=1, template=1, k=4, lam=(1.0, 1.0, 1.0), micro_f1=0.75))
    return rep


class TestRunReport:
    def test_json_shape(self):
        obj = json.loads(_report().to_json())
        assert set(obj) == {"config", "runs", "aggregate", "timing"}
        assert obj["timing"] is None
        assert obj["aggregate"] == {"mean": 0.625, "std": 0.125, "max": 0.75}
        assert obj["runs"][0] == {
            "seed": 0, "template": 1, "k": 4, "lambda": [1.0, 1.0, 1.0], "micro_f1": 0.5,
        }

    def test_keys_sorted(self):
        text = _report().to_json()
        assert text.index('"aggregate"') < text.index('"config"') < text.index('"runs"')
        assert text.endswith("\n")

    def test_floats_rounded_to_six(self):
        rep = RunReport(config={})
        rep.runs.append(RunRecord(seed=0, template=0, k=1, lam=(1, 0, 0),
                                  micro_f1=1.0 / 3.0))
        obj = json.loads(rep.to_json())
        assert obj["runs"][0]["micro_f1"] == 0.333333

    def test_byte_identical_across_calls(self):
        assert _report().to_json() == _report().to_json()

    def test_timing_included_when_set(self):
        rep = _report()
        rep.timing_seconds = 1.23456789
        assert json.loads(rep.to_json())["timing"] == 1.234568

    def test_write_round_trip(self, tmp_path):
        rep = _report()
        path = tmp_path / "report.json"
        rep.write(str(path))
        assert path.read_text() == rep.to_json()


def _toy_episode(seed=0, n_per_class=8, k=3, m=6):
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(k, m)) * 3.0
    vecs, labels = [], []
    for y in range(k):
        for _ in range(n_per_class):
            vecs.append(centers[y] + rng.normal(size=m) * 0.1)
            labels.append(y)
    return EmbeddingBatch(vectors=np.array(vecs), labels=np.array(labels))


class TestEvaluateAndAblation:
    def test_evaluate_perfect_model(self):
        # prototypes equal the class directions, W identity
        model = VerbalizerModel(w=np.eye(2), p=np.array([[1.0, 0.0], [0.0, 1.0]]))
        batch = EmbeddingBatch(
            vectors=np.array([[2.0, 0.1], [0.1, 2.0]]), labels=np.array([0, 1])
        )
        assert evaluate_model(model, batch) == 1.0

    def test_sweep_covers_canonical_combos(self):
        train_b = _toy_episode(seed=1)
        test_b = _toy_episode(seed=2)
        cfg = OptimConfig(lr=1e-2, epochs=3, batch_size=8, seed=0)
        init = init_model(m=6, d=4, k=3, seed=0)
        out = ablation_sweep(train_b, test_b, init, cfg, {"encoder": "toy"},
                             seed=0, template=0, k_shots=8)
        assert [slug for slug, _ in out] == [slug for slug, _ in CANONICAL_ABLATION]
        for slug, rep in out:
            assert rep.config["combo"] == slug
            assert len(rep.runs) == 1
            assert 0.0 <= rep.runs[0].micro_f1 <= 1.0

    def test_sweep_does_not_mutate_init(self):
        train_b = _toy_episode(seed=1)
        init = init_model(m=6, d=4, k=3, seed=0)
        w_before = init.w.copy()
        cfg = OptimConfig(lr=1e-2, epochs=2, batch_size=8, seed=0)
        ablation_sweep(train_b, train_b, init, cfg, {}, seed=0, template=0, k_shots=8)
        np.testing.assert_array_equal(init.w, w_before)

    def test_sweep_subset(self):
        train_b = _toy_episode(seed=1)
        cfg = OptimConfig(lr=1e-2, epochs=1, batch_size=8, seed=0)
        init = init_model(m=6, d=4, k=3, seed=0)
        out = ablation_sweep(train_b, train_b, init, cfg, {}, seed=0, template=0,
                             k_shots=8, combos=CANONICAL_ABLATION[:1])
        assert len(out) == 1
        assert out[0][0] == "ls"


class TestDumpEmbeddings:
    def _store(self, n=4, m=3):
        rng = np.random.default_rng(0)
        recs = [
            MaskEmbedding(id=f"t:{i}", vector=rng.normal(size=m), label=i % 2)
            for i in range(n)
        ]
        return EmbeddingStore(m=m, source="unit", records=recs)

    def test_counts_and_proto_tagging(self, tmp_path):
        model = init_model(m=3, d=2, k=2, seed=0)
        store = self._store(n=4, m=3)
        path = tmp_path / "dump.jsonl"
        dump_embeddings(model, store, str(path))
        loaded = load_embeddings(str(path))
        assert loaded.m == 2
        assert len(loaded) == 4 + 2
        protos = [r for r in loaded.records if r.id.startswith("proto:")]
        assert [r.id for r in protos] == ["proto:0", "proto:1"]
        assert [r.label for r in protos] == [0, 1]
        assert loaded.source == "dump:unit"

    def test_named_prototypes(self, tmp_path):
        model = init_model(m=3, d=2, k=2, seed=0)
        path = tmp_path / "dump.jsonl"
        dump_embeddings(model, self._store(), str(path), names=["world", "sports"])
        ids = [r.id for r in load_embeddings(str(path)).records]
        assert "proto:world" in ids and "proto:sports" in ids

    def test_vectors_are_transformed(self, tmp_path):
        model = init_model(m=3, d=2, k=2, seed=0)
        store = self._store(n=2, m=3)
        path = tmp_path / "dump.jsonl"
        dump_embeddings(model, store, str(path))
        loaded = load_embeddings(str(path))
        want = model.w @ store.records[0].vector
        got = loaded.records[0].vector
        # round trip quantizes to float32
        np.testing.assert_allclose(got, want.astype(np.float32), rtol=1e-6)

    def test_empty_store_dumps_prototypes_only(self, tmp_path):
        model = init_model(m=3, d=2, k=2, seed=0)
        store = EmbeddingStore(m=3, source="empty", records=[])
        path = tmp_path / "dump.jsonl"
        dump_embeddings(model, store, str(path))
        assert len(load_embeddings(str(path))) == 2

    def test_dimension_mismatch(self, tmp_path):
        model = init_model(m=5, d=2, k=2, seed=0)
        with pytest.raises(ShapeError):
            dump_embeddings(model, self._store(m=3), str(tmp_path / "x.jsonl"))
