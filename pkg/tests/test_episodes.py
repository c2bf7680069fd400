"""Dataset loading, k-shot sampling, and the synthetic benchmark generator."""

import numpy as np
import pytest

from protoverb.core import LabelSpace
from protoverb.episodes import (
    DatasetSchema,
    EpisodeSpec,
    SynthSpec,
    TextDataset,
    k_shot_sample,
    load_dataset,
    parse_schema,
    sample_k_per_class,
    synth_generate,
)
from protoverb.errors import DataError, UsageError


def _space(k=3):
    return LabelSpace(
        names=tuple(f"c{i}" for i in range(k)),
        label_words=tuple((f"w{i}",) for i in range(k)),
    )


class TestParseSchema:
    def test_basic(self):
        s = parse_schema("label=0,text=1")
        assert s.label_col == 0
        assert s.text_cols == (1,)
        assert s.one_based_labels is False

    def test_multi_text_columns(self):
        s = parse_schema("label=0,text=1+2")
        assert s.text_cols == (1, 2)

    def test_one_based_flag(self):
        s = parse_schema("label=0,text=1,one-based")
        assert s.one_based_labels is True

    def test_order_does_not_matter(self):
        assert parse_schema("text=2,label=1") == DatasetSchema(label_col=1, text_cols=(2,))

    def test_unknown_component(self):
        with pytest.raises(UsageError, match="bogus"):
            parse_schema("label=0,text=1,bogus")

    def test_missing_label(self):
        with pytest.raises(UsageError):
            parse_schema("text=1")

    def test_missing_text(self):
        with pytest.raises(UsageError):
            parse_schema("label=0")

    def test_negative_column_rejected(self):
        with pytest.raises(ValueError):
            DatasetSchema(label_col=-1, text_cols=(0,))


class TestLoadDataset:
    def _write(self, tmp_path, rows):
        path = tmp_path / "data.csv"
        path.write_text("\n".join(rows) + "\n")
        return str(path)

    def test_loads_rows(self, tmp_path):
        path = self._write(tmp_path, ["0,hello there", "1,goodbye now", "2,back again"])
        ds = load_dataset(path, parse_schema("label=0,text=1"), _space())
        assert ds.texts == ["hello there", "goodbye now", "back again"]
        assert ds.labels == [0, 1, 2]
        assert len(ds) == 3

    def test_joins_text_columns(self, tmp_path):
        path = self._write(tmp_path, ["0,first part,second part"])
        ds = load_dataset(path, parse_schema("label=0,text=1+2"), _space())
        assert ds.texts == ["first part second part"]

    def test_one_based_labels_shift(self, tmp_path):
        path = self._write(tmp_path, ["1,aa", "3,bb"])
        ds = load_dataset(path, parse_schema("label=0,text=1,one-based"), _space())
        assert ds.labels == [0, 2]

    def test_bad_label_names_row(self, tmp_path):
        path = self._write(tmp_path, ["0,fine", "xx,broken"])
        with pytest.raises(DataError, match="row 2"):
            load_dataset(path, parse_schema("label=0,text=1"), _space())

    def test_label_out_of_range_names_row(self, tmp_path):
        path = self._write(tmp_path, ["0,fine", "9,broken"])
        with pytest.raises(DataError, match="row 2"):
            load_dataset(path, parse_schema("label=0,text=1"), _space())

    def test_short_row_names_row(self, tmp_path):
        path = self._write(tmp_path, ["0,fine,extra", "1"])
        with pytest.raises(DataError, match="row 2"):
            load_dataset(path, parse_schema("label=0,text=1+2"), _space())

    def test_empty_text_rejected(self, tmp_path):
        path = self._write(tmp_path, ["0,  "])
        with pytest.raises(DataError, match="empty text"):
            load_dataset(path, parse_schema("label=0,text=1"), _space())

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="cannot read"):
            load_dataset(str(tmp_path / "nope.csv"), parse_schema("label=0,text=1"), _space())

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(DataError, match="empty"):
            load_dataset(str(path), parse_schema("label=0,text=1"), _space())

    def test_length_mismatch_rejected(self):
        with pytest.raises(DataError):
            TextDataset(texts=["a"], labels=[0, 1], split="train", label_space=_space())


class TestSampleKPerClass:
    def test_exactly_k_of_each(self):
        labels = [0] * 10 + [1] * 10 + [2] * 10
        idx = sample_k_per_class(labels, k=3, n_classes=3, seed=0)
        assert len(idx) == 9
        counts = np.bincount(np.asarray(labels)[idx], minlength=3)
        assert counts.tolist() == [3, 3, 3]

    def test_no_replacement(self):
        labels = [0] * 5 + [1] * 5
        idx = sample_k_per_class(labels, k=5, n_classes=2, seed=7)
        assert sorted(idx) == list(range(10))

    def test_deterministic(self):
        labels = list(range(4)) * 25
        a = sample_k_per_class(labels, k=5, n_classes=4, seed=11)
        b = sample_k_per_class(labels, k=5, n_classes=4, seed=11)
        c = sample_k_per_class(labels, k=5, n_classes=4, seed=12)
        assert a == b
        assert a != c

    def test_insufficient_class(self):
        labels = [0, 0, 1]
        with pytest.raises(DataError, match="class 1"):
            sample_k_per_class(labels, k=2, n_classes=2, seed=0)

    def test_k_zero_empty(self):
        assert sample_k_per_class([0, 1, 0, 1], k=0, n_classes=2, seed=0) == []

    def test_episode_wraps_sampler(self):
        ds = TextDataset(
            texts=[f"t{i}" for i in range(12)],
            labels=[i % 3 for i in range(12)],
            split="train",
            label_space=_space(),
        )
        ep = k_shot_sample(ds, EpisodeSpec(k=2, seed=5))
        assert len(ep) == 6
        assert sorted(ep.labels) == [0, 0, 1, 1, 2, 2]
        for text, label in zip(ep.texts, ep.labels):
            assert text in ds.texts
            assert ds.labels[ds.texts.index(text)] == label

    def test_episode_spec_rejects_negative_k(self):
        with pytest.raises(ValueError):
            EpisodeSpec(k=-1, seed=0)


class TestSynthGenerate:
    def test_shapes(self):
        spec = SynthSpec(n_classes=4, train_per_class=6, test_per_class=3, seed=1)
        train, test, corpus, space = synth_generate(spec)
        assert len(train) == 24
        assert len(test) == 12
        assert len(corpus) == 4 * spec.corpus_per_class
        assert space.k == 4
        assert sorted(set(train.labels)) == [0, 1, 2, 3]

    def test_deterministic(self):
        spec = SynthSpec(n_classes=3, train_per_class=4, test_per_class=4, seed=9)
        a = synth_generate(spec)
        b = synth_generate(spec)
        assert a[0].texts == b[0].texts
        assert a[1].texts == b[1].texts
        assert a[2] == b[2]

    def test_seed_changes_output(self):
        base = dict(n_classes=3, train_per_class=4, test_per_class=4)
        a = synth_generate(SynthSpec(seed=1, **base))
        b = synth_generate(SynthSpec(seed=2, **base))
        assert a[0].texts != b[0].texts

    def test_corpus_label_word_coverage(self):
        spec = SynthSpec(n_classes=3, train_per_class=2, test_per_class=2, seed=4)
        _, _, corpus, space = synth_generate(spec)
        for (word,) in space.label_words:
            hits = sum(1 for line in corpus if word in line.rstrip(".").split(" "))
            # 80% of each class's corpus docs carry the label word
            assert hits == round(0.8 * spec.corpus_per_class)

    def test_train_docs_do_not_leak_label_words(self):
        spec = SynthSpec(n_classes=3, train_per_class=5, test_per_class=5, seed=4)
        train, test, _, space = synth_generate(spec)
        words = {w for (w,) in space.label_words}
        for text in train.texts + test.texts:
            assert not words & set(text.rstrip(".").split(" "))

    def test_rejects_single_class(self):
        with pytest.raises(DataError):
            SynthSpec(n_classes=1, train_per_class=2, test_per_class=2)

    def test_rejects_bad_noise_rate(self):
        with pytest.raises(DataError):
            SynthSpec(n_classes=2, train_per_class=2, test_per_class=2, noise_rate=1.5)
