import numpy as np
import pytest

from adscreen.chat import Demographics, RawChatDocument, Transcript, parse_chat
from adscreen.errors import (
    EmptyCorpusError,
    MissingDemographicsError,
    NonPositiveAudioLengthError,
    SchemaMismatchError,
)
from adscreen.features import (
    GENDER_ENCODING,
    LINGUISTIC_FEATURE_NAMES,
    Standardizer,
    assemble,
    bow_transform,
    demographic_features,
    demographic_raw,
    features_to_csv,
    fit_age_scaler,
    fit_count_vectorizer,
    fit_linguistic_scaler,
    linguistic_features,
    linguistic_raw,
    schema_for_pipeline,
)


def make_transcript(
    text, audio_length=60.0, age=70.0, gender="female", source_id="t0"
):
    base = parse_chat(RawChatDocument.from_text(text, source_id))
    return Transcript(
        source_id=source_id,
        utterances=base.utterances,
        demographics=Demographics(age=age, gender=gender),
        audio_length=audio_length,
        interviewer_speakers=base.interviewer_speakers,
    )


class TestVocabulary:
    def test_lexicographic_indices(self):
        train = [make_transcript("***PAR: a b ."), make_transcript("***PAR: b c .")]
        vocab = fit_count_vectorizer(train)
        assert vocab.index == {"a": 0, "b": 1, "c": 2}

    def test_empty_corpus_rejected(self):
        with pytest.raises(EmptyCorpusError):
            fit_count_vectorizer([make_transcript("***PAR: xxx .")])

    def test_min_df_filters_rare_tokens(self):
        train = [make_transcript("***PAR: a a b .")]
        vocab = fit_count_vectorizer(train, min_df=2)
        assert vocab.tokens == ["a"]

    def test_interviewer_tokens_never_enter(self):
        train = [make_transcript("***INV: probe word .\n***PAR: boy cookie .")]
        vocab = fit_count_vectorizer(train)
        assert "probe" not in vocab.index
        assert "boy" in vocab.index

    def test_class_skewed_token_counts(self):
        # a token dominating one group keeps its dominance through counting
        grp0 = [make_transcript("***PAR: tree house .") for _ in range(5)]
        grp1 = [make_transcript("***PAR: lady lady tree .") for _ in range(5)]
        vocab = fit_count_vectorizer(grp0 + grp1)
        assert "lady" in vocab.index
        count0 = sum(bow_transform(t, vocab)[vocab.index["lady"]] for t in grp0)
        count1 = sum(bow_transform(t, vocab)[vocab.index["lady"]] for t in grp1)
        assert count1 > count0


class TestBagOfWords:
    def test_direct_counts(self):
        train = [make_transcript("***PAR: a b c .")]
        vocab = fit_count_vectorizer(train)
        t = make_transcript("***PAR: b b a .")
        assert bow_transform(t, vocab).tolist() == [1.0, 2.0, 0.0]

    def test_oov_ignored(self):
        train = [make_transcript("***PAR: a b c .")]
        vocab = fit_count_vectorizer(train)
        t = make_transcript("***PAR: z z z .")
        assert bow_transform(t, vocab).tolist() == [0.0, 0.0, 0.0]

    def test_block_sum_is_in_vocab_token_count(self):
        words = ["w%d" % (i % 7) for i in range(50)]
        train = [make_transcript("***PAR: " + " ".join(words[:30]) + " .")]
        vocab = fit_count_vectorizer(train)
        t = make_transcript("***PAR: " + " ".join(words) + " novel novel .")
        vec = bow_transform(t, vocab)
        assert vec.sum() == 50  # the two novel tokens are OOV


class TestStandardizer:
    def test_zero_mean_unit_variance(self):
        rng = np.random.default_rng(3)
        X = rng.normal(5.0, 3.0, size=(40, 4))
        s = Standardizer.fit(X)
        Z = s.transform(X)
        np.testing.assert_allclose(Z.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(Z.std(axis=0), 1.0, atol=1e-12)

    def test_constant_column_left_near_zero(self):
        # degenerate std is floored to 1, not divided through
        X = np.ones((10, 1)) * 4.2
        s = Standardizer.fit(X)
        assert s.scale[0] == 1.0
        np.testing.assert_allclose(s.transform(X), 0.0, atol=1e-12)

    def test_statistics_frozen(self):
        X = np.arange(10, dtype=float)[:, None]
        s = Standardizer.fit(X)
        held_out = np.array([[100.0]])
        assert s.transform(held_out)[0, 0] > 10


class TestLinguisticBlock:
    def test_word_rate_example(self):
        words = " ".join(f"w{i}" for i in range(120))
        t = make_transcript(f"***PAR: {words} .", audio_length=60.0)
        raw = linguistic_raw(t)
        assert raw[0] == pytest.approx(2.0)

    def test_rates_normalized_by_audio_length(self):
        text = "***INV: and then ?\n***PAR: well xxx (.) &uh yes ."
        t_short = make_transcript(text, audio_length=10.0)
        t_long = make_transcript(text, audio_length=100.0)
        np.testing.assert_allclose(
            linguistic_raw(t_short), 10.0 * linguistic_raw(t_long)
        )

    def test_event_rates_count_correct_kinds(self):
        t = make_transcript(
            "***INV: go on .\n***PAR: xxx xxx (.) &um &uh &uh ok .",
            audio_length=2.0,
        )
        raw = linguistic_raw(t)
        named = dict(zip(LINGUISTIC_FEATURE_NAMES, raw))
        assert named["intervention_rate"] == pytest.approx(0.5)
        assert named["unintelligible_rate"] == pytest.approx(1.0)
        assert named["trailing_pause_rate"] == pytest.approx(0.5)
        assert named["filler_rate"] == pytest.approx(1.5)

    def test_missing_audio_length(self):
        t = make_transcript("***PAR: hello .", audio_length=None)
        with pytest.raises(NonPositiveAudioLengthError):
            linguistic_raw(t)

    def test_scaled_block_standardized_on_train(self):
        rng = np.random.default_rng(0)
        train = [
            make_transcript(
                "***PAR: " + " ".join("w" for _ in range(int(rng.integers(5, 80)))) + " .",
                audio_length=float(rng.uniform(30, 120)),
            )
            for _ in range(12)
        ]
        scaler = fit_linguistic_scaler(train)
        block = np.stack([linguistic_features(t, scaler) for t in train])
        np.testing.assert_allclose(block[:, 0].mean(), 0.0, atol=1e-12)
        np.testing.assert_allclose(block[:, 0].std(), 1.0, atol=1e-9)


class TestDemographicBlock:
    def test_gender_encoding(self):
        assert GENDER_ENCODING == {"male": 0.0, "female": 1.0}
        t = make_transcript("***PAR: hi .", gender="male", age=80)
        assert demographic_raw(t).tolist() == [80.0, 0.0]

    def test_missing_age(self):
        t = make_transcript("***PAR: hi .", age=None)
        with pytest.raises(MissingDemographicsError):
            demographic_raw(t)

    def test_unusable_gender(self):
        t = make_transcript("***PAR: hi .", gender=None)
        with pytest.raises(MissingDemographicsError):
            demographic_raw(t)

    def test_age_standardized_gender_passthrough(self):
        train = [
            make_transcript("***PAR: hi .", age=60, gender="male"),
            make_transcript("***PAR: hi .", age=80, gender="female"),
        ]
        scaler = fit_age_scaler(train)
        f0 = demographic_features(train[0], scaler)
        f1 = demographic_features(train[1], scaler)
        assert f0[0] == pytest.approx(-1.0)
        assert f1[0] == pytest.approx(1.0)
        assert f0[1] == 0.0 and f1[1] == 1.0


class TestSchema:
    def test_pipeline_dimensions(self):
        s = schema_for_pipeline(4, vocab_size=100, doc2vec_size=50, context_size=64)
        assert s.dim == 221
        assert s.block_names == ("bow", "linguistic", "demographic", "doc2vec", "context_emb")

    def test_pipeline_one_is_bow_only(self):
        s = schema_for_pipeline(1, vocab_size=7)
        assert s.dim == 7
        assert s.block_names == ("bow",)

    def test_offsets_contiguous(self):
        s = schema_for_pipeline(3, vocab_size=10, doc2vec_size=4)
        offs = s.offsets()
        assert offs["bow"] == (0, 10)
        assert offs["linguistic"] == (10, 15)
        assert offs["demographic"] == (15, 17)
        assert offs["doc2vec"] == (17, 21)

    def test_unknown_pipeline(self):
        with pytest.raises(ValueError):
            schema_for_pipeline(5, vocab_size=3)

    def test_fingerprint_changes_with_layout(self):
        a = schema_for_pipeline(1, vocab_size=10)
        b = schema_for_pipeline(1, vocab_size=11)
        assert a.fingerprint() != b.fingerprint()


class TestAssemble:
    def test_concatenation_in_schema_order(self):
        s = schema_for_pipeline(2, vocab_size=2)
        vec = assemble(
            {
                "bow": np.array([1.0, 2.0]),
                "linguistic": np.arange(5, dtype=float),
                "demographic": np.array([0.5, 1.0]),
            },
            s,
        )
        np.testing.assert_array_equal(vec, [1, 2, 0, 1, 2, 3, 4, 0.5, 1.0])

    def test_missing_block(self):
        s = schema_for_pipeline(2, vocab_size=2)
        with pytest.raises(SchemaMismatchError):
            assemble({"bow": np.zeros(2)}, s)

    def test_size_mismatch(self):
        s = schema_for_pipeline(1, vocab_size=3)
        with pytest.raises(SchemaMismatchError):
            assemble({"bow": np.zeros(4)}, s)

    def test_non_finite_rejected(self):
        s = schema_for_pipeline(1, vocab_size=2)
        with pytest.raises(SchemaMismatchError):
            assemble({"bow": np.array([1.0, np.nan])}, s)

    def test_extra_blocks_ignored(self):
        s = schema_for_pipeline(1, vocab_size=2)
        vec = assemble({"bow": np.ones(2), "doc2vec": np.ones(9)}, s)
        assert vec.shape == (2,)


def test_csv_export_header(tmp_path):
    s = schema_for_pipeline(1, vocab_size=2)
    out = tmp_path / "features.csv"
    features_to_csv(np.array([[1.0, 2.0]]), s, out, config_hash="abc123")
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# format_version=1 config_hash=abc123")
    assert lines[1] == "bow_0,bow_1"
    assert lines[2] == "1.0,2.0"
