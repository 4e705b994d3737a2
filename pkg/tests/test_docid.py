import math

import pytest

from genret.corpus import Document
from genret.docid import (
    DocId,
    IdAssignment,
    acid_id,
    bm25_score,
    bm25_top_k_id,
    build_bm25_stats,
    eligible_terms,
    ensure_unique,
    first_k_tokens_id,
    tfidf_weights,
)
from genret.errors import DocIdError
from genret.keyphrase import (
    FixtureKeyphraseGenerator,
    TfidfKeyphraseGenerator,
    save_phrase_fixture,
)
from genret.tokenizer import EOS, SEP, build_vocab

from _synth import ENGINEERING_DOC, ENGINEERING_PHRASES


@pytest.fixture
def eng_doc():
    return Document.from_text("eng", ENGINEERING_DOC)


@pytest.fixture
def eng_vocab(eng_doc):
    return build_vocab([eng_doc])


class TestFirstK:
    def test_sample_doc_prefix(self, eng_doc, eng_vocab):
        did = first_k_tokens_id(eng_doc, eng_vocab, k=30)
        assert did.id_text.startswith(
            "list of engineering branches engineering is the discipline and profession "
            "that applies scientific theories"
        )
        assert len(did.id_tokens) == 31
        assert did.id_tokens[-1] == EOS

    def test_short_doc_keeps_all_tokens(self, eng_vocab):
        doc = Document.from_text("d", "one two three four five")
        did = first_k_tokens_id(doc, eng_vocab, k=30)
        assert len(did.id_tokens) == 6

    def test_k_equals_one(self, eng_vocab):
        doc = Document.from_text("d", "hello world")
        did = first_k_tokens_id(doc, eng_vocab, k=1)
        assert did.id_text == "hello"
        assert len(did.id_tokens) == 2

    def test_empty_doc_is_error(self, eng_vocab):
        with pytest.raises(DocIdError):
            first_k_tokens_id(Document.from_text("d", ""), eng_vocab)

    def test_shorter_k_is_prefix_of_longer(self, eng_doc, eng_vocab):
        short = first_k_tokens_id(eng_doc, eng_vocab, k=10)
        long = first_k_tokens_id(eng_doc, eng_vocab, k=20)
        assert long.id_tokens[:-1][: len(short.id_tokens) - 1] == short.id_tokens[:-1]

    def test_id_text_roundtrips_through_encode(self, eng_doc, eng_vocab):
        did = first_k_tokens_id(eng_doc, eng_vocab, k=30)
        assert tuple(eng_vocab.encode(did.id_text)) == did.id_tokens[:-1]


class TestBm25Stats:
    def test_single_doc_counts(self):
        stats = build_bm25_stats([Document.from_text("d", "a a b")])
        assert stats.doc_freq == {"a": 1, "b": 1}
        assert stats.coll_freq == {"a": 2, "b": 1}
        assert stats.avgdl == 3

    def test_empty_corpus(self):
        stats = build_bm25_stats([])
        assert stats.num_docs == 0 and stats.doc_freq == {} and stats.avgdl == 0.0

    def test_avgdl_mean(self):
        docs = [Document.from_text("a", "x y"), Document.from_text("b", "p q r s")]
        assert build_bm25_stats(docs).avgdl == 3.0


class TestBm25Score:
    def test_hand_value_equal_length_docs(self):
        # N=2, n=1, f=1, |d| = avgdl: idf = ln 2, tf component = 1.
        docs = [Document.from_text("a", "term x y"), Document.from_text("b", "p q r")]
        stats = build_bm25_stats(docs)
        assert bm25_score("term", "a", stats) == pytest.approx(math.log(2.0), abs=1e-12)

    def test_hand_value_single_doc_corpus(self):
        stats = build_bm25_stats([Document.from_text("a", "term other thing")])
        score = bm25_score("term", "a", stats)
        assert score == pytest.approx(math.log(1 + 0.5 / 1.5), abs=1e-12)

    def test_saturation_limit(self):
        text = " ".join(["term"] * 10**6)
        docs = [Document.from_text("a", text), Document.from_text("b", "q " * 10**6)]
        stats = build_bm25_stats(docs)
        tf_component = bm25_score("term", "a", stats) / math.log(2.0)
        assert tf_component == pytest.approx(1.9, abs=1e-3)

    def test_unknown_doc_key(self):
        stats = build_bm25_stats([Document.from_text("a", "x")])
        with pytest.raises(DocIdError):
            bm25_score("x", "missing", stats)


class TestEligibility:
    def build(self):
        # "twice" occurs 2x in d0 (eligible by tf); "spread" once per doc over
        # 5 docs (cf=5, eligible by corpus frequency); "fourspread" cf=4 (not).
        docs = [Document.from_text("d0", "twice twice spread fourspread once")]
        for i in range(1, 5):
            extra = " fourspread" if i < 4 else ""
            docs.append(Document.from_text(f"d{i}", f"spread filler{i}{extra}"))
        return docs, build_bm25_stats(docs)

    def test_tf_gate(self):
        docs, stats = self.build()
        elig = eligible_terms(docs[0], stats)
        assert "twice" in elig

    def test_cf_gate_boundary(self):
        docs, stats = self.build()
        assert stats.coll_freq["spread"] == 5 and stats.coll_freq["fourspread"] == 4
        elig = eligible_terms(docs[0], stats)
        assert "spread" in elig
        assert "fourspread" not in elig
        assert "once" not in elig


class TestBm25TopK:
    def test_rare_terms_rank_ahead_of_common(self, eng_doc):
        # Surround the sample document with fillers so "engineering"-style
        # common words score below its rarer technical terms.
        others = [
            Document.from_text(f"f{i}", "engineering is the discipline and profession . " * 3)
            for i in range(6)
        ]
        corpus = [eng_doc] + others
        stats = build_bm25_stats(corpus)
        vocab = build_vocab(corpus)
        did = bm25_top_k_id(eng_doc, stats, vocab, k=10)
        ranked = did.id_text.split()
        oracle = sorted(
            eligible_terms(eng_doc, stats),
            key=lambda t: (-bm25_score(t, "eng", stats), t),
        )[:10]
        assert ranked == oracle
        assert did.id_tokens[-1] == EOS

    def test_fewer_eligible_terms_than_k(self):
        docs = [Document.from_text("d", "aa aa bb bb cc cc zz")]
        stats = build_bm25_stats(docs)
        vocab = build_vocab(docs)
        did = bm25_top_k_id(docs[0], stats, vocab, k=30)
        assert len(did.id_text.split()) == 3

    def test_no_eligible_terms_is_error(self):
        docs = [Document.from_text("d", "all unique tokens here")]
        stats = build_bm25_stats(docs)
        vocab = build_vocab(docs)
        with pytest.raises(DocIdError, match="d"):
            bm25_top_k_id(docs[0], stats, vocab)


class TestAcid:
    def test_fixture_rendering_matches_enumerated_style(self, tmp_path, eng_doc, eng_vocab):
        path = tmp_path / "phrases.ndjson"
        save_phrase_fixture({"eng": ENGINEERING_PHRASES}, path)
        did = acid_id(eng_doc, FixtureKeyphraseGenerator(path), eng_vocab)
        assert did.id_text.startswith(
            "(1) Major engineering branches: chemical, civil, electrical, mechanical "
            "(2) Chemical engineering:"
        )
        assert did.id_tokens[-1] == EOS
        assert tuple(eng_vocab.encode(did.id_text)) == did.id_tokens[:-1]

    def test_seven_phrases_truncate_to_five(self, eng_doc, eng_vocab):
        class Seven:
            def keyphrases(self, doc_key, text):
                return [f"phrase number {i}" for i in range(7)]

        did = acid_id(eng_doc, Seven(), eng_vocab)
        assert did.id_text.count("(") == 5
        assert "(6)" not in did.id_text

    def test_tfidf_double_is_deterministic(self, eng_vocab):
        doc = Document.from_text("d", "alpha beta alpha beta")
        stats = build_bm25_stats([doc])
        gen = TfidfKeyphraseGenerator(stats)
        first = gen.keyphrases("d", doc.raw_text)
        assert 1 <= len(first) <= 5
        assert gen.keyphrases("d", doc.raw_text) == first

    def test_missing_fixture_doc_is_error(self, tmp_path, eng_doc, eng_vocab):
        path = tmp_path / "phrases.ndjson"
        save_phrase_fixture({}, path)
        with pytest.raises(DocIdError, match="eng"):
            acid_id(eng_doc, FixtureKeyphraseGenerator(path), eng_vocab)


class TestEmbeddingInputs:
    def test_disjoint_vocabulary_gives_orthogonal_tfidf(self):
        a = Document.from_text("a", "apple banana cherry")
        b = Document.from_text("b", "xylophone yurt zebra")
        stats = build_bm25_stats([a, b])
        wa, wb = tfidf_weights(a, stats), tfidf_weights(b, stats)
        dot = sum(wa.get(t, 0.0) * wb.get(t, 0.0) for t in set(wa) | set(wb))
        assert dot == 0.0


class TestEnsureUnique:
    def make(self, vocab, key, text):
        return DocId(key, "first_k", text, tuple(vocab.encode(text)) + (EOS,))

    def test_two_way_collision(self):
        vocab = build_vocab([Document.from_text("d", "same id text")])
        a = self.make(vocab, "a", "same id text")
        b = self.make(vocab, "b", "same id text")
        assignment = ensure_unique([a, b], vocab)
        assert assignment.forward["a"].id_text == "same id text"
        assert assignment.forward["b"].id_text == "same id text <sep> 1"
        tokens = assignment.forward["b"].id_tokens
        assert tokens[-3:] == (SEP, vocab.token_to_id["1"], EOS)

    def test_suffixed_text_roundtrips_through_encode(self):
        vocab = build_vocab([Document.from_text("d", "same id text")])
        ids = [self.make(vocab, k, "same id text") for k in ("a", "b")]
        assignment = ensure_unique(ids, vocab)
        for did in assignment.doc_ids():
            assert tuple(vocab.encode(did.id_text)) == did.id_tokens[:-1]

    def test_already_unique_unchanged(self):
        vocab = build_vocab([Document.from_text("d", "one two")])
        a = self.make(vocab, "a", "one")
        b = self.make(vocab, "b", "two")
        assignment = ensure_unique([a, b], vocab)
        assert assignment.forward["a"] == a and assignment.forward["b"] == b

    def test_three_way_collision_ordinals_in_doc_key_order(self):
        vocab = build_vocab([Document.from_text("d", "dup")])
        ids = [self.make(vocab, k, "dup") for k in ("c", "a", "b")]
        assignment = ensure_unique(ids, vocab)
        assert assignment.forward["a"].id_text == "dup"
        assert assignment.forward["b"].id_text == "dup <sep> 1"
        assert assignment.forward["c"].id_text == "dup <sep> 2"

    def test_result_is_bijective(self):
        vocab = build_vocab([Document.from_text("d", "x y z")])
        ids = [self.make(vocab, f"k{i}", "x y z") for i in range(12)]
        assignment = ensure_unique(ids, vocab)
        assert len(assignment.reverse) == len(assignment.forward) == 12

    def test_assignment_rejects_duplicates(self):
        vocab = build_vocab([Document.from_text("d", "x")])
        a = self.make(vocab, "a", "x")
        b = self.make(vocab, "b", "x")
        with pytest.raises(DocIdError):
            IdAssignment.from_doc_ids([a, b])
