import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cantolex.corpus import (
    Corpus,
    CorpusError,
    CorpusIndex,
    Document,
    SegmenterDictionary,
    load_corpus,
    mine_terms,
    segment_text,
    tfidf,
    write_term_scores,
)

import oracles


@pytest.fixture
def toy_dict() -> SegmenterDictionary:
    return SegmenterDictionary(
        {
            "好": "d",
            "開心": "a",
            "開": "v",
            "心": "n",
            "餐廳": "n",
            "好食": "a",
            "嬲": "a",
            "一流": "i",
        }
    )


def write_threads(path, records):
    path.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records), "utf-8")


class TestLoadCorpus:
    def test_two_records(self, tmp_path):
        path = tmp_path / "t.jsonl"
        write_threads(path, [
            {"id": "a", "topic": "T1", "replies": ["r"]},
            {"id": "b", "topic": "T2", "replies": []},
        ])
        corp = load_corpus(path)
        assert len(corp) == 2

    def test_document_text_is_topic_then_replies(self, tmp_path):
        path = tmp_path / "t.jsonl"
        write_threads(path, [{"id": "a", "topic": "T", "replies": ["r1", "r2"]}])
        assert load_corpus(path).documents[0].text == "T\nr1\nr2"

    def test_empty_file_warns(self, tmp_path, caplog):
        path = tmp_path / "empty.jsonl"
        path.write_text("", "utf-8")
        with caplog.at_level("WARNING"):
            corp = load_corpus(path)
        assert len(corp) == 0
        assert any("no records" in r.message for r in caplog.records)

    def test_malformed_record_reports_line(self, tmp_path):
        path = tmp_path / "t.jsonl"
        path.write_text('{"id": "a", "topic": "T", "replies": []}\nnot json\n', "utf-8")
        with pytest.raises(ValueError, match=":2"):
            load_corpus(path)

    def test_missing_field_reports_line(self, tmp_path):
        path = tmp_path / "t.jsonl"
        write_threads(path, [{"id": "a", "topic": "T"}])
        with pytest.raises(CorpusError, match="replies"):
            load_corpus(path)

    def test_duplicate_id(self, tmp_path):
        path = tmp_path / "t.jsonl"
        write_threads(path, [
            {"id": "a", "topic": "T", "replies": []},
            {"id": "a", "topic": "U", "replies": []},
        ])
        with pytest.raises(CorpusError, match="duplicate"):
            load_corpus(path)


class TestSegmentText:
    def test_simple_fmm(self, toy_dict):
        # expected value derived with the independent segmentation oracle
        expected = oracles.fmm_segment("好開心", toy_dict.entries)
        assert expected == [("好", "d"), ("開心", "a")]
        tokens = segment_text("好開心", toy_dict)
        assert [(t.surface, t.pos) for t in tokens] == expected

    def test_longest_match_wins(self, toy_dict):
        tokens = segment_text("開心", toy_dict)
        assert [t.surface for t in tokens] == ["開心"]

    def test_empty_text(self, toy_dict):
        assert segment_text("", toy_dict) == []

    def test_out_of_dict_han_char_is_single_token(self, toy_dict):
        tokens = segment_text("開心嘛", toy_dict)
        assert [(t.surface, t.pos) for t in tokens] == [("開心", "a"), ("嘛", "x")]

    def test_latin_run_is_whole_token(self, toy_dict):
        tokens = segment_text("abc 好", toy_dict)
        assert [(t.surface, t.pos) for t in tokens] == [
            ("abc", "x"), (" ", "x"), ("好", "d"),
        ]

    def test_empty_dictionary_rejected(self):
        with pytest.raises(CorpusError):
            SegmenterDictionary({})

    @settings(max_examples=200)
    @given(
        text=st.text(alphabet="好開心餐廳食嬲一流 abz!", max_size=40),
        extra=st.lists(
            st.text(alphabet="好開心餐廳食嬲一流", min_size=1, max_size=3), max_size=5
        ),
    )
    def test_lossless_and_matches_oracle(self, text, extra):
        entries = {"好": "d", "開心": "a", "餐廳": "n", "一流": "i"}
        for term in extra:
            entries.setdefault(term, "v")
        dictionary = SegmenterDictionary(entries)
        tokens = segment_text(text, dictionary)
        assert "".join(t.surface for t in tokens) == text
        assert [(t.surface, t.pos) for t in tokens] == oracles.fmm_segment(text, entries)


class TestTfidf:
    def test_tf_two_of_three_tokens(self, toy_dict):
        doc = Document("d1", "開心開心好")
        corp = Corpus((doc, Document("d2", "好"), Document("d3", "餐廳")))
        breakdown = tfidf("開心", doc, corp, toy_dict)
        assert breakdown.tf == pytest.approx(2 / 3)

    def test_idf_zero_when_term_in_two_of_three(self, toy_dict):
        docs = (Document("a", "開心"), Document("b", "開心好"), Document("c", "好食"))
        corp = Corpus(docs)
        breakdown = tfidf("開心", docs[0], corp, toy_dict)
        assert breakdown.idf == pytest.approx(math.log(3 / 3))
        assert breakdown.tfidf == 0.0

    def test_idf_negative_when_ubiquitous(self, toy_dict):
        docs = tuple(Document(f"d{i}", "開心") for i in range(10))
        corp = Corpus(docs)
        breakdown = tfidf("開心", docs[0], corp, toy_dict)
        assert breakdown.idf == pytest.approx(math.log(10 / 11))
        assert breakdown.idf < 0

    def test_zero_token_document_errors(self, toy_dict):
        doc = Document("d1", "")
        corp = Corpus((doc, Document("d2", "好")))
        with pytest.raises(CorpusError, match="no tokens"):
            tfidf("好", doc, corp, toy_dict)

    def test_doc_not_in_corpus(self, toy_dict):
        corp = Corpus((Document("a", "好"),))
        with pytest.raises(CorpusError, match="not part"):
            tfidf("好", Document("zz", "好"), corp, toy_dict)

    @given(df=st.integers(1, 9))
    def test_idf_strictly_decreasing_in_df(self, df):
        dictionary = SegmenterDictionary({"好": "d", "開心": "a"})

        def idf_for(df_value: int) -> float:
            docs = tuple(
                Document(f"d{i}", "開心" if i < df_value else "好") for i in range(10)
            )
            return CorpusIndex(Corpus(docs), dictionary).idf("開心")

        assert idf_for(df) > idf_for(df + 1)

    def test_idf_boundaries(self, toy_dict):
        n = 6
        docs = tuple(Document(f"d{i}", "開心" if i < n - 1 else "好") for i in range(n))
        assert CorpusIndex(Corpus(docs), toy_dict).idf("開心") == pytest.approx(0.0)
        docs = tuple(Document(f"d{i}", "開心") for i in range(n))
        assert CorpusIndex(Corpus(docs), toy_dict).idf("開心") < 0


def oracle_ranking(corpus: Corpus, dictionary: SegmenterDictionary, allowed, top_k):
    doc_tokens = {
        d.id: oracles.fmm_segment(d.text, dictionary.entries) for d in corpus.documents
    }
    return oracles.tfidf_ranking(doc_tokens, set(allowed), top_k)


FIXTURE_CORPORA = [
    # five corpora, the last with a ubiquitous (negative-IDF) term
    ["開心好食", "嬲 餐廳", "一流一流", "好食好", "開心"],
    ["好開心", "好好", "餐廳好食", "嬲嬲嬲", "一流 abc"],
    ["開心開心開心", "好食", "好食 好食", "嬲", "餐廳餐廳"],
    ["abc 開心", "def 好食", "ghi 一流", "好 嬲", "心心"],
    ["開心好", "開心嬲", "開心餐廳", "開心一流", "開心好食"],
]


class TestMineTerms:
    @pytest.mark.parametrize("texts", FIXTURE_CORPORA)
    def test_matches_bruteforce_oracle(self, toy_dict, texts):
        corp = Corpus(tuple(Document(f"d{i}", t) for i, t in enumerate(texts)))
        allowed = {"a", "d", "i", "v", "n", "x"}
        scores = mine_terms(corp, toy_dict, allowed_pos=allowed, top_k=5)
        expected = oracle_ranking(corp, toy_dict, allowed, 5)
        assert [(s.term, s.tfidf) for s in scores] == [
            (t, pytest.approx(v, abs=1e-12)) for t, v in expected
        ]

    def test_ubiquitous_term_has_negative_idf(self, toy_dict):
        corp = Corpus(
            tuple(Document(f"d{i}", t) for i, t in enumerate(FIXTURE_CORPORA[4]))
        )
        scores = mine_terms(corp, toy_dict, allowed_pos={"a"}, top_k=10)
        by_term = {s.term: s for s in scores}
        assert by_term["開心"].idf < 0

    def test_default_top_k_is_20000(self, toy_dict):
        import inspect

        sig = inspect.signature(mine_terms)
        assert sig.parameters["top_k"].default == 20000

    def test_pos_filter_excludes_nouns(self, toy_dict):
        corp = Corpus((Document("a", "餐廳開心"),))
        scores = mine_terms(corp, toy_dict, top_k=10)
        assert all(s.term != "餐廳" for s in scores)
        assert all(s.pos != "n" for s in scores)

    def test_rerun_is_byte_identical(self, toy_dict, tmp_path):
        corp = Corpus(
            tuple(Document(f"d{i}", t) for i, t in enumerate(FIXTURE_CORPORA[0]))
        )
        out1, out2 = tmp_path / "a.tsv", tmp_path / "b.tsv"
        write_term_scores(mine_terms(corp, toy_dict, top_k=5), out1)
        write_term_scores(mine_terms(corp, toy_dict, top_k=5), out2)
        assert out1.read_bytes() == out2.read_bytes()

    def test_empty_corpus_errors(self, toy_dict):
        with pytest.raises(CorpusError, match="empty"):
            mine_terms(Corpus(()), toy_dict, top_k=5)

    def test_filter_applied_before_truncation(self, toy_dict):
        # the noun outranks everything, yet filtering happens first
        corp = Corpus((Document("a", "餐廳餐廳餐廳嬲"), Document("b", "好")))
        scores = mine_terms(corp, toy_dict, allowed_pos={"a"}, top_k=1)
        assert [s.term for s in scores] == ["嬲"]

    def test_max_aggregate(self, toy_dict):
        corp = Corpus((Document("a", "嬲嬲好"), Document("b", "嬲 餐廳"), Document("c", "好")))
        index = CorpusIndex(corp, toy_dict)
        expected = max(
            index.tfidf("嬲", doc_id).tfidf for doc_id in ("a", "b")
        )
        scores = mine_terms(corp, toy_dict, allowed_pos={"a"}, top_k=5, aggregate="max")
        by_term = {s.term: s.tfidf for s in scores}
        assert by_term["嬲"] == pytest.approx(expected)
