"""Corpus loading, sentence splitting, mining, and the leakage audit."""

import json

import pytest

from litaug.corpus import (
    Abstract,
    DEFAULT_KEYWORDS,
    audit_leakage,
    keyword_hits,
    load_corpus,
    load_mined,
    mine_candidates,
    save_mined,
    split_sentences,
)
from litaug.datasets import LabeledTriplet
from litaug.errors import InputError, ValidationError
from litaug.matching import Matcher
from litaug.vocab import EntityType, EntityVocabulary, VocabEntry, VocabSource


def write_corpus(tmp_path, lines):
    path = tmp_path / "corpus.jsonl"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def abstract_line(doc_id, text, title="t"):
    return json.dumps({"doc_id": doc_id, "title": title, "text": text})


class TestLoadCorpus:
    def test_three_well_formed_lines(self, tmp_path):
        corpus = load_corpus(
            write_corpus(tmp_path, [abstract_line(f"d{i}", f"text {i}.") for i in range(3)])
        )
        abstracts = list(corpus)
        assert len(abstracts) == 3
        assert corpus.skipped_lines == 0
        assert [a.doc_id for a in abstracts] == ["d0", "d1", "d2"]

    def test_malformed_line_skipped_and_counted(self, tmp_path):
        corpus = load_corpus(
            write_corpus(
                tmp_path,
                [abstract_line("d0", "x."), "{not json", abstract_line("d1", "y.")],
            )
        )
        assert len(list(corpus)) == 2
        assert corpus.skipped_lines == 1

    def test_empty_file_yields_empty_stream(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text("", encoding="utf-8")
        assert list(load_corpus(path)) == []

    def test_missing_file_is_input_error(self, tmp_path):
        with pytest.raises(InputError):
            load_corpus(tmp_path / "nope.jsonl")

    def test_duplicate_doc_id_fatal(self, tmp_path):
        corpus = load_corpus(
            write_corpus(tmp_path, [abstract_line("d0", "x."), abstract_line("d0", "y.")])
        )
        with pytest.raises(ValidationError):
            list(corpus)

    def test_missing_fields_count_as_malformed(self, tmp_path):
        corpus = load_corpus(
            write_corpus(tmp_path, [json.dumps({"doc_id": "", "title": "t", "text": "x"}),
                                    json.dumps({"doc_id": "a", "title": "t"}),
                                    abstract_line("ok", "fine.")])
        )
        assert [a.doc_id for a in corpus] == ["ok"]
        assert corpus.skipped_lines == 2


class TestSplitSentences:
    def split(self, text):
        return [s for _, s in split_sentences(Abstract(doc_id="d", title="", text=text))]

    def test_three_simple_sentences(self):
        assert self.split("A. B. C.") == ["A.", "B.", "C."]

    def test_abbreviations_suppress_split(self):
        assert self.split("Fig. 4G shows X vs. Y.") == ["Fig. 4G shows X vs. Y."]

    def test_empty_text(self):
        assert self.split("") == []

    def test_reconstruction_modulo_whitespace(self):
        text = "Cisplatin works well. It is standard of care! Really? Yes."
        parts = self.split(text)
        assert "".join(text.split()) == "".join("".join(p.split()) for p in parts)

    def test_decimal_numbers_do_not_split(self):
        assert self.split("Dose was 3.5 mg. Then we stopped.") == [
            "Dose was 3.5 mg.",
            "Then we stopped.",
        ]

    def test_lowercase_continuation_does_not_split(self):
        assert self.split("The cells (e.g. HeLa) grew. fine") == ["The cells (e.g. HeLa) grew. fine"]

    def test_indices_are_sequential(self):
        out = split_sentences(Abstract(doc_id="d", title="", text="One. Two. Three."))
        assert [i for i, _ in out] == [0, 1, 2]


class TestKeywordHits:
    def test_whole_word_only(self):
        assert keyword_hits("synergistically better", ("synergistic",)) == ()
        assert keyword_hits("a synergistic pair", ("synergistic",)) == ("synergistic",)

    def test_case_insensitive(self):
        assert keyword_hits("SYNERGY was seen", ("synergy",)) == ("synergy",)

    def test_orders_by_keyword_list(self):
        hits = keyword_hits("synergism and synergy", ("synergy", "synergism"))
        assert hits == ("synergy", "synergism")


def small_vocab():
    entries = [
        ("cisplatin", EntityType.DRUG),
        ("camptothecin", EntityType.DRUG),
        ("bt-483", EntityType.CELL_LINE),
    ]
    return EntityVocabulary(
        VocabEntry(surface=s, entity_type=t, source=VocabSource.SEED_DATASET) for s, t in entries
    )


class TestMineCandidates:
    def mine(self, tmp_path, text):
        corpus = load_corpus(write_corpus(tmp_path, [abstract_line("d0", text)]))
        return mine_candidates(corpus, Matcher(small_vocab()), DEFAULT_KEYWORDS)

    def test_canonical_positive(self, tmp_path):
        mined = self.mine(
            tmp_path, "Cisplatin and camptothecin were synergistic in BT-483 cells."
        )
        assert len(mined) == 1
        mined[0].validate()
        assert mined[0].drug_keys() == {"cisplatin", "camptothecin"}
        assert mined[0].cell_keys() == {"bt-483"}

    def test_one_drug_no_keyword_not_mined(self, tmp_path):
        assert self.mine(tmp_path, "Cisplatin inhibited BT-483 growth.") == []

    def test_keyword_filter_is_mandatory(self, tmp_path):
        assert (
            self.mine(tmp_path, "Cisplatin and camptothecin were effective in BT-483.") == []
        )

    def test_duplicate_drug_name_counts_once(self, tmp_path):
        assert (
            self.mine(tmp_path, "Cisplatin and cisplatin show synergy in BT-483 cells.") == []
        )

    def test_empty_keywords_rejected(self, tmp_path):
        corpus = load_corpus(write_corpus(tmp_path, [abstract_line("d0", "x.")]))
        with pytest.raises(ValidationError):
            mine_candidates(corpus, Matcher(small_vocab()), keywords=())

    def test_output_ordered_and_invariants_hold(self, fixture_corpus, fixture_vocab):
        mined = mine_candidates(fixture_corpus, Matcher(fixture_vocab), DEFAULT_KEYWORDS)
        assert mined == sorted(mined, key=lambda m: (m.doc_id, m.sentence_index))
        for m in mined:
            m.validate()

    def test_jobs_do_not_change_output(self, fixtures_dir, fixture_vocab):
        matcher = Matcher(fixture_vocab)
        one = mine_candidates(load_corpus(fixtures_dir / "corpus.jsonl"), matcher, DEFAULT_KEYWORDS, jobs=1)
        many = mine_candidates(load_corpus(fixtures_dir / "corpus.jsonl"), matcher, DEFAULT_KEYWORDS, jobs=4)
        assert one == many

    def test_roundtrip_serialization(self, tmp_path, fixture_corpus, fixture_vocab):
        mined = mine_candidates(fixture_corpus, Matcher(fixture_vocab), DEFAULT_KEYWORDS)
        path = tmp_path / "mined.jsonl"
        save_mined(mined, path)
        assert load_mined(path) == mined


def triplet(a, b, c, label=1):
    return LabeledTriplet.make(a, b, c, label)


class TestAuditLeakage:
    def test_never_cooccurring_triplet(self, tmp_path):
        corpus = load_corpus(
            write_corpus(tmp_path, [abstract_line("d0", "Cisplatin alone. Camptothecin alone.")])
        )
        report = audit_leakage(
            corpus, Matcher(small_vocab()), [triplet("cisplatin", "camptothecin", "bt-483")],
            k_buckets=(1, 2),
        )
        counts = report.counts["triplet"][("camptothecin", "cisplatin", "bt-483")]
        assert counts.sentences == 0 and counts.abstracts == 0
        assert report.cdf()["triplet"]["abstracts"][1] == 1.0

    def test_sentence_and_abstract_counting(self, tmp_path):
        text = "Cisplatin and camptothecin hit BT-483. A second sentence."
        corpus = load_corpus(write_corpus(tmp_path, [abstract_line("d0", text)]))
        report = audit_leakage(
            corpus, Matcher(small_vocab()), [triplet("cisplatin", "camptothecin", "bt-483")],
            k_buckets=(1,),
        )
        t = report.counts["triplet"][("camptothecin", "cisplatin", "bt-483")]
        pair = report.counts["drug_pair"][("camptothecin", "cisplatin")]
        assert t.sentences == 1 and t.abstracts == 1
        assert pair.sentences >= t.sentences and pair.abstracts >= t.abstracts

    def test_cross_sentence_abstract_cooccurrence(self, tmp_path):
        text = "Cisplatin and camptothecin were given. BT-483 cells responded."
        corpus = load_corpus(write_corpus(tmp_path, [abstract_line("d0", text)]))
        report = audit_leakage(
            corpus, Matcher(small_vocab()), [triplet("cisplatin", "camptothecin", "bt-483")],
        )
        t = report.counts["triplet"][("camptothecin", "cisplatin", "bt-483")]
        assert t.sentences == 0 and t.abstracts == 1

    def test_unknown_entity_rejected(self, tmp_path):
        corpus = load_corpus(write_corpus(tmp_path, [abstract_line("d0", "x.")]))
        with pytest.raises(ValidationError):
            audit_leakage(corpus, Matcher(small_vocab()), [triplet("cisplatin", "novel-drug", "bt-483")])

    def test_cdf_monotone_and_bounded(self, fixture_corpus, fixture_vocab, fixture_dataset):
        report = audit_leakage(
            fixture_corpus, Matcher(fixture_vocab), fixture_dataset, k_buckets=(1, 2, 5, 10)
        )
        for per_gran in report.cdf().values():
            for buckets in per_gran.values():
                values = [buckets[k] for k in sorted(buckets)]
                assert all(0.0 <= v <= 1.0 for v in values)
                assert values == sorted(values)

    def test_pair_counts_dominate_triplets(self, fixture_corpus, fixture_vocab, fixture_dataset):
        report = audit_leakage(fixture_corpus, Matcher(fixture_vocab), fixture_dataset)
        for (a, b, c), t_counts in report.counts["triplet"].items():
            p_counts = report.counts["drug_pair"][(a, b)]
            assert p_counts.sentences >= t_counts.sentences
            assert p_counts.abstracts >= t_counts.abstracts
            if t_counts.sentences >= 1:
                assert t_counts.abstracts >= 1

    def test_byte_identical_reports(self, fixtures_dir, fixture_vocab, fixture_dataset):
        matcher = Matcher(fixture_vocab)
        a = audit_leakage(load_corpus(fixtures_dir / "corpus.jsonl"), matcher, fixture_dataset)
        b = audit_leakage(load_corpus(fixtures_dir / "corpus.jsonl"), matcher, fixture_dataset, jobs=3)
        assert json.dumps(a.to_json_dict(), sort_keys=True) == json.dumps(b.to_json_dict(), sort_keys=True)
