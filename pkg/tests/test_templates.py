"""Masking round-trips, dedup, embedding batches, medoid extraction."""

import pytest
from hypothesis import given, settings, strategies as st

from litaug.corpus import MinedSentence
from litaug.errors import ValidationError
from litaug.kmedoids import k_medoids
from litaug.matching import EntityMention, Matcher
from litaug.templates import (
    PromptTemplate,
    Slot,
    TemplateSource,
    dedupe_templates,
    embed_batch,
    extract_templates,
    load_templates,
    mask_sentence,
    save_templates,
    unmask,
)
from litaug.vocab import EntityType, EntityVocabulary, VocabEntry, VocabSource

D = EntityType.DRUG
C = EntityType.CELL_LINE


def mined_from(text, *spans):
    mentions = tuple(
        EntityMention(surface=text[s:e], entity_type=t, start=s, end=e) for s, e, t in spans
    )
    return MinedSentence(
        doc_id="doc", sentence_index=0, text=text, mentions=mentions, keyword_hits=("synergy",)
    )


CANONICAL = mined_from(
    "Cisplatin and camptothecin show synergy in BT-483 cells.",
    (0, 9, D),
    (14, 26, D),
    (43, 49, C),
)


class TestMaskSentence:
    def test_typed_markers_in_text_order(self):
        template = mask_sentence(CANONICAL)
        assert template.text_with_slots == (
            "[DRUG_MASK] and [DRUG_MASK] show synergy in [CELL_MASK] cells."
        )
        assert template.slot_types() == (D, D, C)

    def test_five_slots_in_text_order(self):
        text = "a1 b2 c3 d4 e5 synergy"
        mined = mined_from(
            text, (0, 2, D), (3, 5, D), (6, 8, D), (9, 11, C), (12, 14, C)
        )
        template = mask_sentence(mined)
        assert template.slot_types() == (D, D, D, C, C)
        assert len(template.slots) == 5

    def test_round_trip_reproduces_sentence(self):
        template = mask_sentence(CANONICAL)
        surfaces = [m.surface for m in sorted(CANONICAL.mentions, key=lambda m: m.start)]
        assert unmask(template, surfaces) == CANONICAL.text

    def test_unmask_arity_checked(self):
        template = mask_sentence(CANONICAL)
        with pytest.raises(ValidationError):
            unmask(template, ["only-one"])


@settings(max_examples=100, deadline=None)
@given(data=st.data())
def test_mask_round_trip_random_sentences(data):
    names = data.draw(
        st.lists(st.text(alphabet="abcdxyz", min_size=2, max_size=6), min_size=3, max_size=6, unique=True)
    )
    vocab = EntityVocabulary(
        VocabEntry(surface=n, entity_type=D if i % 2 else C, source=VocabSource.LINCS)
        for i, n in enumerate(names)
    )
    words = data.draw(
        st.lists(st.sampled_from(names + ["filler", "synergy", "qq"]), min_size=3, max_size=12)
    )
    text = " ".join(words)
    mentions = tuple(Matcher(vocab).find_mentions(text))
    drugs = {m.key for m in mentions if m.entity_type is D}
    cells = {m.key for m in mentions if m.entity_type is C}
    if len(drugs) < 2 or not cells:
        return
    mined = MinedSentence(
        doc_id="d", sentence_index=0, text=text, mentions=mentions, keyword_hits=("synergy",)
    )
    template = mask_sentence(mined)
    surfaces = [m.surface for m in sorted(mentions, key=lambda m: m.start)]
    assert unmask(template, surfaces) == text


class TestDedupe:
    def test_duplicate_masked_text_dropped(self):
        a = mask_sentence(CANONICAL)
        b = PromptTemplate(
            template_id="other",
            source=TemplateSource(kind="sentence", doc_id="doc2", sentence_index=3),
            text_with_slots=a.text_with_slots,
            slots=a.slots,
        )
        assert dedupe_templates([a, b]) == [a]


class TestEmbedBatch:
    def test_identical_templates_identical_vectors(self, mock_gateway):
        t = mask_sentence(CANONICAL)
        vectors = embed_batch(mock_gateway, [t, t])
        assert (vectors[0] == vectors[1]).all()

    def test_empty_list(self, mock_gateway):
        assert embed_batch(mock_gateway, []).shape == (0, 24)

    def test_markers_serialized_as_mask_token(self, mock_gateway):
        t = mask_sentence(CANONICAL)
        direct = mock_gateway.embed([t.gateway_text()])
        assert "[DRUG_MASK]" not in t.gateway_text()
        assert t.gateway_text().count("[MASK]") == 3
        assert (embed_batch(mock_gateway, [t]) == direct).all()


class TestExtractTemplates:
    def build_templates(self, n):
        out = []
        for i in range(n):
            out.append(
                PromptTemplate(
                    template_id=f"t{i}",
                    source=TemplateSource(kind="sentence", doc_id=f"d{i}", sentence_index=i),
                    text_with_slots=f"v{i} [DRUG_MASK] and [DRUG_MASK] in [CELL_MASK]",
                    slots=(Slot(0, D), Slot(1, D), Slot(2, C)),
                )
            )
        return out

    def test_k_templates_returned(self, mock_gateway):
        templates = self.build_templates(12)
        clustering = k_medoids(mock_gateway.embed([t.gateway_text() for t in templates]), k=10)
        out = extract_templates(clustering, templates, iteration=1)
        assert len(out) == 10
        assert all(t.source.kind == "medoid" and t.source.iteration == 1 for t in out)

    def test_medoid_indices_map_verbatim(self, mock_gateway):
        templates = self.build_templates(6)
        clustering = k_medoids(mock_gateway.embed([t.gateway_text() for t in templates]), k=2)
        out = extract_templates(clustering, templates, iteration=2)
        for cluster_id, medoid_idx in enumerate(clustering.medoid_indices):
            assert out[cluster_id].text_with_slots == templates[medoid_idx].text_with_slots
            assert out[cluster_id].source.cluster_id == cluster_id

    def test_size_mismatch_rejected(self, mock_gateway):
        templates = self.build_templates(5)
        clustering = k_medoids(mock_gateway.embed([t.gateway_text() for t in templates]), k=1)
        with pytest.raises(ValidationError):
            extract_templates(clustering, templates[:-1], iteration=1)

    def test_roundtrip_serialization(self, tmp_path):
        templates = self.build_templates(3)
        path = tmp_path / "templates.jsonl"
        save_templates(templates, path)
        assert load_templates(path) == templates
