"""Abstract ingestion, sentence splitting, candidate mining, leakage audit.

Scanning is embarrassingly parallel across abstracts; every public function
that accepts ``jobs`` merges per-abstract results back into (doc_id,
sentence_index) order, so output is identical for any worker count.
"""

from __future__ import annotations

import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence, TypeVar

from .datasets import LabeledTriplet
from .errors import InputError, ValidationError
from .matching import EntityMention, Matcher, fold_case
from .vocab import EntityType

logger = logging.getLogger(__name__)

T = TypeVar("T")

DEFAULT_KEYWORDS = (
    "synergy",
    "synergistic",
    "synergism",
    "synergize",
    "synergizes",
    "synergistically",
)


@dataclass(frozen=True)
class Abstract:
    doc_id: str
    title: str
    text: str


class Corpus:
    """Lazily iterable JSON-lines corpus, re-iterable and order-stable.

    Malformed lines (broken JSON, missing/empty fields) are skipped and
    counted in ``skipped_lines``; a duplicate doc_id aborts the scan.
    """

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        if not self.path.is_file():
            raise InputError(f"corpus file not found: {self.path}")
        self.skipped_lines = 0

    def __iter__(self) -> Iterator[Abstract]:
        seen: set[str] = set()
        skipped = 0
        yielded = 0
        with self.path.open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                abstract = self._parse_line(line, lineno)
                if abstract is None:
                    skipped += 1
                    continue
                if abstract.doc_id in seen:
                    raise ValidationError(
                        f"{self.path}:{lineno}: duplicate doc_id {abstract.doc_id!r}"
                    )
                seen.add(abstract.doc_id)
                yielded += 1
                yield abstract
        self.skipped_lines = skipped
        if skipped:
            logger.warning("%s: skipped %d malformed line(s)", self.path, skipped)
        if yielded == 0:
            logger.warning("%s: corpus is empty", self.path)

    def _parse_line(self, line: str, lineno: int) -> Abstract | None:
        try:
            raw = json.loads(line)
        except json.JSONDecodeError:
            logger.debug("%s:%d: not valid JSON", self.path, lineno)
            return None
        if not isinstance(raw, dict):
            return None
        doc_id = raw.get("doc_id")
        title = raw.get("title")
        text = raw.get("text")
        if not isinstance(doc_id, str) or not doc_id:
            return None
        if not isinstance(title, str):
            return None
        if not isinstance(text, str) or not text:
            return None
        return Abstract(doc_id=doc_id, title=title, text=text)


def load_corpus(path: str | Path) -> Corpus:
    return Corpus(path)


# -- sentence splitting ---------------------------------------------------

_BOUNDARY_RE = re.compile(r"[.!?]+")


def _load_abbreviations() -> frozenset[str]:
    text = resources.files("litaug.data").joinpath("abbreviations.txt").read_text("utf-8")
    return frozenset(
        line.strip().lower()
        for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    )

ABBREVIATIONS = _load_abbreviations()


def split_sentences(abstract: Abstract) -> list[tuple[int, str]]:
    """Rule-based splitting on [.!?] runs with capital-letter lookahead.

    A period boundary is suppressed when the preceding token is a known
    abbreviation. The returned sentence texts are verbatim substrings, so
    joining them restores the source modulo inter-sentence whitespace.
    """
    text = abstract.text
    cuts: list[tuple[int, int]] = []  # (sentence end, next sentence start)
    for match in _BOUNDARY_RE.finditer(text):
        end = match.end()
        k = end
        if k >= len(text) or not text[k].isspace():
            continue
        while k < len(text) and text[k].isspace():
            k += 1
        if k >= len(text) or not text[k].isupper():
            continue
        if "." in match.group() and _preceding_token(text, match.start()) in ABBREVIATIONS:
            continue
        cuts.append((end, k))
    sentences: list[str] = []
    pos = 0
    for end, nxt in cuts:
        piece = text[pos:end].strip()
        if piece:
            sentences.append(piece)
        pos = nxt
    tail = text[pos:].strip()
    if tail:
        sentences.append(tail)
    return list(enumerate(sentences))


def _preceding_token(text: str, stop: int) -> str:
    start = stop
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    return text[start:stop].lstrip("\"'([{<").lower()


# -- candidate mining -----------------------------------------------------

@dataclass(frozen=True)
class MinedSentence:
    doc_id: str
    sentence_index: int
    text: str
    mentions: tuple[EntityMention, ...]
    keyword_hits: tuple[str, ...]

    def drug_keys(self) -> set[str]:
        return {m.key for m in self.mentions if m.entity_type is EntityType.DRUG}

    def cell_keys(self) -> set[str]:
        return {m.key for m in self.mentions if m.entity_type is EntityType.CELL_LINE}

    def validate(self) -> None:
        if len(self.drug_keys()) < 2:
            raise ValidationError(f"{self.doc_id}/{self.sentence_index}: fewer than 2 distinct drugs")
        if len(self.cell_keys()) < 1:
            raise ValidationError(f"{self.doc_id}/{self.sentence_index}: no cell-line mention")
        if not self.keyword_hits:
            raise ValidationError(f"{self.doc_id}/{self.sentence_index}: no keyword hit")
        last_end = 0
        for m in sorted(self.mentions, key=lambda m: m.start):
            if m.start < last_end or m.end > len(self.text):
                raise ValidationError(f"{self.doc_id}/{self.sentence_index}: bad mention spans")
            if self.text[m.start : m.end] != m.surface:
                raise ValidationError(f"{self.doc_id}/{self.sentence_index}: surface/span mismatch")
            last_end = m.end


def mined_to_json_dict(mined: MinedSentence) -> dict:
    return {
        "doc_id": mined.doc_id,
        "sentence_index": mined.sentence_index,
        "text": mined.text,
        "mentions": [
            {"surface": m.surface, "type": m.entity_type.value, "start": m.start, "end": m.end}
            for m in mined.mentions
        ],
        "keyword_hits": list(mined.keyword_hits),
    }


def mined_from_json_dict(raw: dict) -> MinedSentence:
    return MinedSentence(
        doc_id=raw["doc_id"],
        sentence_index=raw["sentence_index"],
        text=raw["text"],
        mentions=tuple(
            EntityMention(
                surface=m["surface"],
                entity_type=EntityType(m["type"]),
                start=m["start"],
                end=m["end"],
            )
            for m in raw["mentions"]
        ),
        keyword_hits=tuple(raw["keyword_hits"]),
    )


def save_mined(mined: Sequence[MinedSentence], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for m in mined:
            fh.write(json.dumps(mined_to_json_dict(m), sort_keys=True) + "\n")


def load_mined(path: str | Path) -> list[MinedSentence]:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"mined-sentence file not found: {path}")
    out = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(mined_from_json_dict(json.loads(line)))
    return out


def keyword_hits(text: str, keywords: Sequence[str]) -> tuple[str, ...]:
    """Case-insensitive whole-word keyword occurrences, in keyword order."""
    folded = fold_case(text)
    hits = []
    for kw in keywords:
        needle = kw.lower()
        pos = folded.find(needle)
        while pos != -1:
            before_ok = pos == 0 or not folded[pos - 1].isalnum()
            after = pos + len(needle)
            after_ok = after >= len(folded) or not folded[after].isalnum()
            if before_ok and after_ok:
                hits.append(needle)
                break
            pos = folded.find(needle, pos + 1)
    return tuple(hits)


def _map_abstracts(
    corpus: Iterable[Abstract], fn: Callable[[Abstract], T], jobs: int
) -> list[T]:
    if jobs <= 1:
        return [fn(a) for a in corpus]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, corpus))


def mine_candidates(
    corpus: Iterable[Abstract],
    matcher: Matcher,
    keywords: Sequence[str] = DEFAULT_KEYWORDS,
    jobs: int = 1,
) -> list[MinedSentence]:
    """Sentences with >=2 distinct drugs, >=1 cell line, and a keyword hit."""
    if not keywords:
        raise ValidationError("keyword list must be non-empty")

    def scan(abstract: Abstract) -> list[MinedSentence]:
        found = []
        for idx, sentence in split_sentences(abstract):
            hits = keyword_hits(sentence, keywords)
            if not hits:
                continue
            mentions = tuple(matcher.find_mentions(sentence))
            drugs = {m.key for m in mentions if m.entity_type is EntityType.DRUG}
            cells = {m.key for m in mentions if m.entity_type is EntityType.CELL_LINE}
            if len(drugs) >= 2 and len(cells) >= 1:
                found.append(
                    MinedSentence(
                        doc_id=abstract.doc_id,
                        sentence_index=idx,
                        text=sentence,
                        mentions=mentions,
                        keyword_hits=hits,
                    )
                )
        return found

    per_abstract = _map_abstracts(corpus, scan, jobs)
    mined = [m for chunk in per_abstract for m in chunk]
    mined.sort(key=lambda m: (m.doc_id, m.sentence_index))
    return mined


# -- leakage audit --------------------------------------------------------

@dataclass(frozen=True)
class LeakageCounts:
    sentences: int
    abstracts: int


@dataclass
class LeakageReport:
    """Co-occurrence counts for every dataset item plus CDF buckets.

    ``counts`` maps category ("drug", "cell_line", "drug_pair", "triplet")
    to item tuples and their sentence/abstract-level co-mention counts. The
    CDF follows the fewer-than-k convention: ``cdf[cat][granularity][k]`` is
    the fraction of items whose count is strictly below k.
    """

    k_buckets: tuple[int, ...]
    counts: dict[str, dict[tuple[str, ...], LeakageCounts]] = field(default_factory=dict)

    def cdf(self) -> dict[str, dict[str, dict[int, float]]]:
        out: dict[str, dict[str, dict[int, float]]] = {}
        for category, items in self.counts.items():
            n = len(items)
            per_gran: dict[str, dict[int, float]] = {"sentences": {}, "abstracts": {}}
            for k in self.k_buckets:
                if n == 0:
                    per_gran["sentences"][k] = 0.0
                    per_gran["abstracts"][k] = 0.0
                    continue
                per_gran["sentences"][k] = sum(1 for c in items.values() if c.sentences < k) / n
                per_gran["abstracts"][k] = sum(1 for c in items.values() if c.abstracts < k) / n
            out[category] = per_gran
        return out

    def to_json_dict(self) -> dict:
        return {
            "k_buckets": list(self.k_buckets),
            "counts": {
                category: [
                    {"item": list(item), "sentences": c.sentences, "abstracts": c.abstracts}
                    for item, c in sorted(items.items())
                ]
                for category, items in sorted(self.counts.items())
            },
            "cdf": {
                category: {gran: {str(k): v for k, v in buckets.items()} for gran, buckets in per.items()}
                for category, per in sorted(self.cdf().items())
            },
        }

    def to_csv_rows(self) -> list[tuple[str, str, int, int]]:
        rows = []
        for category, items in sorted(self.counts.items()):
            for item, c in sorted(items.items()):
                rows.append((category, "|".join(item), c.sentences, c.abstracts))
        return rows


def audit_leakage(
    corpus: Iterable[Abstract],
    matcher: Matcher,
    dataset: Sequence[LabeledTriplet],
    k_buckets: Sequence[int] = (1, 2, 5, 10, 100),
    jobs: int = 1,
) -> LeakageReport:
    """Count co-mentions of dataset entities, pairs, and triplets.

    Containment is judged on resolved mentions, with the same overlap rules
    as mining. An abstract contains an item when the union of its sentence
    mention sets covers all members; members may sit in different sentences.
    """
    drugs = sorted({d for t in dataset for d in (t.drug_a, t.drug_b)})
    cells = sorted({t.cell for t in dataset})
    for key in drugs + cells:
        if not matcher.has_pattern(key):
            raise ValidationError(f"dataset entity {key!r} is not in the vocabulary")
    pairs = sorted({(t.drug_a, t.drug_b) for t in dataset})
    triplets = sorted({(t.drug_a, t.drug_b, t.cell) for t in dataset})

    def scan(abstract: Abstract) -> tuple[list[tuple[set[str], set[str]]], set[str], set[str]]:
        sentence_sets = []
        all_drugs: set[str] = set()
        all_cells: set[str] = set()
        for _, sentence in split_sentences(abstract):
            mentions = matcher.find_mentions(sentence)
            d = {m.key for m in mentions if m.entity_type is EntityType.DRUG}
            c = {m.key for m in mentions if m.entity_type is EntityType.CELL_LINE}
            sentence_sets.append((d, c))
            all_drugs |= d
            all_cells |= c
        return sentence_sets, all_drugs, all_cells

    sent_counts: dict[tuple[str, tuple[str, ...]], int] = {}
    abs_counts: dict[tuple[str, tuple[str, ...]], int] = {}

    def bump(table: dict, category: str, item: tuple[str, ...], hit: bool) -> None:
        if hit:
            table[(category, item)] = table.get((category, item), 0) + 1

    for sentence_sets, abstract_drugs, abstract_cells in _map_abstracts(corpus, scan, jobs):
        for d_set, c_set in sentence_sets:
            for d in drugs:
                bump(sent_counts, "drug", (d,), d in d_set)
            for c in cells:
                bump(sent_counts, "cell_line", (c,), c in c_set)
            for a, b in pairs:
                bump(sent_counts, "drug_pair", (a, b), a in d_set and b in d_set)
            for a, b, c in triplets:
                bump(sent_counts, "triplet", (a, b, c), a in d_set and b in d_set and c in c_set)
        for d in drugs:
            bump(abs_counts, "drug", (d,), d in abstract_drugs)
        for c in cells:
            bump(abs_counts, "cell_line", (c,), c in abstract_cells)
        for a, b in pairs:
            bump(abs_counts, "drug_pair", (a, b), a in abstract_drugs and b in abstract_drugs)
        for a, b, c in triplets:
            bump(
                abs_counts,
                "triplet",
                (a, b, c),
                a in abstract_drugs and b in abstract_drugs and c in abstract_cells,
            )

    def collect(category: str, items: Iterable[tuple[str, ...]]) -> dict[tuple[str, ...], LeakageCounts]:
        return {
            item: LeakageCounts(
                sentences=sent_counts.get((category, item), 0),
                abstracts=abs_counts.get((category, item), 0),
            )
            for item in items
        }

    report = LeakageReport(k_buckets=tuple(k_buckets))
    report.counts["drug"] = collect("drug", ((d,) for d in drugs))
    report.counts["cell_line"] = collect("cell_line", ((c,) for c in cells))
    report.counts["drug_pair"] = collect("drug_pair", pairs)
    report.counts["triplet"] = collect("triplet", triplets)
    return report
