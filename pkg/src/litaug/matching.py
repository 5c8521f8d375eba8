"""Dictionary matching of entity names in sentences.

A single Aho-Corasick pass finds every case-insensitive occurrence of every
vocabulary surface form. Raw hits then go through:

1. a word-boundary filter: a hit flanked by an alphanumeric character is
   dropped, so "mek" never matches inside "mekanism";
2. leftmost-longest overlap resolution, ties broken by entity type (drug
   before cell line) and then by surface form.

Case folding is per character and only applied when it preserves length,
which keeps match offsets aligned with the original text.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .errors import ValidationError
from .vocab import EntityType, EntityVocabulary, canonical_key

_TYPE_RANK = {EntityType.DRUG: 0, EntityType.CELL_LINE: 1}


def fold_case(text: str) -> str:
    """Length-preserving lowercase used for both patterns and scanned text."""
    return "".join(c if len(lc := c.lower()) != 1 else lc for c in text)


@dataclass(frozen=True)
class EntityMention:
    surface: str
    entity_type: EntityType
    start: int
    end: int

    @property
    def key(self) -> str:
        return canonical_key(self.surface)


@dataclass(frozen=True)
class _Candidate:
    start: int
    end: int
    entity_type: EntityType
    pattern: str


class Matcher:
    """Compiled automaton over one vocabulary snapshot.

    Output is a pure function of the vocabulary content (insertion order is
    irrelevant) and the input text; instances are immutable after
    construction and safe to share across workers.
    """

    def __init__(self, vocab: EntityVocabulary) -> None:
        if len(vocab) == 0:
            raise ValidationError("cannot build a matcher from an empty vocabulary")
        # pattern -> entity types claiming it (a name may be both a drug and
        # a cell line via separate vocabulary entries)
        self._pattern_types: dict[str, tuple[EntityType, ...]] = {}
        for entry in vocab:
            pattern = fold_case(entry.surface)
            if not pattern:
                continue
            types = set(self._pattern_types.get(pattern, ()))
            types.add(entry.entity_type)
            self._pattern_types[pattern] = tuple(sorted(types, key=_TYPE_RANK.__getitem__))
        self._build_automaton(sorted(self._pattern_types))

    def _build_automaton(self, patterns: list[str]) -> None:
        self._goto: list[dict[str, int]] = [{}]
        self._fail: list[int] = [0]
        self._output: list[tuple[str, ...]] = [()]
        for pattern in patterns:
            state = 0
            for char in pattern:
                nxt = self._goto[state].get(char)
                if nxt is None:
                    nxt = len(self._goto)
                    self._goto[state][char] = nxt
                    self._goto.append({})
                    self._fail.append(0)
                    self._output.append(())
                state = nxt
            self._output[state] = self._output[state] + (pattern,)
        queue: deque[int] = deque()
        for state in self._goto[0].values():
            queue.append(state)
        while queue:
            r = queue.popleft()
            for char, s in self._goto[r].items():
                queue.append(s)
                f = self._fail[r]
                while char not in self._goto[f] and f != 0:
                    f = self._fail[f]
                self._fail[s] = self._goto[f].get(char, 0)
                self._output[s] = self._output[s] + self._output[self._fail[s]]

    def has_pattern(self, surface: str) -> bool:
        return fold_case(surface) in self._pattern_types

    def _raw_hits(self, folded: str) -> list[tuple[int, int, str]]:
        """All (start, end, pattern) occurrences, overlaps included."""
        hits: list[tuple[int, int, str]] = []
        state = 0
        for i, char in enumerate(folded):
            while char not in self._goto[state] and state != 0:
                state = self._fail[state]
            state = self._goto[state].get(char, 0)
            for pattern in self._output[state]:
                hits.append((i + 1 - len(pattern), i + 1, pattern))
        return hits

    def find_mentions(self, text: str) -> list[EntityMention]:
        folded = fold_case(text)
        candidates: list[_Candidate] = []
        for start, end, pattern in self._raw_hits(folded):
            if start > 0 and folded[start - 1].isalnum():
                continue
            if end < len(folded) and folded[end].isalnum():
                continue
            for entity_type in self._pattern_types[pattern]:
                candidates.append(_Candidate(start, end, entity_type, pattern))
        return resolve_overlaps(candidates, text)


def resolve_overlaps(candidates: list[_Candidate], text: str) -> list[EntityMention]:
    """Greedy leftmost-longest selection over boundary-filtered hits.

    Sort order encodes the whole rule: earlier start first, then longer
    match, then drug before cell line, then lexicographic surface form.
    """
    ordered = sorted(
        candidates,
        key=lambda c: (c.start, -(c.end - c.start), _TYPE_RANK[c.entity_type], c.pattern),
    )
    mentions: list[EntityMention] = []
    cursor = 0
    for cand in ordered:
        if cand.start < cursor:
            continue
        mentions.append(
            EntityMention(
                surface=text[cand.start : cand.end],
                entity_type=cand.entity_type,
                start=cand.start,
                end=cand.end,
            )
        )
        cursor = cand.end
    return mentions
