"""Labeled triplet datasets and the original/synthetic merge.

A triplet is an unordered drug pair plus a cell line; identity everywhere is
the canonical form (lowercased names, drug pair sorted).
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import InputError
from .vocab import canonical_key

logger = logging.getLogger(__name__)

TripletKey = tuple[str, str, str]


@dataclass(frozen=True)
class LabeledTriplet:
    """One original data point. Drugs are stored canonically sorted."""

    drug_a: str
    drug_b: str
    cell: str
    label: int

    @staticmethod
    def make(drug_a: str, drug_b: str, cell: str, label: int) -> "LabeledTriplet":
        a, b = sorted((canonical_key(drug_a), canonical_key(drug_b)))
        return LabeledTriplet(drug_a=a, drug_b=b, cell=canonical_key(cell), label=label)

    @property
    def key(self) -> TripletKey:
        return (self.drug_a, self.drug_b, self.cell)


def load_dataset(path: str | Path) -> list[LabeledTriplet]:
    """Read the CSV dataset: header ``drug_a,drug_b,cell_line,label``."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"dataset file not found: {path}")
    out: list[LabeledTriplet] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["drug_a", "drug_b", "cell_line", "label"]:
            raise InputError(f"bad dataset header in {path}: {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise InputError(f"{path}:{lineno}: expected 4 columns")
            drug_a, drug_b, cell, label_str = (c.strip() for c in row)
            if label_str not in {"0", "1"}:
                raise InputError(f"{path}:{lineno}: label must be 0 or 1, got {label_str!r}")
            if not (drug_a and drug_b and cell):
                raise InputError(f"{path}:{lineno}: empty entity name")
            out.append(LabeledTriplet.make(drug_a, drug_b, cell, int(label_str)))
    return out


def save_dataset(dataset: Sequence[LabeledTriplet], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["drug_a", "drug_b", "cell_line", "label"])
        for t in dataset:
            writer.writerow([t.drug_a, t.drug_b, t.cell, t.label])


@dataclass(frozen=True)
class TrainingRow:
    triplet: TripletKey
    label: int
    weight: float
    is_synthetic: bool


class TrainingSet:
    """Merged original + synthetic rows with stable entity index maps.

    Rows keep their insertion order (originals first, then synthetic sorted
    by triplet key); index maps cover every entity seen in any row.
    """

    def __init__(
        self,
        rows: Iterable[TrainingRow],
        drug_index: dict[str, int] | None = None,
        cell_index: dict[str, int] | None = None,
    ) -> None:
        self.rows: list[TrainingRow] = list(rows)
        if drug_index is None:
            drugs = sorted({d for r in self.rows for d in (r.triplet[0], r.triplet[1])})
            drug_index = {d: i for i, d in enumerate(drugs)}
        if cell_index is None:
            cells = sorted({r.triplet[2] for r in self.rows})
            cell_index = {c: i for i, c in enumerate(cells)}
        self.drug_index: dict[str, int] = drug_index
        self.cell_index: dict[str, int] = cell_index

    def __len__(self) -> int:
        return len(self.rows)

    def indices(self) -> list[tuple[int, int, int]]:
        return [
            (self.drug_index[r.triplet[0]], self.drug_index[r.triplet[1]], self.cell_index[r.triplet[2]])
            for r in self.rows
        ]


def merge_datasets(original: Sequence[LabeledTriplet], synthetic: Sequence) -> TrainingSet:
    """Union the original dataset with synthetic triplets.

    Originals carry unit weight and their own label; synthetic rows carry
    label 1 and their likelihood weight. A synthetic triplet colliding with
    an original one is dropped: measured labels always win.
    """
    rows = [
        TrainingRow(triplet=t.key, label=t.label, weight=1.0, is_synthetic=False)
        for t in original
    ]
    seen = {t.key for t in original}
    dropped = 0
    for s in sorted(synthetic, key=lambda s: s.key):
        if s.key in seen:
            dropped += 1
            continue
        seen.add(s.key)
        rows.append(TrainingRow(triplet=s.key, label=1, weight=s.weight, is_synthetic=True))
    if dropped:
        logger.info("merge: dropped %d synthetic triplet(s) colliding with originals", dropped)
    return TrainingSet(rows)
