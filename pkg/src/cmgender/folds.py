"""Author-grouped fold assignment."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence


class FoldError(ValueError):
    pass


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    fold_of: tuple[int, ...]  # row index -> fold id
    author_fold: dict[str, int]

    def test_rows(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.fold_of) if f == fold]

    def train_rows(self, fold: int) -> list[int]:
        return [i for i, f in enumerate(self.fold_of) if f != fold]

    def sizes(self) -> list[int]:
        return [self.fold_of.count(f) for f in range(self.k)]

    def author_counts(self) -> list[int]:
        counts = [0] * self.k
        for f in self.author_fold.values():
            counts[f] += 1
        return counts


def assign_folds(author_ids: Sequence[str], k: int = 10, seed: int = 0) -> FoldAssignment:
    """Shuffle the distinct authors (sorted first, so row order is irrelevant)
    with ``seed`` and deal them round-robin into ``k`` folds."""
    if k < 2:
        raise FoldError("need at least 2 folds")
    authors = sorted(set(author_ids))
    if len(authors) < k:
        raise FoldError(f"only {len(authors)} distinct authors for {k} folds; use fewer folds")
    random.Random(seed).shuffle(authors)
    author_fold = {a: i % k for i, a in enumerate(authors)}
    return FoldAssignment(k, tuple(author_fold[a] for a in author_ids), author_fold)
