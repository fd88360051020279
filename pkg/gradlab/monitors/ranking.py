# -*- coding: utf-8 -*-
# Ranking similarity
from typing import Tuple

import numpy as np

from gradlab._types import Ranking
from gradlab.utils import ItemSetMismatch


def ranking_similarity(first: Ranking, second: Ranking) -> Tuple[float, float]:
    """Monitor: Ranking Similarity"""
    # Validate Arguments
    if set(first.items) != set(second.items):
        raise ItemSetMismatch(first.items, second.items)
    n = len(first.items)
    if n < 2:
        raise ValueError(f"[X] Ranking similarity needs at least 2 items, got {n}")

    # Calculate Result
    items = sorted(first.items)
    p1 = np.array([first.positions()[x] for x in items])
    p2 = np.array([second.positions()[x] for x in items])
    before1 = p1[:, None] < p1[None, :]
    before2 = p2[:, None] < p2[None, :]
    off_diagonal = ~np.eye(n, dtype=bool)
    agree = np.count_nonzero((before1 == before2) & off_diagonal)
    raw = agree / (n * (n - 1))
    return float(raw), float(max(raw, 1.0 - raw))


ranking_similarity.__doc__ = """Ranking Similarity

Fraction of item pairs that two rankings put in the same relative order.
A ranking that is fully reversed is as informative as an identical one, so
the converted score folds the raw fraction into [0.5, 1].

Calculation:
    raw = #{(a, b), a != b : order_1(a, b) == order_2(a, b)} / (n (n - 1))
    converted = MAX(raw, 1 - raw)

Args:
    first (Ranking): Items with scores, ordered by descending score
    second (Ranking): Same items, other scores

Returns:
    tuple: (raw, converted)
"""
