"""Optimal bipartite matching on similarity scores (larger is better)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass
class Assignment:
    matches: list[tuple[int, int]] = field(default_factory=list)
    unmatched_rows: list[int] = field(default_factory=list)
    unmatched_cols: list[int] = field(default_factory=list)

    def total(self, scores) -> float:
        scores = np.asarray(scores, dtype=float)
        return float(sum(scores[r, c] for r, c in self.matches))


def _as_scores(m) -> np.ndarray:
    scores = np.asarray(m, dtype=float)
    if scores.ndim != 2:
        if scores.size == 0:
            return scores.reshape(0, 0)
        raise ValueError(f"score matrix must be 2-D, got shape {scores.shape}")
    if not np.all(np.isfinite(scores)):
        raise ValueError("score matrix contains non-finite values")
    return scores


def hungarian_max(m) -> Assignment:
    """Maximum-total-score assignment of ``min(rows, cols)`` pairs.

    Matches are returned sorted by row index.
    """
    scores = _as_scores(m)
    n_rows, n_cols = scores.shape
    if n_rows == 0 or n_cols == 0:
        return Assignment([], list(range(n_rows)), list(range(n_cols)))
    rows, cols = linear_sum_assignment(scores, maximize=True)
    matches = [(int(r), int(c)) for r, c in zip(rows, cols)]
    used_r = set(rows.tolist())
    used_c = set(cols.tolist())
    return Assignment(
        matches,
        [r for r in range(n_rows) if r not in used_r],
        [c for c in range(n_cols) if c not in used_c],
    )


def gated_assign(m, min_score: float) -> Assignment:
    """:func:`hungarian_max`, then drop every pair scoring below ``min_score``."""
    scores = _as_scores(m)
    result = hungarian_max(scores)
    kept = []
    rows = set(result.unmatched_rows)
    cols = set(result.unmatched_cols)
    for r, c in result.matches:
        if scores[r, c] < min_score:
            rows.add(r)
            cols.add(c)
        else:
            kept.append((r, c))
    return Assignment(kept, sorted(rows), sorted(cols))


def two_step_match(primary, support, gate: float) -> list[tuple[int, int, int]]:
    """Confirm primary matches that are backed by an independent support match.

    ``primary`` scores the shared elements ``C`` (rows) against candidates
    ``B``; ``support`` scores the same ``C`` against ``A``. Both are solved
    with :func:`gated_assign`; a pair ``(c, b)`` survives only when ``c`` was
    also matched to some ``a`` in the support problem. Returns ``(c, b, a)``
    triples ordered by ``c``.
    """
    primary = _as_scores(primary)
    support = _as_scores(support)
    if primary.shape[0] != support.shape[0]:
        raise ValueError(
            f"primary and support must share their row dimension: "
            f"{primary.shape[0]} != {support.shape[0]}"
        )
    backed = dict(gated_assign(support, gate).matches)
    if not backed:
        return []
    return [(c, b, backed[c]) for c, b in gated_assign(primary, gate).matches if c in backed]
