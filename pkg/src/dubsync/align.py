"""
Prosodic alignment: place ``k`` breakpoints in a translated sentence so
that its segments match the durations of the ``k`` source segments and
fall where pauses are linguistically plausible.

The score of a segmentation is the sum over segments of

    duration_weight * (1 - |d_src - d_tgt| / d_src) + break_weight * log P(br)

with the break term dropped for the last segment, whose end is fixed at
the sentence end. ``align`` maximizes it by dynamic programming;
``align_bruteforce`` enumerates every segmentation and exists as a test
oracle.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (SourceUtterance, TargetSentence, Segmentation, ValidationError,
                   char_length, segment_duration_source, segment_seconds_source)
from .lm import PosNGramModel, break_probability

NEG_INF = float("-inf")
BRUTEFORCE_LIMIT = 10 ** 6


@dataclass(frozen=True)
class AlignmentConfig:
    duration_weight: float = 1.0
    break_weight: float = 1.0
    use_source_timings: bool = False
    lm_window: int = 2

    def __post_init__(self):
        for name in ("duration_weight", "break_weight"):
            w = getattr(self, name)
            if not (math.isfinite(w) and w >= 0):
                raise ValidationError(f"{name} must be finite and non-negative, got {w}")
        if self.lm_window < 1:
            raise ValidationError("lm_window must be >= 1")

    @classmethod
    def from_dict(cls, d: dict | None) -> AlignmentConfig:
        d = d or {}
        keys = ("duration_weight", "break_weight", "use_source_timings", "lm_window")
        return cls(**{k: d[k] for k in keys if k in d})


def transition_log_score(e_seg_duration: float, f_seg: Sequence[str], f: TargetSentence,
                         j_t: int, is_final: bool, model: PosNGramModel,
                         cfg: AlignmentConfig, break_prob: float | None = None) -> float:
    """Log-score of closing a target segment ``f_seg`` at word ``j_t`` (1-based).

    ``break_prob`` may be passed in when already computed for ``j_t``.
    """
    if not f_seg:
        return NEG_INF
    if not e_seg_duration > 0:
        raise ValidationError("source segment duration must be positive")
    d_f = char_length(f_seg)
    score = cfg.duration_weight * (1.0 - abs(e_seg_duration - d_f) / e_seg_duration)
    if not is_final and cfg.break_weight:
        if break_prob is None:
            break_prob = break_probability(model, f, j_t, cfg.lm_window)
        score += cfg.break_weight * math.log(break_prob)
    return score


def source_durations(e: SourceUtterance, cfg: AlignmentConfig) -> list[float]:
    """Per-segment source durations in character units.

    With ``use_source_timings`` the measured segment time is converted to
    characters through the utterance's own speaking rate (characters per
    second of speech), so it stays comparable with target character counts.
    """
    chars = [float(segment_duration_source(e, t)) for t in range(1, e.k + 1)]
    if not cfg.use_source_timings:
        return chars
    secs = [segment_seconds_source(e, t) for t in range(1, e.k + 1)]
    rate = sum(chars) / sum(secs)
    return [s * rate if s > 0 else c for s, c in zip(secs, chars)]


class _Scorer:
    """Caches break probabilities and prefix character counts for one instance."""

    def __init__(self, e, f, model, cfg):
        self.f, self.model, self.cfg = f, model, cfg
        self.d_e = source_durations(e, cfg)
        self.k = e.k
        if cfg.break_weight:
            self.br = [None] + [break_probability(model, f, j, cfg.lm_window)
                                for j in range(1, f.m)]
        else:
            self.br = [None] * f.m

    def __call__(self, t: int, j_prev: int, j: int) -> float:
        """Score of segment ``t`` covering words ``j_prev+1 .. j`` (1-based)."""
        final = t == self.k
        return transition_log_score(self.d_e[t - 1], self.f.words[j_prev:j], self.f, j,
                                    final, self.model, self.cfg,
                                    None if final else self.br[j])


def _check_sizes(e: SourceUtterance, f: TargetSentence):
    if f.m < e.k:
        raise ValidationError(f"target too short for k segments (m={f.m}, k={e.k})")


def _result(e: SourceUtterance, breaks: Sequence[int], score: float) -> Segmentation:
    return Segmentation(tuple(breaks), score,
                        tuple(e.segment_span(t) for t in range(1, e.k + 1)))


def score_table(e: SourceUtterance, f: TargetSentence, model: PosNGramModel,
                cfg: AlignmentConfig = AlignmentConfig()):
    """Fill the DP table.

    Returns ``(Q, paths)`` where ``Q[j, t]`` is the best log-score of
    splitting the first ``j`` target words into ``t`` segments (``-inf`` if
    impossible) and ``paths[j, t]`` the lexicographically smallest
    breakpoint prefix achieving it.
    """
    _check_sizes(e, f)
    m, k = f.m, e.k
    score = _Scorer(e, f, model, cfg)
    Q = np.full((m + 1, k + 1), NEG_INF)
    Q[0, 0] = 0.0
    paths = {(0, 0): ()}
    for t in range(1, k + 1):
        # the last segment must end at m; earlier ones must leave a word per later segment
        j_range = [m] if t == k else range(t, m - (k - t) + 1)
        for j in j_range:
            best, best_path = NEG_INF, None
            for jp in range(t - 1, j):
                if Q[jp, t - 1] == NEG_INF:
                    continue
                s = Q[jp, t - 1] + score(t, jp, j)
                path = paths[jp, t - 1] + (j,)
                if s > best or (s == best and best_path is not None and path < best_path):
                    best, best_path = s, path
            if best_path is not None:
                Q[j, t] = best
                paths[j, t] = best_path
    return Q, paths


def align(e: SourceUtterance, f: TargetSentence, model: PosNGramModel,
          cfg: AlignmentConfig = AlignmentConfig()) -> Segmentation:
    """Optimal target segmentation by dynamic programming, O(m^2 k)."""
    Q, paths = score_table(e, f, model, cfg)
    return _result(e, paths[f.m, e.k], float(Q[f.m, e.k]))


def segmentation_score(e: SourceUtterance, f: TargetSentence, breaks: Sequence[int],
                       model: PosNGramModel, cfg: AlignmentConfig = AlignmentConfig(),
                       _scorer=None) -> float:
    """Total log-score of a given breakpoint vector, summed left to right."""
    score = _scorer or _Scorer(e, f, model, cfg)
    total, prev = 0.0, 0
    for t, j in enumerate(breaks, 1):
        total = total + score(t, prev, j)
        prev = j
    return total


def align_bruteforce(e: SourceUtterance, f: TargetSentence, model: PosNGramModel,
                     cfg: AlignmentConfig = AlignmentConfig()) -> Segmentation:
    """Exhaustive search over all ``C(m-1, k-1)`` segmentations."""
    _check_sizes(e, f)
    m, k = f.m, e.k
    if math.comb(m - 1, k - 1) > BRUTEFORCE_LIMIT:
        raise ValidationError(
            f"C({m - 1}, {k - 1}) segmentations exceed the enumeration limit")
    scorer = _Scorer(e, f, model, cfg)
    best, best_breaks = NEG_INF, None
    # combinations() is lexicographic, so keeping the first maximum breaks ties low
    for inner in itertools.combinations(range(1, m), k - 1):
        breaks = inner + (m,)
        s = segmentation_score(e, f, breaks, model, cfg, scorer)
        if best_breaks is None or s > best:
            best, best_breaks = s, breaks
    return _result(e, best_breaks, best)
