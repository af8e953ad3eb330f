"""
Verbosity-control data preparation for MT training corpora.

Sentence pairs are grouped by their target/source length ratio into
short, normal and long, and a length token naming the group is prepended
to the source side. At inference time the same token is prepended to
request output of a given length class.
"""
from __future__ import annotations

import enum
import statistics
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import ValidationError

HIST_BIN = 0.05
HIST_MAX = 2.0


class LengthGroup(str, enum.Enum):
    SHORT = "SHORT"
    NORMAL = "NORMAL"
    LONG = "LONG"

    @property
    def token(self) -> str:
        return f"<{self.value.lower()}> "


@dataclass(frozen=True)
class LengthThresholds:
    t1: float = 0.95
    t2: float = 1.05

    def __post_init__(self):
        if not 0 < self.t1 < self.t2:
            raise ValidationError(f"thresholds must satisfy 0 < t1 < t2, got {self.t1}, {self.t2}")


@dataclass(frozen=True)
class TaggedPair:
    source: str
    target: str
    group: LengthGroup
    ratio: float

    @property
    def original_source(self) -> str:
        return strip_token(self.source)


def string_length(text: str, unit: str = "chars") -> int:
    """Length in non-whitespace characters, or in whitespace tokens."""
    if unit == "chars":
        return len("".join(text.split()))
    if unit == "tokens":
        return len(text.split())
    raise ValueError(f"unknown length unit {unit!r}")


def length_ratio(source: str, target: str, unit: str = "chars") -> float:
    """Target length divided by source length.

    >>> length_ratio("ab cd", "abcdefgh")
    2.0
    """
    ls, lt = string_length(source, unit), string_length(target, unit)
    if ls == 0 or lt == 0:
        raise ValidationError("empty source or target sentence")
    return lt / ls


def classify(ratio: float, th: LengthThresholds = LengthThresholds()) -> LengthGroup:
    # half-open intervals [0, t1), [t1, t2), [t2, inf)
    if ratio < th.t1:
        return LengthGroup.SHORT
    if ratio < th.t2:
        return LengthGroup.NORMAL
    return LengthGroup.LONG


def add_token(source: str, group: LengthGroup | str) -> str:
    """Prepend the length token, e.g. to request short output at inference."""
    return LengthGroup(group.upper() if isinstance(group, str) else group).token + source


def strip_token(source: str) -> str:
    for g in LengthGroup:
        if source.startswith(g.token):
            return source[len(g.token):]
    return source


def partition_corpus(pairs: Iterable[tuple[str, str]],
                     th: LengthThresholds = LengthThresholds(),
                     unit: str = "chars") -> tuple[list[TaggedPair], dict[str, int]]:
    tagged = []
    for lineno, (src, tgt) in enumerate(pairs, 1):
        try:
            r = length_ratio(src, tgt, unit)
        except ValidationError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
        g = classify(r, th)
        tagged.append(TaggedPair(g.token + src, tgt, g, r))
    if not tagged:
        raise ValidationError("empty corpus")
    counts = Counter(p.group.value for p in tagged)
    return tagged, {g.value: counts.get(g.value, 0) for g in LengthGroup}


def corpus_ratio_stats(ratios: Sequence[float] | Sequence[TaggedPair]) -> dict:
    """Mean, median and a fixed-width histogram of length ratios.

    The histogram has 40 bins of width 0.05 over [0, 2) and one overflow
    bin for ratios >= 2.
    """
    rs = [p.ratio if isinstance(p, TaggedPair) else float(p) for p in ratios]
    if not rs:
        raise ValidationError("no ratios")
    nbins = round(HIST_MAX / HIST_BIN)
    hist = [0] * (nbins + 1)
    for r in rs:
        # round before flooring so that e.g. 0.95 lands in [0.95, 1.0)
        hist[min(int(round(r / HIST_BIN, 9)), nbins)] += 1
    edges = [round(i * HIST_BIN, 10) for i in range(nbins + 1)]
    return {"count": len(rs), "mean": statistics.fmean(rs), "median": statistics.median(rs),
            "histogram": {"bin_width": HIST_BIN, "edges": edges, "counts": hist}}


def read_pairs(path) -> list[tuple[str, str]]:
    pairs = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if "\t" not in line:
                raise ValidationError(f"line {lineno}: expected a tab-separated pair")
            src, tgt = line.split("\t", 1)
            pairs.append((src, tgt))
    return pairs


def write_tagged(tagged: Iterable[TaggedPair], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for p in tagged:
            fh.write(f"{p.source}\t{p.target}\n")
