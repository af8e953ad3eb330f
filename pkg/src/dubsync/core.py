"""
Core value types for timed source utterances, translated sentences and
their segmentations.

Breakpoints are 1-based everywhere in this module and in every file
format: breakpoint ``b`` means "a segment ends after word ``b``".
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

DEFAULT_PAUSE_THRESHOLD = 0.3


class ValidationError(ValueError):
    """Raised when input data violates a domain invariant."""


def char_length(words: Sequence[str]) -> int:
    """Number of non-whitespace characters over ``words``."""
    return sum(len("".join(w.split())) for w in words)


@dataclass(frozen=True)
class TimedWord:
    text: str
    start: float
    end: float

    def __post_init__(self):
        if not self.text.strip():
            raise ValidationError("word text is empty")
        if self.start < 0:
            raise ValidationError(f"negative start time for {self.text!r}")
        if not self.end > self.start:
            raise ValidationError(
                f"word {self.text!r} has end {self.end} <= start {self.start}")

    @property
    def duration(self) -> float:
        return self.end - self.start

    def to_dict(self) -> dict:
        return {"text": self.text, "start": self.start, "end": self.end}

    @classmethod
    def from_dict(cls, d: dict) -> TimedWord:
        return cls(str(d["text"]), float(d["start"]), float(d["end"]))


def _check_breakpoints(breakpoints: Sequence[int], n: int, what: str):
    if not breakpoints:
        raise ValidationError(f"{what}: no breakpoints")
    if breakpoints[0] < 1:
        raise ValidationError(f"{what}: breakpoints are 1-based, got {breakpoints[0]}")
    if any(b >= c for b, c in zip(breakpoints, breakpoints[1:])):
        raise ValidationError(f"{what}: breakpoints not strictly increasing: {list(breakpoints)}")
    if breakpoints[-1] != n:
        raise ValidationError(
            f"{what}: last breakpoint must equal word count {n}, got {breakpoints[-1]}")


def detect_breakpoints(words: Sequence[TimedWord],
                       pause_threshold: float = DEFAULT_PAUSE_THRESHOLD) -> list[int]:
    """Derive source breakpoints from inter-word pauses.

    A break is placed after word ``p`` (1-based) whenever the silence before
    the next word is at least ``pause_threshold`` seconds. The last word is
    always a breakpoint.

    >>> ws = [TimedWord("a", 0, 0.2), TimedWord("b", 0.25, 0.5), TimedWord("c", 0.9, 1.0)]
    >>> detect_breakpoints(ws, 0.3)
    [2, 3]
    """
    if not words:
        raise ValidationError("empty utterance")
    if not pause_threshold > 0:
        raise ValidationError("pause_threshold must be positive")
    n = len(words)
    breaks = [p + 1 for p in range(n - 1)
              if words[p + 1].start - words[p].end >= pause_threshold]
    breaks.append(n)
    return breaks


@dataclass(frozen=True)
class SourceUtterance:
    words: tuple[TimedWord, ...]
    breakpoints: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        object.__setattr__(self, "breakpoints", tuple(int(b) for b in self.breakpoints))
        if not self.words:
            raise ValidationError("empty utterance")
        for a, b in zip(self.words, self.words[1:]):
            if a.end > b.start:
                raise ValidationError(
                    f"words overlap or are out of order: {a.text!r} ends at {a.end}, "
                    f"{b.text!r} starts at {b.start}")
        _check_breakpoints(self.breakpoints, len(self.words), "source utterance")

    @classmethod
    def from_words(cls, words: Sequence[TimedWord],
                   pause_threshold: float = DEFAULT_PAUSE_THRESHOLD) -> SourceUtterance:
        return cls(tuple(words), tuple(detect_breakpoints(words, pause_threshold)))

    @property
    def n(self) -> int:
        return len(self.words)

    @property
    def k(self) -> int:
        return len(self.breakpoints)

    @property
    def start(self) -> float:
        return self.words[0].start

    @property
    def end(self) -> float:
        return self.words[-1].end

    def segment_bounds(self, t: int) -> tuple[int, int]:
        """0-based half-open word range ``[lo, hi)`` of segment ``t`` (1-based)."""
        if not 1 <= t <= self.k:
            raise ValidationError(f"segment index {t} out of range 1..{self.k}")
        lo = self.breakpoints[t - 2] if t > 1 else 0
        return lo, self.breakpoints[t - 1]

    def segment_words(self, t: int) -> tuple[TimedWord, ...]:
        lo, hi = self.segment_bounds(t)
        return self.words[lo:hi]

    def segment_span(self, t: int) -> tuple[float, float]:
        ws = self.segment_words(t)
        return ws[0].start, ws[-1].end

    def to_dict(self) -> dict:
        return {"words": [w.to_dict() for w in self.words],
                "breakpoints": list(self.breakpoints)}

    @classmethod
    def from_dict(cls, d: dict,
                  pause_threshold: float = DEFAULT_PAUSE_THRESHOLD) -> SourceUtterance:
        words = [TimedWord.from_dict(w) for w in d["words"]]
        if d.get("breakpoints") is None:
            return cls.from_words(words, pause_threshold)
        return cls(tuple(words), tuple(d["breakpoints"]))


def segment_duration_source(utterance: SourceUtterance, t: int) -> int:
    """Character-count duration proxy of source segment ``t`` (1-based)."""
    return char_length([w.text for w in utterance.segment_words(t)])


def segment_seconds_source(utterance: SourceUtterance, t: int) -> float:
    """Measured duration of source segment ``t``: first word start to last word end."""
    start, end = utterance.segment_span(t)
    return end - start


@dataclass(frozen=True)
class TargetSentence:
    words: tuple[str, ...]
    pos: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        object.__setattr__(self, "pos", tuple(self.pos))
        if not self.words:
            raise ValidationError("target sentence has no words")
        if len(self.pos) != len(self.words):
            raise ValidationError(
                f"pos length {len(self.pos)} != words length {len(self.words)}")
        if any(not w.strip() for w in self.words):
            raise ValidationError("target sentence contains an empty word")

    @property
    def m(self) -> int:
        return len(self.words)

    def to_dict(self) -> dict:
        return {"words": list(self.words), "pos": list(self.pos)}

    @classmethod
    def from_dict(cls, d: dict) -> TargetSentence:
        if "words" not in d and "text" in d:
            from .lm import tag_words
            words = d["text"].split()
            return cls(tuple(words), tuple(tag_words(words)))
        words = list(d["words"])
        pos = d.get("pos")
        if pos is None:
            from .lm import tag_words
            pos = tag_words(words)
        return cls(tuple(words), tuple(pos))


@dataclass(frozen=True)
class Segmentation:
    breakpoints: tuple[int, ...]
    log_score: float
    segment_spans: tuple[tuple[float, float], ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(int(b) for b in self.breakpoints))
        object.__setattr__(self, "segment_spans",
                           tuple((float(a), float(b)) for a, b in self.segment_spans))
        if any(b >= c for b, c in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValidationError(f"breakpoints not strictly increasing: {self.breakpoints}")
        if self.segment_spans:
            if len(self.segment_spans) != len(self.breakpoints):
                raise ValidationError("one span per segment required")
            for (s0, e0), (s1, _) in zip(self.segment_spans, self.segment_spans[1:]):
                if e0 > s1:
                    raise ValidationError("segment spans overlap")
            if any(e < s for s, e in self.segment_spans):
                raise ValidationError("segment span ends before it starts")

    @property
    def k(self) -> int:
        return len(self.breakpoints)

    def segments(self, f: TargetSentence) -> list[tuple[str, ...]]:
        """Split the words of ``f`` at the breakpoints."""
        if self.breakpoints[-1] != f.m:
            raise ValidationError("segmentation does not cover the target sentence")
        out, lo = [], 0
        for b in self.breakpoints:
            out.append(f.words[lo:b])
            lo = b
        return out

    def to_dict(self, f: TargetSentence | None = None) -> dict:
        d = {"breakpoints": list(self.breakpoints), "log_score": self.log_score}
        segs = self.segments(f) if f is not None else [None] * self.k
        spans = self.segment_spans or [(None, None)] * self.k
        d["segments"] = [
            {"words": list(ws) if ws is not None else None, "start": s, "end": e}
            for ws, (s, e) in zip(segs, spans)
        ]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> Segmentation:
        spans = ()
        segs = d.get("segments") or []
        if segs and all(s.get("start") is not None for s in segs):
            spans = tuple((s["start"], s["end"]) for s in segs)
        return cls(tuple(d["breakpoints"]), float(d["log_score"]), spans)


def load_transcript(path, pause_threshold: float = DEFAULT_PAUSE_THRESHOLD) -> SourceUtterance:
    """Read a transcript JSON file (``{"words": [...], "breakpoints": [...]}``)."""
    with open(path, encoding="utf-8") as fh:
        return SourceUtterance.from_dict(json.load(fh), pause_threshold)


def load_translation(path) -> TargetSentence:
    with open(path, encoding="utf-8") as fh:
        return TargetSentence.from_dict(json.load(fh))


def write_json(obj: dict, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, ensure_ascii=False) + "\n",
                          encoding="utf-8")
