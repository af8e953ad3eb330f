"""
Part-of-speech n-gram model used to score how plausible a pause is after a
given word of a translated sentence.

The model is trained on POS-tag sequences in which pause punctuation
(comma, semicolon, dash) has been replaced by the reserved token ``BR``.
Conditionals are add-alpha smoothed relative frequencies, so every query
over the vocabulary has positive probability.
"""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import TargetSentence, ValidationError

BR = "BR"
UNK = "UNK"
DEFAULT_ALPHA = 0.1
PAUSE_MARKS = frozenset({",", ";", "-", "--", "–", "—"})


@dataclass(frozen=True, eq=False)
class PosNGramModel:
    """Add-alpha smoothed n-gram model over POS tokens plus ``BR``.

    ``counts`` maps token tuples of every length ``1..order`` to their
    frequency in the training corpus.
    """

    order: int
    counts: dict = field(repr=False)
    vocabulary: frozenset
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if self.order < 2:
            raise ValidationError("order must be >= 2")
        if not 0 < self.alpha:
            raise ValidationError("alpha must be positive")
        vocab = frozenset(self.vocabulary) | {BR, UNK}
        object.__setattr__(self, "vocabulary", vocab)
        totals = Counter()
        for gram, c in self.counts.items():
            totals[gram[:-1]] += c
        object.__setattr__(self, "_totals", totals)

    @classmethod
    def uniform(cls, tags: Iterable[str] = (), order: int = 3) -> PosNGramModel:
        """Model with no observations: every conditional is ``1/|V|``."""
        return cls(order, {}, frozenset(tags))

    @property
    def smoothing_mass(self) -> float:
        """Probability mass the unigram distribution reserves for smoothing."""
        v = len(self.vocabulary)
        n = self._totals[()]
        return self.alpha * v / (n + self.alpha * v)

    def map_token(self, tok: str) -> str:
        return tok if tok in self.vocabulary else UNK

    def cond_prob(self, token: str, context: Sequence[str] = ()) -> float:
        """Smoothed ``P(token | context)``; context is truncated to ``order - 1``."""
        context = tuple(self.map_token(t) for t in context)[-(self.order - 1):] \
            if context else ()
        token = self.map_token(token)
        num = self.counts.get(context + (token,), 0) + self.alpha
        den = self._totals[context] + self.alpha * len(self.vocabulary)
        return num / den

    def log_prob(self, tokens: Sequence[str]) -> float:
        lp = 0.0
        for i, tok in enumerate(tokens):
            lp += math.log(self.cond_prob(tok, tokens[max(0, i - self.order + 1):i]))
        return lp

    def to_text(self) -> str:
        lines = [f"# order {self.order}", f"# alpha {self.alpha!r}",
                 "# vocab " + " ".join(sorted(self.vocabulary))]
        for gram in sorted(self.counts, key=lambda g: (len(g), g)):
            lines.append(f"{self.counts[gram]}\t{' '.join(gram)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> PosNGramModel:
        order, alpha, vocab, counts = None, DEFAULT_ALPHA, set(), {}
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition(" ")
                if key == "order":
                    order = int(val)
                elif key == "alpha":
                    alpha = float(val)
                elif key == "vocab":
                    vocab.update(val.split())
                continue
            try:
                cnt, gram = line.split("\t", 1)
                counts[tuple(gram.split())] = int(cnt)
            except ValueError:
                raise ValidationError(f"malformed n-gram line {lineno}: {line!r}") from None
        if order is None:
            order = max((len(g) for g in counts), default=2)
        vocab.update(t for g in counts for t in g)
        return cls(order, counts, frozenset(vocab), alpha)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> PosNGramModel:
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())


def train(corpus: Sequence[Sequence[str]], order: int = 3,
          alpha: float = DEFAULT_ALPHA) -> PosNGramModel:
    """Count all n-grams of length ``1..order`` over tokenized sentences.

    Pause punctuation inside sentences is mapped to ``BR`` before counting.
    """
    if order < 2:
        raise ValidationError("order must be >= 2")
    sentences = [[BR if t in PAUSE_MARKS else t for t in s] for s in corpus]
    sentences = [s for s in sentences if s]
    if not sentences:
        raise ValidationError("empty corpus")
    counts = Counter()
    for s in sentences:
        for n in range(1, order + 1):
            for i in range(len(s) - n + 1):
                counts[tuple(s[i:i + n])] += 1
    vocab = frozenset(t for s in sentences for t in s)
    return PosNGramModel(order, dict(counts), vocab, alpha)


def parse_corpus_line(line: str) -> list[str]:
    """Tokens of one corpus line: bare tags, or ``word/TAG`` pairs."""
    out = []
    for tok in line.split():
        if tok in PAUSE_MARKS:
            out.append(BR)
            continue
        word, sep, tag = tok.rpartition("/")
        if sep and word:
            out.append(BR if word in PAUSE_MARKS else tag)
        else:
            out.append(tok)
    return out


def read_corpus(path) -> list[list[str]]:
    with open(path, encoding="utf-8") as fh:
        return [toks for toks in (parse_corpus_line(l) for l in fh) if toks]


def sequence_prob(model: PosNGramModel, tokens: Sequence[str]) -> float:
    """Chain-rule probability of ``tokens`` under ``model``."""
    if not tokens:
        raise ValidationError("empty token sequence")
    return math.exp(model.log_prob(tokens))


def break_windows(f: TargetSentence, j: int, window: int = 2) -> tuple[list[str], list[str]]:
    """POS windows around a break after word ``j`` (1-based), with and without ``BR``."""
    if not 1 <= j <= f.m:
        raise ValidationError(f"break index {j} out of range 1..{f.m}")
    if j == f.m:
        raise ValidationError("no break after final word")
    if window < 1:
        raise ValidationError("window must be >= 1")
    left = list(f.pos[max(0, j - window):j])
    right = list(f.pos[j:j + window])
    return left + [BR] + right, left + right


def break_probability(model: PosNGramModel, f: TargetSentence, j: int,
                      window: int = 2) -> float:
    """Plausibility of a pause after word ``j`` (1-based) of ``f``.

    Ratio of per-token (geometric mean) probabilities of the POS window with
    a ``BR`` inserted versus without it.
    """
    with_br, without = break_windows(f, j, window)
    return perplexity_ratio(model.log_prob(with_br), len(with_br),
                            model.log_prob(without), len(without))


def perplexity_ratio(logp_with: float, n_with: int,
                     logp_without: float, n_without: int) -> float:
    """``x / (x + y)`` with ``x = P_with**(1/n_with)``, ``y = P_without**(1/n_without)``.

    Takes log-probabilities so long windows cannot underflow.
    """
    a = logp_with / n_with
    b = logp_without / n_without
    if b - a > 700:
        return 0.0
    return 1.0 / (1.0 + math.exp(b - a))


# Fallback tagger.  Approximate: closed-class lexicon plus a few suffix
# rules for English and Italian.  Real corpora should carry their own tags.
_CLOSED = {
    "DET": "the a an this that these those il lo la i gli le un uno una questo questa quel".split(),
    "ADP": "of in on at to for with from by about into over di a da in con su per tra fra del della dei degli delle al alla nel nella".split(),
    "CCONJ": "and or but nor e ed o ma né".split(),
    "SCONJ": "if because while although since che se perché mentre quando".split(),
    "PRON": "i you he she it we they me him her us them io tu lui lei noi voi loro mi ti ci vi si".split(),
    "AUX": "is are was were be been am has have had do does did è sono era erano essere ha hanno avere".split(),
    "ADV": "not very also just now then so non molto anche già ora poi così".split(),
}
_LEXICON = {w: tag for tag, ws in _CLOSED.items() for w in ws}
_SUFFIXES = [
    ("ly", "ADV"), ("mente", "ADV"), ("ing", "VERB"), ("ed", "VERB"),
    ("are", "VERB"), ("ere", "VERB"), ("ire", "VERB"), ("ato", "VERB"),
    ("ito", "VERB"), ("ous", "ADJ"), ("ful", "ADJ"), ("ive", "ADJ"),
    ("oso", "ADJ"), ("osa", "ADJ"), ("bile", "ADJ"),
]
_NUM = re.compile(r"^[+-]?\d[\d.,]*$")


def tag_word(word: str) -> str:
    w = word.lower().strip(".!?\"'()[]")
    if not w:
        return "PUNCT"
    if w in PAUSE_MARKS:
        return BR
    if _NUM.match(w):
        return "NUM"
    if w in _LEXICON:
        return _LEXICON[w]
    for suf, tag in _SUFFIXES:
        if len(w) > len(suf) + 2 and w.endswith(suf):
            return tag
    return "NOUN"


def tag_words(words: Sequence[str]) -> list[str]:
    return [tag_word(w) for w in words]
