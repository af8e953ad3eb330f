"""
Segmenting a translation to fit the source pauses
==================================================

A source utterance with two pauses is split into three segments. The
translation has to be cut into the same number of pieces, each roughly as
long as its source counterpart, at places where a phrase break sounds
natural.
"""

import numpy as np

from dubsync import (AlignmentConfig, SourceUtterance, TargetSentence, TimedWord, align,
                     align_bruteforce, train)

# word timings as an ASR system would return them; gaps over 0.3 s are pauses
words = [TimedWord("we", 0.00, 0.15), TimedWord("went", 0.18, 0.40),
         TimedWord("home", 0.45, 0.80), TimedWord("after", 1.40, 1.70),
         TimedWord("dinner", 1.72, 2.10), TimedWord("and", 2.70, 2.85),
         TimedWord("slept", 2.90, 3.30)]
e = SourceUtterance.from_words(words)
print("source segments:", [[w.text for w in e.segment_words(t)] for t in range(1, e.k + 1)])

f = TargetSentence(("siamo", "tornati", "a", "casa", "dopo", "cena", "e", "abbiamo", "dormito"),
                   ("AUX", "VERB", "ADP", "NOUN", "ADP", "NOUN", "CCONJ", "AUX", "VERB"))

###############################################################################
# A tiny POS corpus teaches the break model that pauses tend to follow
# nouns and precede conjunctions and prepositions. ``,`` marks a break.

corpus = [s.split() for s in [
    "PRON VERB NOUN , ADP NOUN", "AUX VERB ADP NOUN , CCONJ VERB",
    "DET NOUN VERB , ADP DET NOUN", "NOUN , CCONJ AUX VERB", "VERB ADP NOUN , ADV"]]
lm = train(corpus, order=3)

seg = align(e, f, lm)
print("breakpoints:", seg.breakpoints, "log score: %.4f" % seg.log_score)
for words_t, (start, end) in zip(seg.segments(f), seg.segment_spans):
    print("  %5.2f-%5.2f s  %s" % (start, end, " ".join(words_t)))

###############################################################################
# The dynamic program agrees with exhaustive search

assert align_bruteforce(e, f, lm).breakpoints == seg.breakpoints

###############################################################################
# Turning the break model off leaves pure length matching

for bw in (0.0, 0.5, 2.0):
    s = align(e, f, lm, AlignmentConfig(break_weight=bw))
    print("break weight %.1f ->" % bw, [" ".join(x) for x in s.segments(f)])

# character lengths behind the duration term
print("source chars per segment:", [sum(len(w.text) for w in e.segment_words(t))
                                    for t in range(1, e.k + 1)])
print("target chars per segment:", [int(np.sum([len(w) for w in x])) for x in seg.segments(f)])
