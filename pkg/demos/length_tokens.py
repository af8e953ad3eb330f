"""
Length tokens for verbosity control
===================================

Training pairs are grouped by the ratio of target to source length in
non-whitespace characters and a token naming the group is put in front of
the source sentence. An MT model trained on such data can then be asked
for short output by prepending ``<short>``.
"""

from dubsync import LengthThresholds, add_token, classify, length_ratio, partition_corpus
from dubsync import corpus_ratio_stats, strip_token

pairs = [
    ("I am going home now", "Vado a casa adesso"),
    ("Thank you very much", "Grazie mille"),
    ("Where is the station", "Dov'è la stazione"),
    ("It is a beautiful day", "È una giornata bellissima"),
    ("Please sit down", "Per favore, si accomodi"),
    ("Good evening", "Buonasera"),
]

for src, tgt in pairs:
    r = length_ratio(src, tgt)
    print("%.3f  %-6s  %s" % (r, classify(r).value, src))

tagged, counts = partition_corpus(pairs)
print(counts)
print(tagged[0].source)

# the thresholds are the interval edges; a ratio exactly on t1 is normal
th = LengthThresholds(0.95, 1.05)
print(classify(0.95, th).value, classify(1.05, th).value)

# stripping the token gives the original line back
assert [strip_token(p.source) for p in tagged] == [s for s, _ in pairs]

###############################################################################
# At inference time the token is a control knob

print(add_token("See you tomorrow", "short"))

stats = corpus_ratio_stats(tagged)
print("mean ratio %.3f, median %.3f" % (stats["mean"], stats["median"]))
