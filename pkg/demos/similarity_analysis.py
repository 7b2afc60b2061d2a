"""Why is intent decoding plausible at all?  Samples of the same intent
correlate more strongly with each other than with samples of other
intents.

This demo builds the per-intent correlation matrix with its
self-similarity, cross-similarity and percentage-difference columns —
the same table the `neurotype analyze` command emits as CSV.
"""

from neurotype import data
from neurotype.similarity import report_to_csv, similarity_report

subject = data.synthesize_subject(n=1000, channels=16, seed=7)

# one group of samples per intent label 0..4
groups = subject.by_intent()
matrix, rows = similarity_report(groups, m=50, seed=7)

print(report_to_csv(matrix, rows))
print("reading the table: `self` is the mean correlation of same-intent")
print("sample pairs, `cross` the mean over pairs from different intents,")
print("and `pd_percent` their percentage difference (self - cross)/self.")
print("A positive pd_percent means intra-intent cohesion beats")
print("inter-intent cohesion, which is what makes classification viable.")
