"""
Replaying published confusion counts
====================================

Accuracy, sensitivity and specificity computed exactly from published
counts. The lead III counts do not reproduce the percentages printed
next to them; the check reports each mismatch.
"""

from xwtecg.metrics import (REFERENCE_LEAD3, REFERENCE_LEAD3_PRINTED, REFERENCE_TYPE_COUNTS,
                            ConfusionCounts, MetricsReport, accuracy, check_reported, fmt_pct,
                            format_table)

for name, (total, errors) in REFERENCE_TYPE_COUNTS.items():
    acc = accuracy(ConfusionCounts(total - errors, 0, 0, errors))
    print("%s: %d beats, %d errors -> %s%% (exact %s)" % (name, total, errors, fmt_pct(acc), acc))

print()
print(format_table({"lead III": MetricsReport.from_counts(REFERENCE_LEAD3)}))
print()
for note in check_reported(REFERENCE_LEAD3, REFERENCE_LEAD3_PRINTED):
    print("mismatch:", note)
