"""
Hierarchical classification
===========================

Youden-fitted thresholds separate Normal from IMI beats; a 3-NN vote on
standardized (pa, pb) then separates Type 1 from Type 2.
"""

import numpy as np

from xwtecg.classify import ClassLabel, Coarse, classify_hierarchical, fit_thresholds, knn_fit
from xwtecg.metrics import MetricsReport, confusion, format_table, per_class_accuracy
from xwtecg.pipeline import analyze_beat, synthetic_cohort, synthetic_template

template = synthetic_template()
data = [(analyze_beat(b, template)[2], lb) for b, lb in synthetic_cohort(20, 0.05, seed=5)]

rng = np.random.default_rng(0)
order = rng.permutation(len(data))
train = [data[i] for i in order[: len(data) // 2]]
test = [data[i] for i in order[len(data) // 2:]]

th = fit_thresholds([f for f, _ in train], [lb for _, lb in train])
print("th_pa = %.1f, th_pb = %.1f" % (th.th_pa, th.th_pb))
imi = [(f, lb) for f, lb in train if lb is not ClassLabel.NORMAL]
knn = knn_fit([f for f, _ in imi], [lb for _, lb in imi], k=3)

pred = [classify_hierarchical(f, th, knn) for f, _ in test]
truth = [lb for _, lb in test]
reports = {"coarse": MetricsReport.from_counts(
    confusion([p.coarse for p in pred], [t.coarse for t in truth], Coarse.ABNORMAL))}
for cls in (ClassLabel.IMI_TYPE1, ClassLabel.IMI_TYPE2):
    reports[cls.value] = MetricsReport.from_counts(per_class_accuracy(pred, truth, cls))
print(format_table(reports))
