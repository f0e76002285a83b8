"""
Beat features pa and pb
=======================

pa sums the coherence and pb the co-spectrum over scales 75..300 and the
QT zone (80 samples before R to 400 after). Abnormal beats score lower on
both.
"""

import numpy as np

from xwtecg.classify import ClassLabel
from xwtecg.features import AnalysisWindow, sum_wcs_per_scale
from xwtecg.pipeline import analyze_beat, synthetic_cohort, synthetic_template

template = synthetic_template()
window = AnalysisWindow()
print("window: t %d..%d, scales %d..%d, %d cells" % (window.t1, window.t2, window.s1, window.s2, window.n_cells))

wcs, _, self_fv = analyze_beat(template.beat, template)
print("template vs itself: pa = %.1f, pb = %.1f" % (self_fv.pa, self_fv.pb))

# per-scale co-spectrum profile, the basis for picking the scale band
profile = sum_wcs_per_scale(wcs, window.t1, window.t2)
print("co-spectrum profile peaks at scale", int(np.argmax(profile)) + 1)

cohort = synthetic_cohort(10, noise_rms_mv=0.05, seed=4)
feats = {lb: [] for lb in ClassLabel}
for beat, lb in cohort:
    feats[lb].append(analyze_beat(beat, template)[2])
for lb, fvs in feats.items():
    pa = np.array([f.pa for f in fvs])
    pb = np.array([f.pb for f in fvs])
    print("%-10s pa %9.0f +/- %6.0f   pb %9.0f +/- %6.0f" % (lb.value, pa.mean(), pa.std(), pb.mean(), pb.std()))
