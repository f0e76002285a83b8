"""
From a recording to normalized beats
====================================

Denoising, R-peak registration, 1:2 segmentation and FFT time
normalization to 1000 samples.
"""

import numpy as np

from xwtecg.pipeline import SyntheticBeatSpec, generate_synthetic_record
from xwtecg.preprocess import denoise, detect_r_peaks, resample_to_1000, segment_beats

spec = SyntheticBeatSpec(noise_rms_mv=0.03, random_seed=2)
rec, r_true = generate_synthetic_record(spec, n_beats=12, heart_rate_bpm=80, rr_jitter=0.08,
                                        baseline_wander_mv=0.2, mains_mv=0.1)
fs = rec.sampling_rate_hz
raw = rec.leads[0][1]

# wander below ~2 Hz, content above 125 Hz and 50 Hz mains are removed
clean = denoise(raw, fs)
print("raw RMS %.3f mV, denoised RMS %.3f mV" % (raw.std(), clean.std()))

peaks = detect_r_peaks(clean, fs)
print("true R peaks:    ", r_true)
print("detected R peaks:", peaks)

# each beat keeps x samples before R and 2x after, x = RR/3
beats = segment_beats(clean, peaks, rec.record_id)
for b in beats[:3]:
    print("beat at %d: %d samples, R at offset %d" % (b.source_r_index, len(b.samples), b.r_offset))

normalized = [resample_to_1000(b) for b in beats]
print("normalized lengths:", {len(n.samples) for n in normalized}, "R index:", normalized[0].r_index)
print("peak of first normalized beat at sample", int(np.argmax(normalized[0].samples)))
