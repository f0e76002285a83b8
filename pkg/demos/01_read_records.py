"""
Reading ECG records
===================

Writes a small synthetic recording in WFDB format 16, reads it back, and
picks lead III. Real PTB-DB records are read the same way.
"""

import tempfile
from pathlib import Path

import numpy as np

from xwtecg.ingest import read_csv_signal, read_wfdb_record, select_lead, write_csv_signal, write_wfdb_record
from xwtecg.pipeline import SyntheticBeatSpec, generate_synthetic_record

work = Path(tempfile.mkdtemp(prefix="xwtecg-demo-"))

# ten normal beats at 72 bpm, sampled at 1 kHz
rec, r_true = generate_synthetic_record(SyntheticBeatSpec(noise_rms_mv=0.02), n_beats=10,
                                        record_id="demo01")
hea = write_wfdb_record(rec, work)
print(hea.read_text())

# the .dat file holds 16-bit ADUs; reading converts back to mV
back = read_wfdb_record(hea)
x = select_lead(back, "III")  # lead names match case-insensitively
print("samples:", back.n_samples, "at", back.sampling_rate_hz, "Hz")
print("max quantization error (mV):", np.abs(x - rec.leads[0][1]).max())

# single-lead CSV is the other exchange format
write_csv_signal(x, work / "demo01.csv")
csv_rec = read_csv_signal(work / "demo01.csv", 1000.0, "iii")
print("CSV round trip identical:", np.array_equal(select_lead(csv_rec, "iii"), x))
