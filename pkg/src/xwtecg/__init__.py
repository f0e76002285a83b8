"""Cross-wavelet analysis and classification of ECG beats against a normal template."""

from .classify import ClassLabel, KnnModel, ThresholdModel, classify_hierarchical
from .features import AnalysisWindow, FeatureVector, extract_features
from .ingest import EcgRecord, read_csv_signal, read_wfdb_record, select_lead
from .pipeline import TemplateBeat, analyze_beat, analyze_record
from .preprocess import NormalizedBeat, denoise, detect_r_peaks, resample_to_1000, segment_beats
from .xwavelet import ScaleGrid, cwt_morlet, wcoh, xwt

__version__ = "0.1.0"
