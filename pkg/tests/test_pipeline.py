import logging

import numpy as np
import pytest

from xwtecg.classify import ClassLabel
from xwtecg.features import FeatureRow, write_feature_table
from xwtecg.ingest import EcgRecord
from xwtecg.pipeline import (PipelineError, SyntheticBeatSpec, TemplateBeat, analyze_beat,
                             analyze_record, extract_template, generate_synthetic_beat,
                             generate_synthetic_record, load_template, n_workers,
                             random_beat_spec, save_template, synthetic_cohort)
from xwtecg.preprocess import NormalizedBeat

N, T1, T2 = ClassLabel.NORMAL, ClassLabel.IMI_TYPE1, ClassLabel.IMI_TYPE2


def test_analyze_beat_self(template):
    wcs, coh, fv = analyze_beat(template.beat, template)
    assert abs(fv.pa - 108706) <= 1e-3
    assert fv.pb > 0
    assert wcs.values.shape == coh.values.shape == (512, 1000)


def test_analyze_beat_negated(template):
    _, _, f0 = analyze_beat(template.beat, template)
    _, _, f1 = analyze_beat(NormalizedBeat(-template.beat.samples), template)
    assert f1.pb < 0
    assert f1.pb == pytest.approx(-f0.pb, rel=1e-12)
    assert abs(f1.pa - f0.pa) <= 1e-6


def test_analyze_beat_zero(template):
    _, _, fv = analyze_beat(NormalizedBeat(np.zeros(1000)), template)
    assert fv.pa == 0 and fv.pb == 0


def test_self_pa_is_maximal(template, cohort_features):
    self_pa = analyze_beat(template.beat, template)[2].pa
    assert all(f.pa <= self_pa + 1e-6 for f, _ in cohort_features)


def test_cohort_separability(cohort_features):
    def stats(labels, attr):
        v = np.array([getattr(f, attr) for f, lb in cohort_features if lb in labels])
        return v.mean(), v.var(ddof=1), len(v)

    for attr in ("pa", "pb"):
        mn, vn, nn = stats({N}, attr)
        ma, va, na = stats({T1, T2}, attr)
        pooled = ((nn - 1) * vn + (na - 1) * va) / (nn + na - 2)
        se = np.sqrt(pooled * (1 / nn + 1 / na))
        assert mn - ma > 3 * se, attr
        for t in (T1, T2):
            assert stats({t}, attr)[0] < mn


def test_synthetic_normal_r_amplitude():
    beat = generate_synthetic_beat(SyntheticBeatSpec(qrs_amplitude_mv=1.07))
    assert abs(beat.samples[333] - 1.07) <= 1e-6
    assert np.argmax(beat.samples) == 333


def test_synthetic_type1_st_elevation():
    normal = generate_synthetic_beat(SyntheticBeatSpec(qrs_amplitude_mv=0.8))
    t1 = generate_synthetic_beat(SyntheticBeatSpec(T1, st_elevation_mv=0.3, qrs_amplitude_mv=0.6))
    diff = t1.samples[400:481].mean() - normal.samples[400:481].mean()
    assert diff == pytest.approx(0.3, abs=0.01)


def test_synthetic_type2_q_and_t():
    spec = SyntheticBeatSpec(T2, q_depth_mv=0.4, t_inverted=True, qrs_amplitude_mv=0.8)
    x = generate_synthetic_beat(spec).samples
    assert x[280:331].min() < -0.2
    assert x[520:650].mean() < 0


@pytest.mark.parametrize("kwargs", [
    dict(label=T1, st_elevation_mv=0.0, qrs_amplitude_mv=0.6),
    dict(label=T1, st_elevation_mv=0.2, qrs_amplitude_mv=1.0),
    dict(label=T2, q_depth_mv=0.0, t_inverted=True),
    dict(label=T2, q_depth_mv=0.3, t_inverted=False),
    dict(label=N, st_elevation_mv=0.1),
    dict(label=N, t_inverted=True),
    dict(qrs_amplitude_mv=0.0),
    dict(noise_rms_mv=-1.0),
])
def test_synthetic_spec_rejects_inconsistent(kwargs):
    with pytest.raises(PipelineError):
        SyntheticBeatSpec(**kwargs)


def test_synthetic_seeding():
    spec = SyntheticBeatSpec(noise_rms_mv=0.05, random_seed=11)
    a, b = generate_synthetic_beat(spec), generate_synthetic_beat(spec)
    assert np.array_equal(a.samples, b.samples)
    other = generate_synthetic_beat(SyntheticBeatSpec(noise_rms_mv=0.05, random_seed=12))
    assert not np.array_equal(a.samples, other.samples)
    rng = np.random.default_rng(0)
    for lb in ClassLabel:
        for _ in range(20):
            assert random_beat_spec(lb, rng).label is lb
    c1 = synthetic_cohort(3, seed=4)
    c2 = synthetic_cohort(3, seed=4)
    assert [lb for _, lb in c1] == [N] * 3 + [T1] * 3 + [T2] * 3
    assert all(np.array_equal(x.samples, y.samples) for (x, _), (y, _) in zip(c1, c2))


def test_synthetic_record_ground_truth():
    rec, truth = generate_synthetic_record(SyntheticBeatSpec(), n_beats=10, heart_rate_bpm=60)
    assert len(truth) == 10
    assert np.all(np.diff(truth) == 1000)
    x = rec.leads[0][1]
    assert all(x[r] == x[r - 30:r + 31].max() for r in truth)


def test_analyze_record_ten_beats(template):
    spec = SyntheticBeatSpec(noise_rms_mv=0.02, random_seed=3)
    rec, truth = generate_synthetic_record(spec, n_beats=10, rr_jitter=0.05, record_id="s1")
    fvs = analyze_record(rec, "iii", template)
    assert len(fvs) == 10
    idx = [int(f.beat_id.split(":")[1]) for f in fvs]
    assert all(f.beat_id.startswith("s1:") for f in fvs)
    assert idx == sorted(idx)
    assert all(abs(i - t) <= 10 for i, t in zip(idx, truth))
    # normal beats vs normal template: coherence stays high
    assert min(f.pa for f in fvs) > 0.9 * 108706


def test_analyze_record_flat_warns(template, caplog):
    rec = EcgRecord("flat", 1000.0, (("iii", np.zeros(8000)),))
    with caplog.at_level(logging.WARNING):
        assert analyze_record(rec, "iii", template) == []
    assert "no beats" in caplog.text


def test_analyze_record_deterministic_and_worker_independent(template, tmp_path, monkeypatch):
    spec = SyntheticBeatSpec(T2, q_depth_mv=0.35, t_inverted=True, qrs_amplitude_mv=0.8,
                             noise_rms_mv=0.03, random_seed=5)
    rec, _ = generate_synthetic_record(spec, n_beats=6, rr_jitter=0.05, record_id="d")

    def table(workers, name):
        rows = [FeatureRow(f.beat_id, "d", "iii", f.pa, f.pb, "")
                for f in analyze_record(rec, "iii", template, workers=workers)]
        write_feature_table(rows, tmp_path / name)
        return (tmp_path / name).read_bytes()

    assert table(1, "a.csv") == table(1, "b.csv") == table(4, "c.csv")
    monkeypatch.setenv("XWT_ECG_THREADS", "3")
    assert n_workers() == 3
    monkeypatch.setenv("XWT_ECG_THREADS", "bogus")
    assert n_workers() == 1


def test_extract_template_and_roundtrip(tmp_path):
    rec, truth = generate_synthetic_record(SyntheticBeatSpec(), n_beats=6, heart_rate_bpm=72,
                                           record_id="tpl")
    t = extract_template(rec, "iii", beat_ordinal=1)
    assert t.heart_rate_bpm == pytest.approx(72, abs=1)
    assert t.beat.samples.argmax() == pytest.approx(333, abs=2)
    prov = save_template(t, tmp_path / "t.csv")
    assert "record_id = tpl" in prov.read_text()
    assert len((tmp_path / "t.csv").read_text().splitlines()) == 1000
    back = load_template(tmp_path / "t.csv")
    assert (back.record_id, back.lead, back.beat_ordinal) == ("tpl", "iii", 1)
    np.testing.assert_allclose(back.beat.samples, t.beat.samples, atol=1e-12)
    with pytest.raises(PipelineError):
        extract_template(rec, "iii", beat_ordinal=99)


def test_template_provenance_required():
    with pytest.raises(PipelineError):
        TemplateBeat(NormalizedBeat(np.zeros(1000)), "", "iii")
