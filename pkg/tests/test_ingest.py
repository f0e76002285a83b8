import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xwtecg.ingest import (EcgRecord, IngestError, parse_wfdb_header, read_csv_signal,
                           read_wfdb_record, select_lead, write_csv_signal, write_wfdb_record)


def _write_fixture(tmp_path, header, frames):
    (tmp_path / "rec.hea").write_text(header)
    np.asarray(frames, dtype="<i2").tofile(tmp_path / "rec.dat")
    return tmp_path / "rec.hea"


def test_wfdb_conversion_hand_fixture(tmp_path):
    hea = _write_fixture(tmp_path, "rec 1 1000 3\nrec.dat 16 2000(0)/mV 16 0 0 0 0 iii\n",
                         [0, 2000, -2000])
    rec = read_wfdb_record(hea)
    assert rec.record_id == "rec"
    assert rec.sampling_rate_hz == 1000
    np.testing.assert_array_equal(select_lead(rec, "iii"), [0.0, 1.0, -1.0])


def test_wfdb_baseline_and_interleaving(tmp_path):
    header = ("rec 2 500 2\n"
              "rec.dat 16 100(10)/mV 16 0 0 0 0 i\n"
              "rec.dat 16 200/mV 16 0 0 0 0 ii\n")
    hea = _write_fixture(tmp_path, header, [110, 400, -90, -200])
    rec = read_wfdb_record(hea)
    assert rec.lead_names == ["i", "ii"]
    np.testing.assert_array_equal(select_lead(rec, "i"), [1.0, -1.0])
    np.testing.assert_array_equal(select_lead(rec, "ii"), [2.0, -1.0])


def test_wfdb_missing_gain_defaults_with_warning(caplog):
    with caplog.at_level(logging.WARNING):
        hdr = parse_wfdb_header("rec 1 1000 2\nrec.dat 16\n")
    assert hdr.signals[0].gain_adu_per_mv == 200
    assert hdr.signals[0].baseline_adu == 0
    assert "gain" in caplog.text


def test_wfdb_format_212_rejected(tmp_path):
    hea = _write_fixture(tmp_path, "rec 1 1000 3\nrec.dat 212 200/mV 12 0 0 0 0 iii\n", [0, 0, 0])
    with pytest.raises(IngestError, match="format"):
        read_wfdb_record(hea)


@pytest.mark.parametrize("header,frames,msg", [
    ("rec 1 1000 4\nrec.dat 16 200/mV 16 0 0 0 0 iii\n", [0, 1, 2], "declares"),
    ("rec 1 1000 3\nrec.dat 16 0/mV 16 0 0 0 0 iii\n", [0, 1, 2], "zero gain"),
    ("rec 2 1000 3\nrec.dat 16 200/mV 16 0 0 0 0 iii\n", [0, 1, 2], "signal lines"),
])
def test_wfdb_errors(tmp_path, header, frames, msg):
    hea = _write_fixture(tmp_path, header, frames)
    with pytest.raises(IngestError, match=msg):
        read_wfdb_record(hea)


def test_wfdb_missing_files(tmp_path):
    with pytest.raises(IngestError):
        read_wfdb_record(tmp_path / "nothing.hea")
    (tmp_path / "rec.hea").write_text("rec 1 1000 3\nrec.dat 16 200/mV 16 0 0 0 0 iii\n")
    with pytest.raises(IngestError):
        read_wfdb_record(tmp_path / "rec.hea")


def test_wfdb_checksum_mismatch_only_warns(tmp_path, caplog):
    hea = _write_fixture(tmp_path, "rec 1 1000 3\nrec.dat 16 200/mV 16 0 0 999 0 iii\n", [1, 2, 3])
    with caplog.at_level(logging.WARNING):
        rec = read_wfdb_record(hea)
    assert rec.n_samples == 3
    assert "checksum" in caplog.text


def test_wfdb_diagnosis_comment(tmp_path):
    hea = _write_fixture(tmp_path, "rec 1 1000 2\nrec.dat 16 200/mV 16 0 0 0 0 iii\n"
                                   "# Reason for admission: Myocardial infarction\n", [0, 0])
    assert read_wfdb_record(hea).diagnosis_label == "Myocardial infarction"


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-32768, 32767), min_size=2, max_size=50),
       st.sampled_from([1.0, 200.0, 2000.0]), st.integers(-500, 500))
def test_wfdb_conversion_inverts_exactly(tmp_path_factory, adus, gain, baseline):
    d = tmp_path_factory.mktemp("w")
    hea = _write_fixture(d, f"rec 1 1000 {len(adus)}\nrec.dat 16 {gain:g}({baseline})/mV 16 0 0 0 0 iii\n",
                         adus)
    mv = select_lead(read_wfdb_record(hea), "iii")
    back = mv * gain + baseline
    np.testing.assert_array_equal(np.round(back).astype(int), adus)
    np.testing.assert_allclose(back, adus, atol=1e-6)


def test_wfdb_write_read_roundtrip_and_determinism(tmp_path):
    x = np.round(np.sin(np.linspace(0, 20, 500)) * 200) / 200
    rec = EcgRecord("r1", 1000.0, (("ii", x), ("iii", -x)), "IMI_Type1")
    hea = write_wfdb_record(rec, tmp_path)
    a, b = read_wfdb_record(hea), read_wfdb_record(hea)
    np.testing.assert_allclose(select_lead(a, "iii"), -x, atol=1e-12)
    assert a.diagnosis_label == "IMI_Type1"
    for (na, xa), (nb, xb) in zip(a.leads, b.leads):
        assert na == nb
        assert np.array_equal(xa, xb)


def test_csv_examples(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("0.0\n0.5\n-0.1\n")
    rec = read_csv_signal(p, 1000, "iii")
    np.testing.assert_array_equal(select_lead(rec, "iii"), [0.0, 0.5, -0.1])
    p.write_text("mv\r\n" + "".join(f"{i / 1000}\r\n" for i in range(1000)))
    assert read_csv_signal(p, 1000, "iii").n_samples == 1000


@pytest.mark.parametrize("text", ["", "\n\n", "mv\n", "0.1\nabc\n"])
def test_csv_errors(tmp_path, text):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(IngestError):
        read_csv_signal(p, 1000, "iii")


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-50, 50, allow_nan=False), min_size=2, max_size=200))
def test_csv_roundtrip(tmp_path_factory, values):
    p = tmp_path_factory.mktemp("c") / "x.csv"
    write_csv_signal(values, p)
    got = select_lead(read_csv_signal(p, 500, "ii"), "ii")
    np.testing.assert_allclose(got, values, atol=1e-9, rtol=0)


def test_select_lead():
    leads = tuple((n, np.full(4, i, dtype=float)) for i, n in enumerate(["i", "ii", "iii"]))
    rec = EcgRecord("r", 1000, leads)
    assert np.array_equal(select_lead(rec, "iii"), leads[2][1])
    assert np.array_equal(select_lead(rec, " III "), leads[2][1])
    twelve = EcgRecord("r", 1000, tuple((n, np.zeros(3)) for n in
                       ["i", "ii", "iii", "avr", "avl", "avf", "v1", "v2", "v3", "v4", "v5", "v6"]))
    with pytest.raises(IngestError, match="available: i, ii, iii"):
        select_lead(twelve, "v7")


def test_record_validation():
    with pytest.raises(ValueError):
        EcgRecord("r", 1000, (("i", np.zeros(3)), ("ii", np.zeros(4))))
    with pytest.raises(ValueError):
        EcgRecord("r", 0, (("i", np.zeros(3)),))
    with pytest.raises(ValueError):
        EcgRecord("r", 1000, (("I", np.zeros(3)), ("i", np.zeros(3))))
