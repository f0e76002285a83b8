"""Command-line interface.

Exit codes: 0 success, 1 internal error, 2 usage or data error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import dataclasses
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Optional

import numpy as np

from . import classify, features, ingest, metrics, pipeline, xwavelet
from .classify import ClassLabel, Coarse
from .features import AnalysisWindow, FeatureRow
from .preprocess import BEAT_R_INDEX, NormalizedBeat

log = logging.getLogger("xwtecg")


class UsageError(Exception):
    pass


DATA_ERRORS = (UsageError, ValueError, OSError)


@dataclasses.dataclass
class RunConfig:
    lead: str = "iii"
    scales: tuple = (1, 512)
    scale_band: tuple = (75, 300)
    qt_offsets: tuple = (80, 400)
    k: int = 3
    seed: int = 0
    fs: float = 1000.0  # sampling rate assumed for CSV records
    template: str = ""
    model: str = ""

    def window(self) -> AnalysisWindow:
        return AnalysisWindow(BEAT_R_INDEX - self.qt_offsets[0], BEAT_R_INDEX + self.qt_offsets[1],
                              self.scale_band[0], self.scale_band[1])

    def grid(self) -> xwavelet.ScaleGrid:
        return xwavelet.ScaleGrid.linear(*self.scales)

    def dump(self) -> str:
        out = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            out.append(f"{f.name} = {v}")
        return "\n".join(out) + "\n"


def _coerce(name: str, text: str):
    field_types = {f.name: f.default for f in dataclasses.fields(RunConfig)}
    if name not in field_types:
        raise UsageError(f"unknown config key {name!r}")
    default = field_types[name]
    try:
        if isinstance(default, tuple):
            parts = tuple(int(p) for p in text.split(","))
            if len(parts) != 2:
                raise ValueError
            return parts
        return type(default)(text)
    except ValueError:
        raise UsageError(f"bad value for {name}: {text!r}") from None


def load_config(path) -> dict:
    values = {}
    for n, ln in enumerate(Path(path).read_text().splitlines(), 1):
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        key, sep, value = ln.partition("=")
        if not sep:
            raise UsageError(f"{path}:{n}: expected 'key = value'")
        values[key.strip()] = _coerce(key.strip(), value.strip())
    return values


def effective_config(args) -> RunConfig:
    values = load_config(args.config) if args.config else {}
    for f in dataclasses.fields(RunConfig):
        flag = getattr(args, f"cfg_{f.name}", None)
        if flag is not None:
            values[f.name] = _coerce(f.name, str(flag))
    cfg = RunConfig(**values)
    cfg.window()
    cfg.grid()
    return cfg


@contextlib.contextmanager
def atomic_output(path):
    """Yields a temporary path that replaces ``path`` only on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    os.close(fd)
    umask = os.umask(0)
    os.umask(umask)
    os.chmod(tmp, 0o666 & ~umask)
    try:
        yield Path(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def read_record(path, cfg: RunConfig) -> ingest.EcgRecord:
    path = Path(path)
    if path.suffix.lower() == ".hea":
        return ingest.read_wfdb_record(path)
    if path.suffix.lower() == ".csv":
        return ingest.read_csv_signal(path, cfg.fs, cfg.lead)
    if path.with_suffix(".hea").exists():
        return ingest.read_wfdb_record(path.with_suffix(".hea"))
    raise UsageError(f"cannot read record {path}: expected a .hea or .csv file")


def _template(cfg: RunConfig) -> pipeline.TemplateBeat:
    if not cfg.template:
        raise UsageError("no template given (use --template)")
    t = pipeline.load_template(cfg.template)
    return dataclasses.replace(t, grid=cfg.grid())


# -- commands -------------------------------------------------------------

def cmd_synth(args, cfg):
    rng = np.random.default_rng(cfg.seed)
    label = ClassLabel(args.label)
    spec = dataclasses.replace(pipeline.random_beat_spec(label, rng, args.noise),
                               random_seed=cfg.seed)
    rec, _ = pipeline.generate_synthetic_record(
        spec, args.beats, cfg.fs, args.heart_rate, args.rr_jitter,
        args.baseline_wander, record_id=args.record_id, lead=cfg.lead, seed=cfg.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory(dir=out) as tmp:
        hea = ingest.write_wfdb_record(rec, tmp)
        for f in (hea, hea.with_suffix(".dat")):
            os.replace(f, out / f.name)
    print(out / f"{args.record_id}.hea")
    return 0


def cmd_template(args, cfg):
    if args.synthetic:
        t = pipeline.synthetic_template(cfg.seed)
    else:
        if not args.record:
            raise UsageError("give a record or --synthetic")
        rec = read_record(args.record, cfg)
        t = pipeline.extract_template(rec, cfg.lead, args.beat_ordinal, cfg.grid())
    out = Path(args.out)
    with atomic_output(out) as tmp:
        ingest.write_csv_signal(t.beat.samples, tmp)
    with atomic_output(out.with_name(out.name + ".prov")) as tmp:
        tmp.write_text(t.provenance)
    return 0


def _record_label(rec: ingest.EcgRecord) -> str:
    try:
        return ClassLabel(rec.diagnosis_label).value
    except ValueError:
        return ""


def cmd_extract(args, cfg):
    if not args.records:
        raise UsageError("no records given")
    tpl = _template(cfg)
    window = cfg.window()
    rows = []
    for path in args.records:
        rec = read_record(path, cfg)
        label = _record_label(rec)
        for fv in pipeline.analyze_record(rec, cfg.lead, tpl, window):
            rows.append(FeatureRow(fv.beat_id, rec.record_id, cfg.lead, fv.pa, fv.pb, label))
    with atomic_output(args.out) as tmp:
        features.write_feature_table(rows, tmp)
    log.info("%d beats from %d record(s)", len(rows), len(args.records))
    return 0


def cmd_train(args, cfg):
    rows, _ = features.read_feature_table(args.features)
    labelled = [r for r in rows if r.label]
    if not labelled:
        raise UsageError(f"{args.features}: no labelled rows")
    labels = [ClassLabel(r.label) for r in labelled]
    vecs = [r.vector for r in labelled]
    th = classify.fit_thresholds(vecs, labels)
    imi = [(v, lb) for v, lb in zip(vecs, labels) if lb is not ClassLabel.NORMAL]
    knn = classify.knn_fit([v for v, _ in imi], [lb for _, lb in imi], cfg.k)
    with atomic_output(args.out) as tmp:
        classify.save_models(th, knn, tmp)
    abnormal = [lb.coarse is Coarse.ABNORMAL for lb in labels]
    log.info("th_pa = %r (Youden %.3f), th_pb = %r (Youden %.3f)",
             th.th_pa, classify.youden_index(th.th_pa, [v.pa for v in vecs], abnormal),
             th.th_pb, classify.youden_index(th.th_pb, [v.pb for v in vecs], abnormal))
    return 0


def cmd_classify(args, cfg):
    if not cfg.model:
        raise UsageError("no model given (use --model)")
    th, knn = classify.load_models(cfg.model)
    rows, extra = features.read_feature_table(args.features)
    pred = [classify.classify_hierarchical(r.vector, th, knn).value for r in rows]
    extra["predicted"] = pred
    with atomic_output(args.out) as tmp:
        features.write_feature_table(rows, tmp, extra)
    return 0


def evaluate_rows(truth: list, predicted: list) -> dict:
    """Coarse report (abnormal is positive) plus per-type accuracy among abnormal beats."""
    t = [ClassLabel(v) for v in truth]
    p = [ClassLabel(v) for v in predicted]
    reports = {"coarse": metrics.MetricsReport.from_counts(
        metrics.confusion([x.coarse for x in p], [x.coarse for x in t], Coarse.ABNORMAL))}
    for cls in classify.IMI_TYPES:
        c = metrics.per_class_accuracy(p, t, cls)
        if c.total:
            reports[cls.value] = metrics.MetricsReport.from_counts(c)
    return reports


def cmd_evaluate(args, cfg):
    rows, extra = features.read_feature_table(args.labelled)
    if "predicted" not in extra:
        raise UsageError(f"{args.labelled}: no 'predicted' column")
    pairs = [(r.label, p) for r, p in zip(rows, extra["predicted"]) if r.label and p]
    if not pairs:
        raise UsageError(f"{args.labelled}: no rows with both truth and prediction")
    reports = evaluate_rows([a for a, _ in pairs], [b for _, b in pairs])
    print(metrics.format_table(reports))
    if args.out:
        with atomic_output(args.out) as tmp, open(tmp, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("set",) + metrics.REPORT_COLUMNS)
            for name, rep in reports.items():
                w.writerow([name] + rep.row())
    return 0


def cmd_spectrogram(args, cfg):
    tpl = _template(cfg)
    rec = ingest.read_csv_signal(args.beat, 1000.0, "beat")
    beat = NormalizedBeat(rec.leads[0][1])
    wcs, coh, fv = pipeline.analyze_beat(beat, tpl, cfg.window())
    prefix = Path(args.out)
    for name, m in (("wcs", wcs), ("wcoh", coh)):
        with atomic_output(prefix.with_name(f"{prefix.name}_{name}.csv")) as tmp:
            xwavelet.write_matrix_csv(m.values, m.grid, tmp)
        with atomic_output(prefix.with_name(f"{prefix.name}_{name}.bin")) as tmp:
            xwavelet.write_matrix_bin(m.values, tmp)
    print(f"pa = {fv.pa!r}\npb = {fv.pb!r}")
    return 0


# -- argument parsing -----------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat 'key = value' config file")
    common.add_argument("--dump-config", action="store_true",
                        help="print the effective config and exit")
    common.add_argument("--lead", dest="cfg_lead", metavar="LEAD")
    common.add_argument("--scales", dest="cfg_scales", metavar="FIRST,LAST", help="first,last scale (default 1,512)")
    common.add_argument("--scale-band", dest="cfg_scale_band", metavar="S1,S2", help="s1,s2 (default 75,300)")
    common.add_argument("--qt-offsets", dest="cfg_qt_offsets", metavar="LEFT,RIGHT", help="left,right (default 80,400)")
    common.add_argument("--k", dest="cfg_k", type=int, metavar="K")
    common.add_argument("--seed", dest="cfg_seed", type=int, metavar="SEED")
    common.add_argument("--fs", dest="cfg_fs", type=float, metavar="HZ", help="sampling rate of CSV records")
    common.add_argument("--template", dest="cfg_template", metavar="TEMPLATE")
    common.add_argument("--model", dest="cfg_model", metavar="MODEL")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="xwtecg", description="Cross-wavelet ECG beat classification")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="write a synthetic WFDB record")
    s.add_argument("--label", default="Normal", choices=[c.value for c in ClassLabel])
    s.add_argument("--beats", type=int, default=10)
    s.add_argument("--heart-rate", type=float, default=72.0)
    s.add_argument("--rr-jitter", type=float, default=0.05)
    s.add_argument("--noise", type=float, default=0.02)
    s.add_argument("--baseline-wander", type=float, default=0.0)
    s.add_argument("--record-id", default="synth")
    s.add_argument("--out-dir")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("template", parents=[common], help="extract a normalized template beat")
    s.add_argument("record", nargs="?")
    s.add_argument("--beat-ordinal", type=int, default=0)
    s.add_argument("--synthetic", action="store_true", help="write the built-in synthetic template")
    s.add_argument("--out")
    s.set_defaults(func=cmd_template)

    s = sub.add_parser("extract", parents=[common], help="feature table for records")
    s.add_argument("records", nargs="*")
    s.add_argument("--out")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("train", parents=[common], help="fit thresholds and k-NN")
    s.add_argument("features")
    s.add_argument("--out")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("classify", parents=[common], help="label a feature table")
    s.add_argument("features")
    s.add_argument("--out")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("evaluate", parents=[common], help="Acc/Se/Sp of a labelled table")
    s.add_argument("labelled")
    s.add_argument("--out")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("spectrogram", parents=[common], help="export WCS/WCOH matrices")
    s.add_argument("beat", help="normalized beat CSV (1000 values)")
    s.add_argument("--out", help="output prefix")
    s.set_defaults(func=cmd_spectrogram)
    return p


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = effective_config(args)
        if args.dump_config:
            sys.stdout.write(cfg.dump())
            return 0
        for name in ("out", "out_dir"):
            if getattr(args, name, "") is None and not (name == "out" and args.command == "evaluate"):
                raise UsageError(f"--{name.replace('_', '-')} is required")
        return args.func(args, cfg)
    except DATA_ERRORS as exc:
        print(f"xwtecg {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        log.exception("internal error")
        return 1


if __name__ == "__main__":
    sys.exit(main())
