"""End-to-end CLI tests: flag handling, exit codes, file contracts."""

import json

import numpy as np
import pytest

from cpfield.cli import main
from cpfield.container import read_container
from cpfield.datasets import sample_path

GEN_FLAGS = [
    "generate", "--nx", "6", "--ny", "5", "--t-out", "3", "--nvar", "2",
    "--n-samples", "12", "--ar", "0.8", "--sd", "1.0", "--corr-len", "1",
    "--seed", "7",
]


def _generate(tmp_path, name="calib", extra=()):
    out = tmp_path / name
    rc = main(GEN_FLAGS + list(extra) + ["--out", str(out)])
    assert rc == 0
    return out


# -------------------------------------------------------------------
# generate
# -------------------------------------------------------------------

def test_generate_writes_samples_and_manifest(tmp_path):
    out = _generate(tmp_path)
    assert (out / "manifest.json").exists()
    assert (out / "run_manifest.json").exists()
    cpts = sorted(p.name for p in out.glob("*.cpt"))
    assert len(cpts) == 12 * 4
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["n_samples"] == 12
    assert manifest["config"]["ar_coeff"] == 0.8
    t = read_container(sample_path(out, 0, "truth"))
    assert t.spec.shape == (3, 6, 5, 2)


def test_generate_rerun_bitwise_identical(tmp_path):
    out = _generate(tmp_path, "a")
    snapshot = {
        p.relative_to(out): p.read_bytes() for p in out.rglob("*") if p.is_file()
    }
    _generate(tmp_path, "a")  # identical flags, same directory
    after = {
        p.relative_to(out): p.read_bytes() for p in out.rglob("*") if p.is_file()
    }
    assert sorted(snapshot) == sorted(after)
    for rel, blob in snapshot.items():
        assert after[rel] == blob, rel


def test_generate_rejects_ar_out_of_range(tmp_path, capsys):
    rc = main(["generate", "--nx", "4", "--ny", "4", "--t-out", "2", "--nvar", "1",
               "--n-samples", "2", "--ar", "1.5", "--out", str(tmp_path / "d")])
    assert rc == 2
    assert "(-1, 1)" in capsys.readouterr().err


def test_generate_usage_error_on_missing_flags(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["generate", "--nx", "4"])
    assert exc.value.code == 2


# -------------------------------------------------------------------
# calibrate
# -------------------------------------------------------------------

def test_calibrate_res_sweep(tmp_path):
    calib = _generate(tmp_path)
    out = tmp_path / "q"
    rc = main(["calibrate", "--calib-dir", str(calib), "--strategy", "res",
               "--alpha", "0.2,0.5", "--out", str(out)])
    assert rc == 0
    assert (out / "q_alpha0.2.cpt").exists()
    assert (out / "q_alpha0.5.cpt").exists()
    meta = json.loads((out / "q_alpha0.2.json").read_text())
    assert meta["strategy"] == "RES"
    assert meta["n"] == 12
    from cpfield.calibrate import read_quantile_field
    q02 = read_quantile_field(out / "q_alpha0.2.cpt")
    q05 = read_quantile_field(out / "q_alpha0.5.cpt")
    assert (q02.q >= q05.q).all()


def test_calibrate_warns_when_n_too_small(tmp_path, capsys):
    calib = _generate(tmp_path, extra=())
    out = tmp_path / "q"
    rc = main(["calibrate", "--calib-dir", str(calib), "--strategy", "res",
               "--alpha", "0.05", "--out", str(out)])
    assert rc == 0
    err = capsys.readouterr().err
    assert "WARN: infinite quantiles (n=12 < required 19)" in err
    arr = np.fromfile(out / "q_alpha0.05.cpt", dtype="<f8", offset=40)
    assert np.isinf(arr).all()


def test_calibrate_rejects_unsorted_alphas(tmp_path, capsys):
    calib = _generate(tmp_path)
    rc = main(["calibrate", "--calib-dir", str(calib), "--strategy", "res",
               "--alpha", "0.5,0.2", "--out", str(tmp_path / "q")])
    assert rc == 2
    assert "strictly increasing" in capsys.readouterr().err


def test_calibrate_rejects_non_dataset_dir(tmp_path, capsys):
    rc = main(["calibrate", "--calib-dir", str(tmp_path), "--strategy", "res",
               "--alpha", "0.2", "--out", str(tmp_path / "q")])
    assert rc == 2


# -------------------------------------------------------------------
# predict
# -------------------------------------------------------------------

def _calibrated(tmp_path, strategy="res", alpha="0.2"):
    calib = _generate(tmp_path)
    qdir = tmp_path / f"q_{strategy}"
    assert main(["calibrate", "--calib-dir", str(calib), "--strategy", strategy,
                 "--alpha", alpha, "--out", str(qdir)]) == 0
    return calib, qdir / f"q_alpha{alpha}.cpt"


def test_predict_single_file_res(tmp_path):
    calib, qpath = _calibrated(tmp_path)
    pred_file = sample_path(calib, 0, "prediction")
    out = tmp_path / "iv" / "case0"
    rc = main(["predict", "--quantiles", str(qpath),
               "--prediction", str(pred_file), "--out", str(out)])
    assert rc == 0
    from cpfield.intervals import read_interval_field
    iv = read_interval_field(out)
    assert (iv.upper >= iv.lower).all()


def test_predict_dir_mode_writes_per_sample_intervals(tmp_path):
    calib, qpath = _calibrated(tmp_path)
    test_dir = _generate(tmp_path, "test", extra=["--seed", "8"])
    out = tmp_path / "ivs"
    rc = main(["predict", "--quantiles", str(qpath),
               "--prediction", str(test_dir), "--out", str(out)])
    assert rc == 0
    assert len(list(out.glob("sample_*.lower.cpt"))) == 12
    manifest = json.loads((out / "intervals_manifest.json").read_text())
    assert manifest["n_samples"] == 12
    assert manifest["strategy"] == "RES"


def test_predict_std_requires_sigma_in_file_mode(tmp_path, capsys):
    calib, qpath = _calibrated(tmp_path, strategy="std")
    pred_file = sample_path(calib, 0, "mean")
    rc = main(["predict", "--quantiles", str(qpath),
               "--prediction", str(pred_file), "--out", str(tmp_path / "x")])
    assert rc == 2
    assert "--sigma" in capsys.readouterr().err


def test_predict_std_with_sigma(tmp_path):
    calib, qpath = _calibrated(tmp_path, strategy="std")
    rc = main(["predict", "--quantiles", str(qpath),
               "--prediction", str(sample_path(calib, 0, "mean")),
               "--sigma", str(sample_path(calib, 0, "sigma")),
               "--out", str(tmp_path / "iv_std")])
    assert rc == 0


def test_predict_zero_quantiles_degenerate(tmp_path, one_cell_spec):
    # handcrafted all-zero RES quantile file -> lower == upper == prediction
    from cpfield.calibrate import QuantileField, write_quantile_field
    from cpfield.scores import ScoreStrategy
    from cpfield.container import write_container
    from cpfield.grid import FieldTensor

    qf = QuantileField(one_cell_spec, 0.5, 10, np.zeros(one_cell_spec.shape),
                       ScoreStrategy.res())
    qpath = tmp_path / "q.cpt"
    write_quantile_field(qf, qpath)
    pred = FieldTensor(one_cell_spec, np.full(one_cell_spec.shape, 3.25))
    ppath = tmp_path / "p.cpt"
    write_container(pred, ppath)
    out = tmp_path / "iv"
    assert main(["predict", "--quantiles", str(qpath), "--prediction", str(ppath),
                 "--out", str(out)]) == 0
    from cpfield.intervals import read_interval_field
    iv = read_interval_field(out)
    assert (iv.lower == 3.25).all()
    assert (iv.upper == 3.25).all()


# -------------------------------------------------------------------
# evaluate
# -------------------------------------------------------------------

def _full_pipeline(tmp_path, strategy="res"):
    calib, qpath = _calibrated(tmp_path, strategy=strategy)
    test_dir = _generate(tmp_path, "test", extra=["--seed", "8"])
    ivs = tmp_path / "ivs"
    assert main(["predict", "--quantiles", str(qpath),
                 "--prediction", str(test_dir), "--out", str(ivs)]) == 0
    report = tmp_path / "report.json"
    assert main(["evaluate", "--intervals-dir", str(ivs),
                 "--truth-dir", str(test_dir), "--out", str(report)]) == 0
    return report, ivs, test_dir


def test_evaluate_writes_report_csv_and_percell(tmp_path):
    report, _, _ = _full_pipeline(tmp_path)
    obj = json.loads(report.read_text())
    assert obj["alpha"] == 0.2
    assert obj["n_test"] == 12
    assert 0.0 <= obj["domain_coverage"] <= 1.0
    csv_text = (report.parent / "report.csv").read_text()
    assert csv_text.splitlines()[0] == "lead_hours,variable,coverage,mean_width,n_infinite"
    assert (report.parent / "report.per_cell.cpt").exists()
    assert (report.parent / "report.run_manifest.json").exists()


def test_evaluate_empty_intervals_dir(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    truth = _generate(tmp_path)
    rc = main(["evaluate", "--intervals-dir", str(empty),
               "--truth-dir", str(truth), "--out", str(tmp_path / "r.json")])
    assert rc == 2
    assert "no interval fields" in capsys.readouterr().err


def test_evaluate_spec_mismatch_exit_1(tmp_path, capsys):
    _, ivs, _ = _full_pipeline(tmp_path)
    other = tmp_path / "other"
    assert main(["generate", "--nx", "4", "--ny", "4", "--t-out", "2", "--nvar", "1",
                 "--n-samples", "12", "--out", str(other)]) == 0
    rc = main(["evaluate", "--intervals-dir", str(ivs),
               "--truth-dir", str(other), "--out", str(tmp_path / "r2.json")])
    assert rc == 1


def test_evaluate_vacuous_intervals_full_coverage(tmp_path):
    """Too few calibration samples -> infinite bounds -> coverage 1.0."""
    calib, qpath = _calibrated(tmp_path, alpha="0.05")  # n=12 < required 19
    test_dir = _generate(tmp_path, "test", extra=["--seed", "8"])
    ivs = tmp_path / "ivs"
    assert main(["predict", "--quantiles", str(qpath),
                 "--prediction", str(test_dir), "--out", str(ivs)]) == 0
    report = tmp_path / "vac.json"
    assert main(["evaluate", "--intervals-dir", str(ivs),
                 "--truth-dir", str(test_dir), "--out", str(report)]) == 0
    obj = json.loads(report.read_text())
    assert obj["domain_coverage"] == 1.0
    assert obj["n_infinite"] == 12 * 3 * 6 * 5 * 2  # every cell of every member
    assert obj["mean_width"] is None


def test_evaluate_workers_identical_output(tmp_path):
    report, ivs, test_dir = _full_pipeline(tmp_path)
    r4 = tmp_path / "r4.json"
    assert main(["evaluate", "--intervals-dir", str(ivs), "--truth-dir", str(test_dir),
                 "--workers", "4", "--out", str(r4)]) == 0
    a = json.loads(report.read_text())
    b = json.loads(r4.read_text())
    assert a == b


# -------------------------------------------------------------------
# report
# -------------------------------------------------------------------

def test_report_width_maps(tmp_path):
    _, ivs, _ = _full_pipeline(tmp_path)
    out = tmp_path / "figs"
    rc = main(["report", "--intervals", str(ivs / "sample_00000"),
               "--lead-times", "0,2", "--var", "var01", "--out", str(out)])
    assert rc == 0
    svg = (out / "width_map_var01_lead0.svg").read_text()
    assert svg.count("<rect") == 6 * 5
    assert (out / "width_map_var01_lead2.csv").exists()


def test_report_unknown_variable_lists_names(tmp_path, capsys):
    _, ivs, _ = _full_pipeline(tmp_path)
    rc = main(["report", "--intervals", str(ivs / "sample_00000"),
               "--lead-times", "0", "--var", "bogus", "--out", str(tmp_path / "f")])
    assert rc == 2
    err = capsys.readouterr().err
    assert "var00" in err and "var01" in err


def test_report_lead_out_of_range(tmp_path, capsys):
    _, ivs, _ = _full_pipeline(tmp_path)
    rc = main(["report", "--intervals", str(ivs / "sample_00000"),
               "--lead-times", "9", "--var", "var00", "--out", str(tmp_path / "f")])
    assert rc == 2


def test_report_coverage_curve(tmp_path):
    calib, _ = _calibrated(tmp_path, alpha="0.2")
    qdir = tmp_path / "qq"
    assert main(["calibrate", "--calib-dir", str(calib), "--strategy", "res",
                 "--alpha", "0.2,0.5", "--out", str(qdir)]) == 0
    test_dir = _generate(tmp_path, "test", extra=["--seed", "9"])
    reports = []
    for alpha in ("0.2", "0.5"):
        ivs = tmp_path / f"ivs{alpha}"
        assert main(["predict", "--quantiles", str(qdir / f"q_alpha{alpha}.cpt"),
                     "--prediction", str(test_dir), "--out", str(ivs)]) == 0
        rpt = tmp_path / f"report{alpha}.json"
        assert main(["evaluate", "--intervals-dir", str(ivs),
                     "--truth-dir", str(test_dir), "--out", str(rpt)]) == 0
        reports.append(str(rpt))
    out = tmp_path / "curve"
    rc = main(["report", "--coverage-curve", ",".join(reports), "--out", str(out)])
    assert rc == 0
    svg = (out / "coverage_curve.svg").read_text()
    assert 'class="diagonal"' in svg
    assert svg.count("<circle") == 2
    lines = (out / "coverage_curve.csv").read_text().splitlines()
    assert lines[0] == "nominal_coverage,empirical_coverage"
    assert len(lines) == 3


def test_report_requires_exactly_one_mode(tmp_path, capsys):
    rc = main(["report", "--out", str(tmp_path / "f")])
    assert rc == 2
    assert "exactly one" in capsys.readouterr().err


# -------------------------------------------------------------------
# manifests
# -------------------------------------------------------------------

def test_run_manifest_schema(tmp_path):
    out = _generate(tmp_path)
    manifest = json.loads((out / "run_manifest.json").read_text())
    assert manifest["command"] == "generate"
    assert len(manifest["config_hash"]) == 64
    assert manifest["timestamp"] is None
    assert "tool_version" in manifest


def test_run_manifest_timestamp_from_source_date_epoch(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    out = _generate(tmp_path)
    manifest = json.loads((out / "run_manifest.json").read_text())
    assert manifest["timestamp"] == 1700000000
