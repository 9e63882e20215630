#!/usr/bin/env python3
"""End-to-end demo: drive the cpfield CLI through a full synthetic study.

Generates calibration and test datasets, calibrates RES quantiles over an
alpha sweep, builds per-sample intervals, evaluates coverage, and renders
width maps plus the coverage curve. Everything lands under --workdir.
"""

import argparse
import json
import sys
from pathlib import Path

from cpfield.cli import main as cpfield


def run(argv) -> None:
    print("+ cpfield " + " ".join(argv))
    rc = cpfield(argv)
    if rc != 0:
        sys.exit(f"cpfield exited with {rc}")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workdir", default="out/synthetic_demo")
    ap.add_argument("--nx", type=int, default=24)
    ap.add_argument("--ny", type=int, default=24)
    ap.add_argument("--t-out", type=int, default=8)
    ap.add_argument("--nvar", type=int, default=2)
    ap.add_argument("--n-calib", type=int, default=200)
    ap.add_argument("--n-test", type=int, default=300)
    ap.add_argument("--ar", type=float, default=0.8)
    ap.add_argument("--corr-len", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    work = Path(args.workdir)
    dims = ["--nx", str(args.nx), "--ny", str(args.ny),
            "--t-out", str(args.t_out), "--nvar", str(args.nvar),
            "--ar", str(args.ar), "--corr-len", str(args.corr_len)]

    calib_dir = work / "calib"
    test_dir = work / "test"
    run(["generate", *dims, "--n-samples", str(args.n_calib),
         "--seed", str(args.seed), "--out", str(calib_dir)])
    run(["generate", *dims, "--n-samples", str(args.n_test),
         "--seed", str(args.seed + 1), "--out", str(test_dir)])

    alphas = [0.05, 0.1, 0.2, 0.5]
    qdir = work / "quantiles"
    run(["calibrate", "--calib-dir", str(calib_dir), "--strategy", "res",
         "--alpha", ",".join(str(a) for a in alphas), "--out", str(qdir)])

    reports = []
    for alpha in alphas:
        ivdir = work / f"intervals_a{alpha:g}"
        run(["predict", "--quantiles", str(qdir / f"q_alpha{alpha:g}.cpt"),
             "--prediction", str(test_dir), "--out", str(ivdir)])
        report = work / f"report_a{alpha:g}.json"
        run(["evaluate", "--intervals-dir", str(ivdir),
             "--truth-dir", str(test_dir), "--out", str(report)])
        reports.append(report)

    run(["report", "--coverage-curve", ",".join(str(r) for r in reports),
         "--out", str(work / "figures")])
    run(["report", "--intervals", str(work / "intervals_a0.1" / "sample_00000"),
         "--lead-times", "0," + str(args.t_out - 1), "--var", "var00",
         "--out", str(work / "figures")])

    print("\nempirical coverage by nominal level:")
    for report in reports:
        obj = json.loads(report.read_text())
        print(f"  1-alpha={1 - obj['alpha']:.2f}  coverage={obj['domain_coverage']:.4f}"
              f"  mean width={obj['mean_width']:.3f}")
    print(f"\nfigures and reports under {work}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
