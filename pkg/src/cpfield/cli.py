"""Command-line pipeline: generate -> calibrate -> predict -> evaluate -> report.

Exit codes are a stable contract: 0 success, 1 runtime/IO failure, 2
usage/validation error. Every run writes one run manifest; identical flags
and input files produce byte-identical outputs (manifests record no
wall-clock time unless SOURCE_DATE_EPOCH is set, per the reproducible-builds
convention). An output directory is guarded against concurrent runs by a
lock file (.cpfield.lock).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import warnings
from contextlib import contextmanager
from pathlib import Path

from filelock import FileLock, Timeout

from . import __version__
from .calibrate import (
    InfiniteQuantileWarning,
    calibrate_quantiles,
    read_quantile_field,
    write_quantile_field,
)
from .container import ContainerError, read_container, write_array
from .datasets import (
    MANIFEST_NAME,
    dataset_sample_count,
    load_calibration_set,
    load_truths,
    sample_path,
    write_dataset,
)
from .evaluate import (
    CSV_HEADER,
    empirical_coverage,
    report_from_json,
    report_to_csv_rows,
    report_to_json,
)
from .grid import GridSpec
from .intervals import (
    intervals_res,
    intervals_std,
    interval_width,
    read_interval_field,
    write_interval_field,
)
from .scores import score_res, score_std, DEFAULT_SIGMA_FLOOR
from .svgreport import render_coverage_curve, render_width_map
from .synth import SynthConfig

LOCK_NAME = ".cpfield.lock"
INTERVALS_MANIFEST = "intervals_manifest.json"


class UsageError(Exception):
    """Bad flag values or invalid input selection; maps to exit code 2."""


@contextmanager
def _locked(directory: Path):
    directory.mkdir(parents=True, exist_ok=True)
    lock = FileLock(directory / LOCK_NAME)
    try:
        with lock.acquire(timeout=600):
            yield
    except Timeout:
        raise RuntimeError(f"another run holds the lock on {directory}")


def _config_hash(command: str, flags: dict) -> str:
    canon = json.dumps({"command": command, "flags": flags}, sort_keys=True)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _write_run_manifest(path: Path, command: str, flags: dict,
                        inputs: list[str], outputs: list[str]) -> None:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    manifest = {
        "command": command,
        "tool_version": __version__,
        "config_hash": _config_hash(command, flags),
        "inputs": sorted(inputs),
        "outputs": sorted(outputs),
        "timestamp": int(epoch) if epoch else None,
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _flags_dict(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def _parse_alpha_list(text: str) -> list[float]:
    try:
        alphas = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"could not parse alpha list {text!r}")
    if not alphas:
        raise UsageError("alpha list is empty")
    for a in alphas:
        if not 0.0 < a < 1.0:
            raise UsageError(f"alpha {a} outside (0, 1)")
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise UsageError("alpha list must be strictly increasing")
    return alphas


def _parse_int_list(text: str, what: str) -> list[int]:
    try:
        values = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"could not parse {what} list {text!r}")
    if not values:
        raise UsageError(f"{what} list is empty")
    return values


# ----------------------------------------------------------------------
# generate
# ----------------------------------------------------------------------

def cmd_generate(args) -> int:
    try:
        spec = GridSpec(
            t_out=args.t_out,
            nx=args.nx,
            ny=args.ny,
            nvar=args.nvar,
            variable_names=tuple(f"var{i:02d}" for i in range(args.nvar)),
            lead_hours=tuple(float(i + 1) for i in range(args.t_out)),
        )
        cfg = SynthConfig(
            spec=spec,
            ar_coeff=args.ar,
            noise_sd=args.sd,
            spatial_corr_len=args.corr_len,
            miscalibration=args.miscal,
            heteroscedastic=args.hetero,
            forcing=args.forcing,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    out = Path(args.out)
    with _locked(out):
        write_dataset(cfg, args.n_samples, out)
        _write_run_manifest(
            out / "run_manifest.json", "generate", _flags_dict(args),
            inputs=[], outputs=[str(args.out), MANIFEST_NAME],
        )
    return 0


# ----------------------------------------------------------------------
# calibrate
# ----------------------------------------------------------------------

def _quantile_filename(alpha: float) -> str:
    return f"q_alpha{alpha:g}.cpt"


def cmd_calibrate(args) -> int:
    alphas = _parse_alpha_list(args.alpha)
    calib_dir = Path(args.calib_dir)
    if not (calib_dir / MANIFEST_NAME).exists():
        raise UsageError(f"{calib_dir} is not a dataset directory (no {MANIFEST_NAME})")
    calib = load_calibration_set(calib_dir, probabilistic=(args.strategy == "std"))
    if args.strategy == "res":
        scores = score_res(calib)
    else:
        scores = score_std(calib, sigma_floor=args.sigma_floor)

    out = Path(args.out)
    written = []
    with _locked(out):
        for alpha in alphas:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", InfiniteQuantileWarning)
                qf = calibrate_quantiles(scores, alpha, workers=args.workers)
            for w in caught:
                if issubclass(w.category, InfiniteQuantileWarning):
                    print(f"WARN: {w.message}", file=sys.stderr)
            name = _quantile_filename(alpha)
            write_quantile_field(qf, out / name)
            written.append(name)
        _write_run_manifest(
            out / "run_manifest.json", "calibrate", _flags_dict(args),
            inputs=[str(args.calib_dir)], outputs=written,
        )
    return 0


# ----------------------------------------------------------------------
# predict
# ----------------------------------------------------------------------

def _resolve_quantile_path(path_str: str) -> Path:
    p = Path(path_str)
    if p.suffix != ".cpt":
        with_ext = p.with_name(p.name + ".cpt")
        if with_ext.exists():
            return with_ext
    return p


def _build_intervals(qf, prediction, sigma):
    if qf.strategy.tag == "RES":
        return intervals_res(prediction, qf)
    return intervals_std(prediction, sigma, qf)


def cmd_predict(args) -> int:
    qf = read_quantile_field(_resolve_quantile_path(args.quantiles))
    pred_path = Path(args.prediction)
    out = Path(args.out)

    if pred_path.is_dir():
        n = dataset_sample_count(pred_path)
        role = "prediction" if qf.strategy.tag == "RES" else "mean"
        if qf.strategy.tag == "STD" and not sample_path(pred_path, 0, "sigma").exists():
            raise UsageError("STD quantiles need sigma tensors; dataset has none")
        written = []
        with _locked(out):
            for i in range(n):
                prediction = read_container(sample_path(pred_path, i, role))
                sigma = (
                    read_container(sample_path(pred_path, i, "sigma"))
                    if qf.strategy.tag == "STD"
                    else None
                )
                stem = out / f"sample_{i:05d}"
                write_interval_field(_build_intervals(qf, prediction, sigma), stem)
                written.append(stem.name)
            (out / INTERVALS_MANIFEST).write_text(
                json.dumps(
                    {"n_samples": n, "alpha": qf.alpha, "strategy": qf.strategy.tag},
                    indent=2, sort_keys=True,
                ) + "\n",
                encoding="utf-8",
            )
            _write_run_manifest(
                out / "run_manifest.json", "predict", _flags_dict(args),
                inputs=[args.quantiles, args.prediction], outputs=written,
            )
        return 0

    if qf.strategy.tag == "STD" and args.sigma is None:
        raise UsageError("STD quantiles require --sigma")
    prediction = read_container(pred_path)
    sigma = read_container(Path(args.sigma)) if qf.strategy.tag == "STD" else None
    with _locked(out.parent):
        write_interval_field(_build_intervals(qf, prediction, sigma), out)
        _write_run_manifest(
            out.with_name(out.name + ".run_manifest.json"), "predict", _flags_dict(args),
            inputs=[args.quantiles, args.prediction] + ([args.sigma] if args.sigma else []),
            outputs=[out.name + ".lower.cpt", out.name + ".upper.cpt", out.name + ".json"],
        )
    return 0


# ----------------------------------------------------------------------
# evaluate
# ----------------------------------------------------------------------

def _interval_stems(directory: Path) -> list[Path]:
    stems = sorted(
        p.with_name(p.name[: -len(".lower.cpt")])
        for p in directory.glob("sample_*.lower.cpt")
    )
    return stems


def cmd_evaluate(args) -> int:
    iv_dir = Path(args.intervals_dir)
    truth_dir = Path(args.truth_dir)
    stems = _interval_stems(iv_dir)
    if not stems:
        raise UsageError(f"no interval fields found in {iv_dir}")
    ivs = [read_interval_field(stem) for stem in stems]
    truths = load_truths(truth_dir, n=len(ivs))
    report = empirical_coverage(ivs, truths, workers=args.workers)

    out = Path(args.out)
    stem = out.with_suffix("") if out.suffix == ".json" else out
    with _locked(out.parent):
        out.write_text(report_to_json(report), encoding="utf-8")
        csv_path = stem.with_name(stem.name + ".csv")
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(CSV_HEADER))
            writer.writeheader()
            writer.writerows(report_to_csv_rows(report))
        percell_path = stem.with_name(stem.name + ".per_cell.cpt")
        write_array(report.per_cell_coverage, percell_path, meta=report.spec.to_sidecar())
        _write_run_manifest(
            stem.with_name(stem.name + ".run_manifest.json"), "evaluate",
            _flags_dict(args),
            inputs=[args.intervals_dir, args.truth_dir],
            outputs=[out.name, csv_path.name, percell_path.name],
        )
    return 0


# ----------------------------------------------------------------------
# report
# ----------------------------------------------------------------------

def _report_width_maps(args, out: Path) -> list[str]:
    iv = read_interval_field(Path(args.intervals))
    spec = iv.spec
    if args.var not in spec.variable_names:
        raise UsageError(
            f"unknown variable {args.var!r}; available: {', '.join(spec.variable_names)}"
        )
    v = spec.variable_names.index(args.var)
    leads = _parse_int_list(args.lead_times, "lead time")
    for t in leads:
        if not 0 <= t < spec.t_out:
            raise UsageError(f"lead index {t} outside [0, {spec.t_out})")
    width = interval_width(iv)
    written = []
    for t in leads:
        grid = width[t, :, :, v]
        title = (
            f"interval width alpha={iv.alpha:g} var={args.var} "
            f"lead={spec.lead_hours[t]:g}h"
        )
        svg_name = f"width_map_{args.var}_lead{t}.svg"
        (out / svg_name).write_text(render_width_map(grid, title), encoding="utf-8")
        csv_name = f"width_map_{args.var}_lead{t}.csv"
        with open(out / csv_name, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "y", "width"])
            for ix in range(spec.nx):
                for iy in range(spec.ny):
                    writer.writerow([ix, iy, repr(float(grid[ix, iy]))])
        written += [svg_name, csv_name]
    return written


def _report_coverage_curve(args, out: Path) -> list[str]:
    paths = [Path(tok) for tok in args.coverage_curve.split(",") if tok.strip()]
    if not paths:
        raise UsageError("no coverage report files given")
    points = []
    for p in paths:
        obj = report_from_json(p.read_text(encoding="utf-8"))
        points.append((1.0 - float(obj["alpha"]), float(obj["domain_coverage"])))
    if len({round(n, 12) for n, _ in points}) != len(points):
        raise UsageError("coverage reports contain duplicate alpha levels")
    points.sort(key=lambda pt: pt[0])
    svg = render_coverage_curve(points)
    (out / "coverage_curve.svg").write_text(svg, encoding="utf-8")
    with open(out / "coverage_curve.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["nominal_coverage", "empirical_coverage"])
        for n, c in points:
            writer.writerow([repr(n), repr(c)])
    return ["coverage_curve.svg", "coverage_curve.csv"]


def cmd_report(args) -> int:
    modes = [args.intervals is not None, args.coverage_curve is not None]
    if sum(modes) != 1:
        raise UsageError("choose exactly one of --intervals or --coverage-curve")
    out = Path(args.out)
    inputs = [args.intervals or args.coverage_curve]
    with _locked(out):
        if args.intervals is not None:
            if args.var is None or args.lead_times is None:
                raise UsageError("--intervals mode needs --lead-times and --var")
            written = _report_width_maps(args, out)
        else:
            written = _report_coverage_curve(args, out)
        _write_run_manifest(
            out / "run_manifest.json", "report", _flags_dict(args),
            inputs=inputs, outputs=written,
        )
    return 0


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------

def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpfield",
        description="Per-cell conformal prediction intervals for forecast tensors.",
    )
    parser.add_argument("--version", action="version", version=f"cpfield {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic forecast dataset")
    g.add_argument("--nx", type=_positive_int, required=True)
    g.add_argument("--ny", type=_positive_int, required=True)
    g.add_argument("--t-out", type=_positive_int, required=True)
    g.add_argument("--nvar", type=_positive_int, required=True)
    g.add_argument("--n-samples", type=_positive_int, required=True)
    g.add_argument("--ar", type=float, default=0.0, help="AR(1) coefficient in (-1, 1)")
    g.add_argument("--sd", type=float, default=1.0, help="per-step innovation sd")
    g.add_argument("--corr-len", type=float, default=0.0, help="spatial correlation radius in cells")
    g.add_argument("--miscal", type=float, default=1.0, help="reported-sigma miscalibration factor")
    g.add_argument("--hetero", action="store_true", help="smoothly varying sigma field (4x range)")
    g.add_argument("--forcing", type=float, default=0.0, help="constant known forcing per step")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("calibrate", help="per-cell conformal quantiles from a dataset")
    c.add_argument("--calib-dir", required=True)
    c.add_argument("--strategy", choices=("res", "std"), required=True)
    c.add_argument("--alpha", required=True, help="comma-separated, strictly increasing")
    c.add_argument("--sigma-floor", type=float, default=DEFAULT_SIGMA_FLOOR)
    c.add_argument("--workers", type=_positive_int, default=1)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("predict", help="build prediction intervals")
    p.add_argument("--quantiles", required=True, help="quantile field (.cpt or stem)")
    p.add_argument("--prediction", required=True, help="forecast .cpt file or dataset directory")
    p.add_argument("--sigma", default=None, help="sigma .cpt (STD quantiles, file mode)")
    p.add_argument("--out", required=True, help="interval stem (file mode) or directory")
    p.set_defaults(func=cmd_predict)

    e = sub.add_parser("evaluate", help="coverage/width report for intervals vs truths")
    e.add_argument("--intervals-dir", required=True)
    e.add_argument("--truth-dir", required=True)
    e.add_argument("--workers", type=_positive_int, default=1)
    e.add_argument("--out", required=True, help="report JSON path")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("report", help="SVG/CSV figures from intervals or reports")
    r.add_argument("--intervals", default=None, help="interval field stem")
    r.add_argument("--lead-times", default=None, help="comma-separated lead indices")
    r.add_argument("--var", default=None, help="variable name for width maps")
    r.add_argument("--coverage-curve", default=None, help="comma-separated report JSONs")
    r.add_argument("--out", required=True, help="output directory")
    r.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ContainerError, OSError, ValueError, RuntimeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
