"""Empirical coverage and interval-width diagnostics.

Coverage counts a truth as covered when lower <= truth <= upper (boundary
hits included). Infinite-width cells do cover, but they are tallied in a
separate ``n_infinite`` diagnostic and excluded from width means so vacuous
sets cannot silently distort the width numbers.

Reductions accumulate integer counts plus per-field pairwise sums combined in
member-index order, so multi-threaded evaluation is bit-identical to serial.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .grid import FieldTensor, GridSpec
from .intervals import IntervalField
from .normal import central_z

__all__ = [
    "CoverageReport",
    "WidthSummary",
    "empirical_coverage",
    "coverage_curve",
    "mean_width",
    "uncalibrated_gaussian_intervals",
    "report_to_json",
    "report_from_json",
    "report_to_csv_rows",
    "CSV_HEADER",
]

CSV_HEADER = ("lead_hours", "variable", "coverage", "mean_width", "n_infinite")


@dataclass(frozen=True)
class CoverageReport:
    """Coverage/width aggregates of one interval set against test truths.

    ``width_sum_tv`` / ``finite_count_tv`` keep the (lead, variable)-resolved
    finite-width partials the tabular export is built from.
    """

    spec: GridSpec
    alpha: float
    per_cell_coverage: np.ndarray
    domain_coverage: float
    per_leadtime_coverage: tuple[float, ...]
    per_variable_coverage: tuple[float, ...]
    mean_width: float | None
    per_leadtime_mean_width: tuple[float | None, ...]
    n_test: int
    n_infinite: int
    width_sum_tv: np.ndarray = field(repr=False)
    finite_count_tv: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.per_cell_coverage, dtype=np.float64)
        if arr.shape != self.spec.shape:
            raise ValueError("per_cell_coverage shape must match the GridSpec")
        if (arr < 0).any() or (arr > 1).any():
            raise ValueError("coverage fractions must lie in [0, 1]")
        view = arr.view()
        view.setflags(write=False)
        object.__setattr__(self, "per_cell_coverage", view)


class WidthSummary(NamedTuple):
    mean: float | None
    per_leadtime: tuple[float | None, ...]
    n_infinite: int


def _check_members(
    ivs: Sequence[IntervalField], truths: Sequence[FieldTensor]
) -> tuple[GridSpec, float]:
    if len(ivs) == 0:
        raise ValueError("need at least one interval field")
    if len(ivs) != len(truths):
        raise ValueError(f"{len(ivs)} interval fields vs {len(truths)} truths")
    spec = ivs[0].spec
    alpha = ivs[0].alpha
    for i, iv in enumerate(ivs):
        if iv.spec != spec:
            raise ValueError(f"interval field {i} has a different GridSpec")
        if iv.alpha != alpha:
            raise ValueError(f"interval field {i} has alpha {iv.alpha}, expected {alpha}")
    for i, tr in enumerate(truths):
        if tr.spec != spec:
            raise ValueError(f"truth {i} has a different GridSpec")
    return spec, alpha


def _width_partials(iv: IntervalField) -> tuple[np.ndarray, np.ndarray]:
    """(lead, var)-resolved finite width sums and finite counts for one field."""
    width = iv.upper - iv.lower
    finite = np.isfinite(width)
    sums = np.where(finite, width, 0.0).sum(axis=(1, 2))
    counts = finite.sum(axis=(1, 2))
    return sums, counts


def empirical_coverage(
    ivs: Sequence[IntervalField],
    truths: Sequence[FieldTensor],
    workers: int = 1,
) -> CoverageReport:
    """Per-cell coverage fractions over the test members, plus aggregates.

    per_cell[c] = (1/m) * #{i : lower_i[c] <= truth_i[c] <= upper_i[c]};
    domain coverage is the plain mean of per_cell over all cells.
    """
    spec, alpha = _check_members(ivs, truths)
    m = len(ivs)

    def member_partial(i: int):
        iv, tr = ivs[i], truths[i]
        covered = (iv.lower <= tr.data) & (tr.data <= iv.upper)
        sums, counts = _width_partials(iv)
        return covered, sums, counts

    if workers <= 1:
        partials = map(member_partial, range(m))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(member_partial, range(m)))

    covered_count = np.zeros(spec.shape, dtype=np.int64)
    width_sum_tv = np.zeros((spec.t_out, spec.nvar), dtype=np.float64)
    finite_count_tv = np.zeros((spec.t_out, spec.nvar), dtype=np.int64)
    for covered, sums, counts in partials:
        covered_count += covered
        width_sum_tv += sums
        finite_count_tv += counts

    per_cell = covered_count / float(m)
    domain = float(per_cell.mean())
    per_lead = tuple(float(v) for v in per_cell.reshape(spec.t_out, -1).mean(axis=1))
    per_var = tuple(float(v) for v in per_cell.reshape(-1, spec.nvar).mean(axis=0))

    total_finite = int(finite_count_tv.sum())
    n_infinite = int(m * spec.n_cells - total_finite)
    mean_w = float(width_sum_tv.sum() / total_finite) if total_finite else None
    lead_sums = width_sum_tv.sum(axis=1)
    lead_counts = finite_count_tv.sum(axis=1)
    per_lead_w = tuple(
        float(lead_sums[t] / lead_counts[t]) if lead_counts[t] else None
        for t in range(spec.t_out)
    )
    return CoverageReport(
        spec=spec,
        alpha=alpha,
        per_cell_coverage=per_cell,
        domain_coverage=domain,
        per_leadtime_coverage=per_lead,
        per_variable_coverage=per_var,
        mean_width=mean_w,
        per_leadtime_mean_width=per_lead_w,
        n_test=m,
        n_infinite=n_infinite,
        width_sum_tv=width_sum_tv,
        finite_count_tv=finite_count_tv,
    )


def mean_width(ivs: Sequence[IntervalField]) -> WidthSummary:
    """Mean of upper-lower over all cells and members, finite entries only."""
    if len(ivs) == 0:
        raise ValueError("need at least one interval field")
    spec = ivs[0].spec
    for i, iv in enumerate(ivs):
        if iv.spec != spec:
            raise ValueError(f"interval field {i} has a different GridSpec")
    sums = np.zeros((spec.t_out, spec.nvar), dtype=np.float64)
    counts = np.zeros((spec.t_out, spec.nvar), dtype=np.int64)
    for iv in ivs:
        s, c = _width_partials(iv)
        sums += s
        counts += c
    lead_sums = sums.sum(axis=1)
    lead_counts = counts.sum(axis=1)
    per_lead = tuple(
        float(lead_sums[t] / lead_counts[t]) if lead_counts[t] else None
        for t in range(spec.t_out)
    )
    total = int(counts.sum())
    overall = float(sums.sum() / total) if total else None
    n_infinite = int(len(ivs) * spec.n_cells - total)
    return WidthSummary(overall, per_lead, n_infinite)


def coverage_curve(
    intervals_by_alpha: Sequence[tuple[float, Sequence[IntervalField]]],
    truths: Sequence[FieldTensor],
    workers: int = 1,
) -> list[tuple[float, float]]:
    """(1-alpha, domain_coverage) points, sorted by nominal coverage.

    ``intervals_by_alpha`` pairs each miscoverage level with its per-member
    interval fields; alphas must be strictly increasing.
    """
    alphas = [a for a, _ in intervals_by_alpha]
    if not alphas:
        raise ValueError("need at least one alpha level")
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alphas must be strictly increasing")
    points = []
    for alpha, ivs in intervals_by_alpha:
        report = empirical_coverage(ivs, truths, workers=workers)
        points.append((1.0 - alpha, report.domain_coverage))
    points.sort(key=lambda p: p[0])
    return points


def uncalibrated_gaussian_intervals(
    mean: FieldTensor, sigma: FieldTensor, alpha: float
) -> IntervalField:
    """Baseline mean +- z_{1-alpha/2} * sigma, no conformal correction.

    Comparison target for the calibrated pipeline: these bounds reach their
    nominal coverage only when the model's sigma is perfectly calibrated.
    """
    if mean.spec != sigma.spec:
        raise ValueError("GridSpec mismatch between mean and sigma")
    if (sigma.data < 0).any():
        raise ValueError("sigma contains negative entries")
    z = central_z(alpha)
    half = z * sigma.data
    return IntervalField(mean.spec, alpha, mean.data - half, mean.data + half)


def report_to_json(report: CoverageReport) -> str:
    """Aggregate part of the report as canonical JSON (no per-cell array)."""
    obj = {
        "alpha": report.alpha,
        "domain_coverage": report.domain_coverage,
        "per_leadtime_coverage": list(report.per_leadtime_coverage),
        "per_variable_coverage": list(report.per_variable_coverage),
        "mean_width": report.mean_width,
        "per_leadtime_mean_width": list(report.per_leadtime_mean_width),
        "n_test": report.n_test,
        "n_infinite": report.n_infinite,
        "grid": report.spec.to_sidecar(),
    }
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def report_from_json(text: str) -> dict:
    obj = json.loads(text)
    for key in ("alpha", "domain_coverage", "n_test"):
        if key not in obj:
            raise ValueError(f"coverage report JSON is missing {key!r}")
    return obj


def report_to_csv_rows(report: CoverageReport) -> list[dict]:
    """Per (lead time, variable) rows under the documented CSV header."""
    spec = report.spec
    cells_xy = spec.nx * spec.ny
    rows = []
    for t in range(spec.t_out):
        for v in range(spec.nvar):
            count = int(report.finite_count_tv[t, v])
            w = float(report.width_sum_tv[t, v] / count) if count else ""
            rows.append(
                {
                    "lead_hours": spec.lead_hours[t],
                    "variable": spec.variable_names[v],
                    "coverage": float(report.per_cell_coverage[t, :, :, v].mean()),
                    "mean_width": w,
                    "n_infinite": report.n_test * cells_xy - count,
                }
            )
    return rows
