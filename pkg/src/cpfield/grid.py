"""Dimensional data model for spatio-temporal field tensors.

A field tensor is a dense 4D float64 array laid out row-major in the order
(lead time, x, y, variable). All downstream stages (scoring, calibration,
interval construction, evaluation) operate cell-wise on this layout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "GridSpec",
    "FieldTensor",
    "CalibrationSet",
    "cell_index",
]


@dataclass(frozen=True)
class GridSpec:
    """Dimensional metadata of a forecast tensor.

    t_out: number of lead times, nx/ny: grid rows/cols, nvar: number of
    variables. ``variable_names`` has exactly ``nvar`` unique entries and
    ``lead_hours`` is strictly increasing with length ``t_out``.
    """

    t_out: int
    nx: int
    ny: int
    nvar: int
    variable_names: tuple[str, ...]
    lead_hours: tuple[float, ...]

    def __post_init__(self):
        for name, value in (("t_out", self.t_out), ("nx", self.nx),
                            ("ny", self.ny), ("nvar", self.nvar)):
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {value!r}")
        object.__setattr__(self, "variable_names", tuple(str(v) for v in self.variable_names))
        object.__setattr__(self, "lead_hours", tuple(float(h) for h in self.lead_hours))
        if len(self.variable_names) != self.nvar:
            raise ValueError(
                f"variable_names has {len(self.variable_names)} entries, expected nvar={self.nvar}"
            )
        if len(set(self.variable_names)) != self.nvar:
            raise ValueError("variable_names must be unique")
        if len(self.lead_hours) != self.t_out:
            raise ValueError(
                f"lead_hours has {len(self.lead_hours)} entries, expected t_out={self.t_out}"
            )
        if any(b <= a for a, b in zip(self.lead_hours, self.lead_hours[1:])):
            raise ValueError("lead_hours must be strictly increasing")

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return (self.t_out, self.nx, self.ny, self.nvar)

    @property
    def n_cells(self) -> int:
        return self.t_out * self.nx * self.ny * self.nvar

    def to_sidecar(self) -> dict:
        """JSON-ready dict with the documented sidecar keys."""
        return {
            "t_out": self.t_out,
            "nx": self.nx,
            "ny": self.ny,
            "nvar": self.nvar,
            "variable_names": list(self.variable_names),
            "lead_hours": list(self.lead_hours),
        }

    @classmethod
    def from_sidecar(cls, meta: dict) -> "GridSpec":
        try:
            return cls(
                t_out=int(meta["t_out"]),
                nx=int(meta["nx"]),
                ny=int(meta["ny"]),
                nvar=int(meta["nvar"]),
                variable_names=tuple(meta["variable_names"]),
                lead_hours=tuple(meta["lead_hours"]),
            )
        except KeyError as exc:
            raise ValueError(f"sidecar is missing key {exc}") from exc


def cell_index(spec: GridSpec, t: int, x: int, y: int, v: int) -> int:
    """Flat row-major index of cell (t, x, y, v): ((t*nx + x)*ny + y)*nvar + v.

    Bijective over the tensor; raises IndexError for out-of-range indices.
    """
    for name, idx, dim in (("t", t, spec.t_out), ("x", x, spec.nx),
                           ("y", y, spec.ny), ("v", v, spec.nvar)):
        if not 0 <= idx < dim:
            raise IndexError(f"{name} index {idx} out of range [0, {dim})")
    return ((t * spec.nx + x) * spec.ny + y) * spec.nvar + v


class FieldTensor:
    """A dense 4D float64 field with its GridSpec.

    Immutable after construction (the data view is read-only); safe to share
    across threads. Values must be finite: NaN and infinity are rejected.
    """

    __slots__ = ("spec", "data")

    def __init__(self, spec: GridSpec, data: np.ndarray):
        arr = np.asarray(data, dtype=np.float64)
        if arr.shape != spec.shape:
            raise ValueError(f"data shape {arr.shape} does not match spec shape {spec.shape}")
        if not arr.flags.c_contiguous:
            arr = np.ascontiguousarray(arr)
        bad = ~np.isfinite(arr)
        if bad.any():
            first = int(np.flatnonzero(bad.ravel())[0])
            raise ValueError(f"non-finite value at flat index {first}")
        view = arr.view()
        view.setflags(write=False)
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "data", view)

    def __setattr__(self, name, value):
        raise AttributeError("FieldTensor is immutable")

    def __eq__(self, other):
        if not isinstance(other, FieldTensor):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(
            self.data, other.data, equal_nan=False
        )

    def __repr__(self):
        return f"FieldTensor(shape={self.spec.shape})"

    def value_at(self, t: int, x: int, y: int, v: int) -> float:
        """Value at one cell, bounds-checked via cell_index."""
        flat = cell_index(self.spec, t, x, y, v)
        return float(self.data.ravel()[flat])


def _check_shared_spec(tensors: Sequence[FieldTensor], what: str) -> GridSpec:
    spec = tensors[0].spec
    for i, t in enumerate(tensors):
        if t.spec != spec:
            raise ValueError(f"{what}[{i}] has a different GridSpec")
    return spec


@dataclass(frozen=True)
class CalibrationSet:
    """Held-out (prediction, truth) pairs used to estimate conformal quantiles.

    Deterministic form: ``predictions`` holds n point forecasts.
    Probabilistic form: ``means`` and ``sigmas`` hold n (mean, sd) pairs.
    Exactly one of the two forms must be populated; all members share one
    GridSpec and sigma entries must be >= 0.
    """

    truths: tuple[FieldTensor, ...]
    predictions: tuple[FieldTensor, ...] | None = None
    means: tuple[FieldTensor, ...] | None = None
    sigmas: tuple[FieldTensor, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "truths", tuple(self.truths))
        for name in ("predictions", "means", "sigmas"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, tuple(val))
        if len(self.truths) < 1:
            raise ValueError("calibration set needs n >= 1 samples")
        deterministic = self.predictions is not None
        probabilistic = self.means is not None or self.sigmas is not None
        if deterministic == probabilistic:
            raise ValueError(
                "provide either predictions (deterministic) or means+sigmas (probabilistic)"
            )
        if probabilistic and (self.means is None or self.sigmas is None):
            raise ValueError("probabilistic calibration needs both means and sigmas")
        n = len(self.truths)
        members: list[FieldTensor] = list(self.truths)
        for name in ("predictions", "means", "sigmas"):
            val = getattr(self, name)
            if val is not None:
                if len(val) != n:
                    raise ValueError(f"{name} has {len(val)} members, expected n={n}")
                members.extend(val)
        _check_shared_spec(members, "calibration set")
        if self.sigmas is not None:
            for i, s in enumerate(self.sigmas):
                if (s.data < 0).any():
                    raise ValueError(f"sigmas[{i}] contains negative entries")

    @property
    def spec(self) -> GridSpec:
        return self.truths[0].spec

    @property
    def n(self) -> int:
        return len(self.truths)

    @property
    def is_probabilistic(self) -> bool:
        return self.means is not None
