"""On-disk layout of generated sample directories.

A dataset directory holds, per sample i (zero-padded to five digits):

    sample_00000.truth.cpt       + .json sidecar
    sample_00000.prediction.cpt  + .json sidecar
    sample_00000.mean.cpt        + .json sidecar
    sample_00000.sigma.cpt       + .json sidecar

plus one ``manifest.json`` recording the generator config, sample count and
seed. All bytes are a pure function of (config, seed, n_samples).
"""

from __future__ import annotations

import json
from pathlib import Path

from .container import read_container, write_container
from .grid import CalibrationSet, FieldTensor
from .synth import SynthConfig, SyntheticSample, generate_pair

__all__ = [
    "MANIFEST_NAME",
    "ROLES",
    "sample_path",
    "write_dataset",
    "read_dataset_manifest",
    "dataset_sample_count",
    "load_truths",
    "load_tensors",
    "load_calibration_set",
]

MANIFEST_NAME = "manifest.json"
ROLES = ("truth", "prediction", "mean", "sigma")


def sample_path(directory, index: int, role: str) -> Path:
    if role not in ROLES:
        raise ValueError(f"role must be one of {ROLES}, got {role!r}")
    return Path(directory) / f"sample_{index:05d}.{role}.cpt"


def write_dataset(cfg: SynthConfig, n_samples: int, directory) -> None:
    """Generate and persist ``n_samples`` cases plus the dataset manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i in range(n_samples):
        sample = generate_pair(cfg, i)
        _write_sample(sample, directory, i)
    manifest = {
        "format": "cpfield-dataset-v1",
        "n_samples": n_samples,
        "seed": cfg.seed,
        "config": cfg.to_json_dict(),
    }
    (directory / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _write_sample(sample: SyntheticSample, directory: Path, index: int) -> None:
    for role in ROLES:
        write_container(getattr(sample, role), sample_path(directory, index, role))


def read_dataset_manifest(directory) -> dict:
    path = Path(directory) / MANIFEST_NAME
    if not path.exists():
        raise FileNotFoundError(f"no dataset manifest at {path}")
    manifest = json.loads(path.read_text(encoding="utf-8"))
    if "n_samples" not in manifest:
        raise ValueError(f"{path}: manifest has no n_samples")
    return manifest


def dataset_sample_count(directory) -> int:
    return int(read_dataset_manifest(directory)["n_samples"])


def load_tensors(directory, role: str, n: int | None = None) -> list[FieldTensor]:
    """Load the ``role`` tensor of samples 0..n-1 (n from the manifest if None)."""
    if n is None:
        n = dataset_sample_count(directory)
    return [read_container(sample_path(directory, i, role)) for i in range(n)]


def load_truths(directory, n: int | None = None) -> list[FieldTensor]:
    return load_tensors(directory, "truth", n)


def load_calibration_set(directory, probabilistic: bool, n: int | None = None) -> CalibrationSet:
    """Assemble a CalibrationSet from a dataset directory.

    ``probabilistic=False`` loads (prediction, truth) pairs for RES scoring;
    ``probabilistic=True`` loads (mean, sigma, truth) triples for STD.
    """
    truths = load_truths(directory, n)
    n = len(truths)
    if probabilistic:
        return CalibrationSet(
            truths=truths,
            means=load_tensors(directory, "mean", n),
            sigmas=load_tensors(directory, "sigma", n),
        )
    return CalibrationSet(truths=truths, predictions=load_tensors(directory, "prediction", n))
