"""Embedding dataset bundles: on-disk format, loading, synthetic generation.

A bundle is a directory holding ``manifest.json`` plus two raw binary
tensor files (little-endian float32, row-major, no header bytes):

* ``audio_file``: ``[num_samples][dim]``
* ``text_file``: ``[num_templates][num_classes][dim]``

Manifest fields: ``format_version`` (= 1), ``dim``, ``num_samples``,
``num_templates``, ``num_classes``, ``audio_file``, ``text_file``,
``labels`` (inline integer array or null), ``class_names``,
``template_strings``, ``zero_shot_template_index``.

All embedding rows live on the unit sphere, so cosine similarity is a
plain dot product. Loading re-normalizes every row and counts how many
deviated from unit norm by more than ``UNIT_NORM_WARN_TOL`` beforehand.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .rng import Xoshiro256StarStar

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
UNIT_NORM_WARN_TOL = 1e-3

# Per-component std of the Gaussian jitter applied to each synthetic audio
# sample around its class prototype. Sized so single-template accuracy at
# the default scenario (200 samples, 10 classes, dim 64) stays clearly
# below 1 while remaining far above chance.
AUDIO_JITTER = 0.45

_MANIFEST_NAME = "manifest.json"
_REQUIRED_FIELDS = (
    "format_version",
    "dim",
    "num_samples",
    "num_templates",
    "num_classes",
    "audio_file",
    "text_file",
    "labels",
    "class_names",
    "template_strings",
    "zero_shot_template_index",
)


class DatasetError(Exception):
    """Malformed bundle: missing files, size mismatch, bad labels, zero rows."""


@dataclass(frozen=True)
class EmbeddingDataset:
    """Unit-normalized audio/text embeddings plus class and template metadata."""

    audio: np.ndarray  # (num_samples, dim) float32, unit rows
    text: np.ndarray  # (num_templates, num_classes, dim) float32, unit rows
    class_names: tuple[str, ...]
    template_strings: tuple[str, ...]
    labels: Optional[np.ndarray] = None  # (num_samples,) int64, values in [0, num_classes)
    zero_shot_template_index: int = 0
    renorm_warnings: int = 0  # rows whose stored norm was off by > UNIT_NORM_WARN_TOL

    @property
    def num_samples(self) -> int:
        return self.audio.shape[0]

    @property
    def num_templates(self) -> int:
        return self.text.shape[0]

    @property
    def num_classes(self) -> int:
        return self.text.shape[1]

    @property
    def dim(self) -> int:
        return self.audio.shape[1]

    @property
    def dims(self) -> tuple[int, int, int, int]:
        """(num_samples, num_templates, num_classes, dim)."""
        return (self.num_samples, self.num_templates, self.num_classes, self.dim)


@dataclass(frozen=True)
class SyntheticConfig:
    """Shape and noise knobs for :func:`generate_synthetic`.

    The first ``clean_template_count`` templates are faithful (class
    prototypes shifted by a per-template offset of per-component scale
    ``noise_sigma``); the rest are pure noise drawn uniformly on the sphere.
    """

    num_samples: int
    num_templates: int
    num_classes: int
    dim: int
    clean_template_count: int
    noise_sigma: float
    seed: int

    def __post_init__(self):
        for name in ("num_samples", "num_templates", "num_classes", "dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0 <= self.clean_template_count <= self.num_templates:
            raise ValueError("clean_template_count must lie in [0, num_templates]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


def _unit_rows_f32(raw: np.ndarray) -> np.ndarray:
    """Normalize each row to unit L2 norm in float32.

    Iterated until the float32 bits stop changing, so the result is a fixed
    point of the projection and save/load round-trips reproduce it exactly.
    """
    rows = raw.reshape(-1, raw.shape[-1])
    norms = np.linalg.norm(rows.astype(np.float64), axis=1)
    if np.any(norms == 0.0):
        raise DatasetError("zero-norm embedding row cannot be normalized")
    out = (rows.astype(np.float64) / norms[:, None]).astype(np.float32)
    for _ in range(8):
        norms = np.linalg.norm(out.astype(np.float64), axis=1)
        nxt = (out.astype(np.float64) / norms[:, None]).astype(np.float32)
        if np.array_equal(nxt, out):
            break
        out = nxt
    return out.reshape(raw.shape)


def validate_dataset(ds: EmbeddingDataset) -> None:
    """Raise DatasetError if any structural invariant is violated."""
    n_s, n_t, n_c, dim = ds.dims
    if min(n_s, n_t, n_c, dim) < 1:
        raise DatasetError("all dataset dimensions must be >= 1")
    if ds.audio.shape != (n_s, dim) or ds.text.shape != (n_t, n_c, dim):
        raise DatasetError("audio/text tensor shapes are inconsistent")
    if len(ds.class_names) != n_c:
        raise DatasetError("class_names length does not match num_classes")
    if len(ds.template_strings) != n_t:
        raise DatasetError("template_strings length does not match num_templates")
    if not 0 <= ds.zero_shot_template_index < n_t:
        raise DatasetError("zero_shot_template_index out of range")
    if ds.labels is not None:
        if ds.labels.shape != (n_s,):
            raise DatasetError("labels length does not match num_samples")
        if ds.labels.min() < 0 or ds.labels.max() >= n_c:
            raise DatasetError("label out of range")
    for name, arr in (("audio", ds.audio), ("text", ds.text.reshape(-1, dim))):
        norms = np.linalg.norm(arr.astype(np.float64), axis=1)
        worst = np.abs(norms - 1.0).max()
        if worst > 1e-4:
            raise DatasetError(f"{name} rows deviate from unit norm by {worst:.2e}")


def _read_manifest(manifest_path: Path) -> dict:
    if not manifest_path.is_file():
        raise DatasetError(f"manifest not found: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetError(f"cannot parse manifest {manifest_path}: {exc}") from exc
    if not isinstance(manifest, dict):
        raise DatasetError("manifest must be a JSON object")
    missing = [f for f in _REQUIRED_FIELDS if f not in manifest]
    if missing:
        raise DatasetError(f"manifest missing fields: {', '.join(missing)}")
    if manifest["format_version"] != FORMAT_VERSION:
        raise DatasetError(f"unsupported format_version {manifest['format_version']!r}")
    return manifest


def _read_tensor(path: Path, shape: tuple[int, ...]) -> np.ndarray:
    if not path.is_file():
        raise DatasetError(f"tensor file not found: {path}")
    expected = 4 * math.prod(shape)
    actual = path.stat().st_size
    if actual != expected:
        raise DatasetError(
            f"{path.name}: expected {expected} bytes for shape {shape}, found {actual}"
        )
    return np.fromfile(path, dtype="<f4").reshape(shape)


def load_dataset(manifest_path) -> EmbeddingDataset:
    """Load a bundle given its manifest path (or the bundle directory).

    Rows are re-normalized to unit norm; the count of rows whose stored norm
    deviated by more than ``UNIT_NORM_WARN_TOL`` is logged and kept on the
    returned dataset as ``renorm_warnings``.
    """
    path = Path(manifest_path)
    manifest_file = path / _MANIFEST_NAME if path.is_dir() else path
    manifest = _read_manifest(manifest_file)
    bundle = manifest_file.parent

    try:
        n_s = int(manifest["num_samples"])
        n_t = int(manifest["num_templates"])
        n_c = int(manifest["num_classes"])
        dim = int(manifest["dim"])
        j0 = int(manifest["zero_shot_template_index"])
    except (TypeError, ValueError) as exc:
        raise DatasetError(f"non-integer dimension field in manifest: {exc}") from exc
    if min(n_s, n_t, n_c, dim) < 1:
        raise DatasetError("manifest dimensions must all be >= 1")

    audio_raw = _read_tensor(bundle / manifest["audio_file"], (n_s, dim))
    text_raw = _read_tensor(bundle / manifest["text_file"], (n_t, n_c, dim))

    labels = None
    if manifest["labels"] is not None:
        labels = np.asarray(manifest["labels"], dtype=np.int64)

    warnings = 0
    arrays = []
    for raw in (audio_raw, text_raw.reshape(-1, dim)):
        norms = np.linalg.norm(raw.astype(np.float64), axis=1)
        warnings += int(np.count_nonzero(np.abs(norms - 1.0) > UNIT_NORM_WARN_TOL))
        arrays.append(_unit_rows_f32(raw))
    if warnings:
        logger.warning(
            "%d embedding rows deviated from unit norm by more than %g and were re-normalized",
            warnings,
            UNIT_NORM_WARN_TOL,
        )

    ds = EmbeddingDataset(
        audio=arrays[0],
        text=arrays[1].reshape(n_t, n_c, dim),
        class_names=tuple(str(s) for s in manifest["class_names"]),
        template_strings=tuple(str(s) for s in manifest["template_strings"]),
        labels=labels,
        zero_shot_template_index=j0,
        renorm_warnings=warnings,
    )
    validate_dataset(ds)
    return ds


def save_dataset(ds: EmbeddingDataset, bundle_dir) -> Path:
    """Write a dataset as a bundle directory; returns the manifest path."""
    validate_dataset(ds)
    bundle = Path(bundle_dir)
    bundle.mkdir(parents=True, exist_ok=True)
    audio_name, text_name = "audio.f32", "text.f32"
    ds.audio.astype("<f4", copy=False).tofile(bundle / audio_name)
    ds.text.astype("<f4", copy=False).tofile(bundle / text_name)
    manifest = {
        "format_version": FORMAT_VERSION,
        "dim": ds.dim,
        "num_samples": ds.num_samples,
        "num_templates": ds.num_templates,
        "num_classes": ds.num_classes,
        "audio_file": audio_name,
        "text_file": text_name,
        "labels": None if ds.labels is None else [int(v) for v in ds.labels],
        "class_names": list(ds.class_names),
        "template_strings": list(ds.template_strings),
        "zero_shot_template_index": ds.zero_shot_template_index,
    }
    manifest_path = bundle / _MANIFEST_NAME
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest_path


def generate_synthetic(config: SyntheticConfig) -> EmbeddingDataset:
    """Build a labeled synthetic dataset, a pure function of ``config``.

    Draw order (one xoshiro256** stream seeded from ``config.seed``):
    class prototypes, audio jitter, clean-template offsets, noise templates.
    Each audio sample is its label's prototype plus Gaussian jitter,
    re-normalized; labels cycle round-robin over classes. Clean template
    ``j`` shifts every class prototype by one offset vector ``o_j`` with
    per-component scale ``noise_sigma``; noise templates are uniform random
    directions carrying no class signal.
    """
    if config.dim < 2:
        raise ValueError("dim must be >= 2 for uniform sphere sampling")
    n_s, n_t, n_c, dim = (
        config.num_samples,
        config.num_templates,
        config.num_classes,
        config.dim,
    )
    clean = config.clean_template_count
    rng = Xoshiro256StarStar(config.seed)

    prototypes = rng.unit_vectors(n_c, dim)
    labels = np.arange(n_s, dtype=np.int64) % n_c

    jitter = rng.normal(n_s * dim).reshape(n_s, dim)
    audio = _unit_rows_f32(
        (prototypes[labels] + AUDIO_JITTER * jitter).astype(np.float32)
    )

    text_raw = np.empty((n_t, n_c, dim))
    if clean:
        offsets = config.noise_sigma * rng.normal(clean * dim).reshape(clean, dim)
        text_raw[:clean] = prototypes[None, :, :] + offsets[:, None, :]
    if n_t > clean:
        text_raw[clean:] = rng.unit_vectors((n_t - clean) * n_c, dim).reshape(
            n_t - clean, n_c, dim
        )
    text = _unit_rows_f32(text_raw.astype(np.float32))

    template_strings = tuple(
        f"synthetic clean template {j}" if j < clean else f"synthetic noise template {j}"
        for j in range(n_t)
    )
    ds = EmbeddingDataset(
        audio=audio,
        text=text,
        class_names=tuple(f"class_{k:02d}" for k in range(n_c)),
        template_strings=template_strings,
        labels=labels,
        zero_shot_template_index=0,
    )
    validate_dataset(ds)
    return ds
