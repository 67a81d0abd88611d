"""Labeled grayscale image datasets: records, directory I/O, patient splits,
and traditional augmentation.

Pixels are square grayscale float arrays in [0, 1]. On disk a dataset is a
directory with ``labels.csv`` (header ``image_id,patient_id,label,side``) and
``images/<image_id>.png`` as 8-bit grayscale PNGs. All in-memory records are
laterality-normalized: side=R images are mirrored about the vertical axis at
load time so every record presents as a left hip.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from fracturelab.errors import ConfigurationError, IngestionError

VALID_SIDES = ("L", "R")


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _as_pixels(arr: np.ndarray) -> np.ndarray:
    """Validate and freeze a pixel array (square, power-of-two side, [0,1])."""
    pixels = np.asarray(arr, dtype=np.float32)
    if pixels.ndim != 2 or pixels.shape[0] != pixels.shape[1]:
        raise ConfigurationError(f"image must be square, got shape {pixels.shape}")
    side = pixels.shape[0]
    if side < 1 or side & (side - 1) != 0:
        raise ConfigurationError(f"image side must be a power of two, got {side}")
    if not np.isfinite(pixels).all():
        raise ConfigurationError("image contains non-finite intensities")
    if pixels.min() < 0.0 or pixels.max() > 1.0:
        raise ConfigurationError("intensities must lie within [0, 1]")
    pixels = pixels.copy()
    pixels.flags.writeable = False
    return pixels


@dataclass(frozen=True)
class ImageRecord:
    """One laterality-normalized grayscale image with its labels."""

    image_id: str
    patient_id: str
    pixels: np.ndarray
    label: int  # 0 = non-fracture, 1 = fracture
    side: str  # original acquisition side; pixels are always left-oriented

    def __post_init__(self):
        object.__setattr__(self, "pixels", _as_pixels(self.pixels))
        if self.label not in (0, 1):
            raise ConfigurationError(f"label must be 0 or 1, got {self.label!r}")
        if self.side not in VALID_SIDES:
            raise ConfigurationError(f"side must be L or R, got {self.side!r}")

    @property
    def resolution(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class LabeledDataset:
    """Ordered collection of ImageRecords sharing one resolution."""

    records: tuple[ImageRecord, ...]
    resolution: int

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        seen = set()
        for rec in self.records:
            if rec.image_id in seen:
                raise ConfigurationError(f"duplicate image_id {rec.image_id!r}")
            seen.add(rec.image_id)
            if rec.resolution != self.resolution:
                raise ConfigurationError(
                    f"record {rec.image_id!r} has resolution {rec.resolution}, "
                    f"dataset expects {self.resolution}"
                )

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self.records], dtype=np.int64)

    def image_ids(self) -> list[str]:
        return [r.image_id for r in self.records]

    def patient_ids(self) -> set[str]:
        return {r.patient_id for r in self.records}

    def pixel_stack(self) -> np.ndarray:
        """All images as one (N, H, W) float32 array."""
        if not self.records:
            return np.zeros((0, self.resolution, self.resolution), dtype=np.float32)
        return np.stack([r.pixels for r in self.records])

    def subset(self, indices) -> "LabeledDataset":
        return LabeledDataset(tuple(self.records[i] for i in indices), self.resolution)


def from_records(records, resolution: int | None = None) -> LabeledDataset:
    records = tuple(records)
    if resolution is None:
        if not records:
            raise ConfigurationError("empty dataset needs an explicit resolution")
        resolution = records[0].resolution
    return LabeledDataset(records, resolution)


def concat(*datasets: LabeledDataset) -> LabeledDataset:
    """Pool datasets in order; resolutions must agree, ids must stay unique."""
    if not datasets:
        raise ConfigurationError("concat needs at least one dataset")
    res = datasets[0].resolution
    records: list[ImageRecord] = []
    for ds in datasets:
        records.extend(ds.records)
    return LabeledDataset(tuple(records), res)


def mirror_horizontal(pixels: np.ndarray) -> np.ndarray:
    """Flip an image across the vertical axis (column order reversed)."""
    return np.ascontiguousarray(np.asarray(pixels)[:, ::-1])


def quantize_u8(pixels: np.ndarray) -> np.ndarray:
    """Snap [0,1] floats onto the 8-bit grid used on disk."""
    u8 = np.clip(np.rint(np.asarray(pixels, dtype=np.float64) * 255.0), 0, 255)
    return (u8 / 255.0).astype(np.float32)


def class_composition(ds: LabeledDataset) -> tuple[int, int]:
    """(n_nonfracture, n_fracture); the counts sum to len(ds)."""
    n_frac = int(sum(r.label for r in ds.records))
    return len(ds) - n_frac, n_frac


def ingest(directory_path) -> LabeledDataset:
    """Load a dataset directory, mirroring side=R images to left orientation.

    Record order follows the label file. Raises IngestionError naming the
    offending row on any malformed input.
    """
    root = Path(directory_path)
    labels_csv = root / "labels.csv"
    if not labels_csv.is_file():
        raise IngestionError(f"missing labels.csv in {root}")
    records: list[ImageRecord] = []
    seen: set[str] = set()
    resolution: int | None = None
    with open(labels_csv, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["image_id", "patient_id", "label", "side"]
        if reader.fieldnames != expected:
            raise IngestionError(
                f"labels.csv header must be {','.join(expected)}, "
                f"got {reader.fieldnames}"
            )
        for row_no, row in enumerate(reader, start=2):
            image_id = (row["image_id"] or "").strip()
            if not image_id:
                raise IngestionError(f"row {row_no}: empty image_id")
            if image_id in seen:
                raise IngestionError(f"row {row_no}: duplicate image_id {image_id!r}")
            seen.add(image_id)
            label_raw = (row["label"] or "").strip()
            if label_raw not in ("0", "1"):
                raise IngestionError(
                    f"row {row_no} ({image_id}): label must be 0 or 1, got {label_raw!r}"
                )
            side = (row["side"] or "").strip()
            if side not in VALID_SIDES:
                raise IngestionError(
                    f"row {row_no} ({image_id}): side must be L or R, got {side!r}"
                )
            img_path = root / "images" / f"{image_id}.png"
            if not img_path.is_file():
                raise IngestionError(f"row {row_no}: missing image file {img_path.name}")
            with Image.open(img_path) as img:
                arr = np.asarray(img.convert("L"), dtype=np.float32) / 255.0
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
                raise IngestionError(
                    f"row {row_no} ({image_id}): image is not square, shape {arr.shape}"
                )
            if side == "R":
                arr = mirror_horizontal(arr)
            try:
                rec = ImageRecord(
                    image_id=image_id,
                    patient_id=(row["patient_id"] or "").strip(),
                    pixels=arr,
                    label=int(label_raw),
                    side=side,
                )
            except ConfigurationError as exc:
                raise IngestionError(f"row {row_no} ({image_id}): {exc}") from exc
            if resolution is None:
                resolution = rec.resolution
            elif rec.resolution != resolution:
                raise IngestionError(
                    f"row {row_no} ({image_id}): resolution {rec.resolution} differs "
                    f"from {resolution}"
                )
            records.append(rec)
    if resolution is None:
        raise IngestionError(f"labels.csv in {root} lists no rows")
    return LabeledDataset(tuple(records), resolution)


def export_dataset(ds: LabeledDataset, directory_path) -> Path:
    """Write the on-disk layout; side=R records are mirrored back to their
    original orientation so ingest(export(ds)) round-trips bit-exactly."""
    root = Path(directory_path)
    (root / "images").mkdir(parents=True, exist_ok=True)
    with open(root / "labels.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "patient_id", "label", "side"])
        for rec in ds.records:
            writer.writerow([rec.image_id, rec.patient_id, rec.label, rec.side])
            pixels = rec.pixels
            if rec.side == "R":
                pixels = mirror_horizontal(pixels)
            u8 = np.clip(np.rint(pixels * 255.0), 0, 255).astype(np.uint8)
            Image.fromarray(u8, mode="L").save(root / "images" / f"{rec.image_id}.png")
    return root


def split_by_patient(
    ds: LabeledDataset, train_frac: float, seed: int
) -> tuple[LabeledDataset, LabeledDataset]:
    """Split so every patient's images land entirely on one side.

    round-half-up of train_frac * n_patients patients go to train; a split
    that leaves either side empty is rejected as degenerate.
    """
    if not 0.0 < train_frac < 1.0:
        raise ConfigurationError(f"train_frac must be in (0, 1), got {train_frac}")
    patients: list[str] = []
    seen: set[str] = set()
    for rec in ds.records:
        if rec.patient_id not in seen:
            seen.add(rec.patient_id)
            patients.append(rec.patient_id)
    if not patients:
        raise ConfigurationError("cannot split a dataset with zero patients")
    n_train = _round_half_up(train_frac * len(patients))
    if n_train == 0 or n_train == len(patients):
        raise ConfigurationError(
            f"degenerate split: {n_train} of {len(patients)} patients in train"
        )
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(patients))
    train_patients = {patients[i] for i in perm[:n_train]}
    train_recs = tuple(r for r in ds.records if r.patient_id in train_patients)
    test_recs = tuple(r for r in ds.records if r.patient_id not in train_patients)
    return (
        LabeledDataset(train_recs, ds.resolution),
        LabeledDataset(test_recs, ds.resolution),
    )


def _affine_warp(pixels: np.ndarray, angle_deg: float, tx: float, ty: float) -> np.ndarray:
    """Rotate about the image center then translate, bilinear with edge clamp."""
    h, w = pixels.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    # inverse map: for each output pixel, sample the source location
    theta = math.radians(angle_deg)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    xo = xs - cx - tx
    yo = ys - cy - ty
    src_x = cos_t * xo + sin_t * yo + cx
    src_y = -sin_t * xo + cos_t * yo + cy
    src_x = np.clip(src_x, 0, w - 1)
    src_y = np.clip(src_y, 0, h - 1)
    x0 = np.floor(src_x).astype(np.int64)
    y0 = np.floor(src_y).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = src_x - x0
    fy = src_y - y0
    p = pixels.astype(np.float64)
    out = (
        p[y0, x0] * (1 - fx) * (1 - fy)
        + p[y0, x1] * fx * (1 - fy)
        + p[y1, x0] * (1 - fx) * fy
        + p[y1, x1] * fx * fy
    )
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def traditional_augment(ds: LabeledDataset, seed: int) -> LabeledDataset:
    """Double the dataset: originals plus one perturbed copy each.

    Perturbations are rotation within +-5 degrees, translation within +-5% of
    width, and brightness scaling in [0.9, 1.1]. No horizontal flips; the
    records are already laterality-normalized and a flip would change sides.
    """
    if len(ds) == 0:
        raise ConfigurationError("cannot augment an empty dataset")
    rng = np.random.default_rng(seed)
    copies: list[ImageRecord] = []
    for rec in ds.records:
        angle = rng.uniform(-5.0, 5.0)
        max_shift = 0.05 * ds.resolution
        tx = rng.uniform(-max_shift, max_shift)
        ty = rng.uniform(-max_shift, max_shift)
        brightness = rng.uniform(0.9, 1.1)
        warped = _affine_warp(rec.pixels, angle, tx, ty)
        perturbed = quantize_u8(np.clip(warped * brightness, 0.0, 1.0))
        copies.append(
            ImageRecord(
                image_id=f"{rec.image_id}-aug",
                patient_id=rec.patient_id,
                pixels=perturbed,
                label=rec.label,
                side=rec.side,
            )
        )
    return LabeledDataset(ds.records + tuple(copies), ds.resolution)
