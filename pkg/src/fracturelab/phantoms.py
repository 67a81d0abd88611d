"""Procedural phantom radiographs: a bright femoral-head ellipse plus shaft on
a noisy dark background, with fracture-class images carrying a dark jagged
crack across the shaft.

Per-patient shape parameters are shared across all of a patient's images (with
small per-image jitter), so patient-wise splitting genuinely matters. Labels
are assigned per patient. Generation is deterministic per seed and independent
per patient, so it parallelizes cleanly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fracturelab.datasets import ImageRecord, LabeledDataset, quantize_u8
from fracturelab.errors import ConfigurationError

VALID_RESOLUTIONS = (32, 64, 128)

# class ratio mirrors the source archive: 3289 fracture / 11734 total
DEFAULT_FRACTURE_FRACTION = 0.28


@dataclass(frozen=True)
class PhantomConfig:
    n_patients: int
    images_per_patient: int = 10
    fracture_fraction: float = DEFAULT_FRACTURE_FRACTION
    resolution: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.n_patients < 0:
            raise ConfigurationError(f"n_patients must be >= 0, got {self.n_patients}")
        if self.images_per_patient < 1:
            raise ConfigurationError(
                f"images_per_patient must be >= 1, got {self.images_per_patient}"
            )
        if not 0.0 <= self.fracture_fraction <= 1.0:
            raise ConfigurationError(
                f"fracture_fraction must be in [0, 1], got {self.fracture_fraction}"
            )
        if self.resolution not in VALID_RESOLUTIONS:
            raise ConfigurationError(
                f"resolution must be one of {VALID_RESOLUTIONS}, got {self.resolution}"
            )


@dataclass
class _PatientShape:
    head_cx: float
    head_cy: float
    head_r1: float
    head_r2: float
    head_angle: float
    shaft_angle: float
    shaft_halfwidth: float
    shaft_len: float
    bone_level: float
    crack_t: float  # position along the shaft, fracture patients only
    crack_tilt: float
    crack_halfwidth: float
    crack_wiggle: np.ndarray
    crack_depth: float


def _smoothstep(d: np.ndarray, softness: float) -> np.ndarray:
    """1 inside (d < 0), 0 outside, smooth over +-softness."""
    t = np.clip(0.5 - d / (2.0 * softness), 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def _draw_patient_shape(rng: np.random.Generator) -> _PatientShape:
    return _PatientShape(
        head_cx=0.34 + rng.normal(0.0, 0.028),
        head_cy=0.33 + rng.normal(0.0, 0.028),
        head_r1=0.165 * (1.0 + rng.normal(0.0, 0.09)),
        head_r2=0.150 * (1.0 + rng.normal(0.0, 0.09)),
        head_angle=rng.uniform(-math.pi / 7, math.pi / 7),
        shaft_angle=math.radians(58.0 + rng.normal(0.0, 5.0)),
        shaft_halfwidth=0.088 * (1.0 + rng.normal(0.0, 0.09)),
        shaft_len=0.72 + rng.normal(0.0, 0.04),
        bone_level=float(np.clip(0.74 + rng.normal(0.0, 0.04), 0.55, 0.92)),
        crack_t=rng.uniform(0.34, 0.62),
        crack_tilt=rng.uniform(-0.30, 0.30),
        crack_halfwidth=0.055 * (1.0 + rng.normal(0.0, 0.10)),
        crack_wiggle=rng.normal(0.0, 0.016, size=4),
        crack_depth=float(np.clip(0.80 + rng.normal(0.0, 0.05), 0.65, 0.92)),
    )


def _render_image(
    shape: _PatientShape, fractured: bool, resolution: int, rng: np.random.Generator
) -> np.ndarray:
    r = resolution
    soft = 1.2 / r  # ~one pixel of edge softness in normalized units

    # per-image jitter on top of the patient geometry
    jx = rng.normal(0.0, 0.012)
    jy = rng.normal(0.0, 0.012)
    jrot = math.radians(rng.normal(0.0, 2.5))
    brightness = 1.0 + rng.normal(0.0, 0.04)

    ys, xs = np.mgrid[0:r, 0:r].astype(np.float64)
    u = (xs + 0.5) / r
    v = (ys + 0.5) / r

    # rotate the sampling grid about the head center (jitter rotation)
    cx, cy = shape.head_cx + jx, shape.head_cy + jy
    du, dv = u - cx, v - cy
    cos_j, sin_j = math.cos(jrot), math.sin(jrot)
    ru = cos_j * du + sin_j * dv
    rv = -sin_j * du + cos_j * dv

    # femoral head: rotated ellipse
    cos_h, sin_h = math.cos(shape.head_angle), math.sin(shape.head_angle)
    eu = (cos_h * ru + sin_h * rv) / shape.head_r1
    ev = (-sin_h * ru + cos_h * rv) / shape.head_r2
    # approximate signed distance to the ellipse boundary
    rho = np.sqrt(eu * eu + ev * ev)
    d_head = (rho - 1.0) * min(shape.head_r1, shape.head_r2)
    head_mask = _smoothstep(d_head, soft)

    # shaft: capsule from just below the head toward lower-right
    sa = shape.shaft_angle
    dir_x, dir_y = math.cos(sa), math.sin(sa)
    px = ru - dir_x * shape.head_r1 * 0.55
    py = rv - dir_y * shape.head_r1 * 0.55
    s_along = px * dir_x + py * dir_y  # distance along the shaft axis
    s_ortho = -px * dir_y + py * dir_x  # signed lateral offset
    s_clamped = np.clip(s_along, 0.0, shape.shaft_len)
    d_shaft = np.sqrt((s_along - s_clamped) ** 2 + s_ortho**2) - shape.shaft_halfwidth
    shaft_mask = _smoothstep(d_shaft, soft)

    bone_mask = np.maximum(head_mask, shaft_mask)

    background = 0.10 + 0.05 * v  # faint vertical gradient
    img = background + (shape.bone_level - background) * bone_mask

    if fractured:
        # dark jagged gap crossing the shaft, perpendicular-ish to its axis
        t_center = shape.crack_t * shape.shaft_len
        lateral = s_ortho / max(shape.shaft_halfwidth, 1e-6)  # ~[-1, 1] inside
        # piecewise-linear wiggle of the crack line across the shaft width
        knots = np.linspace(-1.2, 1.2, num=len(shape.crack_wiggle))
        offset = np.interp(lateral, knots, np.cumsum(shape.crack_wiggle))
        crack_line = t_center + shape.crack_tilt * s_ortho + offset
        d_crack = np.abs(s_along - crack_line) - shape.crack_halfwidth
        crack_mask = _smoothstep(d_crack, soft) * shaft_mask
        img = img * (1.0 - shape.crack_depth * crack_mask) + background * (
            shape.crack_depth * crack_mask
        )

    # low-frequency cloudiness plus pixel noise
    coarse = rng.normal(0.0, 1.0, size=(4, 4))
    coarse_up = np.kron(coarse, np.ones((r // 4, r // 4)))
    img = img + 0.015 * coarse_up + rng.normal(0.0, 0.02, size=(r, r))
    img = np.clip(img * brightness, 0.0, 1.0)
    return quantize_u8(img)


def generate_phantom(config: PhantomConfig) -> LabeledDataset:
    """Deterministically generate a labeled phantom dataset.

    round-half-up(fracture_fraction * n_patients) patients are fractured; all
    of a patient's images share the label and the patient's bone geometry.
    """
    n = config.n_patients
    n_fracture = int(math.floor(config.fracture_fraction * n + 0.5))
    label_rng = np.random.default_rng(np.random.SeedSequence([config.seed]))
    perm = label_rng.permutation(n) if n else np.array([], dtype=np.int64)
    fracture_patients = set(int(i) for i in perm[:n_fracture])

    records: list[ImageRecord] = []
    for pidx in range(n):
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1 + pidx]))
        shape = _draw_patient_shape(rng)
        fractured = pidx in fracture_patients
        for j in range(config.images_per_patient):
            pixels = _render_image(shape, fractured, config.resolution, rng)
            side = "L" if rng.random() < 0.5 else "R"
            records.append(
                ImageRecord(
                    image_id=f"p{pidx:04d}_i{j:02d}",
                    patient_id=f"p{pidx:04d}",
                    pixels=pixels,
                    label=int(fractured),
                    side=side,
                )
            )
    return LabeledDataset(tuple(records), config.resolution)
