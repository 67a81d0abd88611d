"""Desk-scale workbench for conditional progressive GAN training on fracture
phantoms, with classifier-based boundary-distortion evaluation, per-layer
nearest-neighbor memorization audits, t-SNE maps, and a quiz service for
training the human eye on conditioned samples."""

__version__ = "0.1.0"

from fracturelab.errors import (
    ConfigurationError,
    FractureLabError,
    IngestionError,
    ProvenanceError,
)

__all__ = [
    "ConfigurationError",
    "FractureLabError",
    "IngestionError",
    "ProvenanceError",
    "__version__",
]
