"""Geo2Sound: geographic attribute extraction, geo-acoustic alignment and evaluation."""

__version__ = "0.1.0"

from . import alignment, config, errors, forest, geoattr, hypothesis, metrics, synthworld, tensor_io

__all__ = [
    "__version__",
    "alignment",
    "config",
    "errors",
    "forest",
    "geoattr",
    "hypothesis",
    "metrics",
    "synthworld",
    "tensor_io",
]
