"""Deterministic binary serialization of the projection model.

Layout: magic ``G2SALIGN``, u32 version, u32 JSON header length, UTF-8 JSON
header (sorted keys) describing the arrays, then the raw little-endian
float64 array payloads in header order. Identical models serialize to
identical bytes, which the reproducibility checks rely on.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .network import PARAM_NAMES, Normalizer, ProjectionModel
from .pca import PCAModel

_MAGIC = b"G2SALIGN"
_VERSION = 1


def _array_entries(model: ProjectionModel) -> list[tuple[str, np.ndarray]]:
    entries = [
        ("normalizer.mean", model.normalizer.mean),
        ("normalizer.std", model.normalizer.std),
    ]
    entries.extend((name, model.params[name]) for name in PARAM_NAMES)
    if model.pca is not None:
        entries.extend(
            [
                ("pca.mean", model.pca.mean),
                ("pca.components", model.pca.components),
                ("pca.explained_variance", model.pca.explained_variance),
            ]
        )
    return entries


def save_projection_model(path: str | Path, model: ProjectionModel) -> None:
    entries = _array_entries(model)
    header = {
        "version": _VERSION,
        "dropout_rate": model.dropout_rate,
        "has_pca": model.pca is not None,
        "pca_rank_deficient": bool(model.pca.rank_deficient) if model.pca is not None else False,
        "arrays": [{"name": name, "shape": list(arr.shape)} for name, arr in entries],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, len(blob)))
        fh.write(blob)
        for _, arr in entries:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_projection_model(path: str | Path) -> ProjectionModel:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a projection model file")
        version, header_len = struct.unpack("<II", fh.read(8))
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported model version {version}")
        header = json.loads(fh.read(header_len).decode("utf-8"))
        arrays: dict[str, np.ndarray] = {}
        for spec in header["arrays"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 8)
            arrays[spec["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    normalizer = Normalizer(mean=arrays["normalizer.mean"], std=arrays["normalizer.std"])
    params = {name: arrays[name] for name in PARAM_NAMES}
    pca = None
    if header["has_pca"]:
        pca = PCAModel(
            mean=arrays["pca.mean"],
            components=arrays["pca.components"],
            explained_variance=arrays["pca.explained_variance"],
            rank_deficient=bool(header.get("pca_rank_deficient", False)),
        )
    return ProjectionModel(
        normalizer=normalizer,
        params=params,
        dropout_rate=float(header["dropout_rate"]),
        pca=pca,
    )
