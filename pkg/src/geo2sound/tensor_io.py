"""Dense float32 array files and scene manifest JSON.

The array file layout is the de-facto interchange format version 1.0:
magic ``\\x93NUMPY``, version bytes ``\\x01\\x00``, a little-endian u16
header length, then an ASCII header dict padded with spaces (newline
terminated) so the data section starts on a 64-byte boundary, followed by
raw little-endian float32 data in row-major order. Only ``<f4`` with
``fortran_order: False`` is accepted; anything else is rejected up front
so cross-language producers fail loudly instead of corrupting downstream
math.
"""

from __future__ import annotations

import ast
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    IoFailure,
    NonFiniteData,
    SchemaViolation,
    TruncatedFile,
    UnsupportedDtype,
)

MAGIC = b"\x93NUMPY"
_VERSION = b"\x01\x00"
_ALIGN = 64
_DESCR = "<f4"


def write_tensor(path: str | Path, data: np.ndarray, strict: bool = True) -> None:
    """Write ``data`` as a float32 array file; ``strict`` rejects non-finite values."""
    arr = np.ascontiguousarray(data, dtype="<f4")
    if strict and arr.size and not np.isfinite(arr).all():
        raise NonFiniteData(f"refusing to write non-finite values to {path}")
    shape_repr = "(" + ", ".join(str(int(d)) for d in arr.shape) + ("," if arr.ndim == 1 else "") + ")"
    if arr.ndim == 0:
        shape_repr = "()"
    header = f"{{'descr': '{_DESCR}', 'fortran_order': False, 'shape': {shape_repr}, }}"
    # Pad so that magic + version + length field + header is a multiple of 64 bytes.
    base = len(MAGIC) + 2 + 2 + len(header) + 1
    header = header + " " * (-base % _ALIGN) + "\n"
    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(_VERSION)
            fh.write(struct.pack("<H", len(header)))
            fh.write(header.encode("latin1"))
            fh.write(arr.tobytes(order="C"))
    except OSError as exc:
        raise IoFailure(f"cannot write tensor file {path}: {exc}") from exc


def read_tensor(path: str | Path) -> np.ndarray:
    """Read a float32 array file written by :func:`write_tensor` or a compatible producer."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read tensor file {path}: {exc}") from exc
    if len(raw) < len(MAGIC) + 4 or raw[: len(MAGIC)] != MAGIC:
        raise BadMagic(f"{path} is not an array file")
    major, minor = raw[6], raw[7]
    if (major, minor) != (1, 0):
        raise UnsupportedDtype(f"{path}: unsupported format version {major}.{minor}")
    (header_len,) = struct.unpack("<H", raw[8:10])
    header_end = 10 + header_len
    if len(raw) < header_end:
        raise TruncatedFile(f"{path}: header truncated")
    try:
        header = ast.literal_eval(raw[10:header_end].decode("latin1"))
    except (ValueError, SyntaxError) as exc:
        raise BadMagic(f"{path}: unparseable header") from exc
    descr = header.get("descr")
    if descr != _DESCR:
        raise UnsupportedDtype(f"{path}: dtype {descr!r} not supported (only {_DESCR})")
    if header.get("fortran_order"):
        raise UnsupportedDtype(f"{path}: fortran_order arrays not supported")
    shape = tuple(int(d) for d in header["shape"])
    count = int(np.prod(shape)) if shape else 1
    payload = raw[header_end:]
    if len(payload) < count * 4:
        raise TruncatedFile(f"{path}: expected {count * 4} data bytes, found {len(payload)}")
    arr = np.frombuffer(payload[: count * 4], dtype="<f4").reshape(shape)
    return arr.copy()


@dataclass
class SceneManifest:
    """One scene's file references; candidate order defines the candidate index."""

    scene_id: str
    image_path: str = ""
    patch_embedding_path: str = ""
    audio_embedding_paths: list[str] = field(default_factory=list)
    text_hypotheses: list[str] = field(default_factory=list)
    reference_audio_embedding_path: str | None = None
    geo_descriptor: list[float] | None = None

    def to_json_obj(self) -> dict:
        obj = {
            "scene_id": self.scene_id,
            "image_path": self.image_path,
            "patch_embedding_path": self.patch_embedding_path,
            "audio_embedding_paths": list(self.audio_embedding_paths),
            "text_hypotheses": list(self.text_hypotheses),
        }
        if self.reference_audio_embedding_path is not None:
            obj["reference_audio_embedding_path"] = self.reference_audio_embedding_path
        if self.geo_descriptor is not None:
            obj["geo_descriptor"] = [float(v) for v in self.geo_descriptor]
        return obj


_REQUIRED_FIELDS = ("scene_id", "image_path", "patch_embedding_path", "audio_embedding_paths", "text_hypotheses")


def load_manifest(path: str | Path) -> list[SceneManifest]:
    """Load a manifest JSON array, preserving scene order. Paths are kept verbatim."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise SchemaViolation(f"{path}: manifest must be a JSON array")
    scenes: list[SceneManifest] = []
    seen: set[str] = set()
    for i, entry in enumerate(doc):
        if not isinstance(entry, dict):
            raise SchemaViolation(f"{path}[{i}]: entry must be an object")
        for key in _REQUIRED_FIELDS:
            if key not in entry:
                raise SchemaViolation(f"{path}[{i}]: missing required field {key!r}")
        sid = entry["scene_id"]
        if not isinstance(sid, str) or not sid:
            raise SchemaViolation(f"{path}[{i}]: scene_id must be a non-empty string")
        if sid in seen:
            raise SchemaViolation(f"{path}: duplicate scene_id {sid!r}")
        seen.add(sid)
        geo = entry.get("geo_descriptor")
        if geo is not None:
            if not isinstance(geo, list) or len(geo) != 5:
                raise SchemaViolation(f"{path}[{i}]: geo_descriptor must be a 5-element array")
            geo = [float(v) for v in geo]
        scenes.append(
            SceneManifest(
                scene_id=sid,
                image_path=str(entry["image_path"]),
                patch_embedding_path=str(entry["patch_embedding_path"]),
                audio_embedding_paths=[str(p) for p in entry["audio_embedding_paths"]],
                text_hypotheses=[str(t) for t in entry["text_hypotheses"]],
                reference_audio_embedding_path=(
                    str(entry["reference_audio_embedding_path"])
                    if entry.get("reference_audio_embedding_path") is not None
                    else None
                ),
                geo_descriptor=geo,
            )
        )
    return scenes


def save_manifest(path: str | Path, scenes: list[SceneManifest]) -> None:
    """Write scenes as a manifest JSON array (UTF-8, stable key order)."""
    ids = [s.scene_id for s in scenes]
    if len(set(ids)) != len(ids):
        raise SchemaViolation("duplicate scene_id in manifest")
    doc = [s.to_json_obj() for s in scenes]
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoFailure(f"cannot write manifest {path}: {exc}") from exc
