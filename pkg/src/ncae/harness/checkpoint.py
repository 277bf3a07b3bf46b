"""Checkpoint directories: ``manifest.json`` plus raw little-endian float64 ``weights.bin``."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import DimensionError, FormatError
from ..network import ArchitectureSpec, ModelParams, init_model

FORMAT_NAME = "ncae-checkpoint"
FORMAT_VERSION = 1
MANIFEST = "manifest.json"
WEIGHTS = "weights.bin"
_DTYPE = np.dtype("<f8")


def checkpoint_save(params: ModelParams, path, *, system: str = "", training: dict | None = None,
                    seed: int | None = None, epoch: int = 0, final_loss: float | None = None) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    entries = []
    offset = 0
    with open(path / WEIGHTS, "wb") as f:
        for name, arr in params.tensors().items():
            buf = np.ascontiguousarray(arr, dtype=_DTYPE).tobytes()
            f.write(buf)
            entries.append({"name": name, "shape": list(arr.shape), "offset": offset, "length": len(buf)})
            offset += len(buf)
    manifest = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "system": system,
        "variant": params.spec.variant.value,
        "architecture": params.spec.to_dict(),
        "training": training or {},
        "seed": seed,
        "epoch": epoch,
        "final_loss": final_loss,
        "dtype": "float64",
        "byte_order": "little",
        "weights_bytes": offset,
        "tensors": entries,
    }
    with open(path / MANIFEST, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    return path


def read_manifest(path) -> dict:
    path = Path(path)
    try:
        with open(path / MANIFEST, encoding="utf-8") as f:
            m = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read {path / MANIFEST}: {exc}") from exc
    if m.get("format") != FORMAT_NAME or m.get("version") != FORMAT_VERSION:
        raise FormatError(
            f"{path}: not a {FORMAT_NAME} v{FORMAT_VERSION} checkpoint "
            f"(found {m.get('format')!r} v{m.get('version')!r})"
        )
    return m


def checkpoint_load(path):
    """Return ``(params, manifest)``; every tensor shape is checked against the architecture."""
    path = Path(path)
    m = read_manifest(path)
    spec = ArchitectureSpec.from_dict(m["architecture"])
    template = init_model(spec, np.random.default_rng(0))
    expected = {k: v.shape for k, v in template.tensors().items()}
    raw = (path / WEIGHTS).read_bytes()
    if len(raw) != m["weights_bytes"]:
        raise FormatError(f"{path / WEIGHTS}: manifest declares {m['weights_bytes']} bytes, found {len(raw)}")
    names = [e["name"] for e in m["tensors"]]
    if sorted(names) != sorted(expected):
        missing = sorted(set(expected) - set(names))
        extra = sorted(set(names) - set(expected))
        raise DimensionError(f"checkpoint tensors do not match architecture: missing {missing}, unexpected {extra}")
    arrays = {}
    for e in m["tensors"]:
        shape = tuple(e["shape"])
        if shape != expected[e["name"]]:
            raise DimensionError(
                f"shape mismatch for {e['name']}: checkpoint has {shape}, "
                f"architecture expects {expected[e['name']]}"
            )
        n = int(np.prod(shape))
        if e["length"] != n * _DTYPE.itemsize or e["offset"] + e["length"] > len(raw):
            raise FormatError(f"{e['name']}: bad byte range offset={e['offset']} length={e['length']}")
        arrays[e["name"]] = np.frombuffer(raw, _DTYPE, count=n, offset=e["offset"]).reshape(shape).copy()
    return template.with_tensors(arrays), m
