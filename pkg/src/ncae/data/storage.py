"""Dataset directory format.

``manifest.json`` describes the dataset and, per trajectory, the byte offset and
length of its state and derivative blocks inside ``data.bin``.  ``data.bin``
holds little-endian float64 values, states row-major followed by derivatives
row-major, trajectory after trajectory.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .core import Dataset, Trajectory

FORMAT_NAME = "ncae-dataset"
FORMAT_VERSION = 1
MANIFEST = "manifest.json"
DATA = "data.bin"
_DTYPE = np.dtype("<f8")


def build_manifest(ds: Dataset) -> dict:
    offset = 0
    entries = []
    for i, tr in enumerate(ds.trajectories):
        nbytes = tr.states.size * _DTYPE.itemsize
        entries.append({
            "index": i,
            "n_samples": tr.n_samples,
            "context": [float(v) for v in tr.context],
            "states": {"offset": offset, "length": nbytes},
            "derivs": {"offset": offset + nbytes, "length": nbytes},
            "meta": tr.meta,
        })
        offset += 2 * nbytes
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "system": ds.system,
        "regime": ds.regime,
        "split": ds.split,
        "seed": ds.seed,
        "dt": ds.dt,
        "state_dim": ds.state_dim if ds.trajectories else 0,
        "context_dim": ds.context_dim if ds.trajectories else 0,
        "dtype": "float64",
        "byte_order": "little",
        "data_bytes": offset,
        "meta": ds.meta,
        "trajectories": entries,
    }


def dataset_write(ds: Dataset, path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    manifest = build_manifest(ds)
    with open(path / DATA, "wb") as f:
        for tr in ds.trajectories:
            f.write(np.ascontiguousarray(tr.states, dtype=_DTYPE).tobytes())
            f.write(np.ascontiguousarray(tr.derivs, dtype=_DTYPE).tobytes())
    with open(path / MANIFEST, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    return path


def _block(raw: bytes, spec: dict, shape, where: str):
    off, length = spec["offset"], spec["length"]
    expected = int(np.prod(shape)) * _DTYPE.itemsize
    if length != expected:
        raise FormatError(
            f"{where}: declared length {length} bytes at offset {off}, "
            f"but shape {tuple(shape)} needs {expected} bytes"
        )
    if off < 0 or off + length > len(raw):
        raise FormatError(
            f"{where}: block [{off}, {off + length}) exceeds data file of {len(raw)} bytes"
        )
    return np.frombuffer(raw, dtype=_DTYPE, count=length // _DTYPE.itemsize, offset=off).reshape(shape).copy()


def dataset_read(path) -> Dataset:
    path = Path(path)
    try:
        with open(path / MANIFEST, encoding="utf-8") as f:
            m = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read {path / MANIFEST}: {exc}") from exc
    if m.get("format") != FORMAT_NAME or m.get("version") != FORMAT_VERSION:
        raise FormatError(
            f"{path}: not a {FORMAT_NAME} v{FORMAT_VERSION} directory "
            f"(found {m.get('format')!r} v{m.get('version')!r})"
        )
    raw = (path / DATA).read_bytes()
    if len(raw) != m["data_bytes"]:
        raise FormatError(
            f"{path / DATA}: manifest declares {m['data_bytes']} bytes, found {len(raw)} bytes"
        )
    n = m["state_dim"]
    trajs = []
    for e in m["trajectories"]:
        shape = (e["n_samples"], n)
        where = f"trajectory {e['index']}"
        states = _block(raw, e["states"], shape, where + " states")
        derivs = _block(raw, e["derivs"], shape, where + " derivs")
        ctx = np.array(e["context"], dtype=np.float64)
        if ctx.shape != (m["context_dim"],):
            raise FormatError(f"{where}: context has {ctx.size} values, manifest says {m['context_dim']}")
        trajs.append(Trajectory(states, derivs, ctx, e.get("meta", {})))
    return Dataset(trajs, m["system"], m["split"], m.get("regime", ""), m.get("seed"), m.get("dt", 0.0),
                   m.get("meta", {}))
