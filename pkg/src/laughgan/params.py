"""Named, shaped, serializable weight collections and the checkpoint container.

A checkpoint is a directory holding `manifest.json` plus raw little-endian
float32 blobs, one blob file per section. Round-trips are bit-exact and
writes are atomic (write to a temp dir, then rename).
"""

from __future__ import annotations

import json
import os
import shutil
import tempfile
from pathlib import Path

import numpy as np

from .errors import ResumeError, ShapeMismatch

FORMAT_VERSION = 1


class NetworkParams:
    """Ordered name -> float32 array mapping with shape bookkeeping."""

    def __init__(self, entries: dict[str, np.ndarray] | None = None):
        self._entries: dict[str, np.ndarray] = {}
        if entries:
            for name, values in entries.items():
                self.add(name, values)

    def add(self, name: str, values) -> None:
        if name in self._entries:
            raise ShapeMismatch(f"duplicate entry {name!r}")
        self._entries[name] = np.ascontiguousarray(values, dtype="<f4")

    def __getitem__(self, name: str) -> np.ndarray:
        return self._entries[name]

    def __contains__(self, name):
        return name in self._entries

    def __len__(self):
        return len(self._entries)

    def names(self):
        return list(self._entries)

    def items(self):
        return self._entries.items()

    def n_values(self) -> int:
        return sum(v.size for v in self._entries.values())

    def __eq__(self, other):
        if not isinstance(other, NetworkParams):
            return NotImplemented
        return self.names() == other.names() and all(
            np.array_equal(a, other[n]) for n, a in self.items())


def save_checkpoint(out_dir, sections: dict[str, NetworkParams], meta: dict) -> Path:
    """Atomically write a checkpoint directory; returns its path."""
    out_dir = Path(out_dir)
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(dir=out_dir.parent, prefix=out_dir.name + ".tmp"))
    try:
        manifest = {"format_version": FORMAT_VERSION, "meta": meta, "sections": []}
        for sec_name, params in sections.items():
            blob_name = f"{sec_name}.bin"
            entries = []
            offset = 0
            with open(tmp / blob_name, "wb") as fh:
                for name, values in params.items():
                    raw = values.tobytes()
                    fh.write(raw)
                    entries.append({"name": name, "shape": list(values.shape),
                                    "dtype": "f32le", "blob": blob_name, "offset": offset})
                    offset += len(raw)
            manifest["sections"].append({"name": sec_name, "entries": entries})
        with open(tmp / "manifest.json", "w") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=2)
            fh.write("\n")
        if out_dir.exists():
            old = Path(tempfile.mkdtemp(dir=out_dir.parent, prefix=out_dir.name + ".old"))
            os.replace(out_dir, old / "gone")
            shutil.rmtree(old, ignore_errors=True)
        os.replace(tmp, out_dir)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return out_dir


def load_checkpoint(ckpt_dir) -> tuple[dict[str, NetworkParams], dict]:
    """Read (sections, meta) from a checkpoint directory."""
    ckpt_dir = Path(ckpt_dir)
    manifest_path = ckpt_dir / "manifest.json"
    if not manifest_path.exists():
        raise ResumeError(f"{ckpt_dir}: not a checkpoint (no manifest.json)")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if manifest.get("format_version") != FORMAT_VERSION:
        raise ResumeError(f"{ckpt_dir}: unsupported format_version "
                          f"{manifest.get('format_version')}")
    sections = {}
    blobs = {}
    for sec in manifest["sections"]:
        params = NetworkParams()
        for entry in sec["entries"]:
            if entry["dtype"] != "f32le":
                raise ResumeError(f"unsupported dtype {entry['dtype']}")
            blob_name = entry["blob"]
            if blob_name not in blobs:
                blobs[blob_name] = (ckpt_dir / blob_name).read_bytes()
            count = int(np.prod(entry["shape"])) if entry["shape"] else 1
            start = entry["offset"]
            flat = np.frombuffer(blobs[blob_name], dtype="<f4", count=count, offset=start)
            params.add(entry["name"], flat.reshape(entry["shape"]))
        sections[sec["name"]] = params
    return sections, manifest["meta"]


def checkpoint_tag(ckpt_dir) -> str:
    """Stable short identifier for a checkpoint's exact contents."""
    import hashlib

    ckpt_dir = Path(ckpt_dir)
    digest = hashlib.sha256((ckpt_dir / "manifest.json").read_bytes())
    for blob in sorted(ckpt_dir.glob("*.bin")):
        digest.update(blob.name.encode())
        digest.update(blob.read_bytes())
    return digest.hexdigest()[:12]


# ---------------------------------------------------------------------------
# torch bridges

def params_from_module(module) -> NetworkParams:
    """Snapshot a torch module's state as float32 arrays."""
    params = NetworkParams()
    for name, tensor in module.state_dict().items():
        params.add(name, tensor.detach().cpu().numpy())
    return params


def load_into_module(params: NetworkParams, module) -> None:
    """Load a NetworkParams snapshot into a torch module, strict on shapes."""
    import torch

    state = module.state_dict()
    expected = set(state)
    got = set(params.names())
    if expected != got:
        raise ShapeMismatch(f"entry names differ: missing={sorted(expected - got)} "
                            f"unexpected={sorted(got - expected)}")
    for name in state:
        values = params[name]
        if tuple(values.shape) != tuple(state[name].shape):
            raise ShapeMismatch(f"{name}: shape {values.shape} != {tuple(state[name].shape)}")
    module.load_state_dict(
        {name: torch.from_numpy(params[name].copy()) for name in state})
