"""Corpus manifest ingestion, label vocabulary, splits, and batch streaming."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dsp
from .errors import BadIndex, EmptyManifest, MissingFile

GENDERS = ("male", "female")
AGE_GROUPS = ("adult", "child", "teen")
N_CLASSES = len(GENDERS) * len(AGE_GROUPS)
DURATION_RANGE = (1.0, 8.0)
BATCH_SIZE = 16
VAL_FRAC = 0.1


def stable_seed(*parts) -> int:
    """Deterministic 63-bit seed from arbitrary parts; stable across processes."""
    blob = "\x1f".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.blake2s(blob).digest()[:8], "little") >> 1


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    gender: str
    age_group: str
    duration_s: float

    @property
    def source_id(self) -> str:
        return self.path

    @property
    def class_index(self) -> int:
        return GENDERS.index(self.gender) * len(AGE_GROUPS) + AGE_GROUPS.index(self.age_group)


@dataclass(frozen=True)
class ConditionLabel:
    """One of six joint (gender x age_group) classes."""

    class_index: int

    def __post_init__(self):
        if not 0 <= self.class_index < N_CLASSES:
            raise BadIndex(f"class_index {self.class_index} outside [0, {N_CLASSES})")

    @classmethod
    def from_labels(cls, gender: str, age_group: str) -> "ConditionLabel":
        if gender not in GENDERS or age_group not in AGE_GROUPS:
            raise BadIndex(f"unknown labels ({gender}, {age_group})")
        return cls(GENDERS.index(gender) * len(AGE_GROUPS) + AGE_GROUPS.index(age_group))

    @property
    def gender(self) -> str:
        return GENDERS[self.class_index // len(AGE_GROUPS)]

    @property
    def age_group(self) -> str:
        return AGE_GROUPS[self.class_index % len(AGE_GROUPS)]

    @property
    def one_hot(self) -> np.ndarray:
        v = np.zeros(N_CLASSES, dtype=np.float32)
        v[self.class_index] = 1.0
        return v


@dataclass
class CorpusStats:
    n_clips: int
    gender_fractions: dict
    age_fractions: dict
    norm_hi: float | None = None

    def to_json(self) -> str:
        return json.dumps(
            {"n_clips": self.n_clips, "gender_fractions": self.gender_fractions,
             "age_fractions": self.age_fractions, "norm_hi": self.norm_hi},
            sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "CorpusStats":
        d = json.loads(text)
        return cls(d["n_clips"], d["gender_fractions"], d["age_fractions"], d.get("norm_hi"))


@dataclass
class ManifestReport:
    entries: list = field(default_factory=list)
    violations: list = field(default_factory=list)   # (line_no, reason)

    @property
    def n_rejected(self) -> int:
        return len(self.violations)


def read_manifest(path) -> ManifestReport:
    """Parse a JSON-Lines manifest; malformed lines are collected, not fatal."""
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"manifest {path} does not exist")

    report = ManifestReport()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                report.entries.append(_parse_entry(line))
            except ValueError as exc:
                report.violations.append((line_no, str(exc)))

    if not report.entries:
        raise EmptyManifest(f"{path}: no valid entries "
                            f"({report.n_rejected} rejected lines)")
    return report


def _parse_entry(line: str) -> ManifestEntry:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValueError(f"not valid JSON: {exc}")
    if not isinstance(obj, dict):
        raise ValueError("line is not a JSON object")
    missing = {"path", "gender", "age_group", "duration_s"} - obj.keys()
    if missing:
        raise ValueError(f"missing keys {sorted(missing)}")
    path = obj["path"]
    if not isinstance(path, str) or not path:
        raise ValueError("path must be a non-empty string")
    p = Path(path)
    if p.is_absolute() or ".." in p.parts:
        raise ValueError(f"path {path!r} must stay under the corpus root")
    if obj["gender"] not in GENDERS:
        raise ValueError(f"gender {obj['gender']!r} not in {GENDERS}")
    if obj["age_group"] not in AGE_GROUPS:
        raise ValueError(f"age_group {obj['age_group']!r} not in {AGE_GROUPS}")
    try:
        duration = float(obj["duration_s"])
    except (TypeError, ValueError):
        raise ValueError("duration_s must be a number")
    if not DURATION_RANGE[0] <= duration <= DURATION_RANGE[1]:
        raise ValueError(f"duration_s {duration} outside {DURATION_RANGE}")
    return ManifestEntry(path, obj["gender"], obj["age_group"], duration)


def corpus_stats(entries, norm_hi: float | None = None) -> CorpusStats:
    n = len(entries)
    gender = {g: sum(1 for e in entries if e.gender == g) / n for g in GENDERS}
    age = {a: sum(1 for e in entries if e.age_group == a) / n for a in AGE_GROUPS}
    return CorpusStats(n, gender, age, norm_hi)


def compute_norm_hi(root, entries) -> float:
    """Corpus-level max of the raw log-Mel magnitudes (non-augmented clips)."""
    root = Path(root)
    hi = dsp.LOG_FLOOR
    for e in entries:
        clip = dsp.frame_clip(dsp.load_clip(root / e.path))
        hi = max(hi, float(dsp.log_mel(clip).max()))
    if hi <= dsp.LOG_FLOOR:
        hi = dsp.LOG_FLOOR + 1.0   # all-silent corpus; keep the affine map valid
    return hi


def split_entries(entries, val_frac: float = VAL_FRAC, seed: int = 0):
    """Fixed seeded train/validation split."""
    order = np.random.default_rng(stable_seed(seed, "split")).permutation(len(entries))
    n_val = max(1, int(round(len(entries) * val_frac))) if len(entries) > 1 else 0
    val_idx = set(order[:n_val].tolist())
    train = [e for i, e in enumerate(entries) if i not in val_idx]
    val = [e for i, e in enumerate(entries) if i in val_idx]
    return train, val


def load_gram(root, entry: ManifestEntry, norm_hi: float,
              augment: bool = False, seed: int = 0, epoch: int = 0,
              aug_spec: dsp.AugmentSpec | None = None) -> np.ndarray:
    """Load one manifest entry as a normalized full-resolution gram."""
    clip = dsp.load_clip(Path(root) / entry.path)
    clip = dsp.frame_clip(clip)
    if augment:
        spec = aug_spec or dsp.AugmentSpec()
        clip = dsp.augment(clip, spec, stable_seed(seed, entry.source_id, epoch))
    return dsp.mel_forward(clip, norm_hi=norm_hi).values


def make_batches(root, entries, norm_hi: float, batch_size: int = BATCH_SIZE,
                 seed: int = 0, augment: bool = False, epoch: int = 0,
                 aug_spec: dsp.AugmentSpec | None = None):
    """Yield (grams [B, 64, 128] float32, class indices [B] int64, source_ids).

    One epoch per call; order is an epoch-seeded permutation and the final
    short batch is kept. Per-item augmentation seeds derive from
    (seed, source_id, epoch) so workers could fan out deterministically.
    """
    if not entries:
        raise EmptyManifest("no entries to batch")
    order = np.random.default_rng(stable_seed(seed, "order", epoch)).permutation(len(entries))
    for lo in range(0, len(order), batch_size):
        chunk = [entries[i] for i in order[lo:lo + batch_size]]
        grams = np.stack([
            load_gram(root, e, norm_hi, augment, seed, epoch, aug_spec) for e in chunk
        ]).astype(np.float32)
        labels = np.array([e.class_index for e in chunk], dtype=np.int64)
        yield grams, labels, [e.source_id for e in chunk]


# ---------------------------------------------------------------------------
# Optional raw-float gram cache

def write_gram_cache(root, entries, norm_hi: float, out_dir) -> Path:
    """Precompute non-augmented grams as one raw f32le blob plus a JSON index."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    blob_name = "grams.f32le"
    index = {}
    offset = 0
    with open(out_dir / blob_name, "wb") as fh:
        for e in entries:
            g = load_gram(root, e, norm_hi).astype("<f4")
            fh.write(g.tobytes())
            index[e.source_id] = {"file": blob_name, "offset": offset, "shape": list(g.shape)}
            offset += g.nbytes
    with open(out_dir / "index.json", "w") as fh:
        json.dump({"norm_hi": norm_hi, "entries": index}, fh, sort_keys=True, indent=2)
    return out_dir


def read_cached_gram(cache_dir, source_id: str) -> np.ndarray:
    cache_dir = Path(cache_dir)
    with open(cache_dir / "index.json") as fh:
        index = json.load(fh)
    meta = index["entries"][source_id]
    shape = tuple(meta["shape"])
    count = int(np.prod(shape))
    with open(cache_dir / meta["file"], "rb") as fh:
        fh.seek(meta["offset"])
        flat = np.frombuffer(fh.read(count * 4), dtype="<f4")
    return flat.reshape(shape)
