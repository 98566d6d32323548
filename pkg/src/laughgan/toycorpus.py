"""Deterministic desk-scale corpus of synthetic laughter-like clips.

Each joint (gender, age_group) class gets a distinct fundamental band so the
classes are separable on the Mel axis. Clips are bursts of a harmonic stack
with a breathy noise floor, amplitude-modulated at a chuckle-like rate.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .dsp import SAMPLE_RATE, AudioClip, save_clip

# fundamental frequency (Hz) per joint class; distinct, non-overlapping bands
CLASS_F0 = {
    ("male", "adult"): 120.0,
    ("male", "teen"): 175.0,
    ("male", "child"): 290.0,
    ("female", "adult"): 230.0,
    ("female", "teen"): 340.0,
    ("female", "child"): 500.0,
}


def laughter_clip(f0: float, duration_s: float, seed: int, sr: int = SAMPLE_RATE) -> AudioClip:
    """One synthetic laugh: a burst train of decaying harmonics plus breath noise."""
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * sr))
    t = np.arange(n) / sr

    burst_rate = rng.uniform(3.5, 5.5)
    burst_phase = rng.uniform(0.0, 1.0)
    cycle = (t * burst_rate + burst_phase) % 1.0
    envelope = np.exp(-6.0 * cycle) * (cycle < 0.65)
    onset = np.minimum(t / 0.15, 1.0) * np.minimum((duration_s - t) / 0.2, 1.0)
    envelope *= np.clip(onset, 0.0, 1.0)

    vibrato = 1.0 + 0.02 * np.sin(2.0 * np.pi * rng.uniform(4.0, 7.0) * t)
    jitter = 1.0 + 0.03 * rng.standard_normal()
    phase = 2.0 * np.pi * np.cumsum(f0 * jitter * vibrato) / sr

    x = np.zeros(n)
    for h in range(1, 7):
        x += np.sin(h * phase) / (h ** 1.3)
    x *= envelope
    x += 0.02 * rng.standard_normal(n) * (0.3 + envelope)

    peak = np.max(np.abs(x))
    if peak > 0:
        x *= 0.7 / peak
    return AudioClip(x, sr)


def generate_toy_corpus(out_dir, n_clips: int = 32, seed: int = 7) -> Path:
    """Write WAVs plus a manifest.jsonl under out_dir; returns the manifest path."""
    out_dir = Path(out_dir)
    (out_dir / "wav").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    classes = list(CLASS_F0.items())

    lines = []
    for i in range(n_clips):
        (gender, age), f0 = classes[i % len(classes)]
        duration = float(rng.uniform(1.5, 6.0))
        clip = laughter_clip(f0 * float(rng.uniform(0.95, 1.05)), duration, seed=seed * 10007 + i)
        rel = f"wav/{gender}_{age}_{i:03d}.wav"
        save_clip(clip, out_dir / rel)
        lines.append({"path": rel, "gender": gender, "age_group": age,
                      "duration_s": round(duration, 3)})

    manifest = out_dir / "manifest.jsonl"
    with open(manifest, "w") as fh:
        for line in lines:
            fh.write(json.dumps(line) + "\n")
    return manifest


def main(argv=None):
    import argparse

    ap = argparse.ArgumentParser(description="Generate the deterministic toy corpus.")
    ap.add_argument("out_dir")
    ap.add_argument("--n-clips", type=int, default=32)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)
    manifest = generate_toy_corpus(args.out_dir, args.n_clips, args.seed)
    print(manifest)


if __name__ == "__main__":
    main()
