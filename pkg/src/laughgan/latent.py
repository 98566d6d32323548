"""Latent-space toolkit: seeded sampling, interpolation, mixing, transfer.

Pure functions over LatentVector values; endpoints of every path operation
are preserved exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import ConditionLabel
from .errors import DimensionMismatch, UnconditionalModel, ZeroVectorSlerp
from .msggan import LATENT_DIM, LatentVector

DEFAULT_STEPS = 10


@dataclass
class LatentPath:
    start: LatentVector
    end: LatentVector
    steps: int = DEFAULT_STEPS
    mode: str = "lerp"

    def __post_init__(self):
        if self.steps < 2:
            raise ValueError(f"steps must be >= 2, got {self.steps}")
        if self.mode not in ("lerp", "slerp"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.start.z.shape != self.end.z.shape:
            raise DimensionMismatch(f"endpoint dims differ: {self.start.z.shape} "
                                    f"vs {self.end.z.shape}")


def sample_latent(seed: int, condition: ConditionLabel | None = None,
                  dim: int = LATENT_DIM) -> LatentVector:
    """Deterministic standard-normal latent for a seed."""
    rng = np.random.default_rng(seed)
    return LatentVector(rng.standard_normal(dim).astype(np.float32), condition)


def _slerp(z0: np.ndarray, z1: np.ndarray, t: float) -> np.ndarray:
    n0, n1 = float(np.linalg.norm(z0)), float(np.linalg.norm(z1))
    if n0 == 0.0 or n1 == 0.0:
        raise ZeroVectorSlerp("slerp is undefined for a zero endpoint")
    u0, u1 = z0 / n0, z1 / n1
    dot = float(np.clip(np.dot(u0, u1), -1.0, 1.0))
    omega = np.arccos(dot)
    if omega < 1e-7:
        direction = (1.0 - t) * u0 + t * u1
        direction /= np.linalg.norm(direction)
    else:
        direction = (np.sin((1.0 - t) * omega) * u0 + np.sin(t * omega) * u1) \
            / np.sin(omega)
    return ((1.0 - t) * n0 + t * n1) * direction


def interpolate(path: LatentPath,
                conditions: list[ConditionLabel | None] | None = None) -> list[LatentVector]:
    """Evenly spaced path samples; t=0 and t=1 return exact endpoint copies.

    Conditions stay fixed to the start's unless a per-step condition list is
    given; when the endpoints disagree, the second half switches to the end's.
    """
    z0 = path.start.z.astype(np.float64)
    z1 = path.end.z.astype(np.float64)
    if path.mode == "slerp" and (not np.any(z0) or not np.any(z1)):
        raise ZeroVectorSlerp("slerp is undefined for a zero endpoint")

    if conditions is None:
        c0, c1 = path.start.condition, path.end.condition
        if c1 is not None and c0 is not None and c1 != c0:
            conditions = [c0 if i / (path.steps - 1) < 0.5 else c1
                          for i in range(path.steps)]
        else:
            conditions = [c0] * path.steps
    elif len(conditions) != path.steps:
        raise DimensionMismatch(f"{len(conditions)} conditions for {path.steps} steps")

    out = []
    for i in range(path.steps):
        if i == 0:
            z = path.start.z.copy()
        elif i == path.steps - 1:
            z = path.end.z.copy()
        else:
            t = i / (path.steps - 1)
            if path.mode == "lerp":
                z = (1.0 - t) * z0 + t * z1
            else:
                z = _slerp(z0, z1, t)
            z = z.astype(np.float32)
        out.append(LatentVector(z, conditions[i]))
    return out


def mix_latents(a: LatentVector, b: LatentVector, mask) -> LatentVector:
    """Per-coordinate blend: mask * a + (1 - mask) * b."""
    mask = np.asarray(mask, dtype=np.float32).reshape(-1)
    if mask.shape != a.z.shape or a.z.shape != b.z.shape:
        raise DimensionMismatch(f"mask {mask.shape} vs latents {a.z.shape}/{b.z.shape}")
    return LatentVector(mask * a.z + (1.0 - mask) * b.z, a.condition)


def transfer_condition(latent: LatentVector, new_condition: ConditionLabel) -> LatentVector:
    """Same z rendered under a different categorical attribute."""
    if latent.condition is None:
        raise UnconditionalModel("latent carries no condition to transfer")
    return LatentVector(latent.z.copy(), new_condition)
