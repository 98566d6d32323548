"""HTTP inference service: sampling, interpolation, and condition transfer.

Every response is reproducible from (checkpoint_tag, request body): latent ids
encode their own seed and condition, so the server keeps no required state
beyond the immutable checkpoint snapshot.
"""

from __future__ import annotations

import base64
import re
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from . import dsp, latent, viz
from .dataset import AGE_GROUPS, GENDERS, ConditionLabel
from .errors import ZeroVectorSlerp
from .latent import LatentPath, interpolate, sample_latent, transfer_condition
from .msggan import Generator, LatentVector
from .params import checkpoint_tag
from .training import TrainState

_LATENT_ID = re.compile(r"^s(\d+)(?:c(\d))?$")


@dataclass
class ServiceConfig:
    checkpoint: str
    max_steps: int = 32
    timeout_s: float = 60.0
    gl_iters: int = dsp.GL_ITERS

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be > 0")
        if self.max_steps < 2:
            raise ValueError("max_steps must be >= 2")


class ModelSnapshot:
    """Immutable, read-only view of one checkpoint's EMA generator."""

    def __init__(self, ckpt_dir):
        state = TrainState.load(Path(ckpt_dir))
        self.generator: Generator = state.ema_generator()
        self.gcfg = state.gcfg
        self.norm_hi = state.norm_hi
        self.tag = checkpoint_tag(ckpt_dir)

    @property
    def conditional(self) -> bool:
        return self.gcfg.conditional

    def classes(self) -> list[dict]:
        if not self.conditional:
            return []
        out = []
        for idx in range(self.gcfg.n_classes):
            label = ConditionLabel(idx)
            out.append({"index": idx, "gender": label.gender,
                        "age_group": label.age_group})
        return out


def render_artifacts(snapshot: ModelSnapshot, latent_vec: LatentVector,
                     gl_iters: int = dsp.GL_ITERS):
    """Render one latent to (wav_bytes, png_bytes, gram_values)."""
    z = torch.from_numpy(latent_vec.z).unsqueeze(0)
    cond_t = None
    if latent_vec.condition is not None:
        cond_t = torch.tensor([latent_vec.condition.class_index], dtype=torch.long)
    with torch.no_grad():
        full = snapshot.generator(z, cond_t)[-1][0, 0].numpy()
    gram = dsp.MelGram(full, dsp.LOG_FLOOR, snapshot.norm_hi)
    clip = dsp.mel_inverse(gram, gl_iters=gl_iters)
    return dsp.clip_to_wav_bytes(clip), viz.gram_png_bytes(gram.values), gram.values


def encode_latent_id(seed: int, condition: int | None) -> str:
    return f"s{seed}" if condition is None else f"s{seed}c{condition}"


def decode_latent_id(token: str) -> tuple[int, int | None]:
    m = _LATENT_ID.match(token)
    if not m:
        raise ValueError(f"malformed latent id {token!r}")
    return int(m.group(1)), (int(m.group(2)) if m.group(2) is not None else None)


class SampleRequest(BaseModel):
    seed: int | None = None
    condition: int | None = None


class InterpolateRequest(BaseModel):
    a: int | str
    b: int | str
    steps: int = latent.DEFAULT_STEPS
    mode: str = "lerp"


class TransferRequest(BaseModel):
    latent_id: str
    new_condition: int


def create_app(config: ServiceConfig) -> FastAPI:
    torch.set_num_threads(1)
    snapshot = ModelSnapshot(config.checkpoint)
    app = FastAPI(title="laughgan")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    def check_condition(condition: int | None) -> ConditionLabel | None:
        if condition is None:
            if snapshot.conditional:
                raise HTTPException(400, "conditional model requires a condition")
            return None
        if not snapshot.conditional:
            raise HTTPException(400, "unconditional model accepts no condition")
        if not 0 <= condition < snapshot.gcfg.n_classes:
            raise HTTPException(
                400, f"condition {condition} outside [0, {snapshot.gcfg.n_classes})")
        return ConditionLabel(condition)

    def render(latent_vec: LatentVector, seed: int) -> dict:
        wav, png, gram_values = render_artifacts(snapshot, latent_vec, config.gl_iters)
        cond_idx = (latent_vec.condition.class_index
                    if latent_vec.condition is not None else None)
        return {
            "latent_id": encode_latent_id(seed, cond_idx),
            "seed": seed,
            "condition": cond_idx,
            "wav_b64": base64.b64encode(wav).decode(),
            "mel_png_b64": base64.b64encode(png).decode(),
            "mel_shape": list(gram_values.shape),
        }

    def resolve_endpoint(ref) -> tuple[LatentVector, int]:
        if isinstance(ref, int):
            label = check_condition(None)
            return sample_latent(ref, label, snapshot.gcfg.latent_dim), ref
        try:
            seed, cond_idx = decode_latent_id(ref)
        except ValueError:
            raise HTTPException(404, f"unknown latent id {ref!r}")
        label = check_condition(cond_idx)
        return sample_latent(seed, label, snapshot.gcfg.latent_dim), seed

    @app.get("/healthz")
    def healthz():
        from fastapi.responses import PlainTextResponse

        return PlainTextResponse("ok")

    @app.get("/v1/model")
    def model_card():
        return {
            "latent_dim": snapshot.gcfg.latent_dim,
            "conditional": snapshot.conditional,
            "classes": snapshot.classes(),
            "checkpoint_tag": snapshot.tag,
            "sample_rate": dsp.SAMPLE_RATE,
            "clip_seconds": dsp.CLIP_SECONDS,
        }

    @app.post("/v1/sample")
    def sample(req: SampleRequest):
        label = check_condition(req.condition)
        seed = req.seed if req.seed is not None else int(
            np.random.default_rng().integers(0, 2 ** 31 - 1))
        return render(sample_latent(seed, label, snapshot.gcfg.latent_dim), seed)

    @app.post("/v1/interpolate")
    def interpolate_endpoint(req: InterpolateRequest):
        if not 2 <= req.steps <= config.max_steps:
            raise HTTPException(400, f"steps must lie in [2, {config.max_steps}]")
        if req.mode not in ("lerp", "slerp"):
            raise HTTPException(400, f"unknown mode {req.mode!r}")
        start, seed_a = resolve_endpoint(req.a)
        end, seed_b = resolve_endpoint(req.b)
        try:
            path = LatentPath(start, end, steps=req.steps, mode=req.mode)
            vectors = interpolate(path)
        except ZeroVectorSlerp as exc:
            raise HTTPException(400, str(exc))

        t0 = time.monotonic()
        payloads = []
        for i, vec in enumerate(vectors):
            if time.monotonic() - t0 > config.timeout_s:
                raise HTTPException(503, "render budget exceeded; retry with "
                                         "fewer steps or a larger timeout")
            seed = seed_a if i == 0 else (seed_b if i == len(vectors) - 1 else seed_a)
            payload = render(vec, seed)
            if 0 < i < len(vectors) - 1:
                # midpoints have no self-contained seed; index them instead
                payload["latent_id"] = None
            payload["step"] = i
            payloads.append(payload)
        return {"steps": payloads, "mode": req.mode}

    @app.post("/v1/transfer")
    def transfer(req: TransferRequest):
        if not snapshot.conditional:
            raise HTTPException(400, "unconditional model cannot transfer conditions")
        try:
            seed, cond_idx = decode_latent_id(req.latent_id)
        except ValueError:
            raise HTTPException(404, f"unknown latent id {req.latent_id!r}")
        if cond_idx is None:
            raise HTTPException(400, "latent id carries no condition")
        if not 0 <= req.new_condition < snapshot.gcfg.n_classes:
            raise HTTPException(400, f"condition {req.new_condition} outside range")
        source = sample_latent(seed, ConditionLabel(cond_idx), snapshot.gcfg.latent_dim)
        moved = transfer_condition(source, ConditionLabel(req.new_condition))
        return render(moved, seed)

    return app
