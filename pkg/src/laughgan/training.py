"""Relativistic average hinge training loop with EMA weights and checkpoints.

One epoch is a full pass over the manifest. The whole loop is deterministic
given the config seed: batch order, augmentation, and every latent draw are
derived statelessly from (seed, purpose, counter), so resuming from a
checkpoint continues the exact run.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from . import dataset, dsp, viz
from .dataset import stable_seed
from .errors import EmptyBatch, ResumeError
from .msggan import Discriminator, Generator, GeneratorConfig, init_weights
from .params import (NetworkParams, load_checkpoint, load_into_module,
                     params_from_module, save_checkpoint)


# ---------------------------------------------------------------------------
# losses

def _as_scores(x) -> torch.Tensor:
    t = torch.as_tensor(x, dtype=torch.get_default_dtype()) if not torch.is_tensor(x) else x
    t = t.reshape(-1)
    if t.numel() == 0:
        raise EmptyBatch("empty score vector")
    return t


def rahinge_d_loss(real_scores, fake_scores) -> torch.Tensor:
    """mean(relu(1 - (r - mean f))) + mean(relu(1 + (f - mean r)))."""
    r = _as_scores(real_scores)
    f = _as_scores(fake_scores)
    return (F.relu(1.0 - (r - f.mean())).mean()
            + F.relu(1.0 + (f - r.mean())).mean())


def rahinge_g_loss(real_scores, fake_scores) -> torch.Tensor:
    """mean(relu(1 + (r - mean f))) + mean(relu(1 - (f - mean r)))."""
    r = _as_scores(real_scores)
    f = _as_scores(fake_scores)
    return (F.relu(1.0 + (r - f.mean())).mean()
            + F.relu(1.0 - (f - r.mean())).mean())


# ---------------------------------------------------------------------------
# optimizer / EMA

class Adam:
    """Bias-corrected Adam with explicit, checkpointable moment tensors."""

    def __init__(self, parameters, lr: float, beta1: float, beta2: float,
                 eps: float = 1e-8):
        self.parameters = list(parameters)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [torch.zeros_like(p) for p in self.parameters]
        self.v = [torch.zeros_like(p) for p in self.parameters]
        self.t = 0

    def zero_grad(self):
        for p in self.parameters:
            p.grad = None

    @torch.no_grad()
    def step(self):
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.parameters, self.m, self.v):
            if p.grad is None:
                continue
            g = p.grad
            m.mul_(self.beta1).add_(g, alpha=1.0 - self.beta1)
            v.mul_(self.beta2).addcmul_(g, g, value=1.0 - self.beta2)
            p.addcdiv_(m / bc1, (v / bc2).sqrt().add_(self.eps), value=-self.lr)


class EmaTracker:
    """Debiased exponential average of a parameter trajectory.

    The accumulator starts at zero and the exposed value is raw / (1 - d^t),
    i.e. the exactly-normalized exponentially weighted average of the steps
    seen so far, so early checkpoints are usable without warmup lag.
    """

    def __init__(self, module, decay: float):
        self.decay = decay
        self.t = 0
        self.raw = {name: torch.zeros_like(p)
                    for name, p in module.state_dict().items()}

    @torch.no_grad()
    def update(self, module):
        self.t += 1
        d = self.decay
        for name, p in module.state_dict().items():
            self.raw[name].mul_(d).add_(p, alpha=1.0 - d)

    @torch.no_grad()
    def debiased(self) -> dict:
        if self.t == 0:
            raise ResumeError("EMA tracker has no updates")
        scale = 1.0 / (1.0 - self.decay ** self.t)
        return {name: raw * scale for name, raw in self.raw.items()}

    def load_into(self, module) -> None:
        module.load_state_dict(self.debiased())


# ---------------------------------------------------------------------------
# configuration / state

@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 1
    batch_size: int = dataset.BATCH_SIZE
    lr_g: float = 3e-4
    lr_d: float = 3e-4
    adam_beta1: float = 0.0
    adam_beta2: float = 0.99
    ema_decay: float = 0.999
    seed: int = 0
    fid_every: int = 0            # 0 disables FID tracking
    dump_every: int = 0           # 0 disables sample dumps
    conditional: bool = False
    dilated: bool = False
    augment: bool = True
    g_steps: int = 1              # generator updates per discriminator update
    n_fid_gen: int = 512          # per-evaluation sample count inside the loop
    threads: int = 1

    def __post_init__(self):
        if self.lr_g <= 0 or self.lr_d <= 0:
            raise ValueError("learning rates must be > 0")
        if not 0.0 <= self.ema_decay < 1.0:
            raise ValueError("ema_decay must lie in [0, 1)")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")
        if self.g_steps < 1:
            raise ValueError("g_steps must be >= 1")

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**{f: d[f] for f in cls.__dataclass_fields__ if f in d})

    def generator_config(self) -> GeneratorConfig:
        return GeneratorConfig(dilated_blocks=self.dilated, conditional=self.conditional)


class TrainState:
    """Mutable training state: networks, optimizer moments, EMA, history."""

    def __init__(self, cfg: TrainConfig, gcfg: GeneratorConfig, norm_hi: float):
        self.cfg = cfg
        self.gcfg = gcfg
        self.norm_hi = norm_hi
        self.gen = Generator(gcfg)
        self.disc = Discriminator(gcfg)
        init_weights(self.gen, stable_seed(cfg.seed, "init_g"))
        init_weights(self.disc, stable_seed(cfg.seed, "init_d"))
        self.opt_g = Adam(self.gen.parameters(), cfg.lr_g, cfg.adam_beta1, cfg.adam_beta2)
        self.opt_d = Adam(self.disc.parameters(), cfg.lr_d, cfg.adam_beta1, cfg.adam_beta2)
        self.ema = EmaTracker(self.gen, cfg.ema_decay)
        self.epoch = 0
        self.global_step = 0
        self.history: list[dict] = []

    # -- persistence ---------------------------------------------------------

    def _opt_sections(self, name, opt):
        params = NetworkParams()
        for i, (m, v) in enumerate(zip(opt.m, opt.v)):
            params.add(f"{name}.{i}.m", m.numpy())
            params.add(f"{name}.{i}.v", v.numpy())
        return params

    def save(self, ckpt_dir) -> Path:
        ema_params = NetworkParams()
        for name, raw in self.ema.raw.items():
            ema_params.add(name, raw.numpy())
        sections = {
            "params_g": params_from_module(self.gen),
            "params_d": params_from_module(self.disc),
            "params_g_ema": ema_params,
            "opt_g": self._opt_sections("opt_g", self.opt_g),
            "opt_d": self._opt_sections("opt_d", self.opt_d),
        }
        meta = {
            "kind": "gan",
            "train_config": self.cfg.to_dict(),
            "generator_config": self.gcfg.to_dict(),
            "norm_hi": self.norm_hi,
            "epoch": self.epoch,
            "global_step": self.global_step,
            "opt_g_t": self.opt_g.t,
            "opt_d_t": self.opt_d.t,
            "ema_t": self.ema.t,
            "history": self.history,
        }
        return save_checkpoint(ckpt_dir, sections, meta)

    @classmethod
    def load(cls, ckpt_dir) -> "TrainState":
        sections, meta = load_checkpoint(ckpt_dir)
        if meta.get("kind") != "gan":
            raise ResumeError(f"{ckpt_dir}: not a training checkpoint")
        cfg = TrainConfig.from_dict(meta["train_config"])
        gcfg = GeneratorConfig.from_dict(meta["generator_config"])
        state = cls(cfg, gcfg, meta["norm_hi"])
        load_into_module(sections["params_g"], state.gen)
        load_into_module(sections["params_d"], state.disc)
        for name in state.ema.raw:
            state.ema.raw[name] = torch.from_numpy(sections["params_g_ema"][name].copy())
        for opt, sec_name, t_key in ((state.opt_g, "opt_g", "opt_g_t"),
                                     (state.opt_d, "opt_d", "opt_d_t")):
            sec = sections[sec_name]
            for i in range(len(opt.parameters)):
                opt.m[i] = torch.from_numpy(sec[f"{sec_name}.{i}.m"].copy())
                opt.v[i] = torch.from_numpy(sec[f"{sec_name}.{i}.v"].copy())
            opt.t = meta[t_key]
        state.ema.t = meta["ema_t"]
        state.epoch = meta["epoch"]
        state.global_step = meta["global_step"]
        state.history = meta["history"]
        return state

    def ema_generator(self) -> Generator:
        """Read-only generator snapshot carrying the EMA weights."""
        gen = Generator(self.gcfg)
        if self.ema.t == 0:
            gen.load_state_dict(self.gen.state_dict())
        else:
            self.ema.load_into(gen)
        gen.eval()
        return gen


def torch_randn(shape, seed: int) -> torch.Tensor:
    g = torch.Generator().manual_seed(seed)
    return torch.randn(*shape, generator=g)


def real_ladder(grams: torch.Tensor, n_levels: int) -> list[torch.Tensor]:
    """Average-pooling tower of a real batch, low resolution first."""
    full = grams.unsqueeze(1) if grams.dim() == 3 else grams
    ladder = [full]
    for _ in range(n_levels - 1):
        ladder.append(F.avg_pool2d(ladder[-1], 2))
    return ladder[::-1]


def _fake_conds(cond: torch.Tensor | None, n: int) -> torch.Tensor | None:
    if cond is None:
        return None
    reps = (n + len(cond) - 1) // len(cond)
    return cond.repeat(reps)[:n]


def train_step(state: TrainState, grams: torch.Tensor,
               conds: torch.Tensor | None) -> tuple[float, float]:
    """One discriminator update then cfg.g_steps generator updates.

    The fake batch always carries cfg.batch_size samples even when the real
    batch is short, which keeps generator updates full-width on tiny corpora.
    """
    if grams.shape[0] == 0:
        raise EmptyBatch("empty training batch")
    cfg, gcfg = state.cfg, state.gcfg
    n_fake = cfg.batch_size
    cond = conds if gcfg.conditional else None
    fcond = _fake_conds(cond, n_fake)
    real = real_ladder(grams, gcfg.n_levels)

    # discriminator step
    z = torch_randn((n_fake, gcfg.latent_dim),
                    stable_seed(cfg.seed, "z_d", state.global_step))
    with torch.no_grad():
        fake = [t.detach() for t in state.gen(z, fcond)]
    state.opt_d.zero_grad()
    loss_d = rahinge_d_loss(state.disc(real, cond), state.disc(fake, fcond))
    loss_d.backward()
    state.opt_d.step()

    # generator steps against the updated discriminator
    with torch.no_grad():
        real_scores = state.disc(real, cond)
    for sub in range(cfg.g_steps):
        z = torch_randn((n_fake, gcfg.latent_dim),
                        stable_seed(cfg.seed, "z_g", state.global_step, sub))
        state.opt_g.zero_grad()
        fake_scores = state.disc(state.gen(z, fcond), fcond)
        loss_g = rahinge_g_loss(real_scores, fake_scores)
        loss_g.backward()
        state.opt_g.step()
        state.ema.update(state.gen)

    state.global_step += 1
    return float(loss_d.detach()), float(loss_g.detach())


# ---------------------------------------------------------------------------
# full run

def run_training(cfg: TrainConfig, manifest_path, out_dir,
                 resume: bool = False, classifier_path=None,
                 corpus_root=None) -> TrainState:
    """Train per config, writing metrics/dumps/checkpoints under out_dir."""
    torch.set_num_threads(max(1, cfg.threads))
    manifest_path = Path(manifest_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    root = Path(corpus_root) if corpus_root else manifest_path.parent
    entries = dataset.read_manifest(manifest_path).entries

    ckpt_dir = out_dir / "checkpoint"
    if resume:
        state = TrainState.load(ckpt_dir)
        if state.cfg.seed != cfg.seed or state.gcfg != cfg.generator_config():
            raise ResumeError("checkpoint config is incompatible with the requested run")
        state.cfg = replace(state.cfg, epochs=cfg.epochs)
        cfg = state.cfg
    else:
        norm_hi = dataset.compute_norm_hi(root, entries)
        state = TrainState(cfg, cfg.generator_config(), norm_hi)

    metrics_path = out_dir / "metrics.jsonl"
    _truncate_metrics(metrics_path, state.epoch)

    classifier = None
    real_features = None
    if cfg.fid_every > 0:
        if classifier_path is None:
            raise ValueError("fid tracking requires a classifier checkpoint")
        from . import evaluation

        classifier = evaluation.load_classifier(classifier_path)
        real_grams = np.stack([
            dataset.load_gram(root, e, state.norm_hi) for e in entries
        ]).astype(np.float32)
        real_features = evaluation.extract_features(classifier, real_grams)

    label_pool = np.array([e.class_index for e in entries], dtype=np.int64)

    for epoch in range(state.epoch + 1, cfg.epochs + 1):
        t0 = time.monotonic()
        losses_d, losses_g = [], []
        for grams, labels, _ in dataset.make_batches(
                root, entries, state.norm_hi, cfg.batch_size, cfg.seed,
                cfg.augment, epoch):
            ld, lg = train_step(state, torch.from_numpy(grams),
                                torch.from_numpy(labels))
            losses_d.append(ld)
            losses_g.append(lg)

        record = {"epoch": epoch,
                  "loss_d": float(np.mean(losses_d)),
                  "loss_g": float(np.mean(losses_g))}
        if cfg.fid_every > 0 and (epoch == 1 or epoch % cfg.fid_every == 0):
            from . import evaluation

            record["fid"] = evaluation.training_fid(
                state, classifier, real_features, label_pool,
                n_gen=cfg.n_fid_gen)
        state.history.append(record)
        state.epoch = epoch
        state.save(ckpt_dir)

        with open(metrics_path, "a") as fh:
            fh.write(json.dumps({**record, "wall_s": round(time.monotonic() - t0, 3)})
                     + "\n")

        if cfg.dump_every > 0 and epoch % cfg.dump_every == 0:
            dump_samples(state, out_dir / "samples" / f"epoch_{epoch:05d}")

    if state.history:
        viz.save_training_curves(state.history, out_dir / "training_curves.png")
    return state


def _truncate_metrics(metrics_path: Path, epoch: int) -> None:
    if not metrics_path.exists():
        return
    kept = []
    with open(metrics_path) as fh:
        for line in fh:
            if line.strip() and json.loads(line)["epoch"] <= epoch:
                kept.append(line)
    with open(metrics_path, "w") as fh:
        fh.writelines(kept)


def dump_samples(state: TrainState, dump_dir, n: int = 16,
                 render_audio: bool = True) -> None:
    """Render the same fixed latents every time for visual comparability."""
    dump_dir = Path(dump_dir)
    dump_dir.mkdir(parents=True, exist_ok=True)
    gcfg = state.gcfg
    z = torch_randn((n, gcfg.latent_dim), stable_seed(state.cfg.seed, "dump"))
    cond = (torch.arange(n, dtype=torch.long) % gcfg.n_classes
            if gcfg.conditional else None)
    gen = state.ema_generator()
    with torch.no_grad():
        full = gen(z, cond)[-1][:, 0].numpy()
    viz.save_sample_grid(list(full), dump_dir / "grid.png",
                         title=f"epoch {state.epoch}")
    if render_audio:
        for i, values in enumerate(full):
            gram = dsp.MelGram(values, dsp.LOG_FLOOR, state.norm_hi)
            dsp.save_clip(dsp.mel_inverse(gram), dump_dir / f"cell_{i:02d}.wav")
