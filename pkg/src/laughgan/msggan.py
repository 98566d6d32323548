"""Generator and discriminator graphs: the multi-scale DCGAN-style ladder.

The generator emits a spectrogram at every resolution level; the
discriminator consumes the whole ladder top-down, concatenating each level's
"from-gram" features with its downsampled feature stream. Pixel normalization
follows every convolution in G; D uses none.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .dataset import N_CLASSES, ConditionLabel
from .errors import BadIndex, ShapeMismatch

LATENT_DIM = 256
LEAKY_SLOPE = 0.2


@dataclass(frozen=True)
class GeneratorConfig:
    latent_dim: int = LATENT_DIM
    base_shape: tuple[int, int] = (4, 8)
    n_levels: int = 5
    channels: tuple[int, ...] = (256, 128, 64, 32, 16)
    dilated_blocks: bool = False
    dilation_rates: tuple[int, ...] = (1, 2, 4)
    conditional: bool = False
    n_classes: int = N_CLASSES
    embed_dim: int = 32
    minibatch_std: bool = True   # discriminator-side toggle

    def __post_init__(self):
        if len(self.channels) != self.n_levels:
            raise ShapeMismatch(f"channels list length {len(self.channels)} != "
                                f"n_levels {self.n_levels}")
        if self.n_levels < 1 or self.latent_dim < 1:
            raise ShapeMismatch("n_levels and latent_dim must be positive")

    @property
    def full_shape(self) -> tuple[int, int]:
        scale = 2 ** (self.n_levels - 1)
        return (self.base_shape[0] * scale, self.base_shape[1] * scale)

    def level_shape(self, k: int) -> tuple[int, int]:
        return (self.base_shape[0] * 2 ** k, self.base_shape[1] * 2 ** k)

    def to_dict(self) -> dict:
        return {"latent_dim": self.latent_dim, "base_shape": list(self.base_shape),
                "n_levels": self.n_levels, "channels": list(self.channels),
                "dilated_blocks": self.dilated_blocks,
                "dilation_rates": list(self.dilation_rates),
                "conditional": self.conditional, "n_classes": self.n_classes,
                "embed_dim": self.embed_dim, "minibatch_std": self.minibatch_std}

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        return cls(latent_dim=d["latent_dim"], base_shape=tuple(d["base_shape"]),
                   n_levels=d["n_levels"], channels=tuple(d["channels"]),
                   dilated_blocks=d["dilated_blocks"],
                   dilation_rates=tuple(d["dilation_rates"]),
                   conditional=d["conditional"], n_classes=d["n_classes"],
                   embed_dim=d["embed_dim"], minibatch_std=d.get("minibatch_std", True))


@dataclass
class LatentVector:
    """Generator input: z plus an optional categorical condition."""

    z: np.ndarray
    condition: ConditionLabel | None = None

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=np.float32).reshape(-1)


@dataclass
class MultiScaleOutput:
    """Generator output ladder, low resolution first, values in (-1, 1)."""

    grams: list

    def full(self) -> np.ndarray:
        return self.grams[-1]


def pixel_norm(x: torch.Tensor, eps: float = 1e-8) -> torch.Tensor:
    """Normalize each spatial location to unit RMS across channels."""
    dim = 0 if x.dim() == 3 else 1
    return x / torch.sqrt(x.pow(2).mean(dim=dim, keepdim=True) + eps)


class DilatedResidualBlock(nn.Module):
    """x + f(x) with f a chain of 3x3 convs at increasing dilation rates.

    Receptive field along each axis is 1 + 2 * sum(rates); channel count and
    spatial shape are preserved.
    """

    def __init__(self, channels: int, rates=(1, 2, 4)):
        super().__init__()
        self.convs = nn.ModuleList(
            nn.Conv2d(channels, channels, 3, padding=r, dilation=r) for r in rates)

    def forward(self, x):
        y = x
        for conv in self.convs:
            y = pixel_norm(F.leaky_relu(conv(y), LEAKY_SLOPE))
        return x + y


class MinibatchStdDev(nn.Module):
    """Append one channel holding the batch-wide mean feature deviation."""

    def forward(self, x):
        std = torch.sqrt(x.var(dim=0, unbiased=False) + 1e-8).mean()
        feat = std.expand(x.shape[0], 1, x.shape[2], x.shape[3])
        return torch.cat([x, feat], dim=1)


class Generator(nn.Module):
    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        self.cfg = cfg
        ch = cfg.channels
        in_dim = cfg.latent_dim + (cfg.embed_dim if cfg.conditional else 0)
        self.embed = nn.Embedding(cfg.n_classes, cfg.embed_dim) if cfg.conditional else None
        self.proj = nn.Linear(in_dim, ch[0] * cfg.base_shape[0] * cfg.base_shape[1])
        self.blocks = nn.ModuleList()
        self.residuals = nn.ModuleList()
        self.to_gram = nn.ModuleList()
        for k in range(cfg.n_levels):
            cin = ch[0] if k == 0 else ch[k - 1]
            self.blocks.append(nn.ModuleList([
                nn.Conv2d(cin, ch[k], 3, padding=1),
                nn.Conv2d(ch[k], ch[k], 3, padding=1),
            ]))
            use_res = cfg.dilated_blocks and k > 0   # after each upsampling
            self.residuals.append(
                DilatedResidualBlock(ch[k], cfg.dilation_rates) if use_res else None)
            self.to_gram.append(nn.Conv2d(ch[k], 1, 1))

    def forward(self, z: torch.Tensor, cond: torch.Tensor | None = None):
        cfg = self.cfg
        if cfg.conditional:
            if cond is None:
                raise ShapeMismatch("conditional generator requires a condition")
            z = torch.cat([z, self.embed(cond)], dim=1)
        elif cond is not None:
            raise ShapeMismatch("unconditional generator got a condition")
        x = pixel_norm(z)
        x = self.proj(x).view(-1, cfg.channels[0], *cfg.base_shape)
        x = pixel_norm(F.leaky_relu(x, LEAKY_SLOPE))
        outs = []
        for k in range(cfg.n_levels):
            if k > 0:
                x = F.interpolate(x, scale_factor=2, mode="nearest")
            for conv in self.blocks[k]:
                x = pixel_norm(F.leaky_relu(conv(x), LEAKY_SLOPE))
            if self.residuals[k] is not None:
                x = self.residuals[k](x)
            outs.append(torch.tanh(self.to_gram[k](x)))
        return outs


class Discriminator(nn.Module):
    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        self.cfg = cfg
        ch = cfg.channels
        gram_ch = 1 + (cfg.embed_dim if cfg.conditional else 0)
        self.embed = nn.Embedding(cfg.n_classes, cfg.embed_dim) if cfg.conditional else None
        self.from_gram = nn.ModuleList()
        self.blocks = nn.ModuleList()
        self.mbstd = MinibatchStdDev() if cfg.minibatch_std else None
        for k in range(cfg.n_levels):
            f = max(ch[k] // 2, 4)
            self.from_gram.append(nn.Conv2d(gram_ch, f, 1))
            cin = f + (ch[k + 1] if k + 1 < cfg.n_levels else 0)
            if k == 0 and self.mbstd is not None:
                cin += 1
            self.blocks.append(nn.ModuleList([
                nn.Conv2d(cin, ch[k], 3, padding=1),
                nn.Conv2d(ch[k], ch[k], 3, padding=1),
            ]))
        self.score = nn.Linear(ch[0] * cfg.base_shape[0] * cfg.base_shape[1], 1)

    def forward(self, grams: list, cond: torch.Tensor | None = None) -> torch.Tensor:
        cfg = self.cfg
        if cfg.conditional and cond is None:
            raise ShapeMismatch("conditional discriminator requires a condition")
        if not cfg.conditional and cond is not None:
            raise ShapeMismatch("unconditional discriminator got a condition")
        if len(grams) != cfg.n_levels:
            raise ShapeMismatch(f"expected {cfg.n_levels} grams, got {len(grams)}")
        for k, g in enumerate(grams):
            if tuple(g.shape[-2:]) != cfg.level_shape(k):
                raise ShapeMismatch(f"level {k}: gram shape {tuple(g.shape[-2:])} != "
                                    f"{cfg.level_shape(k)}")

        x = None
        for k in range(cfg.n_levels - 1, -1, -1):
            g = grams[k]
            if cfg.conditional:
                e = self.embed(cond)[:, :, None, None].expand(-1, -1, *g.shape[-2:])
                g = torch.cat([g, e], dim=1)
            f = F.leaky_relu(self.from_gram[k](g), LEAKY_SLOPE)
            x = f if x is None else torch.cat([f, x], dim=1)
            if k == 0 and self.mbstd is not None:
                x = self.mbstd(x)
            for conv in self.blocks[k]:
                x = F.leaky_relu(conv(x), LEAKY_SLOPE)
            if k > 0:
                x = F.avg_pool2d(x, 2)
        return self.score(x.flatten(1)).squeeze(1)


def init_weights(module: nn.Module, seed: int) -> None:
    """Deterministic DCGAN-style init: N(0, 0.02) weights, zero biases."""
    gen = torch.Generator().manual_seed(seed)
    for name, p in module.named_parameters():
        with torch.no_grad():
            if "bias" in name:
                p.zero_()
            elif "embed" in name:
                p.copy_(torch.randn(p.shape, generator=gen))
            else:
                p.copy_(torch.randn(p.shape, generator=gen) * 0.02)


def count_params(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())


# ---------------------------------------------------------------------------
# functional wrappers over NetworkParams snapshots

def build_generator(params, cfg: GeneratorConfig) -> Generator:
    from .params import load_into_module

    gen = Generator(cfg)
    load_into_module(params, gen)
    gen.eval()
    return gen


def build_discriminator(params, cfg: GeneratorConfig) -> Discriminator:
    from .params import load_into_module

    disc = Discriminator(cfg)
    load_into_module(params, disc)
    disc.eval()
    return disc


def generator_forward(params, latent: LatentVector, cfg: GeneratorConfig) -> MultiScaleOutput:
    """Run one latent through a parameter snapshot; returns unbatched grams."""
    gen = build_generator(params, cfg)
    return run_generator(gen, latent)


def run_generator(gen: Generator, latent: LatentVector) -> MultiScaleOutput:
    cfg = gen.cfg
    if latent.z.shape != (cfg.latent_dim,):
        raise ShapeMismatch(f"latent dim {latent.z.shape} != ({cfg.latent_dim},)")
    z = torch.from_numpy(latent.z).unsqueeze(0)
    cond = None
    if latent.condition is not None:
        cond = torch.tensor([latent.condition.class_index], dtype=torch.long)
    with torch.no_grad():
        outs = gen(z, cond)
    return MultiScaleOutput([o[0, 0].numpy() for o in outs])


def discriminator_forward(params, grams, cfg: GeneratorConfig,
                          condition: ConditionLabel | None = None) -> float:
    """Score one gram ladder (MultiScaleOutput or list of 2-D arrays)."""
    disc = build_discriminator(params, cfg)
    arrays = grams.grams if isinstance(grams, MultiScaleOutput) else list(grams)
    tensors = [torch.as_tensor(np.asarray(a), dtype=torch.float32)[None, None] for a in arrays]
    cond = None
    if condition is not None:
        cond = torch.tensor([condition.class_index], dtype=torch.long)
    with torch.no_grad():
        score = disc(tensors, cond)
    return float(score[0])


def embed_condition(label: ConditionLabel, table: np.ndarray) -> np.ndarray:
    """Row lookup into a [n_classes x embed_dim] embedding table."""
    table = np.asarray(table)
    if not 0 <= label.class_index < table.shape[0]:
        raise BadIndex(f"class {label.class_index} outside table of {table.shape[0]} rows")
    return table[label.class_index].copy()
