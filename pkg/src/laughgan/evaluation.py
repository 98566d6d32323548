"""Spectrogram classifier, feature extraction, and Fréchet distance.

The distance uses features from a small gender/age classifier trained on the
corpus spectrograms rather than generic image-model embeddings.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from . import dataset
from .dataset import N_CLASSES, stable_seed
from .errors import DimensionMismatch, ResumeError, ShapeMismatch, SingleClassCorpus
from .params import (NetworkParams, load_checkpoint, load_into_module,
                     params_from_module, save_checkpoint)

FEATURE_DIM = 64


@dataclass
class FeatureSet:
    """Penultimate-layer activations for a batch of grams."""

    features: np.ndarray           # [N, F]
    source: str = "real"
    checkpoint_tag: str = ""

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2:
            raise DimensionMismatch(f"features must be 2-D, got {self.features.shape}")

    @property
    def n(self) -> int:
        return self.features.shape[0]


@dataclass
class FidReport:
    fid: float
    mu_real: np.ndarray
    mu_gen: np.ndarray
    trace_real: float
    trace_gen: float
    trace_sqrt: float
    n_real: int
    n_gen: int
    epoch: int | None = None

    def to_dict(self) -> dict:
        return {"fid": self.fid,
                "mu_real": [float(x) for x in self.mu_real],
                "mu_gen": [float(x) for x in self.mu_gen],
                "trace_real": self.trace_real, "trace_gen": self.trace_gen,
                "trace_sqrt": self.trace_sqrt,
                "n_real": self.n_real, "n_gen": self.n_gen, "epoch": self.epoch}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


@dataclass(frozen=True)
class ClassifierConfig:
    channels: tuple[int, ...] = (32, 64, 128, 256)
    feature_dim: int = FEATURE_DIM
    n_classes: int = N_CLASSES
    epochs: int = 30
    batch_size: int = 16
    lr: float = 1e-3
    seed: int = 0

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "ClassifierConfig":
        d = dict(d)
        for key in ("channels",):
            d[key] = tuple(d[key])
        return cls(**{f: d[f] for f in cls.__dataclass_fields__ if f in d})


class Classifier(nn.Module):
    """Four conv levels, global average pool, 64-unit penultimate dense head."""

    def __init__(self, cfg: ClassifierConfig = ClassifierConfig()):
        super().__init__()
        self.cfg = cfg
        convs = []
        cin = 1
        for c in cfg.channels:
            convs.append(nn.Conv2d(cin, c, 3, padding=1))
            cin = c
        self.convs = nn.ModuleList(convs)
        self.fc_feat = nn.Linear(cfg.channels[-1], cfg.feature_dim)
        self.fc_out = nn.Linear(cfg.feature_dim, cfg.n_classes)

    def features(self, x: torch.Tensor) -> torch.Tensor:
        """Penultimate activations, pre-nonlinearity."""
        if x.dim() == 3:
            x = x.unsqueeze(1)
        for conv in self.convs:
            x = F.avg_pool2d(F.leaky_relu(conv(x), 0.2), 2)
        x = x.mean(dim=(2, 3))
        return self.fc_feat(x)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.fc_out(F.leaky_relu(self.features(x), 0.2))


def _init_classifier(model: Classifier, seed: int) -> None:
    gen = torch.Generator().manual_seed(seed)
    for name, p in model.named_parameters():
        with torch.no_grad():
            if "bias" in name:
                p.zero_()
            else:
                fan_in = p.shape[1] * (p.shape[2] * p.shape[3] if p.dim() == 4 else 1)
                p.copy_(torch.randn(p.shape, generator=gen) * (2.0 / fan_in) ** 0.5)


def train_classifier(root, entries, norm_hi: float,
                     cfg: ClassifierConfig = ClassifierConfig(),
                     val_frac: float = dataset.VAL_FRAC):
    """Cross-entropy training on the six joint classes; deterministic per seed.

    Returns (params, report) where report carries train/val accuracy.
    """
    from .training import Adam   # shared optimizer implementation

    if len({e.class_index for e in entries}) < 2:
        raise SingleClassCorpus("need at least two joint classes to train")
    torch.set_num_threads(1)
    train_entries, val_entries = dataset.split_entries(entries, val_frac, cfg.seed)
    if not val_entries:
        val_entries = train_entries

    model = Classifier(cfg)
    _init_classifier(model, stable_seed(cfg.seed, "clf_init"))
    opt = Adam(model.parameters(), cfg.lr, 0.9, 0.999)

    for epoch in range(1, cfg.epochs + 1):
        model.train()
        for grams, labels, _ in dataset.make_batches(
                root, train_entries, norm_hi, cfg.batch_size,
                seed=stable_seed(cfg.seed, "clf"), augment=False, epoch=epoch):
            opt.zero_grad()
            logits = model(torch.from_numpy(grams))
            loss = F.cross_entropy(logits, torch.from_numpy(labels))
            loss.backward()
            opt.step()

    def accuracy(subset):
        model.eval()
        hits = total = 0
        for grams, labels, _ in dataset.make_batches(
                root, subset, norm_hi, cfg.batch_size,
                seed=stable_seed(cfg.seed, "clf_eval"), augment=False):
            with torch.no_grad():
                pred = model(torch.from_numpy(grams)).argmax(dim=1).numpy()
            hits += int((pred == labels).sum())
            total += len(labels)
        return hits / total

    report = {"train_accuracy": accuracy(train_entries),
              "val_accuracy": accuracy(val_entries),
              "n_train": len(train_entries), "n_val": len(val_entries),
              "epochs": cfg.epochs}
    return params_from_module(model), report


def save_classifier(path, params: NetworkParams, cfg: ClassifierConfig,
                    norm_hi: float, report: dict) -> Path:
    return save_checkpoint(path, {"classifier": params},
                           {"kind": "classifier", "classifier_config": cfg.to_dict(),
                            "norm_hi": norm_hi, "report": report})


def load_classifier(path) -> Classifier:
    sections, meta = load_checkpoint(path)
    if meta.get("kind") != "classifier":
        raise ResumeError(f"{path}: not a classifier checkpoint")
    model = Classifier(ClassifierConfig.from_dict(meta["classifier_config"]))
    load_into_module(sections["classifier"], model)
    model.eval()
    return model


def extract_features(classifier: Classifier, grams, source: str = "real",
                     checkpoint_tag: str = "", batch_size: int = 64) -> FeatureSet:
    """Row-order-preserving penultimate features for full-resolution grams."""
    grams = np.asarray(grams, dtype=np.float32)
    if grams.ndim == 2:
        grams = grams[None]
    if grams.shape[-2:] != (64, 128):
        raise ShapeMismatch(f"expected full-resolution grams, got {grams.shape}")
    chunks = []
    classifier.eval()
    with torch.no_grad():
        for lo in range(0, len(grams), batch_size):
            batch = torch.from_numpy(grams[lo:lo + batch_size])
            chunks.append(classifier.features(batch).numpy())
    return FeatureSet(np.concatenate(chunks, axis=0), source, checkpoint_tag)


def predict_classes(classifier: Classifier, grams) -> np.ndarray:
    grams = np.asarray(grams, dtype=np.float32)
    if grams.ndim == 2:
        grams = grams[None]
    with torch.no_grad():
        logits = classifier(torch.from_numpy(grams))
    return logits.argmax(dim=1).numpy()


# ---------------------------------------------------------------------------
# Fréchet distance

def _moments(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n, f = features.shape
    mu = features.mean(axis=0)
    if n < 2:
        warnings.warn("covariance undefined for a singleton set; using zeros")
        return mu, np.zeros((f, f))
    centered = features - mu
    sigma = centered.T @ centered / (n - 1)
    if n < f + 1:
        warnings.warn(f"N={n} < F+1={f + 1}: covariance is rank-deficient, "
                      "applying diagonal shrinkage")
        sigma = sigma + np.eye(f) * (1e-6 * np.trace(sigma) / f)
    return mu, sigma


def _sqrt_psd(matrix: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((matrix + matrix.T) / 2.0)
    vals = np.maximum(vals, 0.0)
    return (vecs * np.sqrt(vals)) @ vecs.T


def frechet_distance(a: FeatureSet, b: FeatureSet, epoch: int | None = None) -> FidReport:
    """||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2}), eigh-based sqrt."""
    if a.features.shape[1] != b.features.shape[1]:
        raise DimensionMismatch(f"feature widths differ: {a.features.shape[1]} "
                                f"vs {b.features.shape[1]}")
    mu_a, sig_a = _moments(a.features)
    mu_b, sig_b = _moments(b.features)

    root_a = _sqrt_psd(sig_a)
    inner = root_a @ sig_b @ root_a
    vals = np.linalg.eigvalsh((inner + inner.T) / 2.0)
    trace_sqrt = float(np.sqrt(np.maximum(vals, 0.0)).sum())

    mean_term = float(np.sum((mu_a - mu_b) ** 2))
    fid = mean_term + float(np.trace(sig_a)) + float(np.trace(sig_b)) - 2.0 * trace_sqrt
    if -1e-6 < fid < 0.0:
        fid = 0.0
    return FidReport(fid=fid, mu_real=mu_a, mu_gen=mu_b,
                     trace_real=float(np.trace(sig_a)),
                     trace_gen=float(np.trace(sig_b)),
                     trace_sqrt=trace_sqrt,
                     n_real=a.n, n_gen=b.n, epoch=epoch)


# ---------------------------------------------------------------------------
# checkpoint-level evaluation

def generate_grams(gen, n_gen: int, seed: int,
                   label_pool: np.ndarray | None = None,
                   batch_size: int = 64) -> np.ndarray:
    """Fixed-seed generation of n_gen full-resolution grams from a generator."""
    from .training import torch_randn

    gcfg = gen.cfg
    z = torch_randn((n_gen, gcfg.latent_dim), seed)
    cond = None
    if gcfg.conditional:
        if label_pool is None or len(label_pool) == 0:
            raise ShapeMismatch("conditional generation needs a label pool")
        cond = torch.from_numpy(
            np.asarray(label_pool, dtype=np.int64)[np.arange(n_gen) % len(label_pool)])
    out = []
    with torch.no_grad():
        for lo in range(0, n_gen, batch_size):
            zc = z[lo:lo + batch_size]
            cc = cond[lo:lo + batch_size] if cond is not None else None
            out.append(gen(zc, cc)[-1][:, 0].numpy())
    return np.concatenate(out, axis=0)


def training_fid(state, classifier: Classifier, real_features: FeatureSet,
                 label_pool: np.ndarray, n_gen: int = 512) -> float:
    """FID hook used inside the training loop; same latents every call."""
    gen = state.ema_generator()
    grams = generate_grams(gen, n_gen, stable_seed(state.cfg.seed, "fid"),
                           label_pool if state.gcfg.conditional else None)
    feats = extract_features(classifier, grams, source="generated")
    return frechet_distance(real_features, feats, epoch=state.epoch).fid


def evaluate_checkpoint(ckpt_dir, classifier_path, manifest_path,
                        n_gen: int = 2048, seed: int = 0,
                        corpus_root=None) -> FidReport:
    """FID between a checkpoint's EMA generator and the real, non-augmented corpus."""
    from .training import TrainState

    manifest_path = Path(manifest_path)
    root = Path(corpus_root) if corpus_root else manifest_path.parent
    state = TrainState.load(Path(ckpt_dir))
    classifier = load_classifier(classifier_path)
    entries = dataset.read_manifest(manifest_path).entries

    real_grams = np.stack([
        dataset.load_gram(root, e, state.norm_hi) for e in entries
    ]).astype(np.float32)
    real_feats = extract_features(classifier, real_grams, source="real")

    label_pool = np.array([e.class_index for e in entries], dtype=np.int64)
    gen = state.ema_generator()
    gen_grams = generate_grams(gen, n_gen, stable_seed(seed, "eval_fid"),
                               label_pool if state.gcfg.conditional else None)
    gen_feats = extract_features(classifier, gen_grams, source="generated")
    return frechet_distance(real_feats, gen_feats, epoch=state.epoch)
