"""Rendering helpers: spectrogram PNGs, sample grids, and training curves."""

from __future__ import annotations

import io
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from PIL import Image


def gram_to_image(values: np.ndarray, scale: int = 4) -> Image.Image:
    """Grayscale image of a [-1, 1] gram, low frequencies at the bottom."""
    v = np.asarray(values, dtype=np.float64)
    pixels = np.clip((v + 1.0) / 2.0 * 255.0, 0, 255).astype(np.uint8)
    img = Image.fromarray(np.flipud(pixels), mode="L")
    if scale != 1:
        img = img.resize((img.width * scale, img.height * scale), Image.NEAREST)
    return img


def gram_png_bytes(values: np.ndarray, scale: int = 4) -> bytes:
    buf = io.BytesIO()
    gram_to_image(values, scale).save(buf, format="PNG")
    return buf.getvalue()


def save_gram_png(values: np.ndarray, path, scale: int = 4) -> None:
    Path(path).write_bytes(gram_png_bytes(values, scale))


def save_sample_grid(grams, path, ncols: int = 4, title: str | None = None) -> None:
    """Tile generated grams into one figure for epoch-over-epoch comparison."""
    n = len(grams)
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(2.2 * ncols, 1.4 * nrows))
    axes = np.atleast_1d(axes).ravel()
    for ax in axes:
        ax.set_axis_off()
    for ax, g in zip(axes, grams):
        ax.imshow(np.asarray(g), cmap="gray", vmin=-1, vmax=1,
                  origin="lower", aspect="auto", interpolation="nearest")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def save_training_curves(history, path) -> None:
    """Loss curves plus the FID trajectory, one figure per training run."""
    epochs = [h["epoch"] for h in history]
    fid_points = [(h["epoch"], h["fid"]) for h in history if h.get("fid") is not None]
    fig, (ax_loss, ax_fid) = plt.subplots(1, 2, figsize=(9, 3.2))
    ax_loss.plot(epochs, [h["loss_d"] for h in history], label="loss_d")
    ax_loss.plot(epochs, [h["loss_g"] for h in history], label="loss_g")
    ax_loss.set_xlabel("epoch")
    ax_loss.set_ylabel("loss")
    ax_loss.legend()
    if fid_points:
        ax_fid.plot(*zip(*fid_points), marker="o")
    ax_fid.set_xlabel("epoch")
    ax_fid.set_ylabel("fid")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
