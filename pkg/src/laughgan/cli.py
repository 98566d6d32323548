"""Single entry-point command orchestrating every pipeline stage.

Exit codes: 0 success, 1 runtime failure, 2 usage or input error,
3 state error (unresumable checkpoint). Seed precedence per subcommand:
--seed flag, then the --config JSON file, then LAUGHGAN_SEED, then 0.
"""

from __future__ import annotations

import functools
import json
import os
import sys
from pathlib import Path

import click

from .errors import (BadIndex, EmptyAudio, EmptyManifest, LaughganError,
                     MissingFile, ResumeError, ShapeMismatch,
                     UnreadableFile, UnsupportedEncoding)

SEED_ENV = "LAUGHGAN_SEED"

_INPUT_ERRORS = (MissingFile, EmptyManifest, UnreadableFile, UnsupportedEncoding,
                 EmptyAudio, BadIndex, ValueError)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ResumeError as exc:
            click.echo(f"state error: {exc}", err=True)
            sys.exit(3)
        except _INPUT_ERRORS as exc:
            click.echo(f"input error: {exc}", err=True)
            sys.exit(2)
        except LaughganError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
    return wrapper


def load_config(config_path):
    if not config_path:
        return {}
    try:
        with open(config_path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read config {config_path}: {exc}")
    if not isinstance(cfg, dict):
        raise click.UsageError(f"config {config_path} must hold a JSON object")
    return cfg


def pick(flag_value, config: dict, key: str, default):
    """Flag > config file > default (env handled separately for seeds)."""
    if flag_value is not None:
        return flag_value
    if key in config:
        return config[key]
    return default


def resolve_seed(flag_value, config: dict) -> int:
    if flag_value is not None:
        return flag_value
    if "seed" in config:
        return int(config["seed"])
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise click.UsageError(f"{SEED_ENV}={env!r} is not an integer")
    return 0


config_option = click.option("--config", "config_path", type=click.Path(),
                             default=None, help="JSON file of flag defaults.")
seed_option = click.option("--seed", type=int, default=None,
                           help=f"RNG seed (falls back to config, then ${SEED_ENV}).")


@click.group()
def main():
    """Laughter synthesis: data prep, GAN training, evaluation, and serving."""


# ---------------------------------------------------------------------------
# prepare

@main.command()
@click.option("--manifest", required=True, type=click.Path())
@click.option("--out", type=click.Path(), default=None,
              help="Directory for stats.json and the gram cache.")
@click.option("--stats-only", is_flag=True, help="Skip writing the gram cache.")
@config_option
@seed_option
@handle_errors
def prepare(manifest, out, stats_only, config_path, seed):
    """Validate a manifest, compute corpus stats, optionally cache grams."""
    from . import dataset

    config = load_config(config_path)
    resolve_seed(seed, config)   # accepted for interface uniformity
    report = dataset.read_manifest(manifest)
    for line_no, reason in report.violations:
        click.echo(f"line {line_no}: {reason}", err=True)

    root = Path(manifest).parent
    norm_hi = dataset.compute_norm_hi(root, report.entries)
    stats = dataset.corpus_stats(report.entries, norm_hi)

    if out:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "stats.json").write_text(stats.to_json() + "\n")
        if not stats_only:
            dataset.write_gram_cache(root, report.entries, norm_hi, out / "grams")
    click.echo(stats.to_json())


# ---------------------------------------------------------------------------
# train

@main.command()
@click.option("--manifest", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@click.option("--epochs", type=int, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--conditional", is_flag=True, default=None)
@click.option("--dilated", is_flag=True, default=None)
@click.option("--augment/--no-augment", "augment", default=None)
@click.option("--fid-every", type=int, default=None)
@click.option("--dump-every", type=int, default=None)
@click.option("--classifier", type=click.Path(), default=None,
              help="Classifier checkpoint for FID tracking.")
@click.option("--resume", is_flag=True, help="Continue from the latest checkpoint.")
@click.option("--threads", type=int, default=None)
@config_option
@seed_option
@handle_errors
def train(manifest, out, epochs, batch_size, conditional, dilated, augment,
          fid_every, dump_every, classifier, resume, threads, config_path, seed):
    """Train the GAN; writes metrics, dumps, and resumable checkpoints."""
    from .training import TrainConfig, run_training

    config = load_config(config_path)
    cfg = TrainConfig(
        epochs=pick(epochs, config, "epochs", 1),
        batch_size=pick(batch_size, config, "batch_size", 16),
        conditional=bool(pick(conditional, config, "conditional", False)),
        dilated=bool(pick(dilated, config, "dilated", False)),
        augment=bool(pick(augment, config, "augment", True)),
        fid_every=pick(fid_every, config, "fid_every", 0),
        dump_every=pick(dump_every, config, "dump_every", 0),
        threads=pick(threads, config, "threads", 1),
        seed=resolve_seed(seed, config),
    )
    classifier = pick(classifier, config, "classifier", None)
    state = run_training(cfg, manifest, out, resume=resume,
                         classifier_path=classifier)
    click.echo(json.dumps({"epochs_done": state.epoch,
                           "checkpoint": str(Path(out) / "checkpoint")}))


# ---------------------------------------------------------------------------
# eval

@main.command("eval")
@click.option("--checkpoint", required=True, type=click.Path())
@click.option("--classifier", required=True, type=click.Path())
@click.option("--manifest", required=True, type=click.Path())
@click.option("--n-gen", type=int, default=None)
@config_option
@seed_option
@handle_errors
def eval_cmd(checkpoint, classifier, manifest, n_gen, config_path, seed):
    """FID between a checkpoint's EMA generator and the real corpus."""
    from .evaluation import evaluate_checkpoint

    config = load_config(config_path)
    report = evaluate_checkpoint(
        checkpoint, classifier, manifest,
        n_gen=pick(n_gen, config, "n_gen", 2048),
        seed=resolve_seed(seed, config))
    click.echo(report.to_json())


# ---------------------------------------------------------------------------
# sample / interpolate

def _snapshot(checkpoint):
    import torch

    from .service import ModelSnapshot

    torch.set_num_threads(1)
    return ModelSnapshot(checkpoint)


def _label(snapshot, condition, flag_name):
    from .dataset import ConditionLabel

    if condition is None:
        if snapshot.conditional:
            raise click.UsageError(f"conditional checkpoint requires {flag_name}")
        return None
    if not snapshot.conditional:
        raise click.UsageError("unconditional checkpoint accepts no condition")
    if not 0 <= condition < snapshot.gcfg.n_classes:
        raise click.UsageError(f"condition {condition} outside "
                               f"[0, {snapshot.gcfg.n_classes})")
    return ConditionLabel(condition)


@main.command()
@click.option("--checkpoint", required=True, type=click.Path())
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--condition", type=int, default=None)
@click.option("--gl-iters", type=int, default=None)
@config_option
@seed_option
@handle_errors
def sample(checkpoint, out_dir, condition, gl_iters, config_path, seed):
    """Render one sample from a seed to WAV + PNG files."""
    from . import dsp
    from .latent import sample_latent
    from .service import render_artifacts

    config = load_config(config_path)
    seed = resolve_seed(seed, config)
    snapshot = _snapshot(checkpoint)
    label = _label(snapshot, pick(condition, config, "condition", None), "--condition")
    wav, png, _ = render_artifacts(
        snapshot, sample_latent(seed, label, snapshot.gcfg.latent_dim),
        pick(gl_iters, config, "gl_iters", dsp.GL_ITERS))

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"s{seed}" if label is None else f"s{seed}_c{label.class_index}"
    (out / f"{stem}.wav").write_bytes(wav)
    (out / f"{stem}.png").write_bytes(png)
    click.echo(json.dumps({"wav": str(out / f'{stem}.wav'),
                           "png": str(out / f'{stem}.png')}))


@main.command()
@click.option("--checkpoint", required=True, type=click.Path())
@click.option("-a", "seed_a", type=int, required=True, help="Start seed.")
@click.option("-b", "seed_b", type=int, required=True, help="End seed.")
@click.option("--steps", type=click.IntRange(min=2), default=10)
@click.option("--mode", type=click.Choice(["lerp", "slerp"]), default="lerp")
@click.option("--condition-a", type=int, default=None)
@click.option("--condition-b", type=int, default=None)
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--gl-iters", type=int, default=None)
@config_option
@seed_option
@handle_errors
def interpolate(checkpoint, seed_a, seed_b, steps, mode, condition_a, condition_b,
                out_dir, gl_iters, config_path, seed):
    """Render a latent interpolation as numbered WAV + PNG files."""
    from . import dsp
    from .latent import LatentPath, interpolate as interp, sample_latent
    from .service import render_artifacts

    config = load_config(config_path)
    resolve_seed(seed, config)
    snapshot = _snapshot(checkpoint)
    label_a = _label(snapshot, condition_a, "--condition-a")
    label_b = _label(snapshot, condition_b, "--condition-b")
    start = sample_latent(seed_a, label_a, snapshot.gcfg.latent_dim)
    end = sample_latent(seed_b, label_b, snapshot.gcfg.latent_dim)
    vectors = interp(LatentPath(start, end, steps=steps, mode=mode))

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    iters = pick(gl_iters, config, "gl_iters", dsp.GL_ITERS)
    index = []
    for i, vec in enumerate(vectors):
        wav, png, _ = render_artifacts(snapshot, vec, iters)
        (out / f"{i:02d}.wav").write_bytes(wav)
        (out / f"{i:02d}.png").write_bytes(png)
        index.append({"step": i,
                      "condition": vec.condition.class_index if vec.condition else None})
    (out / "index.json").write_text(json.dumps(
        {"a": seed_a, "b": seed_b, "steps": steps, "mode": mode, "files": index},
        indent=2) + "\n")
    click.echo(json.dumps({"out_dir": str(out), "steps": steps}))


# ---------------------------------------------------------------------------
# classify

@main.command()
@click.option("--manifest", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path())
@click.option("--epochs", type=int, default=None)
@config_option
@seed_option
@handle_errors
def classify(manifest, out, epochs, config_path, seed):
    """Train the gender/age spectrogram classifier used for FID features."""
    from . import dataset
    from .evaluation import ClassifierConfig, save_classifier, train_classifier

    config = load_config(config_path)
    report = dataset.read_manifest(manifest)
    root = Path(manifest).parent
    norm_hi = dataset.compute_norm_hi(root, report.entries)
    cfg = ClassifierConfig(epochs=pick(epochs, config, "epochs", 30),
                           seed=resolve_seed(seed, config))
    params, acc = train_classifier(root, report.entries, norm_hi, cfg)
    save_classifier(out, params, cfg, norm_hi, acc)
    click.echo(json.dumps({"checkpoint": str(out), **acc}))


# ---------------------------------------------------------------------------
# serve

@main.command()
@click.option("--checkpoint", required=True, type=click.Path())
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.option("--max-steps", type=int, default=None)
@click.option("--timeout", "timeout_s", type=float, default=None)
@config_option
@seed_option
@handle_errors
def serve(checkpoint, host, port, max_steps, timeout_s, config_path, seed):
    """Serve the latent-exploration HTTP API over a checkpoint."""
    import uvicorn

    from .service import ServiceConfig, create_app

    config = load_config(config_path)
    resolve_seed(seed, config)
    app = create_app(ServiceConfig(
        checkpoint=checkpoint,
        max_steps=pick(max_steps, config, "max_steps", 32),
        timeout_s=pick(timeout_s, config, "timeout", 60.0)))
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
