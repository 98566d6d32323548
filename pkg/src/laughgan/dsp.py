"""Waveform I/O, augmentation, Mel transforms, and Griffin-Lim reconstruction.

Everything between bytes-on-disk audio and normalized spectrogram arrays.
All operations are pure given (input, seed) and safe to call concurrently.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from .errors import BadLength, BadLevel, EmptyAudio, UnreadableFile, UnsupportedEncoding

SAMPLE_RATE = 22050
CLIP_SECONDS = 3.0
CLIP_SAMPLES = 66150          # 3.0 s at 22050 Hz
N_FFT = 1024
HOP = 512
N_MELS = 64
N_FRAMES = 128
N_LEVELS = 5                  # 4x8 .. 64x128 dyadic ladder
LOG_FLOOR = float(np.log(1e-5))
DEFAULT_NORM_HI = float(np.log(256.0))   # headroom for full-scale tones; corpora override
GL_ITERS = 60


@dataclass
class AudioClip:
    """Mono waveform at the fixed project sample rate."""

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE
    source_id: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)

    def __len__(self):
        return len(self.samples)

    def rms(self) -> float:
        return float(np.sqrt(np.mean(np.square(self.samples)))) if len(self) else 0.0


@dataclass
class MelGram:
    """Normalized log-Mel magnitudes in [-1, 1], the GAN's sample space."""

    values: np.ndarray
    norm_lo: float = LOG_FLOOR
    norm_hi: float = DEFAULT_NORM_HI

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.norm_lo >= self.norm_hi:
            raise ValueError(f"norm_lo {self.norm_lo} must be < norm_hi {self.norm_hi}")
        h, w = self.values.shape
        if not any(h == N_MELS >> k and w == N_FRAMES >> k for k in range(N_LEVELS)):
            raise ValueError(f"shape {h}x{w} is not on the {N_MELS}x{N_FRAMES} dyadic ladder")

    @property
    def shape(self):
        return self.values.shape


@dataclass
class AugmentSpec:
    """Ranges and per-op enable probabilities for waveform augmentation.

    Each op is independently enabled with its probability; disabled ops leave
    the signal untouched, so the identity augmentation is always reachable.
    """

    noise_snr_db: tuple[float, float] = (20.0, 40.0)
    shift_frac: tuple[float, float] = (-0.25, 0.25)
    pitch_semitones: tuple[float, float] = (-2.0, 2.0)
    stretch_factor: tuple[float, float] = (0.9, 1.1)
    p_noise: float = 0.5
    p_shift: float = 0.5
    p_pitch: float = 0.5
    p_stretch: float = 0.5

    def __post_init__(self):
        for name in ("noise_snr_db", "shift_frac", "pitch_semitones", "stretch_factor"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name}: empty range ({lo}, {hi})")
        for name in ("p_noise", "p_shift", "p_pitch", "p_stretch"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name}={p} outside [0, 1]")


# ---------------------------------------------------------------------------
# Waveform I/O

def load_clip(path, target_sr: int = SAMPLE_RATE) -> AudioClip:
    """Read a RIFF/WAVE file as a mono clip at target_sr with amplitudes in [-1, 1]."""
    path = Path(path)
    try:
        sr, data = wavfile.read(path)
    except FileNotFoundError:
        raise UnreadableFile(f"{path}: no such file")
    except Exception as exc:
        raise UnreadableFile(f"{path}: {exc}")

    if data.dtype == np.int16:
        x = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        # 24-bit PCM arrives as int32 with the low byte zeroed; same scale rule.
        x = data.astype(np.float64) / 2147483648.0
    elif data.dtype == np.float32 or data.dtype == np.float64:
        x = data.astype(np.float64)
    else:
        raise UnsupportedEncoding(f"{path}: dtype {data.dtype} not supported")

    if x.ndim == 2:
        x = x.mean(axis=1)
    if x.size == 0:
        raise EmptyAudio(f"{path}: zero samples")

    if sr != target_sr:
        frac = Fraction(target_sr, sr)
        x = resample_poly(x, frac.numerator, frac.denominator)
    x = np.clip(x, -1.0, 1.0)
    return AudioClip(x, target_sr, source_id=path.stem)


def save_clip(clip: AudioClip, path) -> None:
    """Write a clip as mono PCM 16-bit little-endian WAV."""
    x = np.clip(clip.samples, -1.0, 1.0)
    wavfile.write(Path(path), clip.sample_rate, (x * 32767.0).astype(np.int16))


def clip_to_wav_bytes(clip: AudioClip) -> bytes:
    import io

    buf = io.BytesIO()
    x = np.clip(clip.samples, -1.0, 1.0)
    wavfile.write(buf, clip.sample_rate, (x * 32767.0).astype(np.int16))
    return buf.getvalue()


def frame_clip(clip: AudioClip, target_len: int = CLIP_SAMPLES, mode: str = "pad",
               seed: int = 0) -> AudioClip:
    """Fix a clip to exactly target_len samples.

    Shorter clips are zero-padded symmetrically regardless of mode; longer
    clips are cropped per mode in {random_crop, center_crop, pad}, where
    "pad" falls back to center_crop for long inputs.
    """
    x = clip.samples
    n = len(x)
    if n == 0:
        raise EmptyAudio("cannot frame an empty clip")
    if n == target_len:
        return AudioClip(x.copy(), clip.sample_rate, clip.source_id)
    if n < target_len:
        lead = (target_len - n) // 2
        out = np.zeros(target_len, dtype=np.float64)
        out[lead:lead + n] = x
        return AudioClip(out, clip.sample_rate, clip.source_id)
    if mode == "random_crop":
        start = int(np.random.default_rng(seed).integers(0, n - target_len + 1))
    else:
        start = (n - target_len) // 2
    return AudioClip(x[start:start + target_len].copy(), clip.sample_rate, clip.source_id)


# ---------------------------------------------------------------------------
# Augmentation

def _add_noise(x, snr_db, rng):
    rms_s = np.sqrt(np.mean(np.square(x)))
    if rms_s == 0.0:
        return x
    rms_n = rms_s / 10.0 ** (snr_db / 20.0)
    return x + rng.standard_normal(len(x)) * rms_n


def _shift(x, frac):
    k = int(np.floor(frac * len(x)))
    out = np.zeros_like(x)
    if k >= 0:
        out[k:] = x[:len(x) - k] if k else x
    else:
        out[:k] = x[-k:]
    return out


def _stretch(x, factor, win=N_FFT, hop_a=256):
    """Overlap-add time stretch: output duration ~ len(x) * factor."""
    if len(x) < win:
        pad = np.zeros(win, dtype=np.float64)
        pad[:len(x)] = x
        x = pad
    hop_s = max(1, int(round(hop_a * factor)))
    w = np.hanning(win)
    n_frames = 1 + (len(x) - win) // hop_a
    out_len = win + hop_s * (n_frames - 1)
    y = np.zeros(out_len)
    norm = np.zeros(out_len)
    for t in range(n_frames):
        a = t * hop_a
        s = t * hop_s
        y[s:s + win] += x[a:a + win] * w
        norm[s:s + win] += w
    good = norm > 1e-8
    y[good] /= norm[good]
    return y


def _pitch_shift(x, semitones):
    """Resample-then-stretch pitch change preserving duration."""
    rate = 2.0 ** (semitones / 12.0)
    frac = Fraction(1.0 / rate).limit_denominator(1000)
    y = resample_poly(x, frac.numerator, frac.denominator)   # pitch scaled by `rate`, duration by 1/rate
    return _stretch(y, rate)


def augment(clip: AudioClip, spec: AugmentSpec, rng_seed: int,
            target_len: int = CLIP_SAMPLES) -> AudioClip:
    """Apply an independently sampled subset of {noise, shift, pitch, stretch}.

    Ops run in that fixed order; deterministic given rng_seed. Output is
    re-framed to target_len and clamped to [-1, 1]. With all ops disabled the
    input samples are returned bitwise-identical.
    """
    rng = np.random.default_rng(rng_seed)
    do_noise = rng.random() < spec.p_noise
    do_shift = rng.random() < spec.p_shift
    do_pitch = rng.random() < spec.p_pitch
    do_stretch = rng.random() < spec.p_stretch

    if not (do_noise or do_shift or do_pitch or do_stretch):
        return AudioClip(clip.samples.copy(), clip.sample_rate, clip.source_id)

    x = clip.samples
    if do_noise:
        snr = rng.uniform(*spec.noise_snr_db)
        x = _add_noise(x, snr, rng)
    if do_shift:
        x = _shift(x, rng.uniform(*spec.shift_frac))
    if do_pitch:
        x = _pitch_shift(x, rng.uniform(*spec.pitch_semitones))
    if do_stretch:
        x = _stretch(x, rng.uniform(*spec.stretch_factor))

    out = frame_clip(AudioClip(x, clip.sample_rate, clip.source_id), target_len)
    out.samples = np.clip(out.samples, -1.0, 1.0)
    return out


# ---------------------------------------------------------------------------
# STFT / Mel machinery

@functools.lru_cache(maxsize=4)
def _hann(n_fft: int) -> np.ndarray:
    # periodic Hann; pairs of 50%-overlapped windows sum to a constant
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n_fft) / n_fft)


def stft(x: np.ndarray, n_fft: int = N_FFT, hop: int = HOP) -> np.ndarray:
    """Centered, reflect-padded STFT with a Hann window; [n_fft//2+1, frames]."""
    pad = n_fft // 2
    xp = np.pad(np.asarray(x, dtype=np.float64), pad, mode="reflect")
    n_frames = 1 + (len(xp) - n_fft) // hop
    idx = hop * np.arange(n_frames)[:, None] + np.arange(n_fft)[None, :]
    frames = xp[idx] * _hann(n_fft)
    return np.fft.rfft(frames, axis=1).T


def istft(spec: np.ndarray, n_fft: int = N_FFT, hop: int = HOP,
          length: int | None = None) -> np.ndarray:
    """Weighted overlap-add inverse of :func:`stft`."""
    frames = np.fft.irfft(spec.T, n=n_fft, axis=1)
    w = _hann(n_fft)
    frames = frames * w
    n_frames = frames.shape[0]
    buf_len = n_fft + hop * (n_frames - 1)
    y = np.zeros(buf_len)
    norm = np.zeros(buf_len)
    ww = w * w
    for t in range(n_frames):
        y[t * hop:t * hop + n_fft] += frames[t]
        norm[t * hop:t * hop + n_fft] += ww
    # skip thinly-covered edge samples: dividing by a near-zero window sum
    # amplifies junk when the spectrum is not STFT-consistent
    good = norm > 1e-2
    y[good] /= norm[good]
    pad = n_fft // 2
    y = y[pad:]
    if length is not None:
        if len(y) < length:
            y = np.pad(y, (0, length - len(y)))
        y = y[:length]
    return y


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@functools.lru_cache(maxsize=4)
def mel_filterbank(n_mels: int = N_MELS, n_fft: int = N_FFT, sr: int = SAMPLE_RATE,
                   fmin: float = 0.0, fmax: float = SAMPLE_RATE / 2.0) -> np.ndarray:
    """Triangular HTK-scale Mel filterbank, peak 1, shape [n_mels, n_fft//2+1]."""
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / sr)
    lo, ctr, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs[None, :] - lo) / np.maximum(ctr - lo, 1e-12)
    falling = (hi - freqs[None, :]) / np.maximum(hi - ctr, 1e-12)
    return np.maximum(0.0, np.minimum(rising, falling))


@functools.lru_cache(maxsize=4)
def _mel_pinv(n_mels: int = N_MELS, n_fft: int = N_FFT) -> np.ndarray:
    return np.linalg.pinv(mel_filterbank(n_mels, n_fft))


def mel_center_freqs(n_mels: int = N_MELS, fmin: float = 0.0,
                     fmax: float = SAMPLE_RATE / 2.0) -> np.ndarray:
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    return edges[1:-1]


def log_mel(clip: AudioClip, n_fft: int = N_FFT, hop: int = HOP,
            n_mels: int = N_MELS) -> np.ndarray:
    """Un-normalized log-Mel magnitudes, frame axis truncated to N_FRAMES."""
    if len(clip) != CLIP_SAMPLES:
        raise BadLength(f"expected {CLIP_SAMPLES} samples, got {len(clip)}")
    mag = np.abs(stft(clip.samples, n_fft, hop))[:, :N_FRAMES]
    m = mel_filterbank(n_mels, n_fft) @ mag
    return np.log(np.maximum(m, 1e-5))


def mel_forward(clip: AudioClip, n_fft: int = N_FFT, hop: int = HOP,
                n_mels: int = N_MELS, norm_hi: float = DEFAULT_NORM_HI) -> MelGram:
    """Clip -> normalized log-Mel gram; [LOG_FLOOR, norm_hi] maps onto [-1, 1]."""
    lm = log_mel(clip, n_fft, hop, n_mels)
    v = 2.0 * (lm - LOG_FLOOR) / (norm_hi - LOG_FLOOR) - 1.0
    return MelGram(np.clip(v, -1.0, 1.0).astype(np.float32), LOG_FLOOR, norm_hi)


def mel_inverse(gram: MelGram, gl_iters: int = GL_ITERS) -> AudioClip:
    """Reconstruct a waveform from a full-resolution gram via Griffin-Lim.

    Output has CLIP_SAMPLES samples, peak-normalized to 0.9 unless nearly
    silent (peak < 1e-4).
    """
    if gram.shape != (N_MELS, N_FRAMES):
        raise BadLength(f"expected full-resolution {N_MELS}x{N_FRAMES} gram, got {gram.shape}")
    v = gram.values.astype(np.float64)
    lm = (v + 1.0) / 2.0 * (gram.norm_hi - gram.norm_lo) + gram.norm_lo
    m = np.exp(lm)
    mag = np.maximum(_mel_pinv() @ m, 0.0)

    spec = mag.astype(np.complex128)        # zero-phase start keeps this deterministic
    for _ in range(gl_iters):
        y = istft(spec, length=CLIP_SAMPLES)
        rebuilt = stft(y)[:, :N_FRAMES]
        phase = rebuilt / np.maximum(np.abs(rebuilt), 1e-12)
        spec = mag * phase
    y = istft(spec, length=CLIP_SAMPLES)

    peak = float(np.max(np.abs(y))) if len(y) else 0.0
    if peak >= 1e-4:
        y = y * (0.9 / peak)
    return AudioClip(y, SAMPLE_RATE)


def downsample_gram(gram: MelGram, k: int) -> MelGram:
    """Average-pool with a 2^k x 2^k window; k = 0 is the identity."""
    if not 0 <= k < N_LEVELS:
        raise BadLevel(f"level {k} outside [0, {N_LEVELS - 1}]")
    v = gram.values
    for _ in range(k):
        v = pool2(v)
    return MelGram(v, gram.norm_lo, gram.norm_hi)


def pool2(v: np.ndarray) -> np.ndarray:
    """2x2 average pooling on the last two axes."""
    h, w = v.shape[-2], v.shape[-1]
    if h % 2 or w % 2:
        raise BadLevel(f"cannot halve odd shape {h}x{w}")
    return v.reshape(*v.shape[:-2], h // 2, 2, w // 2, 2).mean(axis=(-3, -1))


def gram_ladder(gram: MelGram) -> list[np.ndarray]:
    """Full dyadic tower [4x8 ... 64x128], low resolution first."""
    return [downsample_gram(gram, k).values for k in range(N_LEVELS - 1, -1, -1)]
