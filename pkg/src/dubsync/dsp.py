"""
Audio signal processing: STFT/ISTFT, Mel spectrograms, spline time-resizing
of spectrograms for duration fitting, soft ratio masks and mixing.

Spectrogram frames are stored time-major, shape ``(T, F)`` with
``F = window_size // 2 + 1``. Frames are centered: the signal is
reflection-padded by ``window_size // 2`` on both sides, giving
``T = 1 + len(x) // hop`` frames.
"""
from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.io import wavfile
from scipy.signal import get_window, resample_poly

from .core import ValidationError

logger = logging.getLogger(__name__)

DEFAULT_SAMPLE_RATE = 16000
DEFAULT_WINDOW = 1024
DEFAULT_HOP = 256
DEFAULT_N_MELS = 80
GRIFFIN_LIM_ITERS = 32
MIN_FACTOR, MAX_FACTOR = 0.25, 4.0
MASK_MAGIC = b"DSMK"
_MASK_HEADER = struct.Struct("<4s5I")


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim != 1:
            raise ValidationError("audio must be mono (1-D)")
        if not self.sample_rate > 0:
            raise ValidationError("sample_rate must be positive")
        if not np.all(np.isfinite(x)):
            raise ValidationError("audio contains non-finite samples")
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """Time-frequency grid with the parameters needed to invert it.

    ``length`` is the number of samples of the analysed signal, when known.
    """

    frames: np.ndarray
    hop: int
    window_size: int
    sample_rate: int
    length: int | None = None

    def __post_init__(self):
        fr = np.asarray(self.frames)
        if fr.ndim != 2 or fr.shape[0] < 1:
            raise ValidationError("spectrogram frames must be a non-empty T x F matrix")
        if not np.iscomplexobj(fr) and np.any(fr < 0):
            raise ValidationError("magnitude spectrogram has negative entries")
        object.__setattr__(self, "frames", fr)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_bins(self) -> int:
        return self.frames.shape[1]

    def magnitude(self) -> Spectrogram:
        return replace(self, frames=np.abs(self.frames))


@dataclass(frozen=True, eq=False)
class RatioMaskPair:
    foreground: np.ndarray
    background: np.ndarray

    def __post_init__(self):
        fg = np.asarray(self.foreground, dtype=np.float64)
        bg = np.asarray(self.background, dtype=np.float64)
        if fg.shape != bg.shape or fg.ndim != 2:
            raise ValidationError(f"mask shapes differ or are not 2-D: {fg.shape} vs {bg.shape}")
        for name, m in (("foreground", fg), ("background", bg)):
            if not np.all((m >= 0) & (m <= 1)):
                raise ValidationError(f"{name} mask has values outside [0, 1]")
        object.__setattr__(self, "foreground", fg)
        object.__setattr__(self, "background", bg)


def _window(n: int) -> np.ndarray:
    return get_window("hann", n, fftbins=True)


def _check_params(window_size: int, hop: int):
    if window_size < 2 or window_size & (window_size - 1):
        raise ValidationError(f"window_size must be a power of two, got {window_size}")
    if not 0 < hop <= window_size:
        raise ValidationError(f"hop must be in (0, window_size], got {hop}")


def stft(audio: AudioBuffer, window_size: int = DEFAULT_WINDOW,
         hop: int = DEFAULT_HOP) -> Spectrogram:
    """Hann-windowed, centered short-time Fourier transform."""
    _check_params(window_size, hop)
    x = audio.samples
    pad = window_size // 2
    if len(x) <= pad:
        raise ValidationError(
            f"audio of {len(x)} samples is too short for window {window_size}")
    xp = np.pad(x, pad, mode="reflect")
    frames = np.lib.stride_tricks.sliding_window_view(xp, window_size)[::hop]
    spec = np.fft.rfft(frames * _window(window_size), axis=1)
    return Spectrogram(spec, hop, window_size, audio.sample_rate, len(x))


def istft(spec: Spectrogram, length: int | None = None) -> AudioBuffer:
    """Weighted overlap-add inverse of :func:`stft`.

    Output length is ``length``, else ``spec.length``, else ``hop * (T - 1)``.
    """
    n, hop = spec.window_size, spec.hop
    _check_params(n, hop)
    if spec.n_bins != n // 2 + 1:
        raise ValidationError(
            f"spectrogram has {spec.n_bins} bins, expected {n // 2 + 1} for window {n}")
    w = _window(n)
    frames = np.fft.irfft(spec.frames, n=n, axis=1) * w
    T = spec.n_frames
    total = n + hop * (T - 1)
    y = np.zeros(total)
    norm = np.zeros(total)
    w2 = w * w
    for i in range(T):
        y[i * hop:i * hop + n] += frames[i]
        norm[i * hop:i * hop + n] += w2
    nz = norm > 1e-10
    y[nz] /= norm[nz]
    pad = n // 2
    if length is None:
        length = spec.length if spec.length is not None else hop * (T - 1)
    y = y[pad:pad + length]
    if len(y) < length:
        y = np.pad(y, (0, length - len(y)))
    return AudioBuffer(y, spec.sample_rate)


def apply_masks(mixture: Spectrogram, masks: RatioMaskPair) -> tuple[AudioBuffer, AudioBuffer]:
    """Foreground and background waveforms from soft masks on a mixture STFT."""
    if not mixture.is_complex:
        raise ValidationError("mixture spectrogram must be complex")
    if masks.foreground.shape != mixture.frames.shape:
        raise ValidationError(
            f"mask shape {masks.foreground.shape} != mixture shape {mixture.frames.shape}")
    fg = istft(replace(mixture, frames=mixture.frames * masks.foreground))
    bg = istft(replace(mixture, frames=mixture.frames * masks.background))
    return fg, bg


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(sample_rate: int, window_size: int, n_mels: int = DEFAULT_N_MELS,
                   fmin: float = 0.0, fmax: float | None = None) -> np.ndarray:
    """Triangular filters of unit peak, shape ``(n_mels, F)``.

    Adjacent triangles overlap by half, so between the first and last
    center frequency the filter weights sum to one at every bin.
    """
    n_bins = window_size // 2 + 1
    if n_mels < 8:
        raise ValidationError("n_mels must be >= 8")
    if n_mels > n_bins:
        raise ValidationError(f"n_mels={n_mels} exceeds the {n_bins} frequency bins")
    fmax = sample_rate / 2 if fmax is None else fmax
    edges = mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))
    freqs = np.arange(n_bins) * sample_rate / window_size
    lo, mid, hi = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    up = (freqs - lo) / (mid - lo)
    down = (hi - freqs) / (hi - mid)
    return np.maximum(0.0, np.minimum(up, down))


def mel_spectrogram(audio: AudioBuffer, n_mels: int = DEFAULT_N_MELS,
                    window_size: int = DEFAULT_WINDOW, hop: int = DEFAULT_HOP,
                    power: float = 1.0) -> Spectrogram:
    """Mel filterbank applied to ``|STFT|**power`` (magnitude by default)."""
    fb = mel_filterbank(audio.sample_rate, window_size, n_mels)
    spec = stft(audio, window_size, hop)
    mel = (np.abs(spec.frames) ** power) @ fb.T
    return Spectrogram(mel, hop, window_size, audio.sample_rate, spec.length)


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def resize_spectrogram(spec: Spectrogram, factor: float,
                       n_frames: int | None = None) -> Spectrogram:
    """Stretch a magnitude spectrogram along time by cubic-spline interpolation.

    Each frequency band is resampled independently onto
    ``max(1, round(T * factor))`` frames (or ``n_frames`` when given) with
    the first and last frames pinned. Spline overshoot below zero is clipped.
    """
    if not MIN_FACTOR <= factor <= MAX_FACTOR:
        raise ValidationError(
            f"stretch factor {factor:.4g} outside [{MIN_FACTOR}, {MAX_FACTOR}]")
    if spec.is_complex:
        raise ValidationError("resize expects a magnitude spectrogram")
    T = spec.n_frames
    T_new = n_frames if n_frames is not None else max(1, _round_half_up(T * factor))
    length = None if spec.length is None else _round_half_up(spec.length * factor)
    if T == 1:
        return replace(spec, frames=np.repeat(spec.frames, T_new, axis=0), length=length)
    if T_new == 1:
        return replace(spec, frames=spec.frames.mean(axis=0, keepdims=True), length=length)
    if T_new == T:
        return replace(spec, frames=spec.frames.copy(), length=length)
    pos = np.arange(T_new) * ((T - 1) / (T_new - 1))
    spline = CubicSpline(np.arange(T), spec.frames, axis=0)
    out = np.clip(spline(pos), 0.0, None)
    return replace(spec, frames=out, length=length)


def griffin_lim(magnitude: Spectrogram, length: int, n_iter: int = GRIFFIN_LIM_ITERS,
                momentum: float = 0.99, seed: int = 0) -> AudioBuffer:
    """Phase reconstruction from a linear magnitude STFT (fast Griffin-Lim).

    The initial phase is drawn from a seeded generator, so results are
    reproducible.
    """
    S = magnitude.frames
    rng = np.random.default_rng(seed)
    angles = np.exp(2j * np.pi * rng.random(S.shape))
    rebuilt = np.zeros_like(angles)
    spec = replace(magnitude, frames=S * angles, length=length)
    for _ in range(n_iter):
        prev = rebuilt
        y = istft(replace(spec, frames=S * angles), length)
        rebuilt = stft(y, magnitude.window_size, magnitude.hop).frames
        angles = rebuilt - (momentum / (1 + momentum)) * prev
        angles /= np.abs(angles) + 1e-16
    return istft(replace(spec, frames=S * angles), length)


def fit_duration(audio: AudioBuffer, target_duration: float,
                 window_size: int = DEFAULT_WINDOW, hop: int = DEFAULT_HOP,
                 n_iter: int = GRIFFIN_LIM_ITERS) -> AudioBuffer:
    """Change the duration of ``audio`` without changing its pitch.

    The magnitude STFT is resized along time with :func:`resize_spectrogram`
    and a waveform is rebuilt with Griffin-Lim. Audio that already has the
    target length is returned as is.
    """
    if not target_duration > 0:
        raise ValidationError("target_duration must be positive")
    target_len = max(1, _round_half_up(target_duration * audio.sample_rate))
    factor = target_len / len(audio)
    if not MIN_FACTOR <= factor <= MAX_FACTOR:
        raise ValidationError(
            f"stretch factor {factor:.4g} outside [{MIN_FACTOR}, {MAX_FACTOR}]")
    if target_len == len(audio):
        return AudioBuffer(audio.samples.copy(), audio.sample_rate)
    mag = stft(audio, window_size, hop).magnitude()
    resized = resize_spectrogram(mag, factor, n_frames=1 + target_len // hop)
    return griffin_lim(resized, target_len, n_iter)


def mix(tracks) -> tuple[AudioBuffer, float]:
    """Weighted sum of ``(AudioBuffer, gain)`` pairs, zero-padded to the longest.

    Returns the mix and the scale factor applied to it (1.0 unless the
    peak exceeded 1 and the result was normalized).
    """
    tracks = list(tracks)
    if not tracks:
        raise ValidationError("nothing to mix")
    sr = tracks[0][0].sample_rate
    for a, g in tracks:
        if a.sample_rate != sr:
            raise ValidationError(f"sample rate mismatch: {a.sample_rate} != {sr}")
        if not np.isfinite(g):
            raise ValidationError("gain must be finite")
    n = max(len(a) for a, _ in tracks)
    out = np.zeros(n)
    for a, g in tracks:
        out[:len(a)] += g * a.samples
    scale = 1.0
    peak = np.max(np.abs(out)) if n else 0.0
    if peak > 1.0:
        scale = 1.0 / peak
        out *= scale
        logger.info("mix peak %.3f normalized by %.4f", peak, scale)
    return AudioBuffer(out, sr), scale


def resample(audio: AudioBuffer, sample_rate: int) -> AudioBuffer:
    if audio.sample_rate == sample_rate:
        return audio
    g = np.gcd(audio.sample_rate, sample_rate)
    y = resample_poly(audio.samples, sample_rate // g, audio.sample_rate // g)
    return AudioBuffer(y, sample_rate)


def read_wav(path) -> AudioBuffer:
    """Read a WAV file as float64 mono in [-1, 1]; multichannel is averaged."""
    sr, data = wavfile.read(path)
    if data.dtype == np.int16:
        x = data / 32768.0
    elif data.dtype == np.int32:
        x = data / 2147483648.0
    elif data.dtype == np.uint8:
        x = (data.astype(np.float64) - 128.0) / 128.0
    else:
        x = data.astype(np.float64)
    if x.ndim == 2:
        x = x.mean(axis=1)
    return AudioBuffer(x, sr)


def write_wav(path, audio: AudioBuffer, fmt: str = "float32") -> None:
    if fmt == "float32":
        data = audio.samples.astype(np.float32)
    elif fmt == "pcm16":
        data = np.round(np.clip(audio.samples, -1.0, 32767 / 32768) * 32768).astype(np.int16)
    else:
        raise ValueError(f"unknown WAV format {fmt!r}")
    wavfile.write(path, audio.sample_rate, data)


def write_masks(path, masks: RatioMaskPair, hop: int, window_size: int,
                sample_rate: int) -> None:
    T, F = masks.foreground.shape
    with open(path, "wb") as fh:
        fh.write(_MASK_HEADER.pack(MASK_MAGIC, T, F, hop, window_size, sample_rate))
        fh.write(masks.foreground.astype("<f4").tobytes())
        fh.write(masks.background.astype("<f4").tobytes())


def read_masks(path) -> tuple[RatioMaskPair, dict]:
    """Read a mask file; returns the masks and their STFT parameters."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _MASK_HEADER.size:
        raise ValidationError("mask file truncated")
    magic, T, F, hop, win, sr = _MASK_HEADER.unpack_from(raw)
    if magic != MASK_MAGIC:
        raise ValidationError(f"bad mask file magic {magic!r}")
    body = np.frombuffer(raw, dtype="<f4", offset=_MASK_HEADER.size)
    if body.size != 2 * T * F:
        raise ValidationError(f"mask file holds {body.size} values, expected {2 * T * F}")
    fg = body[:T * F].reshape(T, F).astype(np.float64)
    bg = body[T * F:].reshape(T, F).astype(np.float64)
    return RatioMaskPair(fg, bg), {"hop": hop, "window_size": win, "sample_rate": sr}
