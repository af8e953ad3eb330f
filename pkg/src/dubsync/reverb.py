"""
Re-reverberation: blind reverberation-time estimation from reverberant
audio, synthetic room impulse responses by the image-source method, and
convolution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import butter, fftconvolve, sosfilt
from scipy.special import logsumexp

from .core import ValidationError
from .dsp import AudioBuffer

RT_MIN, RT_MAX = 0.05, 3.0
MLE_WINDOW = 0.4
MLE_OVERLAP = 0.5
HIST_BIN = 0.02
SABINE_CONSTANT = 0.161
FADE_SECONDS = 0.01
HIGHPASS_HZ = 100.0
DB60 = 3.0 * math.log(10.0)  # amplitude decay rate * RT60 for a 60 dB energy drop


@dataclass(frozen=True, eq=False)
class ImpulseResponse:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        h = np.asarray(self.samples, dtype=np.float64)
        if h.ndim != 1 or h.size == 0:
            raise ValidationError("impulse response must be a non-empty 1-D array")
        if not np.all(np.isfinite(h)):
            raise ValidationError("impulse response contains non-finite samples")
        if not np.any(h):
            raise ValidationError("impulse response has zero energy")
        object.__setattr__(self, "samples", h)

    def __len__(self):
        return self.samples.shape[0]


@dataclass(frozen=True)
class RoomSpec:
    dimensions: tuple[float, float, float] = (5.0, 4.0, 3.0)
    source: tuple[float, float, float] = (2.0, 1.5, 1.6)
    microphone: tuple[float, float, float] = (2.5, 2.2, 1.6)
    target_rt60: float = 0.4
    max_order: int = -1
    speed_of_sound: float = 343.0

    def __post_init__(self):
        dims = np.asarray(self.dimensions, dtype=float)
        if dims.shape != (3,) or np.any(dims <= 0):
            raise ValidationError(f"room dimensions must be three positive lengths: {self.dimensions}")
        for name in ("source", "microphone"):
            p = np.asarray(getattr(self, name), dtype=float)
            if p.shape != (3,) or np.any(p <= 0) or np.any(p >= dims):
                raise ValidationError(f"{name} {tuple(p)} is not strictly inside the room")
        if self.target_rt60 < 0:
            raise ValidationError("target_rt60 must be non-negative")
        if not self.speed_of_sound > 0:
            raise ValidationError("speed_of_sound must be positive")

    @property
    def volume(self) -> float:
        lx, ly, lz = self.dimensions
        return lx * ly * lz

    @property
    def surface(self) -> float:
        lx, ly, lz = self.dimensions
        return 2.0 * (lx * ly + lx * lz + ly * lz)

    @property
    def min_rt60(self) -> float:
        """Shortest RT60 Sabine allows in this room (fully absorbing walls)."""
        return SABINE_CONSTANT * self.volume / self.surface

    def reflection_coefficient(self) -> float:
        """Uniform wall reflection coefficient from Sabine's formula."""
        if self.target_rt60 == 0:
            return 0.0
        beta2 = 1.0 - SABINE_CONSTANT * self.volume / (self.surface * self.target_rt60)
        if beta2 < 0:
            raise ValidationError(
                f"room too small for target RT: {self.target_rt60:.3f} s is below the "
                f"{self.min_rt60:.3f} s achievable in a {self.dimensions} m room")
        return math.sqrt(beta2)


def _axis_images(src: float, length: float, reach: float):
    """Image coordinates and reflection counts along one axis."""
    n = int(math.ceil(reach / (2 * length))) + 1
    m = np.arange(-n, n + 1)
    coords = np.concatenate([src + 2 * m * length, -src + 2 * m * length])
    refl = np.concatenate([2 * np.abs(m), np.abs(m - 1) + np.abs(m)])
    return coords, refl


def generate_rir(room: RoomSpec, sample_rate: int = 16000) -> ImpulseResponse:
    """Shoebox room impulse response by the image-source method.

    Every image contributes an impulse at the nearest sample to its
    propagation delay, scaled by ``beta**reflections / (4 pi d)``. The
    wall reflection coefficient ``beta`` comes from Sabine's formula. When
    reflections are present the response is high-passed at 100 Hz: the
    image amplitudes are all positive and otherwise pile up a DC component
    that stretches the late decay.
    """
    c = room.speed_of_sound
    mic = np.asarray(room.microphone, dtype=float)
    src = np.asarray(room.source, dtype=float)
    d0 = float(np.linalg.norm(src - mic))
    direct = int(round(d0 / c * sample_rate))
    beta = room.reflection_coefficient()
    n = max(int(math.ceil(1.2 * room.target_rt60 * sample_rate)), direct + 1)
    h = np.zeros(n)
    if beta == 0.0 or room.max_order == 0:
        h[direct] = 1.0 / (4 * math.pi * d0)
        return ImpulseResponse(h, sample_rate)

    reach = n / sample_rate * c
    axes = [_axis_images(s, L, reach) for s, L in zip(src, room.dimensions)]
    (xs, rx), (ys, ry), (zs, rz) = axes
    dy2 = (ys - mic[1])[:, None] ** 2 + (zs - mic[2])[None, :] ** 2
    ryz = ry[:, None] + rz[None, :]
    log_beta = math.log(beta)
    for x, r in zip(xs, rx):
        dist = np.sqrt((x - mic[0]) ** 2 + dy2)
        order = r + ryz
        idx = np.rint(dist / c * sample_rate).astype(np.int64)
        keep = idx < n
        if room.max_order >= 0:
            keep &= order <= room.max_order
        if not keep.any():
            continue
        amp = np.exp(order[keep] * log_beta) / (4 * math.pi * dist[keep])
        h += np.bincount(idx[keep], weights=amp, minlength=n)
    sos = butter(2, HIGHPASS_HZ, btype="highpass", fs=sample_rate, output="sos")
    return ImpulseResponse(sosfilt(sos, h), sample_rate)


def schroeder_rt60(rir: ImpulseResponse, upper_db: float = -5.0,
                   lower_db: float = -25.0) -> float:
    """RT60 from the backward-integrated energy decay curve.

    A line is fitted to the decay curve between ``upper_db`` and
    ``lower_db`` and extrapolated to a 60 dB drop.
    """
    energy = np.cumsum(rir.samples[::-1] ** 2)[::-1]
    nz = np.nonzero(energy > 0)[0]
    energy = energy[:nz[-1] + 1]
    edc = 10.0 * np.log10(energy / energy[0])
    below_upper = np.nonzero(edc <= upper_db)[0]
    below_lower = np.nonzero(edc <= lower_db)[0]
    if below_upper.size == 0 or below_lower.size == 0:
        raise ValidationError("decay range not reached")
    i0, i1 = below_upper[0], below_lower[0]
    if i1 - i0 < 2:
        raise ValidationError("decay range not reached")
    t = np.arange(i0, i1 + 1) / rir.sample_rate
    slope, _ = np.polyfit(t, edc[i0:i1 + 1], 1)
    if slope >= 0:
        raise ValidationError("decay range not reached")
    return -60.0 / slope


def mle_decay_rate(y: np.ndarray, sample_rate: int, rates: np.ndarray) -> float:
    """Maximum-likelihood amplitude decay rate (1/s) of one frame.

    The frame is modeled as ``y[n] = exp(-rate * n / fs) * v[n]`` with ``v``
    white Gaussian. With the noise variance profiled out, the
    log-likelihood of a rate is

        -N/2 * log(mean(exp(2 rate n / fs) * y[n]^2)) + rate * N (N - 1) / (2 fs)

    which is maximized over the candidate ``rates``.
    """
    N = y.shape[0]
    n = np.arange(N) / sample_rate
    log_y2 = np.log(y * y + 1e-300)
    lse = logsumexp(2.0 * rates[:, None] * n[None, :] + log_y2[None, :], axis=1)
    ll = -0.5 * N * (lse - math.log(N)) + rates * N * (N - 1) / (2.0 * sample_rate)
    return float(rates[np.argmax(ll)])


def _trim_silence(y: np.ndarray, rel: float = 1e-5) -> np.ndarray:
    """Drop trailing samples more than 100 dB below the frame peak.

    Digital silence has no noise floor and would pull the fit towards an
    arbitrarily fast decay.
    """
    loud = np.nonzero(np.abs(y) > rel * np.max(np.abs(y)))[0]
    return y[:loud[-1] + 1]


def _frame(x: np.ndarray, size: int, hop: int) -> np.ndarray:
    if len(x) < size:
        return np.empty((0, size))
    return np.lib.stride_tricks.sliding_window_view(x, size)[::hop]


def estimate_rt60(audio: AudioBuffer, window: float = MLE_WINDOW,
                  overlap: float = MLE_OVERLAP, bin_width: float = HIST_BIN,
                  n_sub: int = 4) -> float:
    """Blind RT60 estimate of reverberant audio.

    The signal is cut into overlapping analysis windows. Windows whose
    energy does not rise over ``n_sub`` sub-frames and ends lower than it
    starts are candidate free-decay regions; in each, the decay rate of an
    exponentially damped Gaussian model is fitted by maximum likelihood and
    turned into an RT60. A window that falls into digital silence within
    its first quarter counts as a decay at the lower clamp. The result is
    the most populated bin of the histogram of these estimates, clamped to
    ``[0.05, 3.0]`` s.
    """
    fs = audio.sample_rate
    x = audio.samples
    if audio.duration < 1.0 or not np.any(x):
        raise ValidationError("insufficient signal")
    size = int(round(window * fs))
    size -= size % n_sub
    hop = max(1, int(round(size * (1 - overlap))))
    frames = _frame(x, size, hop)
    sub = (frames ** 2).reshape(frames.shape[0], n_sub, -1).sum(axis=2)
    floor = 1e-10 * np.max(sub)
    decaying = (np.all(np.diff(sub, axis=1) <= 0, axis=1)
                & (sub[:, -1] < sub[:, 0]) & (sub[:, 0] > floor))
    if not np.any(decaying):
        raise ValidationError("insufficient signal")
    # candidate RT60s log-spaced over the clamp range; rate = 3 ln 10 / RT60
    rt_grid = np.geomspace(RT_MIN, RT_MAX, 400)
    rates = DB60 / rt_grid
    est = []
    for y in frames[decaying]:
        y = _trim_silence(y)
        if len(y) >= size // 4:
            est.append(DB60 / mle_decay_rate(y, fs, rates))
        else:
            est.append(RT_MIN)
    est = np.asarray(est)
    # estimates at the slow edge mean no decay was resolved inside the window
    est = est[est < RT_MAX]
    if est.size == 0:
        return RT_MAX
    edges = np.arange(RT_MIN, RT_MAX + bin_width, bin_width)
    counts, _ = np.histogram(est, bins=edges)
    b = int(np.argmax(counts))
    in_bin = est[(est >= edges[b]) & (est <= edges[b + 1])]
    return float(np.clip(np.median(in_bin), RT_MIN, RT_MAX))


def convolve(audio: AudioBuffer, rir: ImpulseResponse, trim: bool = True) -> AudioBuffer:
    """Linear convolution of ``audio`` with ``rir``.

    With ``trim`` the result is cut back to ``len(audio)`` and the last
    10 ms are faded out; otherwise the full ``len(audio) + len(rir) - 1``
    samples are returned.
    """
    if audio.sample_rate != rir.sample_rate:
        raise ValidationError(
            f"sample rate mismatch: audio {audio.sample_rate}, rir {rir.sample_rate}")
    x, h = audio.samples, rir.samples
    if len(x) + len(h) - 1 > 4096:
        y = fftconvolve(x, h)
    else:
        y = np.convolve(x, h)
    if trim:
        y = y[:len(x)].copy()
        nf = min(len(y), int(round(FADE_SECONDS * audio.sample_rate)))
        if nf > 0:
            y[-nf:] *= np.linspace(1.0, 0.0, nf)
    return AudioBuffer(y, audio.sample_rate)
