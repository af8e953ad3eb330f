import numpy as np
import pytest
from dataclasses import replace

from dubsync.core import ValidationError
from dubsync.dsp import (AudioBuffer, RatioMaskPair, Spectrogram, apply_masks, fit_duration,
                         istft, mel_filterbank, mel_spectrogram, mix, read_masks, read_wav,
                         resize_spectrogram, stft, write_masks, write_wav)

from helpers import FS, dominant_frequency, snr_db

N, HOP = 1024, 256


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def test_frame_count_and_shape(rng):
    x = AudioBuffer(rng.standard_normal(16000), FS)
    S = stft(x, N, HOP)
    assert S.frames.shape == (1 + 16000 // HOP, N // 2 + 1)
    assert S.is_complex


def test_bin_centred_sine_matches_analytic_dft():
    k0, amp = 64, 0.7
    t = np.arange(FS)
    x = amp * np.cos(2 * np.pi * k0 * t / N)
    S = stft(AudioBuffer(x, FS), N, HOP).frames
    mid = S[10:-10]
    # periodic Hann: X[k0] = A N / 4, X[k0 +- 1] = A N / 8, zero elsewhere
    assert np.allclose(np.abs(mid[:, k0]), amp * N / 4, rtol=1e-9)
    assert np.allclose(np.abs(mid[:, k0 - 1]), amp * N / 8, rtol=1e-9)
    assert np.allclose(np.abs(mid[:, k0 + 1]), amp * N / 8, rtol=1e-9)
    energy = np.abs(mid) ** 2
    lobe = energy[:, k0 - 1:k0 + 2].sum(axis=1) / energy.sum(axis=1)
    assert np.all(lobe > 0.9)
    assert np.all(np.argmax(energy, axis=1) == k0)


def test_zero_signal():
    S = stft(AudioBuffer(np.zeros(4000), FS), N, HOP)
    assert not np.any(S.frames)
    assert not np.any(istft(S).samples)


def test_round_trip_snr(rng):
    for n in (5000, 16000, 16001):
        x = rng.standard_normal(n)
        y = istft(stft(AudioBuffer(x, FS), N, HOP)).samples
        assert len(y) == n
        assert snr_db(x, y) > 50


@pytest.mark.parametrize("n, hop", [(512, 128), (256, 128), (2048, 512)])
def test_round_trip_other_params(rng, n, hop):
    x = rng.standard_normal(9000)
    assert snr_db(x, istft(stft(AudioBuffer(x, FS), n, hop)).samples) > 50


def test_delta_round_trip():
    x = np.zeros(8000)
    x[3000] = 1.0
    y = istft(stft(AudioBuffer(x, FS), N, HOP)).samples
    assert np.max(np.abs(y - x)) < 1e-10


def test_stft_errors():
    with pytest.raises(ValidationError):
        stft(AudioBuffer(np.ones(100), FS), 1000, 250)
    with pytest.raises(ValidationError):
        stft(AudioBuffer(np.ones(1000), FS), 1024, 2048)
    with pytest.raises(ValidationError):
        stft(AudioBuffer(np.ones(300), FS), 1024, 256)


def test_istft_rejects_inconsistent_metadata(rng):
    S = stft(AudioBuffer(rng.standard_normal(4000), FS), N, HOP)
    with pytest.raises(ValidationError):
        istft(replace(S, window_size=512))


def mixture(rng, n=12000):
    x = rng.standard_normal(n)
    return x, stft(AudioBuffer(x, FS), N, HOP)


def test_identity_masks(rng):
    x, S = mixture(rng)
    fg, bg = apply_masks(S, RatioMaskPair(np.ones(S.frames.shape), np.zeros(S.frames.shape)))
    assert snr_db(x, fg.samples) > 50
    assert np.max(np.abs(bg.samples)) == 0


def test_half_masks(rng):
    x, S = mixture(rng)
    half = np.full(S.frames.shape, 0.5)
    fg, bg = apply_masks(S, RatioMaskPair(half, half))
    assert np.max(np.abs(fg.samples - 0.5 * istft(S).samples)) < 1e-12
    assert np.max(np.abs(bg.samples - fg.samples)) < 1e-15


def test_complementary_masks_linearity(rng):
    for _ in range(5):
        _, S = mixture(rng)
        m = rng.random(S.frames.shape)
        fg, bg = apply_masks(S, RatioMaskPair(m, 1 - m))
        assert np.max(np.abs(fg.samples + bg.samples - istft(S).samples)) < 1e-6


def test_mask_validation(rng):
    _, S = mixture(rng)
    with pytest.raises(ValidationError):
        RatioMaskPair(np.full((3, 3), 1.5), np.zeros((3, 3)))
    with pytest.raises(ValidationError):
        apply_masks(S, RatioMaskPair(np.ones((3, 3)), np.zeros((3, 3))))


def test_mask_file_round_trip(tmp_path, rng):
    m = rng.random((7, 513)).astype(np.float32)
    path = tmp_path / "m.dsmk"
    write_masks(path, RatioMaskPair(m, 1 - m), HOP, N, FS)
    raw = path.read_bytes()
    assert raw[:4] == b"DSMK"
    assert np.frombuffer(raw[4:24], "<u4").tolist() == [7, 513, HOP, N, FS]
    assert len(raw) == 24 + 2 * 7 * 513 * 4
    masks, params = read_masks(path)
    assert params == {"hop": HOP, "window_size": N, "sample_rate": FS}
    assert np.array_equal(masks.foreground, m.astype(np.float64))
    path.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValidationError):
        read_masks(path)
    path.write_bytes(raw[:-4])
    with pytest.raises(ValidationError):
        read_masks(path)


def test_mel_zero():
    M = mel_spectrogram(AudioBuffer(np.zeros(8000), FS), 80)
    assert M.frames.shape[1] == 80 and not np.any(M.frames)


def test_mel_white_noise_energy(rng):
    x = AudioBuffer(rng.standard_normal(4 * FS), FS)
    fb = mel_filterbank(FS, N, 40)
    P = np.abs(stft(x, N, HOP).frames) ** 2
    centers = np.argmax(fb, axis=1)
    covered = P[:, centers[0]:centers[-1] + 1].sum()
    mel = mel_spectrogram(x, 40, power=2.0).frames.sum()
    # Parseval: the filterbank redistributes power between its first and last centers
    assert abs(mel - covered) / covered < 0.10


@pytest.mark.parametrize("freq", [250.0, 1000.0, 3000.0])
def test_mel_tone_two_bands(freq):
    f = round(freq * N / FS) * FS / N
    t = np.arange(2 * FS) / FS
    M = mel_spectrogram(AudioBuffer(np.sin(2 * np.pi * f * t), FS), 80, power=2.0).frames
    e = M[10:-10].sum(axis=0)
    pair = max(e[i] + e[i + 1] for i in range(len(e) - 1))
    assert pair / e.sum() > 0.9


def test_mel_errors():
    x = AudioBuffer(np.ones(4000), FS)
    with pytest.raises(ValidationError):
        mel_spectrogram(x, 4)
    with pytest.raises(ValidationError):
        mel_spectrogram(x, 200, window_size=256, hop=64)


def magnitude(rng, T=100, F=33):
    return Spectrogram(np.abs(rng.standard_normal((T, F))), HOP, 64, FS)


def test_resize_identity(rng):
    S = magnitude(rng)
    assert np.max(np.abs(resize_spectrogram(S, 1.0).frames - S.frames)) <= 1e-9


@pytest.mark.parametrize("T, factor", [(100, 0.5), (100, 1.37), (33, 3.9), (57, 0.26), (1, 2.0)])
def test_resize_frame_count(rng, T, factor):
    out = resize_spectrogram(magnitude(rng, T), factor)
    assert out.n_frames == max(1, int(np.floor(T * factor + 0.5)))
    assert out.n_bins == 33


def test_resize_constant(rng):
    S = Spectrogram(np.full((40, 9), 0.37), HOP, 16, FS)
    for factor in (0.3, 0.8, 2.5):
        assert np.allclose(resize_spectrogram(S, factor).frames, 0.37, atol=1e-12)


def test_resize_round_trip_smooth():
    t = np.linspace(0, 1, 200)[:, None]
    f = np.linspace(0, 1, 17)[None, :]
    S = Spectrogram(1.5 + np.sin(2 * np.pi * (t * 2 + f)), HOP, 32, FS)
    for a in (0.5, 1.6, 2.0):
        back = resize_spectrogram(resize_spectrogram(S, a), 1 / a, n_frames=S.n_frames)
        rms = np.sqrt(np.mean((back.frames - S.frames) ** 2)) / np.sqrt(np.mean(S.frames ** 2))
        assert rms < 0.05


def test_resize_monotone_mapping():
    # a ramp stays a ramp: frame order is preserved
    S = Spectrogram(np.tile(np.arange(50.0)[:, None], (1, 3)), HOP, 4, FS)
    out = resize_spectrogram(S, 1.7).frames[:, 0]
    assert np.all(np.diff(out) > 0)


def test_resize_guards(rng):
    S = magnitude(rng)
    for bad in (0.2, 4.5):
        with pytest.raises(ValidationError):
            resize_spectrogram(S, bad)
    with pytest.raises(ValidationError):
        resize_spectrogram(Spectrogram(np.ones((4, 3), complex), HOP, 4, FS), 1.0)


def sine(freq, seconds, amp=0.5):
    t = np.arange(int(seconds * FS)) / FS
    return AudioBuffer(amp * np.sin(2 * np.pi * freq * t), FS)


def test_fit_duration_same_length():
    x = sine(300, 1.0)
    y = fit_duration(x, 1.0)
    assert abs(len(y) - len(x)) <= HOP


@pytest.mark.parametrize("src, dst", [(2.0, 1.0), (1.0, 2.0), (1.5, 1.2)])
def test_fit_duration_hits_target(src, dst):
    y = fit_duration(sine(440, src), dst)
    assert abs(y.duration - dst) <= HOP / FS


def test_fit_duration_preserves_pitch():
    y = fit_duration(sine(440, 1.0), 2.0)
    f = dominant_frequency(y.samples[HOP * 4:-HOP * 4], FS)
    assert abs(f - 440) / 440 < 0.03


def test_fit_duration_guard():
    with pytest.raises(ValidationError, match="stretch factor 5"):
        fit_duration(sine(440, 0.5), 2.5)
    with pytest.raises(ValidationError):
        fit_duration(sine(440, 0.5), 0)


def test_mix_identities(rng):
    x = AudioBuffer(rng.uniform(-0.45, 0.45, 1000), FS)
    y, scale = mix([(x, 1.0)])
    assert np.array_equal(y.samples, x.samples) and scale == 1.0
    y, _ = mix([(x, 0.5), (x, 0.5)])
    assert np.allclose(y.samples, x.samples, atol=1e-15)


def test_mix_disjoint_support_and_padding():
    a = np.zeros(100)
    a[:40] = 0.3
    b = np.zeros(160)
    b[60:] = -0.2
    y, _ = mix([(AudioBuffer(a, FS), 1.0), (AudioBuffer(b, FS), 1.0)])
    assert len(y) == 160
    assert np.array_equal(y.samples[:40], a[:40]) and np.array_equal(y.samples[60:], b[60:])


def test_mix_normalizes_peak():
    y, scale = mix([(AudioBuffer(np.array([0.9, -0.9]), FS), 2.0)])
    assert scale == pytest.approx(1 / 1.8) and np.max(np.abs(y.samples)) == pytest.approx(1.0)


def test_mix_rate_mismatch():
    with pytest.raises(ValidationError):
        mix([(AudioBuffer(np.zeros(3), FS), 1.0), (AudioBuffer(np.zeros(3), 8000), 1.0)])


def test_audio_buffer_validation():
    with pytest.raises(ValidationError):
        AudioBuffer(np.array([0.0, np.nan]), FS)
    with pytest.raises(ValidationError):
        AudioBuffer(np.zeros(3), 0)


def test_wav_round_trip(tmp_path, rng):
    x = AudioBuffer(0.5 * rng.uniform(-1, 1, 1000), FS)
    write_wav(tmp_path / "f.wav", x)
    assert np.allclose(read_wav(tmp_path / "f.wav").samples, x.samples, atol=1e-7)
    write_wav(tmp_path / "p.wav", x, "pcm16")
    assert np.allclose(read_wav(tmp_path / "p.wav").samples, x.samples, atol=1 / 32768)
