"""
Stretching synthetic speech to a time slot
==========================================

A TTS output rarely has the duration of the source segment it replaces.
The magnitude spectrogram is resized along time with a cubic spline and a
waveform is rebuilt with Griffin-Lim.
"""

import numpy as np

from dubsync import AudioBuffer, fit_duration, resize_spectrogram, stft
from dubsync.dsp import mel_spectrogram

fs = 16000
t = np.arange(fs) / fs
# a one-second gliding tone with a slow tremolo
x = 0.4 * np.sin(2 * np.pi * (300 * t + 150 * t ** 2)) * (0.6 + 0.4 * np.sin(2 * np.pi * 3 * t))
audio = AudioBuffer(x, fs)

mag = stft(audio).magnitude()
print("frames:", mag.n_frames, "bins:", mag.n_bins)
for factor in (0.5, 0.8, 1.25, 2.0):
    print("factor %.2f -> %d frames" % (factor, resize_spectrogram(mag, factor).n_frames))

###############################################################################
# fit_duration does resize + phase reconstruction in one call

for target in (0.6, 1.0, 1.7):
    y = fit_duration(audio, target)
    print("%.2f s requested, %.4f s produced" % (target, y.duration))

# the tone still glides over the same range, just slower or faster
slow = fit_duration(audio, 2.0)
mel = mel_spectrogram(slow, n_mels=40)
peak_band = np.argmax(mel.frames, axis=1)  # frames are time x band
print("dominant mel band at start/middle/end:", peak_band[2], peak_band[len(peak_band) // 2],
      peak_band[-3])
