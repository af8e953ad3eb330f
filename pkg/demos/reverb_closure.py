"""
Measuring and recreating room reverberation
===========================================

Shoebox impulse responses are generated by the image-source method for a
few target RT60 values. Their decay is read back with Schroeder backward
integration, and blindly from noise bursts played in the room.
"""

import numpy as np

from dubsync import AudioBuffer, RoomSpec, convolve, estimate_rt60, generate_rir, schroeder_rt60

fs = 16000
rng = np.random.default_rng(0)

# 250 ms noise bursts every 1.75 s give clean free decays to analyse
dry = np.zeros(15 * fs)
for start in range(0, len(dry), int(1.75 * fs)):
    dry[start:start + fs // 4] = rng.standard_normal(len(dry[start:start + fs // 4]))

print(" target  schroeder  blind")
for rt in (0.3, 0.6, 1.0):
    h = generate_rir(RoomSpec(target_rt60=rt), fs)
    wet = convolve(AudioBuffer(dry, fs), h)
    print("  %.2f     %.3f     %.3f" % (rt, schroeder_rt60(h), estimate_rt60(wet)))

###############################################################################
# A dry signal reads as (almost) anechoic

print("dry bursts: %.3f s" % estimate_rt60(AudioBuffer(dry, fs)))

###############################################################################
# Small rooms cannot ring arbitrarily short: with fully absorbing walls the
# room's Sabine time is the floor

room = RoomSpec(dimensions=(3.0, 3.0, 2.5), source=(1.0, 1.0, 1.2), microphone=(2.0, 2.0, 1.2))
print("shortest reachable RT60 in a 3 x 3 x 2.5 m room: %.3f s" % room.min_rt60)
