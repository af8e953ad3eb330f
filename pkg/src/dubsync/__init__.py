"""Timing-aware automatic dubbing toolkit.

Segments translations to the pause structure of the original speech,
fits synthesized speech to the source timing, and re-renders it with the
original background and reverberation.
"""
from .core import (TimedWord, SourceUtterance, TargetSentence, Segmentation,
                   ValidationError, detect_breakpoints, segment_duration_source)
from .lm import PosNGramModel, train, sequence_prob, break_probability, BR
from .align import AlignmentConfig, transition_log_score, align, align_bruteforce
from .length import (LengthGroup, LengthThresholds, TaggedPair, length_ratio, classify,
                     partition_corpus, corpus_ratio_stats, add_token, strip_token)
from .dsp import (AudioBuffer, Spectrogram, RatioMaskPair, stft, istft, apply_masks,
                  mel_spectrogram, resize_spectrogram, fit_duration, mix, read_wav, write_wav)
from .reverb import (ImpulseResponse, RoomSpec, estimate_rt60, schroeder_rt60,
                     generate_rir, convolve)

__version__ = "0.1.0"
