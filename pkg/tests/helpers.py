"""Synthetic signals and fixtures shared by the test modules."""
import math
import sys
from pathlib import Path

import numpy as np

from dubsync.core import SourceUtterance, TargetSentence, TimedWord
from dubsync.dsp import AudioBuffer
from dubsync.lm import train
from dubsync.reverb import ImpulseResponse

FS = 16000
STUB_TTS = Path(__file__).with_name("stub_tts.py")


def stub_tts_command(seconds=1.0, mode="arg"):
    py = sys.executable
    if mode == "arg":
        return f"{py} {STUB_TTS} --seconds {seconds} --text {{text}} --out {{out}}"
    return f"{py} {STUB_TTS} --seconds {seconds} --out {{out}}"


def noise_bursts(rng, seconds=15.0, burst=0.25, gap=1.5, fs=FS):
    x = np.zeros(int(seconds * fs))
    p = 0
    while p < len(x):
        n = min(int(burst * fs), len(x) - p)
        x[p:p + n] = rng.standard_normal(n)
        p += int(burst * fs) + int(gap * fs)
    return x


def exponential_rir(rng, rt60, fs=FS):
    """White noise under an amplitude envelope exp(-t / tau), tau = rt60 / (3 ln 10)."""
    tau = rt60 / (3 * math.log(10))
    t = np.arange(int(1.5 * rt60 * fs)) / fs
    h = rng.standard_normal(t.size) * np.exp(-t / tau)
    h[0] = 1.0
    return ImpulseResponse(h, fs)


def _syllable(rng, n, fs):
    t = np.arange(n) / fs
    f0 = rng.uniform(110, 220)
    s = sum(np.sin(2 * np.pi * f0 * h * t + rng.uniform(0, 2 * np.pi)) / h for h in range(1, 15))
    s = s + 0.3 * rng.standard_normal(n)
    return 0.3 * s * np.sin(np.pi * np.arange(n) / n) ** 0.5


def speech_like(rng, phrases, fs=FS, lead=0.3, word_gap=(0.02, 0.08),
                phrase_gap=(0.5, 0.8), tail=0.5):
    """Harmonic 'words' grouped into phrases.

    ``phrases`` is a list of lists of word strings. Returns the audio and
    the TimedWord list (one per word, in order) with the indices of the
    words that end each phrase.
    """
    total_words = sum(len(p) for p in phrases)
    lens = [int(rng.uniform(0.15, 0.35) * fs) for _ in range(total_words)]
    budget = lead + sum(lens) / fs + total_words * word_gap[1] + len(phrases) * phrase_gap[1] + tail
    x = np.zeros(int(budget * fs))
    words, ends = [], []
    p = int(lead * fs)
    k = 0
    for phrase in phrases:
        for w in phrase:
            n = lens[k]
            k += 1
            x[p:p + n] += _syllable(rng, n, fs)
            words.append(TimedWord(w, p / fs, (p + n) / fs))
            p += n + int(rng.uniform(*word_gap) * fs)
        ends.append(len(words))
        p += int(rng.uniform(*phrase_gap) * fs)
    return x[:p + int(tail * fs)], words, ends


def utterance(lengths, starts=None, dur=0.2):
    """Source utterance whose words have the given character lengths, one segment per
    group: ``lengths`` is a list of lists."""
    words, bps, t = [], [], 0.0
    for group in lengths:
        for L in group:
            words.append(TimedWord("x" * L, t, t + dur))
            t += dur + 0.01
        bps.append(len(words))
        t += 0.5
    return SourceUtterance(tuple(words), tuple(bps))


def target(lengths, tags):
    return TargetSentence(tuple("y" * L for L in lengths), tuple(tags))


def snr_db(ref, est):
    err = ref - est
    return 10 * np.log10(np.sum(ref ** 2) / max(np.sum(err ** 2), 1e-300))


def dominant_frequency(x, fs):
    spec = np.abs(np.fft.rfft(x * np.hanning(len(x)), n=8 * len(x)))
    return np.argmax(spec) * fs / (8 * len(x))


def stub_tts_syllables(seconds=1.0):
    return stub_tts_command(seconds) + " --syllables"


def ideal_masks(fg, bg, window_size=1024, hop=256):
    """Ratio masks |S_fg| / (|S_fg| + |S_bg|) and their complement."""
    from dubsync.dsp import RatioMaskPair, stft
    a = np.abs(stft(AudioBuffer(fg, FS), window_size, hop).frames)
    b = np.abs(stft(AudioBuffer(bg, FS), window_size, hop).frames)
    m = a / np.maximum(a + b, 1e-12)
    return RatioMaskPair(m, 1.0 - m)


def toy_job(tmp, rng, rt60=0.6, seconds=15.0, tts=None, masks=True, floor=1e-5):
    """A synthetic dubbing job in directory ``tmp``.

    The original is speech-like audio plus a background of noise bursts,
    both reverberated by one image-source room response at ``rt60``, over
    a stationary noise floor. Three utterances of two phrases each, with
    an ideal ratio mask file when ``masks`` is set. Returns
    ``(job_path, info)`` where ``info`` holds the clean tracks.
    """
    import json
    from dubsync.dsp import write_masks, write_wav
    from dubsync.reverb import RoomSpec, convolve, generate_rir

    names = [["hello", "there", "my", "friend"], ["how", "are", "you"],
             ["the", "weather", "is", "nice"], ["today", "in", "town"],
             ["see", "you", "soon"], ["take", "care", "now"]]
    dry, words, ends = speech_like(rng, names)
    n = int(seconds * FS)
    assert len(dry) <= n
    dry = np.pad(dry, (0, n - len(dry)))
    bursts = 0.5 * noise_bursts(rng, seconds, burst=0.2, gap=1.3)
    if rt60 > 0:
        h = generate_rir(RoomSpec(target_rt60=rt60), FS)
        wet = convolve(AudioBuffer(dry, FS), h).samples
        bg = convolve(AudioBuffer(bursts, FS), h).samples
    else:
        wet, bg = dry, bursts
    bg = bg + floor * rng.standard_normal(n)
    mixture = wet + bg
    write_wav(tmp / "original.wav", AudioBuffer(mixture, FS))
    if masks:
        write_masks(tmp / "masks.dsmk", ideal_masks(wet, bg), 256, 1024, FS)

    transcript, translations = [], []
    target_words = ["ciao", "amico", "mio", "caro", "come", "stai", "oggi", "il", "tempo",
                    "bello", "in", "citta", "ci", "vediamo", "presto", "stammi", "bene"]
    tags = ["INTJ", "NOUN", "DET", "ADJ", "ADV", "VERB", "ADV", "DET", "NOUN",
            "ADJ", "ADP", "NOUN", "PRON", "VERB", "ADV", "VERB", "ADV"]
    bounds = [0] + ends
    for u in range(3):
        ws = words[bounds[2 * u]:bounds[2 * u + 2]]
        transcript.append({"words": [w.to_dict() for w in ws]})
        idx = rng.choice(len(target_words), size=6, replace=False)
        translations.append({"words": [target_words[i] for i in idx],
                             "pos": [tags[i] for i in idx]})
    job = {"original_audio": "original.wav", "transcript": transcript,
           "translations": translations, "tts_command": tts or stub_tts_command(),
           "output": "out/dub.wav"}
    if masks:
        job["masks"] = "masks.dsmk"
    path = tmp / "job.json"
    path.write_text(json.dumps(job, indent=1))
    return path, {"dry": dry, "wet": wet, "background": bg, "mixture": mixture}


ALIGN_TAGS = ["N", "V", "A", "D", "P"]


def random_instance(rng):
    """Random (utterance, target, smoothed LM) with m <= 12, k <= 4; ``rng`` is a random.Random."""
    k = rng.randint(1, 4)
    m = rng.randint(k, 12)
    n = rng.randint(k, 12)
    cuts = sorted(rng.sample(range(1, n), k - 1))
    groups, lo = [], 0
    for b in cuts + [n]:
        groups.append([rng.randint(1, 9) for _ in range(b - lo)])
        lo = b
    e = utterance(groups)
    f = target([rng.randint(1, 9) for _ in range(m)], [rng.choice(ALIGN_TAGS) for _ in range(m)])
    corpus = [[rng.choice(ALIGN_TAGS + [","]) for _ in range(rng.randint(2, 10))]
              for _ in range(rng.randint(1, 20))]
    model = train(corpus, order=rng.randint(2, 4))
    return e, f, model
