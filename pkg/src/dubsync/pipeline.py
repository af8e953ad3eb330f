"""
End-to-end dubbing: align each translated sentence to its source
utterance, synthesize every target segment with an external TTS command,
fit it to the source segment's duration, and render the result over the
original background with matching reverberation.

The TTS adapter is any command line. ``{text}`` in the template is
replaced by the segment text (otherwise the text is written to stdin) and
``{out}`` by the WAV path the command must write.
"""
from __future__ import annotations

import json
import logging
import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import dsp
from .align import AlignmentConfig, align
from .core import SourceUtterance, TargetSentence, ValidationError, write_json
from .dsp import AudioBuffer
from .lm import PosNGramModel
from .reverb import RoomSpec, convolve, estimate_rt60, generate_rir, ImpulseResponse

logger = logging.getLogger(__name__)


class ExternalCommandError(RuntimeError):
    """The external TTS command failed or produced unusable audio."""


@dataclass(frozen=True)
class DubbingJob:
    original_audio: Path
    transcript: tuple[SourceUtterance, ...]
    translations: tuple[TargetSentence, ...]
    tts_command: str
    output: Path
    masks: Path | None = None
    lm: Path | None = None
    config: AlignmentConfig = AlignmentConfig()
    room: RoomSpec = RoomSpec()
    window_size: int = dsp.DEFAULT_WINDOW
    hop: int = dsp.DEFAULT_HOP

    def __post_init__(self):
        object.__setattr__(self, "transcript", tuple(self.transcript))
        object.__setattr__(self, "translations", tuple(self.translations))
        if len(self.transcript) != len(self.translations):
            raise ValidationError(
                f"{len(self.transcript)} utterances but {len(self.translations)} translations")
        if not self.transcript:
            raise ValidationError("job has no utterances")

    def check_files(self):
        for name in ("original_audio", "masks", "lm"):
            p = getattr(self, name)
            if p is not None and not Path(p).is_file():
                raise ValidationError(f"{name} file not found: {p}")

    @classmethod
    def from_file(cls, path) -> DubbingJob:
        """Load a job JSON file; relative paths resolve against its directory."""
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
        base = path.parent

        def resolve(p):
            return None if p is None else (base / p).resolve()

        def items(value):
            if isinstance(value, str):
                with open(resolve(value), encoding="utf-8") as fh:
                    value = json.load(fh)
            return [value] if isinstance(value, dict) else value

        try:
            cfg = d.get("config") or {}
            room = cfg.get("room") or {}
            room = RoomSpec(**{k: tuple(v) if isinstance(v, list) else v
                               for k, v in room.items()})
            return cls(
                original_audio=resolve(d["original_audio"]),
                transcript=[SourceUtterance.from_dict(u, cfg.get("pause_threshold", 0.3))
                            for u in items(d["transcript"])],
                translations=[TargetSentence.from_dict(t) for t in items(d["translations"])],
                tts_command=d["tts_command"],
                output=resolve(d["output"]),
                masks=resolve(d.get("masks")),
                lm=resolve(d.get("lm")),
                config=AlignmentConfig.from_dict(cfg),
                room=room,
                window_size=cfg.get("window_size", dsp.DEFAULT_WINDOW),
                hop=cfg.get("hop", dsp.DEFAULT_HOP),
            )
        except KeyError as exc:
            raise ValidationError(f"job file missing field {exc}") from None
        except TypeError as exc:
            raise ValidationError(f"bad job file: {exc}") from None


@dataclass(frozen=True)
class SegmentPlan:
    utterance: int
    segment: int
    words: tuple[str, ...]
    start: float
    end: float
    tts_audio: Path | None = None
    stretch_factor: float = 1.0

    def __post_init__(self):
        if not dsp.MIN_FACTOR <= self.stretch_factor <= dsp.MAX_FACTOR:
            raise ValidationError(f"segment {self.id}: stretch factor {self.stretch_factor}")
        if not self.end > self.start:
            raise ValidationError(f"segment {self.id}: empty time span")

    @property
    def id(self) -> str:
        return f"u{self.utterance}s{self.segment}"

    @property
    def text(self) -> str:
        return " ".join(self.words)

    @property
    def duration(self) -> float:
        return self.end - self.start

    def to_dict(self) -> dict:
        return {"id": self.id, "utterance": self.utterance, "segment": self.segment,
                "text": self.text, "start": self.start, "end": self.end,
                "tts_audio": None if self.tts_audio is None else str(self.tts_audio),
                "stretch_factor": self.stretch_factor}


def load_lm(job: DubbingJob) -> PosNGramModel:
    if job.lm is not None:
        return PosNGramModel.load(job.lm)
    tags = {p for f in job.translations for p in f.pos}
    return PosNGramModel.uniform(tags)


def plan(job: DubbingJob, lm: PosNGramModel, alignments: list | None = None) -> list[SegmentPlan]:
    """Align every utterance and give each target segment its source time span.

    If ``alignments`` is a list, the per-utterance segmentations are
    appended to it.
    """
    plans = []
    for u, (e, f) in enumerate(zip(job.transcript, job.translations)):
        if f.m < e.k:
            raise ValidationError(
                f"utterance {u}: target too short for k segments (m={f.m}, k={e.k})")
        seg = align(e, f, lm, job.config)
        if alignments is not None:
            alignments.append(seg.to_dict(f))
        for t, (words, (start, end)) in enumerate(zip(seg.segments(f), seg.segment_spans)):
            plans.append(SegmentPlan(u, t, tuple(words), start, end))
    plans.sort(key=lambda p: p.start)
    for a, b in zip(plans, plans[1:]):
        if a.end > b.start:
            raise ValidationError(f"segments {a.id} and {b.id} overlap in time")
    return plans


def _tmp_dir() -> str | None:
    return os.environ.get("DUBSYNC_TMP") or None


def run_tts(text: str, tts_command: str, out_path: Path, seg_id: str = "") -> AudioBuffer:
    """Run the TTS command for ``text`` and read the WAV it writes."""
    template = shlex.split(tts_command)
    if not template:
        raise ValidationError("empty tts_command")
    via_arg = any("{text}" in a for a in template)
    argv = [a.replace("{text}", text).replace("{out}", str(out_path)) for a in template]
    try:
        proc = subprocess.run(argv, input=None if via_arg else text, text=True,
                              capture_output=True, timeout=600)
    except (OSError, subprocess.TimeoutExpired) as exc:
        raise ExternalCommandError(f"segment {seg_id}: TTS command failed: {exc}") from exc
    if proc.returncode != 0:
        raise ExternalCommandError(
            f"segment {seg_id}: TTS command exited with {proc.returncode}: "
            f"{proc.stderr.strip()[:500]}")
    if not out_path.is_file():
        raise ExternalCommandError(f"segment {seg_id}: TTS command wrote no WAV at {out_path}")
    try:
        audio = dsp.read_wav(out_path)
    except (ValueError, OSError) as exc:
        raise ExternalCommandError(f"segment {seg_id}: malformed WAV: {exc}") from exc
    if len(audio) == 0:
        raise ExternalCommandError(f"segment {seg_id}: TTS produced empty audio")
    return audio


def synthesize_and_fit(seg: SegmentPlan, tts_command: str, sample_rate: int,
                       window_size: int = dsp.DEFAULT_WINDOW, hop: int = dsp.DEFAULT_HOP,
                       work_dir=None) -> tuple[AudioBuffer, SegmentPlan]:
    """Synthesize one segment and fit it to the segment's time span.

    Returns the fitted audio and the plan updated with the TTS file and
    the applied stretch factor.
    """
    with tempfile.TemporaryDirectory(prefix="dubsync-", dir=work_dir or _tmp_dir()) as tmp:
        out = Path(tmp) / f"{seg.id}.wav"
        audio = run_tts(seg.text, tts_command, out, seg.id)
    audio = dsp.resample(audio, sample_rate)
    target_len = dsp._round_half_up(seg.duration * sample_rate)
    factor = target_len / len(audio)
    if not dsp.MIN_FACTOR <= factor <= dsp.MAX_FACTOR:
        raise ValidationError(
            f"segment {seg.id}: stretch factor {factor:.3f} outside "
            f"[{dsp.MIN_FACTOR}, {dsp.MAX_FACTOR}]")
    try:
        fitted = dsp.fit_duration(audio, target_len / sample_rate, window_size, hop)
    except ValidationError as exc:
        raise ValidationError(f"segment {seg.id}: {exc}") from None
    return fitted, replace(seg, stretch_factor=factor)


def dubbing_rir(rt60: float, room: RoomSpec, sample_rate: int) -> ImpulseResponse | None:
    """Synthetic RIR for re-reverberating dubbed speech, or None for a dry room.

    The response is shifted to start at its direct path, so convolution
    keeps the speech in place, and scaled to unit energy, so it keeps the
    speech at its level.
    """
    if rt60 < room.min_rt60:
        return None
    h = generate_rir(replace(room, target_rt60=rt60), sample_rate).samples
    peak = int(np.argmax(np.abs(h)))
    h = h[peak:] * np.sign(h[peak])
    return ImpulseResponse(h / np.sqrt(np.sum(h * h)), sample_rate)


def _stage(label, fn, *args):
    try:
        return fn(*args)
    except ValidationError as exc:
        raise ValidationError(f"{label}: {exc}") from exc


def render(job: DubbingJob, plans: Sequence[SegmentPlan], fitted: Sequence[AudioBuffer],
           original: AudioBuffer | None = None, info: dict | None = None) -> AudioBuffer:
    """Place fitted segments on the original timeline over its background.

    Each fitted segment starts at its span start and is cut at the span
    end. Reverberation is applied to the placed segment, so its decay may
    extend past the span; the output is cut to the original's length.

    ``info``, if given, receives the estimated RT60, where it came from,
    and the scale factor the mix applied to avoid clipping.
    """
    if len(plans) != len(fitted):
        raise ValidationError("one fitted segment per plan required")
    if original is None:
        original = _stage("read original", dsp.read_wav, job.original_audio)
    sr, n = original.sample_rate, len(original)

    background = None
    if job.masks is not None:
        masks, params = _stage("read masks", dsp.read_masks, job.masks)
        mix_spec = _stage("separation", dsp.stft, original, params["window_size"], params["hop"])
        _, background = _stage("separation", dsp.apply_masks, mix_spec, masks)

    rt_source = "background"
    try:
        if background is None:
            raise ValidationError("no background")
        rt60 = estimate_rt60(background)
    except ValidationError:
        rt_source = "mixture"
        try:
            rt60 = estimate_rt60(original)
        except ValidationError:
            rt_source, rt60 = "none", 0.0
    rir = _stage("rir", dubbing_rir, rt60, job.room, sr)
    if info is not None:
        info.update(rt60=rt60, rt60_source=rt_source, reverberated=rir is not None)

    speech = np.zeros(n)
    for p, seg in zip(plans, fitted):
        if seg.sample_rate != sr:
            raise ValidationError(f"render: segment {p.id} sample rate {seg.sample_rate} != {sr}")
        i0 = dsp._round_half_up(p.start * sr)
        i1 = min(n, i0 + len(seg), dsp._round_half_up(p.end * sr))
        if i1 <= i0:
            continue
        dry = AudioBuffer(seg.samples[:i1 - i0], sr)
        # the dry segment stays inside its span; its reverberation tail may
        # ring on into the following pause, as it would in the room
        wet = convolve(dry, rir, trim=False).samples if rir is not None else dry.samples
        wet = wet[:n - i0]
        speech[i0:i0 + len(wet)] += wet
    tracks = [(AudioBuffer(speech, sr), 1.0)]
    if background is not None:
        tracks.append((background, 1.0))
    out, scale = dsp.mix(tracks)
    if info is not None:
        info["mix_scale"] = scale
    return AudioBuffer(out.samples[:n], sr)


def run_job(job: DubbingJob) -> dict:
    """Run a whole dubbing job, writing the output WAV and its artifacts.

    Artifacts beside the output: ``<stem>.alignment.json``,
    ``<stem>.plan.json``, ``<stem>.rt60.json`` and one WAV per fitted
    segment in ``<stem>.segments/``.
    """
    job.check_files()
    out = Path(job.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    stem = out.with_suffix("")
    original = _stage("read original", dsp.read_wav, job.original_audio)
    lm = _stage("load lm", load_lm, job)

    alignments = []
    plans = plan(job, lm, alignments)
    write_json({"utterances": alignments}, f"{stem}.alignment.json")

    seg_dir = Path(f"{stem}.segments")
    seg_dir.mkdir(exist_ok=True)
    fitted, done = [], []
    for p in plans:
        audio, p = synthesize_and_fit(p, job.tts_command, original.sample_rate,
                                      job.window_size, job.hop)
        path = seg_dir / f"{p.id}.wav"
        dsp.write_wav(path, audio)
        fitted.append(audio)
        done.append(replace(p, tts_audio=path))
    write_json({"segments": [p.to_dict() for p in done]}, f"{stem}.plan.json")

    info = {}
    result = render(job, done, fitted, original, info)
    write_json(info, f"{stem}.rt60.json")
    dsp.write_wav(out, result)
    logger.info("wrote %s (%.2f s, rt60 %.3f s)", out, result.duration, info["rt60"])
    return {"output": str(out), "segments": len(done), **info}
