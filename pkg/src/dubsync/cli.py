"""Command-line entry point: ``dubsync <command> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import dsp, length, lm, reverb
from .align import AlignmentConfig, align
from .core import ValidationError, load_transcript, load_translation, write_json
from .pipeline import DubbingJob, ExternalCommandError, run_job

EXIT_OK, EXIT_VALIDATION, EXIT_EXTERNAL = 0, 2, 3


def _lm_train(args):
    corpus = lm.read_corpus(args.inp)
    model = lm.train(corpus, args.order, args.alpha)
    model.save(args.out)
    print(f"{len(corpus)} sentences, {len(model.counts)} n-grams -> {args.out}")


def _align(args):
    e = load_transcript(args.transcript, args.pause_threshold)
    f = load_translation(args.translation)
    model = lm.PosNGramModel.load(args.lm) if args.lm else lm.PosNGramModel.uniform(f.pos)
    cfg = AlignmentConfig(args.duration_weight, args.break_weight,
                          args.use_source_timings, args.window)
    seg = align(e, f, model, cfg)
    write_json(seg.to_dict(f), args.out)
    print(" | ".join(" ".join(ws) for ws in seg.segments(f)))


def _partition(args):
    th = length.LengthThresholds(args.t1, args.t2)
    tagged, counts = length.partition_corpus(length.read_pairs(args.inp), th, args.unit)
    length.write_tagged(tagged, args.out)
    stats = length.corpus_ratio_stats(tagged)
    stats["groups"] = counts
    if args.stats:
        write_json(stats, args.stats)
    print(json.dumps(counts))


def _separate_apply(args):
    audio = dsp.read_wav(args.audio)
    masks, params = dsp.read_masks(args.masks)
    if params["sample_rate"] != audio.sample_rate:
        raise ValidationError(
            f"mask sample rate {params['sample_rate']} != audio {audio.sample_rate}")
    fg, bg = dsp.apply_masks(dsp.stft(audio, params["window_size"], params["hop"]), masks)
    dsp.write_wav(args.fg, fg)
    dsp.write_wav(args.bg, bg)


def _fit(args):
    audio = dsp.read_wav(args.audio)
    out = dsp.fit_duration(audio, args.duration, args.window, args.hop)
    dsp.write_wav(args.out, out)
    print(f"{audio.duration:.3f} s -> {out.duration:.3f} s")


def _rt60(args):
    print(f"{reverb.estimate_rt60(dsp.read_wav(args.audio)):.3f}")


def _parse_triple(text: str) -> tuple[float, float, float]:
    parts = text.lower().replace(",", "x").split("x")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected LxWxH, got {text!r}")
    return tuple(float(p) for p in parts)


def _rir(args):
    kw = {"dimensions": args.room, "target_rt60": args.rt60, "max_order": args.max_order}
    if args.source:
        kw["source"] = args.source
    if args.mic:
        kw["microphone"] = args.mic
    h = reverb.generate_rir(reverb.RoomSpec(**kw), args.sample_rate)
    dsp.write_wav(args.out, dsp.AudioBuffer(h.samples, h.sample_rate))


def _reverb(args):
    audio = dsp.read_wav(args.audio)
    h = dsp.read_wav(args.rir)
    wet = reverb.convolve(audio, reverb.ImpulseResponse(h.samples, h.sample_rate),
                          trim=not args.full)
    dsp.write_wav(args.out, wet)


def _dub(args):
    result = run_job(DubbingJob.from_file(args.job))
    print(json.dumps(result))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dubsync", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("lm-train", help="train a POS n-gram break model")
    s.add_argument("--order", type=int, default=3)
    s.add_argument("--alpha", type=float, default=lm.DEFAULT_ALPHA)
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_lm_train)

    s = sub.add_parser("align", help="segment a translation to match source pauses")
    s.add_argument("--transcript", required=True)
    s.add_argument("--translation", required=True)
    s.add_argument("--lm")
    s.add_argument("--out", required=True)
    s.add_argument("--pause-threshold", type=float, default=0.3)
    s.add_argument("--duration-weight", type=float, default=1.0)
    s.add_argument("--break-weight", type=float, default=1.0)
    s.add_argument("--window", type=int, default=2)
    s.add_argument("--use-source-timings", action="store_true")
    s.set_defaults(func=_align)

    s = sub.add_parser("partition", help="length-tag an MT training corpus")
    s.add_argument("--t1", type=float, default=0.95)
    s.add_argument("--t2", type=float, default=1.05)
    s.add_argument("--unit", choices=("chars", "tokens"), default="chars")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--stats")
    s.set_defaults(func=_partition)

    s = sub.add_parser("separate-apply", help="apply foreground/background masks")
    s.add_argument("--audio", required=True)
    s.add_argument("--masks", required=True)
    s.add_argument("--fg", required=True)
    s.add_argument("--bg", required=True)
    s.set_defaults(func=_separate_apply)

    s = sub.add_parser("fit", help="fit audio to a duration by spectrogram resizing")
    s.add_argument("--audio", required=True)
    s.add_argument("--duration", type=float, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--window", type=int, default=dsp.DEFAULT_WINDOW)
    s.add_argument("--hop", type=int, default=dsp.DEFAULT_HOP)
    s.set_defaults(func=_fit)

    s = sub.add_parser("rt60", help="blind reverberation time estimate")
    s.add_argument("--audio", required=True)
    s.set_defaults(func=_rt60)

    s = sub.add_parser("rir", help="synthesize a room impulse response")
    s.add_argument("--rt60", type=float, required=True)
    s.add_argument("--room", type=_parse_triple, default=(5.0, 4.0, 3.0))
    s.add_argument("--source", type=_parse_triple)
    s.add_argument("--mic", type=_parse_triple)
    s.add_argument("--max-order", type=int, default=-1)
    s.add_argument("--sample-rate", type=int, default=dsp.DEFAULT_SAMPLE_RATE)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_rir)

    s = sub.add_parser("reverb", help="convolve audio with an impulse response")
    s.add_argument("--audio", required=True)
    s.add_argument("--rir", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--full", action="store_true", help="keep the full convolution tail")
    s.set_defaults(func=_reverb)

    s = sub.add_parser("dub", help="run a dubbing job file")
    s.add_argument("--job", required=True)
    s.set_defaults(func=_dub)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ExternalCommandError as exc:
        print(f"dubsync: {exc}", file=sys.stderr)
        return EXIT_EXTERNAL
    except (ValidationError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"dubsync: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except KeyError as exc:
        print(f"dubsync: missing field {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
