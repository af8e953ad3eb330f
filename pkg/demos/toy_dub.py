"""
A complete toy dub
==================

A synthetic 15 s "original" (harmonic speech-like phrases and noise
bursts, both in a reverberant room) is dubbed with a stand-in TTS that
produces noise for any text. The pipeline aligns each translation,
synthesizes and stretches every segment, estimates the room's
reverberation from the separated background and mixes everything back.
"""

import json
import sys
import tempfile
from pathlib import Path

import numpy as np

here = Path(__file__).resolve().parent
sys.path.insert(0, str(here.parent / "tests"))
from helpers import stub_tts_command, toy_job  # noqa: E402

from dubsync import estimate_rt60, read_wav  # noqa: E402
from dubsync.pipeline import DubbingJob, run_job  # noqa: E402

work = Path(tempfile.mkdtemp(prefix="toy-dub-"))
job_path, tracks = toy_job(work, np.random.default_rng(1), rt60=0.6, tts=stub_tts_command())
print(job_path.read_text()[:400], "...")

result = run_job(DubbingJob.from_file(job_path))
print(json.dumps(result, indent=1))

###############################################################################
# Every stretched segment sits in the time span of its source segment

plan = json.loads((work / "out" / "dub.plan.json").read_text())["segments"]
for p in plan:
    print("%-5s %5.2f-%5.2f s  x%.2f  %s" % (p["id"], p["start"], p["end"],
                                             p["stretch_factor"], p["text"]))

out = read_wav(work / "out" / "dub.wav")
orig = read_wav(work / "original.wav")
print("original %.3f s, dub %.3f s" % (orig.duration, out.duration))
print("RT60 original %.3f s, dub %.3f s" % (estimate_rt60(orig), estimate_rt60(out)))
print("artifacts in", work / "out")
