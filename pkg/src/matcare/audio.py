"""Audio handling: WAV decode and silence-aware segmentation.

Input is mono 16 kHz 16-bit PCM WAV. Recordings are chunked to a maximum
segment length (30 s by default, the bound the recognizer was trained
with); cut points prefer the longest silence within the last 5 s of a full
window so segments do not split words.
"""

from __future__ import annotations

import hashlib
import io
import wave
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

SAMPLE_RATE = 16_000
SAMPLE_WIDTH = 2  # bytes, int16

#: Samples below this absolute amplitude count as silence.
SILENCE_AMPLITUDE = 500
#: A silence run must last at least this long to be a cut candidate.
MIN_SILENCE_S = 0.08
#: Cut candidates are searched within this tail of a full window.
CUT_SEARCH_WINDOW_S = 5.0


class AudioError(ValueError):
    """Undecodable, empty, or otherwise unusable audio input."""


@dataclass(frozen=True)
class AudioSegment:
    """One chunk of a recording, as raw PCM frames."""

    pcm: bytes
    duration_s: float
    offset_s: float

    @property
    def digest(self) -> str:
        """Content digest; doubles as the fixture id for the mock backend."""
        return hashlib.sha256(self.pcm).hexdigest()


def decode_wav(data: bytes) -> np.ndarray:
    """Decode a mono 16 kHz 16-bit WAV into an int16 sample array."""
    try:
        with wave.open(io.BytesIO(data), "rb") as wav:
            if wav.getnchannels() != 1:
                raise AudioError(f"expected mono audio, got {wav.getnchannels()} channels")
            if wav.getsampwidth() != SAMPLE_WIDTH:
                raise AudioError(f"expected 16-bit samples, got {wav.getsampwidth() * 8}-bit")
            if wav.getframerate() != SAMPLE_RATE:
                raise AudioError(f"expected {SAMPLE_RATE} Hz, got {wav.getframerate()} Hz")
            frames = wav.readframes(wav.getnframes())
    except wave.Error as exc:
        raise AudioError(f"undecodable audio: {exc}") from exc
    samples = np.frombuffer(frames, dtype=np.int16)
    if samples.size == 0:
        raise AudioError("zero-length recording")
    return samples


def encode_wav(samples: np.ndarray) -> bytes:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(SAMPLE_WIDTH)
        wav.setframerate(SAMPLE_RATE)
        wav.writeframes(samples.astype(np.int16).tobytes())
    return buf.getvalue()


def _longest_silence_mid(samples: np.ndarray, lo: int, hi: int) -> Optional[int]:
    """Midpoint of the longest silence run inside [lo, hi), or None."""
    region = np.abs(samples[lo:hi].astype(np.int32)) < SILENCE_AMPLITUDE
    min_run = int(MIN_SILENCE_S * SAMPLE_RATE)
    best_len = 0
    best_mid = None
    run_start = None
    for i, quiet in enumerate(region):
        if quiet and run_start is None:
            run_start = i
        elif not quiet and run_start is not None:
            run_len = i - run_start
            if run_len >= min_run and run_len > best_len:
                best_len = run_len
                best_mid = lo + run_start + run_len // 2
            run_start = None
    if run_start is not None:
        run_len = len(region) - run_start
        if run_len >= min_run and run_len > best_len:
            best_mid = lo + run_start + run_len // 2
    return best_mid


def segment_audio(recording: bytes, max_s: float = 30.0) -> List[AudioSegment]:
    """Split a WAV recording into non-overlapping segments of at most max_s.

    Segments cover the recording exactly; a full window is cut at the
    longest silence found in its last CUT_SEARCH_WINDOW_S seconds, falling
    back to a hard cut at the window boundary.
    """
    if max_s <= 0:
        raise AudioError("max_s must be positive")
    samples = decode_wav(recording)
    max_samples = int(max_s * SAMPLE_RATE)
    segments: List[AudioSegment] = []
    pos = 0
    total = samples.size
    while total - pos > max_samples:
        window_end = pos + max_samples
        search_lo = max(pos, window_end - int(CUT_SEARCH_WINDOW_S * SAMPLE_RATE))
        cut = _longest_silence_mid(samples, search_lo, window_end)
        if cut is None or cut <= pos:
            cut = window_end
        segments.append(_make_segment(samples, pos, cut))
        pos = cut
    segments.append(_make_segment(samples, pos, total))
    return segments


def _make_segment(samples: np.ndarray, start: int, end: int) -> AudioSegment:
    return AudioSegment(
        pcm=samples[start:end].tobytes(),
        duration_s=(end - start) / SAMPLE_RATE,
        offset_s=start / SAMPLE_RATE,
    )
