"""Speech-recognition adapter contract and per-section transcription.

Backends are pluggable; the bundled mock backend is scripted from a fixture
file mapping audio content digests to text, so the whole pipeline runs
deterministically with no model or network.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Protocol, Tuple

from .audio import AudioSegment, segment_audio
from .emr.schema import SectionKind


class TranscriptionError(RuntimeError):
    """Backend failure. Carries any segments already transcribed."""

    def __init__(self, message: str, completed: Optional[list] = None,
                 retryable: bool = False):
        super().__init__(message)
        self.completed = completed or []
        self.retryable = retryable


class SpeechBackend(Protocol):
    id: str
    language_tags: Tuple[str, ...]
    max_segment_s: float
    deterministic: bool

    def transcribe(self, segment: AudioSegment, language_hint: str = "") -> str:
        ...


@dataclass
class MockSpeechBackend:
    """Scripted backend: segment digest -> text. Deterministic by construction."""

    fixtures: Dict[str, str]
    id: str = "mock-speech"
    language_tags: Tuple[str, ...] = ("ur-Latn", "en")
    max_segment_s: float = 30.0
    deterministic: bool = True

    @classmethod
    def from_fixture_file(cls, path) -> "MockSpeechBackend":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(fixtures=json.load(fh))

    def transcribe(self, segment: AudioSegment, language_hint: str = "") -> str:
        text = self.fixtures.get(segment.digest)
        if text is None:
            raise TranscriptionError(
                f"segment at offset {segment.offset_s:.2f}s rejected: "
                f"no fixture for digest {segment.digest[:12]}"
            )
        return text


@dataclass
class SectionTranscript:
    section: SectionKind
    raw_text: str
    collapsed_text: str
    segments: List[Tuple[AudioSegment, str]] = field(default_factory=list)
    backend_id: str = ""

    @classmethod
    def from_text(cls, section: SectionKind, text: str,
                  backend_id: str = "scripted") -> "SectionTranscript":
        """Build a transcript directly from text (evaluation and test use)."""
        return cls(
            section=section,
            raw_text=text,
            collapsed_text=collapse_repetitions(text),
            segments=[],
            backend_id=backend_id,
        )


def transcribe_section(
    recording: bytes,
    backend: SpeechBackend,
    section: SectionKind,
    max_s: float = 30.0,
    language_hint: str = "",
) -> SectionTranscript:
    """Segment a recording and transcribe each segment in offset order.

    On backend failure the raised error retains the segments already
    transcribed so the caller can retry the remainder.
    """
    segments = segment_audio(recording, max_s=min(max_s, backend.max_segment_s))
    completed: List[Tuple[AudioSegment, str]] = []
    for segment in segments:
        try:
            text = backend.transcribe(segment, language_hint=language_hint)
        except TranscriptionError as exc:
            raise TranscriptionError(str(exc), completed=completed,
                                     retryable=True) from exc
        completed.append((segment, text))
    raw_text = " ".join(text for _, text in completed)
    return SectionTranscript(
        section=section,
        raw_text=raw_text,
        collapsed_text=collapse_repetitions(raw_text),
        segments=completed,
        backend_id=backend.id,
    )


def collapse_repetitions(text: str, max_ngram: int = 8, min_repeats: int = 2) -> str:
    """Reduce consecutive repeats of an n-gram to a single occurrence.

    Scans greedily: largest n first, leftmost run first. Collapsing small
    n-grams first could destroy larger periodic structure, hence the order.
    Idempotent; never increases token count.
    """
    if max_ngram < 1:
        raise ValueError("max_ngram must be >= 1")
    if min_repeats < 2:
        raise ValueError("min_repeats must be >= 2")
    tokens = text.split()
    # Removing a small run can expose a new larger-period repeat, so sweep
    # until no pass changes anything.
    changed = True
    while changed:
        changed = False
        for n in range(min(max_ngram, len(tokens) // 2), 0, -1):
            i = 0
            while i + n <= len(tokens):
                count = 1
                while tokens[i + count * n: i + (count + 1) * n] == tokens[i: i + n]:
                    count += 1
                if count >= min_repeats:
                    del tokens[i + n: i + count * n]
                    changed = True
                i += 1
    return " ".join(tokens)
