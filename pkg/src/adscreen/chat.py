"""Parser for the CHAT transcript dialect used by clinical picture-description interviews.

Supported subset: speaker tiers (``*TAG:``), unintelligible ``xxx``, retracing
groups ``<...> [/]``, pauses ``(.)`` / ``(..)`` / ``(...)``, trailing-off
``+...`` (collapsed into the pause count), and fillers ``&uh`` / ``&um``.
Header lines (``@...``), dependent tiers (``%...``) and every other CHAT code
are stripped as control noise and logged at DEBUG level.

Parsing strips utterance terminators (standalone or attached, as in ``cat.``)
but never lowercases or touches word-internal punctuation; that is
:func:`clean_tokens`' job, so event extraction sees original forms.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import EmptyDocumentError, MalformedLineError

logger = logging.getLogger(__name__)

_SPEAKER_RE = re.compile(r"^\*+([^:*\s]+):\s*(.*)$")
_PAUSE_RE = re.compile(r"^\(\.{1,3}\)$")
_TRAILING_RE = re.compile(r"^\+(\.{2,3}|…)[.?!]?$")
_TERMINATOR_RE = re.compile(r"^[.?!,;:…]+$")
_CONTROL_CHARS_RE = re.compile(r"[<>\[\]()]")


class EventKind(str, Enum):
    UNINTELLIGIBLE = "unintelligible"
    RETRACING = "retracing"
    PAUSE = "pause"
    FILLER = "filler"


class Label(str, Enum):
    CONTROL = "control"
    DEMENTIA = "dementia"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class ParsedEvent:
    """A clinically countable speech event.

    ``span`` is the (start, end) index range in the utterance's *kept* token
    list where the event occurred; events whose source tokens were removed
    carry an empty range anchored at the removal point.  ``consumed`` is the
    number of content tokens the event absorbed, which makes token
    conservation checkable per utterance.
    """

    kind: EventKind
    span: tuple[int, int]
    consumed: int = 1


@dataclass(frozen=True)
class Utterance:
    speaker: str
    tokens: tuple[str, ...]
    events: tuple[ParsedEvent, ...] = ()


@dataclass(frozen=True)
class Demographics:
    age: Optional[float] = None
    gender: Optional[str] = None  # "male" | "female"


@dataclass(frozen=True)
class RawChatDocument:
    lines: tuple[str, ...]
    source_id: str = ""

    @classmethod
    def from_text(cls, text: str, source_id: str = "") -> "RawChatDocument":
        return cls(lines=tuple(text.splitlines()), source_id=source_id)


@dataclass(frozen=True)
class TranscriptMeta:
    """Sidecar metadata record accompanying a transcript file."""

    id: str
    age: Optional[float] = None
    gender: Optional[str] = None
    audio_length_seconds: Optional[float] = None
    label: Label = Label.UNKNOWN

    @classmethod
    def from_dict(cls, d: dict) -> "TranscriptMeta":
        return cls(
            id=str(d["id"]),
            age=None if d.get("age") is None else float(d["age"]),
            gender=d.get("gender"),
            audio_length_seconds=(
                None
                if d.get("audio_length_seconds") is None
                else float(d["audio_length_seconds"])
            ),
            label=Label(str(d.get("label", "unknown")).lower()),
        )


@dataclass(frozen=True)
class Transcript:
    source_id: str
    utterances: tuple[Utterance, ...]
    demographics: Demographics = Demographics()
    audio_length: Optional[float] = None  # seconds
    label: Label = Label.UNKNOWN
    interviewer_speakers: tuple[str, ...] = ()

    def __post_init__(self):
        if self.audio_length is not None and not self.audio_length > 0:
            raise ValueError("audio_length must be > 0 when present")
        age = self.demographics.age
        if age is not None and not (0 <= age <= 130):
            raise ValueError(f"age {age} outside [0, 130]")

    def participant_utterances(self) -> list[Utterance]:
        return [u for u in self.utterances if u.speaker not in self.interviewer_speakers]

    def interviewer_utterances(self) -> list[Utterance]:
        return [u for u in self.utterances if u.speaker in self.interviewer_speakers]


def _tokenize_utterance(text: str, line_no: int) -> tuple[list[str], list[ParsedEvent]]:
    """Translate one utterance's raw text into kept tokens plus events."""
    raw = text.split()
    tokens: list[str] = []
    events: list[ParsedEvent] = []
    i = 0
    n = len(raw)

    def here() -> tuple[int, int]:
        return (len(tokens), len(tokens))

    while i < n:
        tok = raw[i]

        if tok.startswith("<"):
            # retracing group: collect words until a token ends with ">",
            # then require the repetition marker "[/]"
            group: list[str] = []
            body = tok[1:]
            closed = False
            while True:
                if "<" in body:
                    raise MalformedLineError("nested angle bracket group", line_no)
                if body.endswith(">"):
                    word = body[:-1]
                    if word:
                        group.append(word)
                    closed = True
                else:
                    if body:
                        group.append(body)
                if closed:
                    break
                i += 1
                if i >= n:
                    raise MalformedLineError("unclosed angle bracket group", line_no)
                body = raw[i]
            i += 1
            if i >= n or raw[i] != "[/]":
                raise MalformedLineError(
                    "angle bracket group not followed by [/]", line_no
                )
            i += 1
            events.append(
                ParsedEvent(EventKind.RETRACING, here(), consumed=len(group))
            )
            continue

        if _PAUSE_RE.match(tok):
            events.append(ParsedEvent(EventKind.PAUSE, here()))
        elif tok == "xxx":
            events.append(ParsedEvent(EventKind.UNINTELLIGIBLE, here()))
        elif tok.startswith("&"):
            if tok[1:].lower() in ("uh", "um", "-uh", "-um"):
                events.append(ParsedEvent(EventKind.FILLER, here()))
            else:
                logger.debug("line %d: stripped filler-like code %r", line_no, tok)
        elif _TRAILING_RE.match(tok):
            # trailing-off marker, collapsed into the pause count
            events.append(ParsedEvent(EventKind.PAUSE, here()))
        elif tok.startswith("+"):
            logger.debug("line %d: stripped control code %r", line_no, tok)
        elif tok.startswith("["):
            # bracket codes other than a group's [/]; may span several
            # whitespace-separated pieces, e.g. "[x 2]"
            while i < n and not raw[i].endswith("]"):
                i += 1
            logger.debug("line %d: stripped bracket code starting %r", line_no, tok)
        elif _TERMINATOR_RE.match(tok):
            pass  # utterance terminator / separator, not content
        else:
            cleaned = _CONTROL_CHARS_RE.sub("", tok)
            # terminators attach to the last word ("cat.") as often as they
            # stand alone; either way they are not content
            cleaned = cleaned.rstrip(".?!,;:…")
            if cleaned != tok:
                logger.debug(
                    "line %d: stripped control characters from %r", line_no, tok
                )
            if cleaned:
                tokens.append(cleaned)
        i += 1

    return tokens, events


def _merge_speaker_lines(doc: RawChatDocument) -> list[tuple[int, str, str]]:
    """Collect (line_no, speaker, text) triples, merging tab continuations."""
    merged: list[tuple[int, str, str]] = []
    for idx, line in enumerate(doc.lines, start=1):
        if not line.strip():
            continue
        m = _SPEAKER_RE.match(line)
        if m:
            merged.append((idx, m.group(1), m.group(2)))
        elif line[0] in " \t" and merged:
            no, spk, text = merged[-1]
            merged[-1] = (no, spk, text + " " + line.strip())
        elif line.startswith(("@", "%")):
            logger.debug("line %d: ignored tier %r", idx, line[:20])
        else:
            logger.debug("line %d: ignored non-speaker line %r", idx, line[:20])
    return merged


_INTERVIEWER_TAG_RE = re.compile(r"^(INV\w*|INT\w*|IN[0-9]?|EXAMINER)$", re.IGNORECASE)


def parse_chat(
    doc: RawChatDocument,
    meta: Optional[TranscriptMeta] = None,
    participant: Optional[str] = None,
) -> Transcript:
    """Parse a raw CHAT document into a structured :class:`Transcript`.

    Speakers with interviewer-style tags (``INV`` and friends) are recorded
    as interviewers; everyone else counts as a participant.  Naming a
    ``participant`` explicitly overrides the heuristic and makes every
    other speaker an interviewer.  Metadata, when given, supplies
    demographics, audio length and the diagnosis label; without it the
    transcript is tagged :attr:`Label.UNKNOWN` with absent demographics.

    Raises :class:`MalformedLineError` on unclosed or nested retracing
    groups and :class:`EmptyDocumentError` when no speaker line exists.
    """
    merged = _merge_speaker_lines(doc)
    if not merged:
        raise EmptyDocumentError(f"no speaker lines in {doc.source_id or 'document'}")

    utterances = []
    speakers_in_order: list[str] = []
    for line_no, speaker, text in merged:
        tokens, events = _tokenize_utterance(text, line_no)
        utterances.append(Utterance(speaker, tuple(tokens), tuple(events)))
        if speaker not in speakers_in_order:
            speakers_in_order.append(speaker)

    if participant is not None:
        interviewers = tuple(s for s in speakers_in_order if s != participant)
    else:
        interviewers = tuple(
            s for s in speakers_in_order if _INTERVIEWER_TAG_RE.match(s)
        )
        if len(interviewers) == len(speakers_in_order):
            interviewers = ()  # nobody left to study otherwise

    if meta is None:
        return Transcript(
            source_id=doc.source_id,
            utterances=tuple(utterances),
            interviewer_speakers=interviewers,
        )
    return Transcript(
        source_id=meta.id or doc.source_id,
        utterances=tuple(utterances),
        demographics=Demographics(age=meta.age, gender=meta.gender),
        audio_length=meta.audio_length_seconds,
        label=meta.label,
        interviewer_speakers=interviewers,
    )


def clean_tokens(tokens: Iterable[str]) -> list[str]:
    """Apply the text-cleaning rules to a token sequence.

    ``\\-`` and ``\\/`` become a single space (splitting the token), the
    punctuation marks ``. : ? ; , !`` are deleted, and the result is
    lowercased.  Empty tokens are dropped.
    """
    out: list[str] = []
    for tok in tokens:
        tok = tok.replace("\\-", " ").replace("\\/", " ")
        for ch in ".:?;,!":
            tok = tok.replace(ch, "")
        for piece in tok.lower().split():
            if piece:
                out.append(piece)
    return out


def clean_text(t: Transcript) -> list[str]:
    """Cleaned participant token sequence, in utterance order.

    Interviewer turns are excluded so no interviewer token can reach a
    downstream feature.
    """
    tokens: list[str] = []
    for utt in t.participant_utterances():
        tokens.extend(clean_tokens(utt.tokens))
    return tokens


def event_counts(t: Transcript) -> dict[EventKind, int]:
    """Number of parsed events of each kind across participant utterances."""
    counts = {kind: 0 for kind in EventKind}
    for utt in t.participant_utterances():
        for ev in utt.events:
            counts[ev.kind] += 1
    return counts


# -- JSON round trip ---------------------------------------------------------

def transcript_to_dict(t: Transcript) -> dict:
    return {
        "source_id": t.source_id,
        "interviewer_speakers": list(t.interviewer_speakers),
        "audio_length": t.audio_length,
        "label": t.label.value,
        "demographics": {"age": t.demographics.age, "gender": t.demographics.gender},
        "utterances": [
            {
                "speaker": u.speaker,
                "tokens": list(u.tokens),
                "events": [
                    {"kind": e.kind.value, "span": list(e.span), "consumed": e.consumed}
                    for e in u.events
                ],
            }
            for u in t.utterances
        ],
    }


def transcript_from_dict(d: dict) -> Transcript:
    return Transcript(
        source_id=d["source_id"],
        utterances=tuple(
            Utterance(
                speaker=u["speaker"],
                tokens=tuple(u["tokens"]),
                events=tuple(
                    ParsedEvent(
                        EventKind(e["kind"]), (e["span"][0], e["span"][1]), e["consumed"]
                    )
                    for e in u["events"]
                ),
            )
            for u in d["utterances"]
        ),
        demographics=Demographics(
            age=d["demographics"]["age"], gender=d["demographics"]["gender"]
        ),
        audio_length=d["audio_length"],
        label=Label(d["label"]),
        interviewer_speakers=tuple(d["interviewer_speakers"]),
    )


def load_corpus(corpus_dir: str | Path, metadata_path: str | Path) -> list[Transcript]:
    """Load every transcript listed in a corpus metadata file.

    ``metadata_path`` holds a JSON array of sidecar records; each record's
    ``id`` names a transcript file in ``corpus_dir`` (bare or with any
    extension).
    """
    corpus_dir = Path(corpus_dir)
    with open(metadata_path, encoding="utf-8") as fh:
        records = [TranscriptMeta.from_dict(r) for r in json.load(fh)]

    transcripts = []
    for meta in records:
        path = corpus_dir / meta.id
        if not path.exists():
            candidates = sorted(corpus_dir.glob(meta.id + ".*"))
            if not candidates:
                raise FileNotFoundError(f"no transcript file for id {meta.id!r} in {corpus_dir}")
            path = candidates[0]
        doc = RawChatDocument.from_text(path.read_text(encoding="utf-8"), meta.id)
        transcripts.append(parse_chat(doc, meta=meta))
    return transcripts
