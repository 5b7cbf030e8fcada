"""Voice-loop boundary: ASR/TTS adapters and a rule-based intent parser.

Speech models stay outside the package. Two adapter families ship:
passthrough (a text sidecar file next to the audio — the test/dev mode)
and external-command (any ASR/TTS tool reachable as a subprocess, audio
on stdin, UTF-8 text on stdout). Intent parsing is keyword rules over a
per-language vocabulary config; English ships, the Kannada slot is empty
until filled by a native speaker.
"""

from __future__ import annotations

import json
import re
import shlex
import subprocess
import wave
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Protocol, Sequence

from .errors import AdapterFailure, UnsupportedFormat

PLACEHOLDER_SAMPLE_RATE = 16000
PLACEHOLDER_SECONDS = 1.0
WAV_PCM16 = "wav/pcm16"

INTENT_RECOMMENDATION = "GetRecommendation"
INTENT_PRICE_FORECAST = "GetPriceForecast"
INTENT_UNKNOWN = "Unknown"


@dataclass(frozen=True)
class Transcript:
    text: str
    language: str = "en"
    confidence: float | None = None
    no_speech: bool = False

    def __post_init__(self):
        if not self.text and not self.no_speech:
            raise ValueError("empty transcript requires the no_speech flag")
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


@dataclass(frozen=True)
class AudioRef:
    path: str
    format_tag: str = WAV_PCM16
    sample_rate: int = PLACEHOLDER_SAMPLE_RATE


@dataclass(frozen=True)
class Intent:
    kind: str
    slots: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind == INTENT_RECOMMENDATION and "location" not in self.slots:
            raise ValueError("GetRecommendation requires a location slot")
        if self.kind == INTENT_PRICE_FORECAST and "crop" not in self.slots:
            raise ValueError("GetPriceForecast requires a crop slot")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "slots": dict(self.slots)}


# ---------------------------------------------------------------------------
# Adapters


class TranscribeAdapter(Protocol):
    def transcribe(self, audio: AudioRef) -> Transcript: ...


class SynthesizeAdapter(Protocol):
    def synthesize(self, text: str, out_path: Path) -> AudioRef: ...


def _sidecar(audio_path: str | Path) -> Path:
    return Path(str(audio_path) + ".txt")


def write_silent_wav(path: str | Path) -> None:
    """1 second of 16-bit PCM silence at 16 kHz — the placeholder output."""
    frames = int(PLACEHOLDER_SAMPLE_RATE * PLACEHOLDER_SECONDS)
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(PLACEHOLDER_SAMPLE_RATE)
        wav.writeframes(b"\x00\x00" * frames)


@dataclass(frozen=True)
class PassthroughTranscriber:
    """Reads the `<audio>.txt` sidecar instead of running a speech model."""

    language: str = "en"

    def transcribe(self, audio: AudioRef) -> Transcript:
        if audio.format_tag != WAV_PCM16:
            raise UnsupportedFormat(audio.format_tag)
        sidecar = _sidecar(audio.path)
        if not sidecar.is_file():
            raise AdapterFailure(f"no sidecar transcript at {sidecar}")
        text = sidecar.read_text(encoding="utf-8").strip()
        return Transcript(text=text, language=self.language, no_speech=not text)


@dataclass(frozen=True)
class PassthroughSynthesizer:
    """Writes the text to a sidecar and emits a valid silent WAV."""

    language: str = "en"

    def synthesize(self, text: str, out_path: Path) -> AudioRef:
        out_path = Path(out_path)
        write_silent_wav(out_path)
        _sidecar(out_path).write_text(text, encoding="utf-8")
        return AudioRef(path=str(out_path))


@dataclass(frozen=True)
class CommandTranscriber:
    """Spawns `command`, feeds the audio bytes to stdin, reads text from stdout.

    Reference external commands are whisper-class CLI tools; anything that
    maps audio bytes to UTF-8 text works.
    """

    command: str
    language: str = "en"
    timeout_seconds: float = 60.0

    def transcribe(self, audio: AudioRef) -> Transcript:
        audio_path = Path(audio.path)
        if not audio_path.is_file():
            raise AdapterFailure(f"audio file not found: {audio.path}")
        result = _run_command(self.command, audio_path.read_bytes(), self.timeout_seconds)
        text = result.decode("utf-8").strip()
        return Transcript(text=text, language=self.language, no_speech=not text)


@dataclass(frozen=True)
class CommandSynthesizer:
    """Spawns `command`, feeds text to stdin, writes stdout bytes as the audio."""

    command: str
    timeout_seconds: float = 60.0
    format_tag: str = WAV_PCM16
    sample_rate: int = PLACEHOLDER_SAMPLE_RATE

    def synthesize(self, text: str, out_path: Path) -> AudioRef:
        audio = _run_command(self.command, text.encode("utf-8"), self.timeout_seconds)
        out_path = Path(out_path)
        out_path.write_bytes(audio)
        return AudioRef(path=str(out_path), format_tag=self.format_tag, sample_rate=self.sample_rate)


def _run_command(command: str, stdin: bytes, timeout: float) -> bytes:
    try:
        proc = subprocess.run(
            shlex.split(command), input=stdin, capture_output=True, timeout=timeout
        )
    except FileNotFoundError as exc:
        raise AdapterFailure(f"adapter command not found: {exc.filename}") from exc
    except subprocess.TimeoutExpired as exc:
        raise AdapterFailure(f"adapter command timed out after {timeout}s") from exc
    if proc.returncode != 0:
        raise AdapterFailure(
            f"adapter command failed: {command}",
            exit_code=proc.returncode,
            diagnostics=proc.stderr.decode("utf-8", errors="replace"),
        )
    return proc.stdout


def transcribe(audio: AudioRef, adapter: TranscribeAdapter) -> Transcript:
    return adapter.transcribe(audio)


def synthesize(text: str, adapter: SynthesizeAdapter, out_path: str | Path) -> AudioRef:
    if not text:
        raise ValueError("cannot synthesize empty text")
    return adapter.synthesize(text, Path(out_path))


# ---------------------------------------------------------------------------
# Intent parsing


def load_keywords(path: str | Path | None = None) -> dict:
    """Per-language keyword vocabularies; `None` loads the shipped config."""
    if path is None:
        text = resources.files("cropcast").joinpath("data/keywords.json").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return json.loads(text)


def _find_vocab_match(text: str, vocabulary: Sequence[str]) -> str | None:
    # Longest-token-first so "Bangalore Rural" beats "Bangalore".
    for entry in sorted(vocabulary, key=lambda v: (-len(v), v.casefold())):
        if re.search(rf"\b{re.escape(entry.casefold())}\b", text):
            return entry
    return None


def _has_keyword(text: str, keywords: Sequence[str]) -> bool:
    return any(re.search(rf"\b{re.escape(k.casefold())}\b", text) for k in keywords)


def _find_horizon(text: str, month_words: Sequence[str]) -> int | None:
    for word in month_words:
        hit = re.search(rf"(\d+)\s*{re.escape(word.casefold())}\b", text)
        if hit:
            return int(hit.group(1))
    hit = re.search(r"\b(\d+)\b", text)
    return int(hit.group(1)) if hit else None


def parse_intent(
    transcript: Transcript,
    districts: Sequence[str],
    crops: Sequence[str],
    keywords: Mapping | None = None,
) -> Intent:
    """Keyword rules over the transcript; Unknown is the total fallback."""
    vocab = keywords if keywords is not None else load_keywords()
    lang = vocab.get(transcript.language) or vocab.get("en") or {}
    text = transcript.text.casefold()
    district = _find_vocab_match(text, districts)
    crop = _find_vocab_match(text, crops)
    if district is not None and _has_keyword(text, lang.get("recommendation", [])):
        return Intent(INTENT_RECOMMENDATION, {"location": district})
    if crop is not None and _has_keyword(text, lang.get("price", [])):
        slots: dict[str, object] = {"crop": crop}
        horizon = _find_horizon(text, lang.get("month", []))
        if horizon is not None:
            slots["horizon_months"] = horizon
        return Intent(INTENT_PRICE_FORECAST, slots)
    return Intent(INTENT_UNKNOWN)
