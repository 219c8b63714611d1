"""One end-to-end transmission: encode, pass through the voice channel, decode, score."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

from app.schemas.channel import ChannelConfig, ChannelTrace
from app.schemas.link import LinkReport
from app.schemas.modem import AudioBuffer, ModemConfig
from app.services import channel as voice_channel
from app.services.detect import DecodeResult, decode
from app.services.metrics import measure_link
from app.services.morse import build_timeline, normalize_text
from app.services.synth import render_timeline

logger = logging.getLogger(__name__)


@dataclass
class Transmission:
    sent: str
    received: str
    audio: AudioBuffer
    trace: ChannelTrace
    decoded: DecodeResult
    report: LinkReport


def encode(text: str, modem: ModemConfig, strict: bool = False) -> AudioBuffer:
    return render_timeline(build_timeline(text, modem, strict=strict), modem)


def transmit(text: str, modem: ModemConfig, channel: ChannelConfig, strict: bool = False) -> Transmission:
    sent = normalize_text(text)
    clean = encode(sent, modem, strict=strict)
    received_audio, trace = voice_channel.apply(clean, channel)
    decoded = decode(received_audio, modem)
    report = measure_link(sent, decoded.text, clean.duration_sec)
    if decoded.warnings:
        logger.info("transmission decoded with %d warnings", len(decoded.warnings))
    return Transmission(
        sent=sent,
        received=decoded.text,
        audio=received_audio,
        trace=trace,
        decoded=decoded,
        report=report,
    )


def exchange(
    messages: Sequence[Tuple[str, str]], modem: ModemConfig, channel: ChannelConfig
) -> List[Tuple[str, Transmission]]:
    """Send (speaker, text) messages in turn; message i uses channel seed + i."""
    results: List[Tuple[str, Transmission]] = []
    for index, (speaker, text) in enumerate(messages):
        per_message = channel.model_copy(update={"seed": channel.seed + index})
        results.append((speaker, transmit(text, modem, per_message)))
    return results


def over_the_air(modem: ModemConfig, channel: ChannelConfig) -> Callable[[str], str]:
    """A delivery function that sends each nonblank text through the modem; message i uses channel seed + i."""
    sent = 0

    def deliver(text: str) -> str:
        nonlocal sent
        if not text.strip():
            return text
        seeded = channel.model_copy(update={"seed": channel.seed + sent})
        sent += 1
        return transmit(text, modem, seeded).received

    return deliver
