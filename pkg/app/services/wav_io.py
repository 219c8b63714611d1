"""Mono 16-bit PCM WAV files at the telephony rate."""

from __future__ import annotations

import io
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np
from scipy.io import wavfile

from app.core.errors import FormatMismatch, IoFailure
from app.schemas.modem import AudioBuffer

WAV_SAMPLE_RATE = 8000
PCM_SCALE = 32768.0

WavSource = Union[str, BinaryIO]


def _load(source: WavSource, name: str) -> AudioBuffer:
    try:
        rate, data = wavfile.read(source)
    except OSError as exc:
        raise IoFailure(f"cannot read {name}: {exc.strerror or exc}") from exc
    except ValueError as exc:
        raise FormatMismatch(f"{name} is not a PCM WAV file: {exc}") from exc

    if data.ndim != 1:
        raise FormatMismatch(f"{name} has {data.shape[1]} channels, expected mono")
    if rate != WAV_SAMPLE_RATE:
        raise FormatMismatch(f"{name} is sampled at {rate} Hz, expected {WAV_SAMPLE_RATE} Hz")
    if data.dtype != np.int16:
        raise FormatMismatch(f"{name} holds {data.dtype} samples, expected 16-bit PCM")
    return AudioBuffer(data.astype(np.float64) / PCM_SCALE, rate)


def read_wav(path: str | Path) -> AudioBuffer:
    return _load(str(path), str(path))


def wav_from_bytes(payload: bytes) -> AudioBuffer:
    return _load(io.BytesIO(payload), "request body")


def to_pcm16(buf: AudioBuffer) -> np.ndarray:
    return np.clip(np.round(buf.samples * PCM_SCALE), -32768, 32767).astype(np.int16)


def _check_rate(buf: AudioBuffer) -> None:
    if buf.sample_rate != WAV_SAMPLE_RATE:
        raise FormatMismatch(f"WAV output is {WAV_SAMPLE_RATE} Hz, got a {buf.sample_rate} Hz buffer")


def write_wav(path: str | Path, buf: AudioBuffer) -> None:
    _check_rate(buf)
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        wavfile.write(str(target), buf.sample_rate, to_pcm16(buf))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc.strerror or exc}") from exc


def wav_to_bytes(buf: AudioBuffer) -> bytes:
    _check_rate(buf)
    out = io.BytesIO()
    wavfile.write(out, buf.sample_rate, to_pcm16(buf))
    return out.getvalue()
