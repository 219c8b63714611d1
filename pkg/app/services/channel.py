"""Seeded simulator of the cellular voice path.

Fixed stage order: gain -> band-pass -> companding codec -> additive noise ->
VAD silence suppression -> frame stealing.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import List, Tuple

import numpy as np
from scipy import signal

from app.core.errors import FormatMismatch, InvalidBand, ZeroSignal
from app.schemas.channel import ChannelConfig, ChannelTrace, Codec
from app.schemas.modem import AudioBuffer
from app.services.dsp import fir_filter

TELEPHONY_SAMPLE_RATE = 8000

MU = 255.0
A_LAW = 87.6
# sign bit + 7-bit magnitude, as in G.711
MAGNITUDE_LEVELS = 127


@lru_cache(maxsize=16)
def _bandpass_kernel(lo: float, hi: float, sample_rate: int, taps: int) -> np.ndarray:
    return signal.firwin(taps, [lo, hi], pass_zero=False, fs=sample_rate)


def bandpass(buf: AudioBuffer, lo: float, hi: float, taps: int = 257) -> AudioBuffer:
    if not 0 < lo < hi < buf.sample_rate / 2:
        raise InvalidBand(f"band [{lo}, {hi}] Hz must satisfy 0 < lo < hi < {buf.sample_rate / 2}")
    filtered = fir_filter(buf.samples, _bandpass_kernel(float(lo), float(hi), buf.sample_rate, taps))
    return buf.with_samples(np.clip(filtered, -1.0, 1.0))


def _quantize(companded: np.ndarray) -> np.ndarray:
    return (np.sign(companded) * np.round(np.abs(companded) * MAGNITUDE_LEVELS)).astype(np.int8)


def mulaw_encode(samples: np.ndarray) -> np.ndarray:
    x = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    return _quantize(np.sign(x) * np.log1p(MU * np.abs(x)) / np.log1p(MU))


def mulaw_decode(codes: np.ndarray) -> np.ndarray:
    y = np.asarray(codes, dtype=np.float64) / MAGNITUDE_LEVELS
    return np.sign(y) * np.expm1(np.abs(y) * np.log1p(MU)) / MU


def alaw_encode(samples: np.ndarray) -> np.ndarray:
    x = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    ax = A_LAW * np.abs(x)
    norm = 1.0 + math.log(A_LAW)
    y = np.where(ax < 1.0, ax / norm, (1.0 + np.log(np.maximum(ax, 1.0))) / norm)
    return _quantize(np.sign(x) * y)


def alaw_decode(codes: np.ndarray) -> np.ndarray:
    y = np.abs(np.asarray(codes, dtype=np.float64)) / MAGNITUDE_LEVELS
    norm = 1.0 + math.log(A_LAW)
    x = np.where(y < 1.0 / norm, y * norm / A_LAW, np.exp(y * norm - 1.0) / A_LAW)
    return np.sign(codes) * np.minimum(x, 1.0)


def companding(buf: AudioBuffer, codec: Codec = Codec.MULAW) -> AudioBuffer:
    """Encode to 8-bit codes and straight back; the round trip leaves only quantization error."""
    if codec is Codec.NONE:
        return buf
    if codec is Codec.ALAW:
        decoded = alaw_decode(alaw_encode(buf.samples))
    else:
        decoded = mulaw_decode(mulaw_encode(buf.samples))
    return buf.with_samples(np.clip(decoded, -1.0, 1.0))


def signal_power(samples: np.ndarray) -> float:
    return float(np.mean(samples * samples)) if samples.size else 0.0


def add_noise(buf: AudioBuffer, snr_db: float, rng: np.random.Generator) -> AudioBuffer:
    if math.isinf(snr_db) and snr_db > 0:
        return buf
    power = signal_power(buf.samples)
    if power == 0.0:
        raise ZeroSignal("cannot scale noise to a target SNR on a silent buffer")
    noise_power = power / 10 ** (snr_db / 10)
    noise = rng.standard_normal(len(buf)) * math.sqrt(noise_power)
    return buf.with_samples(np.clip(buf.samples + noise, -1.0, 1.0))


def frame_bounds(count: int, frame_len: int) -> np.ndarray:
    return np.arange(0, count, frame_len)


def _frame_len(cfg: ChannelConfig, sample_rate: int) -> int:
    return max(1, round(cfg.frame_ms * sample_rate / 1000))


def _zero_frames(samples: np.ndarray, frames: np.ndarray, frame_len: int) -> np.ndarray:
    mask = np.zeros(len(frame_bounds(samples.size, frame_len)), dtype=bool)
    mask[frames] = True
    return np.where(np.repeat(mask, frame_len)[: samples.size], 0.0, samples)


def frame_levels_dbfs(samples: np.ndarray, frame_len: int) -> np.ndarray:
    starts = frame_bounds(samples.size, frame_len)
    if not starts.size:
        return np.zeros(0)
    energy = np.add.reduceat(samples * samples, starts)
    counts = np.diff(np.append(starts, samples.size))
    with np.errstate(divide="ignore"):
        return 10 * np.log10(energy / counts)


def vad_suppress(buf: AudioBuffer, cfg: ChannelConfig) -> Tuple[AudioBuffer, List[int]]:
    frame_len = _frame_len(cfg, buf.sample_rate)
    levels = frame_levels_dbfs(buf.samples, frame_len)
    suppressed = np.flatnonzero(levels < cfg.vad_threshold_dbfs)
    return buf.with_samples(_zero_frames(buf.samples, suppressed, frame_len)), suppressed.tolist()


def frame_steal(buf: AudioBuffer, cfg: ChannelConfig, rng: np.random.Generator) -> Tuple[AudioBuffer, List[int]]:
    """Drop each frame with probability p; one uniform per frame keeps drop sets nested in p."""
    frame_len = _frame_len(cfg, buf.sample_rate)
    draws = rng.random(len(frame_bounds(len(buf), frame_len)))
    dropped = np.flatnonzero(draws < cfg.frame_drop_prob)
    return buf.with_samples(_zero_frames(buf.samples, dropped, frame_len)), dropped.tolist()


def apply(buf: AudioBuffer, cfg: ChannelConfig) -> Tuple[AudioBuffer, ChannelTrace]:
    if buf.sample_rate != TELEPHONY_SAMPLE_RATE:
        raise FormatMismatch(f"the voice channel carries {TELEPHONY_SAMPLE_RATE} Hz audio, got {buf.sample_rate} Hz")
    noise_rng, drop_rng = (np.random.default_rng(child) for child in np.random.SeedSequence(cfg.seed).spawn(2))
    stages = ["gain", "bandpass"]

    out = buf.scaled(cfg.gain)
    out = bandpass(out, cfg.band_low_hz, cfg.band_high_hz, cfg.band_taps)

    if cfg.codec is not Codec.NONE:
        out = companding(out, cfg.codec)
        stages.append(cfg.codec.value)

    applied_snr = math.inf
    if not math.isinf(cfg.snr_db):
        clean = out.samples
        out = add_noise(out, cfg.snr_db, noise_rng)
        residual = signal_power(out.samples - clean)
        applied_snr = 10 * math.log10(signal_power(clean) / residual) if residual else math.inf
        stages.append("noise")

    suppressed: List[int] = []
    if cfg.vad_enabled:
        out, suppressed = vad_suppress(out, cfg)
        stages.append("vad")

    dropped: List[int] = []
    if cfg.frame_drop_prob > 0:
        out, dropped = frame_steal(out, cfg, drop_rng)
        stages.append("frame_steal")

    frame_len = _frame_len(cfg, buf.sample_rate)
    trace = ChannelTrace(
        dropped_frames=dropped,
        vad_suppressed_frames=suppressed,
        applied_snr_db=applied_snr,
        frame_count=len(frame_bounds(len(buf), frame_len)),
        stages=stages,
    )
    return out, trace
