from __future__ import annotations

import math
from typing import List

import numpy as np

from app.schemas.modem import AudioBuffer, ModemConfig, Silence, SymbolClass, SymbolTimeline


def tone_sample(amplitude: float, freq: float, sample_index: int, sample_rate: float) -> float:
    """amplitude * sin(2 pi f t) with t = sample_index / sample_rate."""
    return amplitude * math.sin(2 * math.pi * freq * sample_index / sample_rate)


def _edge_envelope(count: int, ramp: int) -> np.ndarray:
    envelope = np.ones(count)
    if ramp:
        rise = 0.5 * (1 - np.cos(np.pi * np.arange(ramp) / ramp))
        envelope[:ramp] = rise
        envelope[count - ramp :] = rise[::-1]
    return envelope


def synthesize_tone(symbol: SymbolClass, cfg: ModemConfig) -> AudioBuffer:
    count = cfg.ms_to_samples(cfg.tone_ms(symbol))
    n = np.arange(count)
    wave = cfg.amplitude * np.sin(2 * np.pi * cfg.tone_freq(symbol) * n / cfg.sample_rate)
    return AudioBuffer(wave * _edge_envelope(count, cfg.ramp_samples), cfg.sample_rate)


def render_timeline(tl: SymbolTimeline, cfg: ModemConfig) -> AudioBuffer:
    tones = {symbol: synthesize_tone(symbol, cfg).samples for symbol in SymbolClass}
    parts: List[np.ndarray] = []
    for slot in tl.slots:
        if isinstance(slot, Silence):
            parts.append(np.zeros(cfg.ms_to_samples(slot.duration_ms)))
        elif slot.duration_ms == cfg.tone_ms(slot.symbol):
            parts.append(tones[slot.symbol])
        else:
            parts.append(synthesize_tone(slot.symbol, cfg.model_copy(update=_duration_override(slot.symbol, slot.duration_ms))).samples)
    return AudioBuffer(np.concatenate(parts), cfg.sample_rate)


def _duration_override(symbol: SymbolClass, duration_ms: int) -> dict:
    return {"hail_ms": duration_ms} if symbol is SymbolClass.HAIL else {"frame_ms": duration_ms}
