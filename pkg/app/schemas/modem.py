from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class MorseElement(str, Enum):
    DOT = "dot"
    DASH = "dash"


class SymbolClass(str, Enum):
    DOT = "dot"
    DASH = "dash"
    HAIL = "hail"

    @classmethod
    def of(cls, element: MorseElement) -> "SymbolClass":
        return cls(element.value)

    def element(self) -> MorseElement:
        if self is SymbolClass.HAIL:
            raise ValueError("the hail tone carries no morse element")
        return MorseElement(self.value)


VOICE_BAND_LOW_HZ = 300.0
VOICE_BAND_HIGH_HZ = 3400.0


class ModemConfig(BaseModel):
    """Every tunable parameter of the encoder and decoder."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    sample_rate: int = Field(default=8000, gt=0)
    dot_freq: float = Field(default=600.0, ge=VOICE_BAND_LOW_HZ, le=VOICE_BAND_HIGH_HZ)
    dash_freq: float = Field(default=1000.0, ge=VOICE_BAND_LOW_HZ, le=VOICE_BAND_HIGH_HZ)
    hail_freq: float = Field(default=1400.0, ge=VOICE_BAND_LOW_HZ, le=VOICE_BAND_HIGH_HZ)
    hail_ms: int = Field(default=400, gt=0)
    frame_ms: int = Field(default=200, gt=0)
    post_hail_gap_ms: int = Field(default=200, gt=0)
    element_gap_ms: int = Field(default=100, gt=0)
    char_gap_ms: int = Field(default=300, gt=0)
    word_gap_ms: int = Field(default=700, gt=0)
    amplitude: float = Field(default=0.8, gt=0.0, le=1.0)
    tolerance_hz: float = Field(default=30.0, gt=0.0)
    fft_size: int = Field(default=2048, gt=0)

    ramp_ms: float = Field(default=5.0, ge=0.0)
    hop_ms: int = Field(default=20, gt=0)
    lowpass_cutoff_hz: float = Field(default=1800.0, gt=0.0)
    lowpass_taps: int = Field(default=64, ge=3)
    hail_floor_dbfs: float = Field(default=-40.0, lt=0.0)
    noise_floor_ratio: float = Field(default=0.1, gt=0.0, lt=1.0)
    noise_floor_factor: float = Field(default=3.0, ge=1.0)
    bridge_ms: int = Field(default=40, ge=0)
    silence_timeout_ms: int = Field(default=3000, gt=0)

    @model_validator(mode="after")
    def _check_consistency(self) -> "ModemConfig":
        freqs = {"dot_freq": self.dot_freq, "dash_freq": self.dash_freq, "hail_freq": self.hail_freq}
        names = list(freqs)
        for i, a in enumerate(names):
            for b in names[i + 1 :]:
                if abs(freqs[a] - freqs[b]) <= 2 * self.tolerance_hz:
                    raise ValueError(f"{a} and {b} must be more than 2 x tolerance_hz apart")

        for name in ("hail_ms", "frame_ms", "post_hail_gap_ms", "element_gap_ms", "char_gap_ms", "word_gap_ms", "hop_ms"):
            if (getattr(self, name) * self.sample_rate) % 1000:
                raise ValueError(f"{name} does not map to a whole number of samples")

        if not self.element_gap_ms < self.char_gap_ms < self.word_gap_ms:
            raise ValueError("gaps must satisfy element_gap_ms < char_gap_ms < word_gap_ms")
        if self.fft_size & (self.fft_size - 1):
            raise ValueError("fft_size must be a power of two")
        if self.fft_size < self.frame_samples:
            raise ValueError("fft_size must hold a whole frame")
        if not max(freqs.values()) < self.lowpass_cutoff_hz < self.sample_rate / 2:
            raise ValueError("lowpass_cutoff_hz must lie above every tone and below Nyquist")
        if 2 * self.ramp_samples > min(self.frame_samples, self.ms_to_samples(self.hail_ms)):
            raise ValueError("ramp_ms is too long for the tone duration")
        if self.hop_ms * 2 > self.hail_ms:
            raise ValueError("hail_ms must span at least two hops")
        return self

    def ms_to_samples(self, ms: float) -> int:
        return int(round(ms * self.sample_rate / 1000))

    @property
    def frame_samples(self) -> int:
        return self.ms_to_samples(self.frame_ms)

    @property
    def hop_samples(self) -> int:
        return self.ms_to_samples(self.hop_ms)

    @property
    def ramp_samples(self) -> int:
        return self.ms_to_samples(self.ramp_ms)

    @property
    def char_gap_threshold_ms(self) -> float:
        return (self.element_gap_ms + self.char_gap_ms) / 2

    @property
    def word_gap_threshold_ms(self) -> float:
        return (self.char_gap_ms + self.word_gap_ms) / 2

    def tone_freq(self, symbol: SymbolClass) -> float:
        return {SymbolClass.DOT: self.dot_freq, SymbolClass.DASH: self.dash_freq, SymbolClass.HAIL: self.hail_freq}[symbol]

    def tone_ms(self, symbol: SymbolClass) -> int:
        return self.hail_ms if symbol is SymbolClass.HAIL else self.frame_ms


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """Mono samples in [-1, 1] at a fixed rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        data = np.array(self.samples, dtype=np.float64).reshape(-1)
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if data.size and (np.max(np.abs(data)) > 1.0 or not np.all(np.isfinite(data))):
            raise ValueError("samples must lie within [-1, 1]")
        data.setflags(write=False)
        object.__setattr__(self, "samples", data)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_sec(self) -> float:
        return self.samples.size / self.sample_rate

    def scaled(self, gain: float) -> "AudioBuffer":
        return AudioBuffer(np.clip(self.samples * gain, -1.0, 1.0), self.sample_rate)

    def with_samples(self, samples: np.ndarray) -> "AudioBuffer":
        return AudioBuffer(samples, self.sample_rate)


@dataclass(frozen=True)
class Tone:
    symbol: SymbolClass
    duration_ms: int


@dataclass(frozen=True)
class Silence:
    duration_ms: int


Slot = Union[Tone, Silence]


@dataclass(frozen=True)
class SymbolTimeline:
    """Scheduled tone and silence slots; the modem's wire format."""

    slots: Tuple[Slot, ...]

    def __post_init__(self) -> None:
        slots = tuple(self.slots)
        object.__setattr__(self, "slots", slots)
        if not slots or not isinstance(slots[0], Tone) or slots[0].symbol is not SymbolClass.HAIL:
            raise ValueError("a timeline starts with the hail tone")
        for prev, cur in zip(slots, slots[1:]):
            if isinstance(prev, Silence) and isinstance(cur, Silence):
                raise ValueError("consecutive silences must be merged")
        if any(slot.duration_ms <= 0 for slot in slots):
            raise ValueError("slot durations must be positive")

    def __len__(self) -> int:
        return len(self.slots)

    @property
    def duration_ms(self) -> int:
        return sum(slot.duration_ms for slot in self.slots)

    def symbol_stream(self) -> list[tuple[MorseElement, int]]:
        """The (element, gap-before) stream an ideal receiver would observe after the hail."""
        stream: list[tuple[MorseElement, int]] = []
        gap = 0
        for slot in self.slots[1:]:
            if isinstance(slot, Silence):
                gap += slot.duration_ms
                continue
            stream.append((slot.symbol.element(), gap))
            gap = 0
        return stream


@dataclass(frozen=True, eq=False)
class FrameSpectrum:
    magnitudes: np.ndarray
    fft_size: int
    sample_rate: int
    peak_bin: int
    peak_freq: float
    rms: float = field(default=0.0)
