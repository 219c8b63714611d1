from __future__ import annotations

import math
from enum import Enum
from typing import List, Union

from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator


def _json_db(value: float) -> Union[float, str]:
    # JSON has no infinity; "inf" parses back as a float
    return str(value) if math.isinf(value) else value


class Codec(str, Enum):
    NONE = "none"
    MULAW = "mulaw"
    ALAW = "alaw"


class ChannelConfig(BaseModel):
    """Impairments of the simulated cellular voice path."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    band_low_hz: float = Field(default=300.0, gt=0.0)
    band_high_hz: float = Field(default=3400.0, gt=0.0)
    band_taps: int = Field(default=257, ge=3)
    snr_db: float = math.inf
    frame_ms: int = Field(default=20, gt=0)
    frame_drop_prob: float = Field(default=0.0, ge=0.0, le=1.0)
    vad_enabled: bool = False
    vad_threshold_dbfs: float = -45.0
    codec: Codec = Codec.NONE
    gain: float = Field(default=1.0, gt=0.0)
    seed: int = Field(default=0, ge=0, lt=2**64)

    @field_validator("snr_db")
    @classmethod
    def _snr_not_nan(cls, value: float) -> float:
        if math.isnan(value):
            raise ValueError("snr_db must be a number or inf")
        return value

    @field_serializer("snr_db", when_used="json")
    def _snr_json(self, value: float) -> Union[float, str]:
        return _json_db(value)

    @model_validator(mode="after")
    def _check_band(self) -> "ChannelConfig":
        if self.band_low_hz >= self.band_high_hz:
            raise ValueError("band_low_hz must be below band_high_hz")
        return self

    @classmethod
    def degraded(cls, seed: int = 0) -> "ChannelConfig":
        """The reference impaired channel: 15 dB SNR, 0.5% frame stealing, mu-law, VAD on."""
        return cls(snr_db=15.0, frame_drop_prob=0.005, codec=Codec.MULAW, vad_enabled=True, seed=seed)


class ChannelTrace(BaseModel):
    model_config = ConfigDict(frozen=True)

    dropped_frames: List[int] = Field(default_factory=list)
    vad_suppressed_frames: List[int] = Field(default_factory=list)
    applied_snr_db: float = math.inf
    frame_count: int = 0
    stages: List[str] = Field(default_factory=list)

    @field_serializer("applied_snr_db", when_used="json")
    def _snr_json(self, value: float) -> Union[float, str]:
        return _json_db(value)
