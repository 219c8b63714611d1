from __future__ import annotations

from typing import Dict, List

from pydantic import BaseModel, ConfigDict, Field

from app.schemas.channel import ChannelConfig
from app.schemas.modem import ModemConfig

REPORT_FIELDS = (
    "sent_chars",
    "received_chars",
    "bit_errors",
    "bits_total",
    "ber",
    "char_errors",
    "cer",
    "audio_duration_sec",
    "throughput_bps",
)


class LinkReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    sent_chars: int
    received_chars: int
    bit_errors: int
    bits_total: int
    ber: float = Field(ge=0.0, le=1.0)
    char_errors: int
    cer: float = Field(ge=0.0, le=1.0)
    audio_duration_sec: float = Field(gt=0.0)
    throughput_bps: float = Field(ge=0.0)


class BenchSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    corpus_chars: int = Field(default=200, gt=0)
    trials: int = Field(default=3, gt=0)
    base_seed: int = Field(default=0, ge=0)
    modem: ModemConfig = Field(default_factory=ModemConfig)
    channel: ChannelConfig = Field(default_factory=ChannelConfig)
    workers: int = Field(default=1, gt=0)


class TrialRecord(BaseModel):
    trial: int
    seed: int
    report: LinkReport
    dropped_frames: int = 0
    vad_suppressed_frames: int = 0


class MetricSummary(BaseModel):
    mean: float
    min: float
    max: float


class BenchReport(BaseModel):
    spec: BenchSpec
    trials: List[TrialRecord]
    summary: Dict[str, MetricSummary]
