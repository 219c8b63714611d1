from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from app.schemas.channel import ChannelConfig, ChannelTrace
from app.schemas.link import LinkReport
from app.schemas.modem import ModemConfig
from app.schemas.session import CallEvent, DeviceState, ScenarioStep


class EncodeRequest(BaseModel):
    text: str
    modem: ModemConfig = Field(default_factory=ModemConfig)
    strict: bool = False


class SymbolOut(BaseModel):
    element: str
    start_sample: int
    gap_before_ms: float


class DecodeResponse(BaseModel):
    text: str
    hail_at: Optional[int] = None
    symbols: List[SymbolOut] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)
    trace_id: Optional[str] = None


class TransmitRequest(BaseModel):
    text: str
    modem: ModemConfig = Field(default_factory=ModemConfig)
    channel: ChannelConfig = Field(default_factory=ChannelConfig)
    metadata: Dict[str, Any] = Field(default_factory=dict)


class TransmitResponse(BaseModel):
    sent: str
    received: str
    report: LinkReport
    trace: ChannelTrace
    warnings: List[str] = Field(default_factory=list)
    trace_id: Optional[str] = None


class ScenarioRequest(BaseModel):
    events: List[CallEvent]
    trigger: str = Field(..., min_length=1)
    device: DeviceState = Field(default_factory=DeviceState)
    leak_on_answer: bool = False
    over_channel: bool = False
    modem: ModemConfig = Field(default_factory=ModemConfig)
    channel: ChannelConfig = Field(default_factory=ChannelConfig)


class ScenarioResponse(BaseModel):
    transcript: List[ScenarioStep]
    device: DeviceState
    leaked: List[str] = Field(default_factory=list)
