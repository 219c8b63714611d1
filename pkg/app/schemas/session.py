from __future__ import annotations

from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class EventKind(str, Enum):
    RINGING = "ring"
    USER_ANSWER = "answer"
    USER_DIAL = "dial"
    REMOTE_HANGUP = "hangup"
    PAYLOAD_TEXT = "payload"


class CallEvent(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: EventKind
    value: Optional[str] = None

    @model_validator(mode="after")
    def _check_value(self) -> "CallEvent":
        if self.kind in (EventKind.RINGING, EventKind.USER_DIAL) and not self.value:
            raise ValueError(f"{self.kind.value} events need a nonempty number")
        if self.kind is EventKind.PAYLOAD_TEXT and self.value is None:
            raise ValueError("payload events need text")
        return self

    @classmethod
    def ringing(cls, caller_id: str) -> "CallEvent":
        return cls(kind=EventKind.RINGING, value=caller_id)

    @classmethod
    def answer(cls) -> "CallEvent":
        return cls(kind=EventKind.USER_ANSWER)

    @classmethod
    def dial(cls, callee: str) -> "CallEvent":
        return cls(kind=EventKind.USER_DIAL, value=callee)

    @classmethod
    def hangup(cls) -> "CallEvent":
        return cls(kind=EventKind.REMOTE_HANGUP)

    @classmethod
    def payload(cls, text: str) -> "CallEvent":
        return cls(kind=EventKind.PAYLOAD_TEXT, value=text)


class GateMode(str, Enum):
    IDLE = "idle"
    COVERT_SESSION = "covert_session"
    NORMAL_RINGING = "normal_ringing"
    NORMAL_CALL = "normal_call"


class GateState(BaseModel):
    model_config = ConfigDict(frozen=True)

    mode: GateMode = GateMode.IDLE
    trigger_number: str
    looper_starved: bool = False

    @model_validator(mode="after")
    def _check_looper(self) -> "GateState":
        if self.looper_starved != (self.mode is GateMode.COVERT_SESSION):
            raise ValueError("the looper is starved exactly while a covert session is open")
        return self

    def to(self, mode: GateMode) -> "GateState":
        return GateState(mode=mode, trigger_number=self.trigger_number, looper_starved=mode is GateMode.COVERT_SESSION)


class ActionKind(str, Enum):
    ANSWER_COVERT = "answer_covert"
    STARVE_LOOPER = "starve_looper"
    PASS_TO_PHONE_APP = "pass_to_phone_app"
    NO_RESPONSE = "no_response"
    RELEASE_LOOPER = "release_looper"
    EXECUTE_PAYLOAD = "execute_payload"


STARVE_MESSAGES_AT_FRONT = 2


class GateAction(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: ActionKind
    messages_at_front: Optional[int] = None
    text: Optional[str] = None

    @model_validator(mode="after")
    def _check_payload(self) -> "GateAction":
        if self.kind is ActionKind.STARVE_LOOPER and self.messages_at_front != STARVE_MESSAGES_AT_FRONT:
            raise ValueError("looper starvation always posts two messages at the front")
        if self.kind is ActionKind.EXECUTE_PAYLOAD and self.text is None:
            raise ValueError("execute_payload carries the payload text")
        return self

    @classmethod
    def of(cls, kind: ActionKind) -> "GateAction":
        return cls(kind=kind)

    @classmethod
    def starve_looper(cls) -> "GateAction":
        return cls(kind=ActionKind.STARVE_LOOPER, messages_at_front=STARVE_MESSAGES_AT_FRONT)

    @classmethod
    def execute(cls, text: str) -> "GateAction":
        return cls(kind=ActionKind.EXECUTE_PAYLOAD, text=text)


class DeviceState(BaseModel):
    model_config = ConfigDict(frozen=True)

    bluetooth_on: bool = False
    call_log: List[str] = Field(default_factory=list)
    reboot_count: int = Field(default=0, ge=0)
    sms_inbox: List[str] = Field(default_factory=list)


class OutcomeKind(str, Enum):
    EXECUTED = "executed"
    UNKNOWN_COMMAND = "unknown_command"


class CommandOutcome(BaseModel):
    kind: OutcomeKind
    command: str
    detail: str = ""


class ScenarioStep(BaseModel):
    event: CallEvent
    state: GateState
    actions: List[GateAction]
    outcomes: List[CommandOutcome] = Field(default_factory=list)


class ScenarioResult(BaseModel):
    transcript: List[ScenarioStep]
    device: DeviceState
    leaked: List[str] = Field(default_factory=list)
