"""Caller-ID call gating and the bot command dispatcher, simulated against a device state."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from app.core.errors import FormatMismatch, IoFailure
from app.schemas.session import (
    ActionKind,
    CallEvent,
    CommandOutcome,
    DeviceState,
    EventKind,
    GateAction,
    GateMode,
    GateState,
    OutcomeKind,
    ScenarioResult,
    ScenarioStep,
)

logger = logging.getLogger(__name__)

CommandHandler = Callable[[DeviceState], Tuple[DeviceState, str]]

_COMMANDS: Dict[str, CommandHandler] = {}


def register_command(name: str) -> Callable[[CommandHandler], CommandHandler]:
    """Register a bot command; names match case-insensitively."""

    def decorator(handler: CommandHandler) -> CommandHandler:
        _COMMANDS[name.lower()] = handler
        return handler

    return decorator


def registered_commands() -> List[str]:
    return sorted(_COMMANDS)


@register_command("Reboot")
def _reboot(dev: DeviceState) -> Tuple[DeviceState, str]:
    return dev.model_copy(update={"reboot_count": dev.reboot_count + 1}), "Reboot the system."


@register_command("Clrlog")
def _clear_call_log(dev: DeviceState) -> Tuple[DeviceState, str]:
    return dev.model_copy(update={"call_log": []}), "Clear call log."


@register_command("Blueto")
def _bluetooth_on(dev: DeviceState) -> Tuple[DeviceState, str]:
    return dev.model_copy(update={"bluetooth_on": True}), "Switch Bluetooth on."


def execute_command(dev: DeviceState, cmd: str) -> Tuple[DeviceState, CommandOutcome]:
    handler = _COMMANDS.get(cmd.strip().lower())
    if handler is None:
        logger.info("ignoring unknown command %r", cmd)
        return dev, CommandOutcome(kind=OutcomeKind.UNKNOWN_COMMAND, command=cmd)
    updated, detail = handler(dev)
    return updated, CommandOutcome(kind=OutcomeKind.EXECUTED, command=cmd, detail=detail)


def gate_step(state: GateState, ev: CallEvent) -> Tuple[GateState, List[GateAction]]:
    mode, kind = state.mode, ev.kind

    if mode is GateMode.IDLE and kind is EventKind.RINGING:
        if ev.value == state.trigger_number:
            return state.to(GateMode.COVERT_SESSION), [GateAction.of(ActionKind.ANSWER_COVERT), GateAction.starve_looper()]
        return state.to(GateMode.NORMAL_RINGING), [GateAction.of(ActionKind.PASS_TO_PHONE_APP)]

    if mode is GateMode.COVERT_SESSION:
        if kind in (EventKind.USER_DIAL, EventKind.RINGING):
            return state, [GateAction.of(ActionKind.NO_RESPONSE)]
        if kind is EventKind.REMOTE_HANGUP:
            return state.to(GateMode.IDLE), [GateAction.of(ActionKind.RELEASE_LOOPER)]
        if kind is EventKind.PAYLOAD_TEXT:
            return state, [GateAction.execute(ev.value or "")]

    if mode is GateMode.NORMAL_RINGING and kind is EventKind.USER_ANSWER:
        return state.to(GateMode.NORMAL_CALL), []

    if mode in (GateMode.NORMAL_RINGING, GateMode.NORMAL_CALL) and kind is EventKind.REMOTE_HANGUP:
        return state.to(GateMode.IDLE), []

    return state, []


def run_scenario(
    events: Sequence[CallEvent],
    trigger: str,
    dev: Optional[DeviceState] = None,
    leak_on_answer: bool = False,
    deliver: Optional[Callable[[str], str]] = None,
) -> ScenarioResult:
    """Fold gate_step over `events` from Idle.

    `deliver` rewrites payload text before it reaches the gate, e.g. by sending
    it through the modem. With `leak_on_answer` the newest SMS is leaked each
    time a covert call is answered.
    """
    device = dev if dev is not None else DeviceState()
    state = GateState(trigger_number=trigger)
    transcript: List[ScenarioStep] = []
    leaked: List[str] = []

    for ev in events:
        if deliver is not None and ev.kind is EventKind.PAYLOAD_TEXT:
            ev = CallEvent.payload(deliver(ev.value or ""))
        state, actions = gate_step(state, ev)
        outcomes: List[CommandOutcome] = []
        for action in actions:
            if action.kind is ActionKind.ANSWER_COVERT and leak_on_answer and device.sms_inbox:
                leaked.append(device.sms_inbox[-1])
            elif action.kind is ActionKind.EXECUTE_PAYLOAD:
                device, outcome = execute_command(device, action.text or "")
                outcomes.append(outcome)
        transcript.append(ScenarioStep(event=ev, state=state, actions=actions, outcomes=outcomes))

    return ScenarioResult(transcript=transcript, device=device, leaked=leaked)


_EVENT_WORDS = {
    "RING": EventKind.RINGING,
    "ANSWER": EventKind.USER_ANSWER,
    "DIAL": EventKind.USER_DIAL,
    "HANGUP": EventKind.REMOTE_HANGUP,
    "PAYLOAD": EventKind.PAYLOAD_TEXT,
}
_WORD_FOR_KIND = {kind: word for word, kind in _EVENT_WORDS.items()}


def parse_events(lines: Iterable[str], source: str = "<events>") -> List[CallEvent]:
    """One event per line: RING <id>, ANSWER, DIAL <callee>, HANGUP, PAYLOAD <text>."""
    events: List[CallEvent] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        word, _, rest = line.strip().partition(" ")
        kind = _EVENT_WORDS.get(word.upper())
        if kind is None:
            raise FormatMismatch(f"{source}:{lineno}: unknown event {word!r}")
        value: Optional[str] = None
        if kind in (EventKind.RINGING, EventKind.USER_DIAL):
            value = rest.strip()
        elif kind is EventKind.PAYLOAD_TEXT:
            value = rest
        try:
            events.append(CallEvent(kind=kind, value=value))
        except ValidationError as exc:
            raise FormatMismatch(f"{source}:{lineno}: {exc.errors()[0]['msg']}") from exc
    return events


def format_event(ev: CallEvent) -> str:
    word = _WORD_FOR_KIND[ev.kind]
    return f"{word} {ev.value}" if ev.value is not None else word


def _parse_bool(value: str, where: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("true", "on", "1", "yes"):
        return True
    if lowered in ("false", "off", "0", "no"):
        return False
    raise FormatMismatch(f"{where}: expected a boolean, got {value!r}")


def parse_device(lines: Iterable[str], source: str = "<device>") -> DeviceState:
    """key=value lines: bluetooth=, reboots=, calllog=<a;b;...>, and one sms= line per message."""
    fields: Dict[str, object] = {}
    inbox: List[str] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        where = f"{source}:{lineno}"
        if not sep:
            raise FormatMismatch(f"{where}: expected key=value")
        key = key.strip().lower()
        if key == "bluetooth":
            fields["bluetooth_on"] = _parse_bool(value, where)
        elif key == "reboots":
            try:
                fields["reboot_count"] = int(value.strip())
            except ValueError as exc:
                raise FormatMismatch(f"{where}: reboots must be an integer") from exc
        elif key == "calllog":
            fields["call_log"] = [entry.strip() for entry in value.split(";") if entry.strip()]
        elif key == "sms":
            inbox.append(value.strip())
        else:
            raise FormatMismatch(f"{where}: unknown device key {key!r}")
    try:
        return DeviceState(sms_inbox=inbox, **fields)
    except ValidationError as exc:
        raise FormatMismatch(f"{source}: {exc.errors()[0]['msg']}") from exc


def format_device(dev: DeviceState) -> List[str]:
    lines = [
        f"bluetooth={'true' if dev.bluetooth_on else 'false'}",
        f"reboots={dev.reboot_count}",
        f"calllog={';'.join(dev.call_log)}",
    ]
    lines.extend(f"sms={text}" for text in dev.sms_inbox)
    return lines


def _read_lines(path: str | Path) -> List[str]:
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc.strerror or exc}") from exc


def read_events(path: str | Path) -> List[CallEvent]:
    return parse_events(_read_lines(path), source=str(path))


def read_device(path: str | Path) -> DeviceState:
    return parse_device(_read_lines(path), source=str(path))
