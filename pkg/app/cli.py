"""Command-line surface: encode, decode, channel, bench, scenario, chat, config, serve."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from app.core.config import build_configs, dump_config, get_settings, read_config_file
from app.core.errors import InvalidConfig, IoFailure, ModemError
from app.schemas.channel import ChannelConfig, ChannelTrace, Codec
from app.schemas.link import BenchSpec
from app.schemas.modem import ModemConfig
from app.schemas.session import ActionKind, GateAction, ScenarioResult
from app.services import channel as voice_channel
from app.services.bench import format_records, format_table, run_bench
from app.services.detect import decode
from app.services.link import encode, exchange, over_the_air
from app.services.link_logger import LinkLogger
from app.services.session import format_device, format_event, read_device, read_events, run_scenario
from app.services.wav_io import read_wav, write_wav

logger = logging.getLogger("app.cli")

# (flag, config key, type)
MODEM_FLAGS: Tuple[Tuple[str, str, Callable[[str], Any]], ...] = (
    ("--dot-freq", "dot_freq", float),
    ("--dash-freq", "dash_freq", float),
    ("--hail-freq", "hail_freq", float),
    ("--hail-ms", "hail_ms", int),
    ("--frame-ms", "frame_ms", int),
    ("--element-gap-ms", "element_gap_ms", int),
    ("--char-gap-ms", "char_gap_ms", int),
    ("--word-gap-ms", "word_gap_ms", int),
    ("--amplitude", "amplitude", float),
    ("--tolerance-hz", "tolerance_hz", float),
    ("--fft-size", "fft_size", int),
)

CHANNEL_FLAGS: Tuple[Tuple[str, str, Callable[[str], Any]], ...] = (
    ("--snr-db", "snr_db", float),
    ("--drop-prob", "frame_drop_prob", float),
    ("--vad-threshold-dbfs", "vad_threshold_dbfs", float),
    ("--band-low-hz", "band_low_hz", float),
    ("--band-high-hz", "band_high_hz", float),
    ("--channel-frame-ms", "channel_frame_ms", int),
    ("--gain", "gain", float),
    ("--seed", "seed", int),
)


def _modem_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("modem")
    for flag, key, kind in MODEM_FLAGS:
        group.add_argument(flag, dest=key, type=kind, default=None)
    return parent


def _channel_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("channel")
    for flag, key, kind in CHANNEL_FLAGS:
        group.add_argument(flag, dest=key, type=kind, default=None)
    group.add_argument("--vad", dest="vad_enabled", action="store_const", const=True, default=None)
    group.add_argument("--codec", dest="codec", choices=[c.value for c in Codec], default=None)
    return parent


def _common_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", default=None, help="key=value file layered under the flags")
    parent.add_argument("--json", action="store_true", help="machine-readable output")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modem", description="Morse/FSK modem over a simulated cellular voice channel")
    parser.add_argument("-v", "--verbose", action="store_true")
    commands = parser.add_subparsers(dest="command", required=True)

    common, modem, chan = _common_parent(), _modem_parent(), _channel_parent()

    enc = commands.add_parser("encode", parents=[common, modem], help="text -> WAV")
    source = enc.add_mutually_exclusive_group(required=True)
    source.add_argument("--text")
    source.add_argument("--in", dest="infile")
    enc.add_argument("--out", required=True)
    enc.add_argument("--strict", action="store_true")

    dec = commands.add_parser("decode", parents=[common, modem], help="WAV -> text")
    dec.add_argument("--in", dest="infile", required=True)
    dec.add_argument("--strict", action="store_true")

    ch = commands.add_parser("channel", parents=[common, chan], help="apply the voice channel to a WAV file")
    ch.add_argument("--in", dest="infile", required=True)
    ch.add_argument("--out", required=True)
    ch.add_argument("--trace", default=None)

    bench = commands.add_parser("bench", parents=[common, modem, chan], help="seeded BER/throughput benchmark")
    bench.add_argument("--chars", type=int, default=200)
    bench.add_argument("--trials", type=int, default=3)
    bench.add_argument("--workers", type=int, default=None)
    bench.add_argument("--degraded", action="store_true", help="start from the reference impaired channel")
    bench.add_argument("--records", action="store_true", help="tab-separated per-trial records")
    bench.add_argument("--log", action="store_true", help="append each trial to the transmission log")

    scen = commands.add_parser("scenario", parents=[common, modem, chan], help="replay a call event trace")
    scen.add_argument("--events", required=True)
    scen.add_argument("--trigger", required=True)
    scen.add_argument("--device", default=None)
    scen.add_argument("--leak", action="store_true", help="leak the newest SMS when a covert call is answered")
    scen.add_argument("--leak-out", default=None, help="render the leaked text to this WAV file")
    scen.add_argument("--over-channel", action="store_true", help="deliver payload text through the modem")

    chat = commands.add_parser("chat", parents=[common, modem, chan], help="two-party exchange over the channel")
    chat.add_argument("--message", action="append", required=True, metavar="SPEAKER:TEXT")
    chat.add_argument("--log", action="store_true")

    commands.add_parser("config", parents=[common, modem, chan], help="print the effective configuration")

    serve = commands.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default=None)
    serve.add_argument("--port", type=int, default=None)
    return parser


def _flag_layer(args: argparse.Namespace) -> Dict[str, Any]:
    keys = [key for _, key, _ in MODEM_FLAGS + CHANNEL_FLAGS] + ["vad_enabled", "codec"]
    return {key: getattr(args, key) for key in keys if getattr(args, key, None) is not None}


def resolve_configs(args: argparse.Namespace, base: Optional[Dict[str, Any]] = None) -> Tuple[ModemConfig, ChannelConfig]:
    """defaults < base < settings config file < --config < flags"""
    settings_file = get_settings().config_file
    layers: List[Optional[Dict[str, Any]]] = [base]
    if settings_file:
        layers.append(dict(read_config_file(settings_file)))
    if getattr(args, "config", None):
        layers.append(dict(read_config_file(args.config)))
    layers.append(_flag_layer(args))
    return build_configs(*layers)


def _emit(payload: Any) -> None:
    print(json.dumps(payload, indent=2, default=str))


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc.strerror or exc}") from exc


def cmd_encode(args: argparse.Namespace) -> int:
    modem, _ = resolve_configs(args)
    text = args.text if args.text is not None else _read_text(args.infile)
    audio = encode(text, modem, strict=args.strict)
    write_wav(args.out, audio)
    if args.json:
        _emit({"out": args.out, "samples": len(audio), "duration_sec": audio.duration_sec})
    else:
        print(f"wrote {args.out}: {len(audio)} samples, {audio.duration_sec:.3f} s")
    return 0


def cmd_decode(args: argparse.Namespace) -> int:
    modem, _ = resolve_configs(args)
    result = decode(read_wav(args.infile), modem, strict=args.strict)
    for warning in result.warnings:
        logger.warning(warning)
    if args.json:
        _emit(
            {
                "text": result.text,
                "hail_at": result.hail_at,
                "symbols": [[s.element.value, s.start_sample, s.gap_before_ms] for s in result.symbols],
                "warnings": result.warnings,
            }
        )
    else:
        if not result.found:
            print("no hail tone found", file=sys.stderr)
        print(result.text)
    return 0


def format_trace(trace: ChannelTrace) -> str:
    return "\n".join(
        [
            f"dropped={','.join(map(str, trace.dropped_frames))}",
            f"vad_suppressed={','.join(map(str, trace.vad_suppressed_frames))}",
            f"applied_snr_db={trace.applied_snr_db}",
            f"frame_count={trace.frame_count}",
            f"stages={','.join(trace.stages)}",
        ]
    ) + "\n"


def cmd_channel(args: argparse.Namespace) -> int:
    _, channel = resolve_configs(args)
    out, trace = voice_channel.apply(read_wav(args.infile), channel)
    write_wav(args.out, out)
    if args.trace:
        try:
            Path(args.trace).write_text(format_trace(trace), encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot write {args.trace}: {exc.strerror or exc}") from exc
    if args.json:
        print(trace.model_dump_json(indent=2))
    else:
        print(
            f"{trace.frame_count} frames, {len(trace.dropped_frames)} dropped, "
            f"{len(trace.vad_suppressed_frames)} suppressed, SNR {trace.applied_snr_db:.2f} dB, "
            f"stages: {' -> '.join(trace.stages)}"
        )
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    # channel frame_ms would collide with the modem key of the same name
    base = ChannelConfig.degraded().model_dump(exclude={"frame_ms"}) if args.degraded else None
    modem, channel = resolve_configs(args, base)
    try:
        spec = BenchSpec(
            corpus_chars=args.chars,
            trials=args.trials,
            base_seed=channel.seed,
            modem=modem,
            channel=channel,
            workers=args.workers or get_settings().bench_workers,
        )
    except ValidationError as exc:
        raise InvalidConfig(f"invalid bench settings: {exc}") from exc
    report = run_bench(spec)
    if args.log:
        link_logger = LinkLogger()
        for record in report.trials:
            link_logger.log_transmission(
                kind="bench", sent="", received="", report=record.report, seed=record.seed, metadata={"trial": record.trial}
            )
    if args.json:
        print(report.model_dump_json(indent=2))
    elif args.records:
        sys.stdout.write(format_records(report))
    else:
        sys.stdout.write(format_table(report))
    return 0


def _describe(action: GateAction) -> str:
    if action.kind is ActionKind.STARVE_LOOPER:
        return f"{action.kind.value}({action.messages_at_front})"
    if action.kind is ActionKind.EXECUTE_PAYLOAD:
        return f"{action.kind.value}({action.text!r})"
    return action.kind.value


def render_scenario(result: ScenarioResult) -> str:
    lines = []
    for step in result.transcript:
        actions = ", ".join(_describe(a) for a in step.actions) or "-"
        lines.append(f"{format_event(step.event):<24} -> {step.state.mode.value:<15} {actions}")
        for outcome in step.outcomes:
            lines.append(f"{'':<27}{outcome.kind.value}: {outcome.command} {outcome.detail}".rstrip())
    lines.extend(format_device(result.device))
    lines.extend(f"leaked={text}" for text in result.leaked)
    return "\n".join(lines) + "\n"


def cmd_scenario(args: argparse.Namespace) -> int:
    modem, channel = resolve_configs(args)
    events = read_events(args.events)
    device = read_device(args.device) if args.device else None
    deliver = over_the_air(modem, channel) if args.over_channel else None
    result = run_scenario(events, args.trigger, device, leak_on_answer=args.leak or bool(args.leak_out), deliver=deliver)
    if args.leak_out and result.leaked:
        write_wav(args.leak_out, encode(" ".join(result.leaked), modem))
    if args.json:
        print(result.model_dump_json(indent=2))
    else:
        sys.stdout.write(render_scenario(result))
    return 0


def parse_message(raw: str) -> Tuple[str, str]:
    speaker, sep, text = raw.partition(":")
    if not sep or not speaker.strip():
        raise InvalidConfig(f"expected SPEAKER:TEXT, got {raw!r}")
    return speaker.strip(), text


def cmd_chat(args: argparse.Namespace) -> int:
    modem, channel = resolve_configs(args)
    messages = [parse_message(raw) for raw in args.message]
    results = exchange(messages, modem, channel)
    link_logger = LinkLogger() if args.log else None
    rows = []
    for index, (speaker, result) in enumerate(results):
        if link_logger:
            link_logger.log_transmission(
                kind="chat", sent=result.sent, received=result.received, report=result.report,
                trace=result.trace, seed=channel.seed + index, metadata={"speaker": speaker},
            )
        rows.append({"speaker": speaker, "sent": result.sent, "received": result.received, **result.report.model_dump()})
    if args.json:
        _emit(rows)
    else:
        for row in rows:
            print(f"{row['speaker']}: {row['sent']!r} -> heard {row['received']!r} (ber {row['ber']:.4f})")
    return 0


def cmd_config(args: argparse.Namespace) -> int:
    modem, channel = resolve_configs(args)
    if args.json:
        _emit({"modem": modem.model_dump(mode="json"), "channel": channel.model_dump(mode="json")})
    else:
        sys.stdout.write(dump_config(modem, channel))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    settings = get_settings()
    uvicorn.run("app.main:app", host=args.host or settings.api_host, port=args.port or settings.api_port)
    return 0


COMMANDS: Dict[str, Callable[[argparse.Namespace], int]] = {
    "encode": cmd_encode,
    "decode": cmd_decode,
    "channel": cmd_channel,
    "bench": cmd_bench,
    "scenario": cmd_scenario,
    "chat": cmd_chat,
    "config": cmd_config,
    "serve": cmd_serve,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ModemError as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return 1
