from __future__ import annotations

import logging
from typing import Callable, Optional

from fastapi import Depends, FastAPI, Request
from fastapi.concurrency import run_in_threadpool
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from app.core.config import Settings, get_settings
from app.core.errors import ModemError
from app.schemas.api import (
    DecodeResponse,
    EncodeRequest,
    ScenarioRequest,
    ScenarioResponse,
    SymbolOut,
    TransmitRequest,
    TransmitResponse,
)
from app.schemas.link import BenchReport, BenchSpec
from app.schemas.modem import ModemConfig
from app.services.bench import run_bench
from app.services.detect import decode
from app.services.link import encode, over_the_air, transmit
from app.services.link_logger import LinkLogger
from app.services.session import run_scenario
from app.services.wav_io import wav_from_bytes, wav_to_bytes

logger = logging.getLogger(__name__)

app = FastAPI(title="Voiceband Covert Modem", version="0.1.0")
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.exception_handler(ModemError)
async def modem_error_handler(request: Request, exc: ModemError) -> JSONResponse:
    logger.info("%s %s rejected: %s", request.method, request.url.path, exc.message)
    return JSONResponse(status_code=422, content={"detail": exc.message, "error": type(exc).__name__})


async def get_link_logger(settings: Settings = Depends(get_settings)) -> LinkLogger:
    return LinkLogger(settings.log_path)


@app.get("/health")
async def healthcheck() -> dict:
    return {"status": "ok"}


@app.post("/encode")
async def encode_text(payload: EncodeRequest) -> Response:
    audio = await run_in_threadpool(encode, payload.text, payload.modem, payload.strict)
    return Response(content=wav_to_bytes(audio), media_type="audio/wav")


@app.post("/decode", response_model=DecodeResponse)
async def decode_wav(
    request: Request,
    strict: bool = False,
    link_logger: LinkLogger = Depends(get_link_logger),
) -> DecodeResponse:
    audio = wav_from_bytes(await request.body())
    result = await run_in_threadpool(decode, audio, ModemConfig(), strict)
    trace_id = link_logger.log_decode(result.text, result.hail_at, len(result.warnings))
    return DecodeResponse(
        text=result.text,
        hail_at=result.hail_at,
        symbols=[SymbolOut(element=s.element.value, start_sample=s.start_sample, gap_before_ms=s.gap_before_ms) for s in result.symbols],
        warnings=result.warnings,
        trace_id=trace_id,
    )


@app.post("/transmit", response_model=TransmitResponse)
async def transmit_text(
    payload: TransmitRequest,
    link_logger: LinkLogger = Depends(get_link_logger),
) -> TransmitResponse:
    result = await run_in_threadpool(transmit, payload.text, payload.modem, payload.channel)
    trace_id = link_logger.log_transmission(
        kind="transmit",
        sent=result.sent,
        received=result.received,
        report=result.report,
        trace=result.trace,
        seed=payload.channel.seed,
        metadata=payload.metadata,
    )
    return TransmitResponse(
        sent=result.sent,
        received=result.received,
        report=result.report,
        trace=result.trace,
        warnings=result.decoded.warnings,
        trace_id=trace_id,
    )


@app.post("/bench", response_model=BenchReport)
async def bench(
    spec: BenchSpec,
    link_logger: LinkLogger = Depends(get_link_logger),
) -> BenchReport:
    report = await run_in_threadpool(run_bench, spec)
    for record in report.trials:
        link_logger.log_transmission(
            kind="bench",
            sent="",
            received="",
            report=record.report,
            seed=record.seed,
            metadata={"trial": record.trial, "dropped_frames": record.dropped_frames},
        )
    return report


@app.post("/scenario", response_model=ScenarioResponse)
async def scenario(payload: ScenarioRequest) -> ScenarioResponse:
    deliver: Optional[Callable[[str], str]] = over_the_air(payload.modem, payload.channel) if payload.over_channel else None
    result = await run_in_threadpool(
        run_scenario, payload.events, payload.trigger, payload.device, payload.leak_on_answer, deliver
    )
    return ScenarioResponse(transcript=result.transcript, device=result.device, leaked=result.leaked)
