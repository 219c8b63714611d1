"""Receiver: hail search, tone/silence segmentation and symbol classification.

The stream is cut into fixed hops (20 ms by default). Each hop is analyzed on
its own, so chunked streaming and whole-buffer decoding see identical hop
features. Activity is judged per hop; a tone run's frequency is then measured
over the run itself (up to one frame), which resolves dot from dash far more
finely than a single hop can.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np

from app.core.errors import FormatMismatch, NoHailFound
from app.schemas.modem import AudioBuffer, FrameSpectrum, ModemConfig, MorseElement
from app.services.dsp import analyze_frame, analyze_frames
from app.services.morse import decode_symbols

logger = logging.getLogger(__name__)

# hops analyzed per FFT batch; bounds memory on long recordings
_BATCH_HOPS = 1024


@dataclass(frozen=True)
class DetectedSymbol:
    element: MorseElement
    start_sample: int
    gap_before_ms: float

    def as_pair(self) -> Tuple[MorseElement, float]:
        return self.element, self.gap_before_ms


@dataclass
class DecodeResult:
    text: str
    hail_at: Optional[int]
    symbols: List[DetectedSymbol] = field(default_factory=list)
    frames: List[FrameSpectrum] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.hail_at is not None


def classify(freq: float, cfg: ModemConfig) -> Optional[MorseElement]:
    if abs(freq - cfg.dot_freq) <= cfg.tolerance_hz:
        return MorseElement.DOT
    if abs(freq - cfg.dash_freq) <= cfg.tolerance_hz:
        return MorseElement.DASH
    return None


def hop_features(blocks: np.ndarray, cfg: ModemConfig) -> Tuple[np.ndarray, np.ndarray]:
    """(rms, peak frequency) of every row of a (hops, hop_samples) array."""
    if not len(blocks):
        return np.zeros(0), np.zeros(0)
    levels, freqs = [], []
    for begin in range(0, len(blocks), _BATCH_HOPS):
        _, peaks, batch_levels = analyze_frames(blocks[begin : begin + _BATCH_HOPS], cfg)
        levels.append(batch_levels)
        freqs.append(peaks * cfg.sample_rate / cfg.fft_size)
    return np.concatenate(levels), np.concatenate(freqs)


def _calibration_window(cfg: ModemConfig) -> Tuple[int, int]:
    """Hops after the hail end (offset, count) that sample the channel's idle level."""
    gap_hops = cfg.post_hail_gap_ms // cfg.hop_ms
    if gap_hops >= 3:
        return 1, gap_hops - 2
    return 0, max(1, gap_hops)


@dataclass(frozen=True)
class _HailLock:
    start_hop: int
    end_hop: int
    median_rms: float


class _HailSeeker:
    def __init__(self, cfg: ModemConfig) -> None:
        self.cfg = cfg
        self.floor = 10 ** (cfg.hail_floor_dbfs / 20)
        self.min_hops = math.ceil(cfg.hail_ms / 2 / cfg.hop_ms)
        self.bridge = cfg.bridge_ms // cfg.hop_ms
        self.start: Optional[int] = None
        self.last = 0
        self.levels: List[float] = []

    def step(self, hop: int, level: float, freq: float) -> Optional[_HailLock]:
        if level > self.floor and abs(freq - self.cfg.hail_freq) <= self.cfg.tolerance_hz:
            if self.start is None:
                self.start = hop
                self.levels = []
            self.last = hop
            self.levels.append(level)
            return None
        if self.start is not None and hop - self.last > self.bridge:
            return self.settle()
        return None

    def settle(self) -> Optional[_HailLock]:
        if self.start is None:
            return None
        start, last, levels = self.start, self.last, self.levels
        self.start, self.levels = None, []
        if last - start + 1 < self.min_hops:
            return None
        return _HailLock(start, last + 1, float(np.median(levels)))


class _Segmenter:
    """Merges active hops into tone runs and turns accepted runs into symbols."""

    def __init__(
        self,
        cfg: ModemConfig,
        floor: float,
        origin_hop: int,
        base_sample: int,
        fetch: Callable[[int, int], np.ndarray],
    ) -> None:
        self.cfg = cfg
        self.floor = floor
        self.base = base_sample
        self.fetch = fetch
        self.bridge = cfg.bridge_ms // cfg.hop_ms
        self.min_hops = math.ceil(cfg.frame_ms / 2 / cfg.hop_ms)
        self.prev_end = origin_hop
        self.run_start: Optional[int] = None
        self.run_last = 0
        self.run_freq = 0.0
        self.symbols: List[DetectedSymbol] = []
        self.frames: List[FrameSpectrum] = []
        self.warnings: List[str] = []

    @property
    def open(self) -> bool:
        return self.run_start is not None

    def hop_start(self, hop: int) -> int:
        return self.base + hop * self.cfg.hop_samples

    def step(self, hop: int, level: float, freq: float) -> None:
        if level > self.floor:
            if (
                self.run_start is not None
                and hop - self.run_last - 1 <= self.bridge
                and abs(freq - self.run_freq) <= 2 * self.cfg.tolerance_hz
            ):
                self.run_last = hop
                return
            self.close()
            self.run_start = self.run_last = hop
            self.run_freq = freq
        elif self.run_start is not None and hop - self.run_last > self.bridge:
            self.close()

    def close(self) -> None:
        if self.run_start is None:
            return
        start, last = self.run_start, self.run_last
        self.run_start = None
        hops = last - start + 1
        if hops < self.min_hops:
            logger.debug("ignoring %d-hop blip at hop %d", hops, start)
            return

        begin = self.hop_start(start)
        spectrum = analyze_frame(self.fetch(begin, begin + min(hops * self.cfg.hop_samples, self.cfg.frame_samples)), self.cfg)
        self.frames.append(spectrum)
        element = classify(spectrum.peak_freq, self.cfg)
        if element is None:
            message = f"dropped tone run at sample {begin}: {spectrum.peak_freq:.1f} Hz matches neither dot nor dash"
            logger.warning(message)
            self.warnings.append(message)
            return
        self.symbols.append(DetectedSymbol(element, begin, float((start - self.prev_end) * self.cfg.hop_ms)))
        self.prev_end = last + 1


def _floor(cfg: ModemConfig, signal_rms: float, idle_levels: List[float]) -> float:
    idle = float(np.median(idle_levels)) if idle_levels else 0.0
    return max(cfg.noise_floor_ratio * signal_rms, cfg.noise_floor_factor * idle)


class _Phase(Enum):
    SEEK = "seek"
    CALIBRATE = "calibrate"
    PAYLOAD = "payload"
    DONE = "done"


class StreamingDecoder:
    """Single-owner decode session fed with consecutive chunks of one recording."""

    def __init__(self, cfg: ModemConfig, strict: bool = False, use_timeout: bool = True) -> None:
        self.cfg = cfg
        self.strict = strict
        self.timeout_ms: Optional[int] = cfg.silence_timeout_ms if use_timeout else None
        self.hop = cfg.hop_samples
        self._pending = np.zeros(0)
        self._pending_start = 0
        self._next_hop = 0
        self._phase = _Phase.SEEK
        self._seeker = _HailSeeker(cfg)
        self._backlog: List[Tuple[int, float, float]] = []
        self._lock: Optional[_HailLock] = None
        self._idle: List[float] = []
        self._segmenter: Optional[_Segmenter] = None
        self._finished: Optional[DecodeResult] = None

    @property
    def complete(self) -> bool:
        return self._phase is _Phase.DONE

    @property
    def hail_at(self) -> Optional[int]:
        return self._lock.start_hop * self.hop if self._lock else None

    def _fetch(self, begin: int, end: int) -> np.ndarray:
        return self._pending[begin - self._pending_start : end - self._pending_start]

    def feed(self, chunk: AudioBuffer | np.ndarray) -> List[DetectedSymbol]:
        """Append samples; returns symbols that became final during this call."""
        if self._finished is not None:
            raise RuntimeError("decoder already finished")
        samples = chunk.samples if isinstance(chunk, AudioBuffer) else np.asarray(chunk, dtype=np.float64)
        emitted = len(self._segmenter.symbols) if self._segmenter else 0
        if self.complete or not samples.size:
            return []
        self._pending = np.concatenate([self._pending, samples])
        available = (self._pending_start + self._pending.size) // self.hop - self._next_hop
        if available > 0:
            first = self._next_hop * self.hop - self._pending_start
            blocks = self._pending[first : first + available * self.hop].reshape(available, self.hop)
            self._process(blocks)
        self._trim()
        return self._segmenter.symbols[emitted:] if self._segmenter else []

    def _process(self, blocks: np.ndarray) -> None:
        levels, freqs = hop_features(blocks, self.cfg)
        for level, freq in zip(levels, freqs):
            hop = self._next_hop
            self._next_hop += 1
            self._step(hop, float(level), float(freq))

    def _trim(self) -> None:
        keep = self._next_hop * self.hop
        if self._phase is _Phase.SEEK and self._backlog:
            keep = min(keep, self._backlog[0][0] * self.hop)
        elif self._phase is _Phase.CALIBRATE and self._lock:
            keep = min(keep, self._lock.end_hop * self.hop)
        elif self._segmenter and self._segmenter.run_start is not None:
            keep = min(keep, self._segmenter.hop_start(self._segmenter.run_start))
        if keep > self._pending_start:
            self._pending = self._pending[keep - self._pending_start :]
            self._pending_start = keep

    def _step(self, hop: int, level: float, freq: float) -> None:
        if self._phase is _Phase.SEEK:
            self._backlog.append((hop, level, freq))
            lock = self._seeker.step(hop, level, freq)
            if lock is not None:
                self._on_lock(lock)
            elif self._seeker.start is None:
                self._backlog.clear()
            else:
                self._backlog = [entry for entry in self._backlog if entry[0] >= self._seeker.start]
        elif self._phase is _Phase.CALIBRATE:
            assert self._lock is not None
            self._backlog.append((hop, level, freq))
            offset, count = _calibration_window(self.cfg)
            first = self._lock.end_hop + offset
            if first <= hop < first + count:
                self._idle.append(level)
            if hop >= first + count - 1:
                self._start_payload()
        elif self._phase is _Phase.PAYLOAD:
            assert self._segmenter is not None
            self._segmenter.step(hop, level, freq)
            idle_ms = (hop + 1 - self._segmenter.prev_end) * self.cfg.hop_ms
            if self.timeout_ms is not None and not self._segmenter.open and idle_ms >= self.timeout_ms:
                self._phase = _Phase.DONE

    def _on_lock(self, lock: _HailLock) -> None:
        self._lock = lock
        logger.debug("hail locked at hop %d..%d", lock.start_hop, lock.end_hop)
        replay = [entry for entry in self._backlog if entry[0] >= lock.end_hop]
        self._backlog = []
        self._phase = _Phase.CALIBRATE
        for entry in replay:
            self._step(*entry)

    def _start_payload(self) -> None:
        assert self._lock is not None
        floor = _floor(self.cfg, self._lock.median_rms, self._idle)
        self._segmenter = _Segmenter(self.cfg, floor, self._lock.end_hop, 0, self._fetch)
        replay, self._backlog = self._backlog, []
        self._phase = _Phase.PAYLOAD
        for entry in replay:
            self._segmenter.step(*entry)

    def finish(self) -> DecodeResult:
        if self._finished is not None:
            return self._finished
        tail = (self._pending_start + self._pending.size) - self._next_hop * self.hop
        if tail > 0 and not self.complete:
            block = np.zeros(self.hop)
            block[:tail] = self._pending[self._pending.size - tail :]
            self._process(block[np.newaxis, :])
        if self._phase is _Phase.SEEK:
            lock = self._seeker.settle()
            if lock is not None:
                self._on_lock(lock)
        if self._phase is _Phase.CALIBRATE:
            self._start_payload()
        if self._segmenter is not None:
            self._segmenter.close()
        self._phase = _Phase.DONE
        self._finished = self._result()
        return self._finished

    def _result(self) -> DecodeResult:
        if self._lock is None or self._segmenter is None:
            if self.strict:
                raise NoHailFound("no hail tone in the recording")
            return DecodeResult(text="", hail_at=None)
        seg = self._segmenter
        text, substitutions = decode_symbols((s.as_pair() for s in seg.symbols), self.cfg, strict=self.strict)
        return DecodeResult(
            text=text,
            hail_at=self.hail_at,
            symbols=list(seg.symbols),
            frames=list(seg.frames),
            warnings=seg.warnings + substitutions,
        )


def decode(buf: AudioBuffer, cfg: ModemConfig, strict: bool = False) -> DecodeResult:
    """findHail -> segment -> timelineToText over a whole recording."""
    _check_buffer(buf, cfg)
    if not len(buf):
        raise FormatMismatch("cannot decode an empty recording")
    session = StreamingDecoder(cfg, strict=strict, use_timeout=False)
    session.feed(buf)
    return session.finish()


def _check_buffer(buf: AudioBuffer, cfg: ModemConfig) -> None:
    if buf.sample_rate != cfg.sample_rate:
        raise FormatMismatch(f"recording is sampled at {buf.sample_rate} Hz, the modem at {cfg.sample_rate} Hz")


def find_hail(buf: AudioBuffer, cfg: ModemConfig) -> Optional[int]:
    _check_buffer(buf, cfg)
    hop = cfg.hop_samples
    seeker = _HailSeeker(cfg)
    levels, freqs = hop_features(_hop_blocks(buf.samples, hop), cfg)
    for index, (level, freq) in enumerate(zip(levels, freqs)):
        lock = seeker.step(index, float(level), float(freq))
        if lock is not None:
            return lock.start_hop * hop
    lock = seeker.settle()
    return lock.start_hop * hop if lock else None


def _hop_blocks(samples: np.ndarray, hop: int) -> np.ndarray:
    count = math.ceil(samples.size / hop)
    padded = np.zeros(count * hop)
    padded[: samples.size] = samples
    return padded.reshape(count, hop)


def segment(buf: AudioBuffer, start: int, cfg: ModemConfig, floor: Optional[float] = None) -> List[DetectedSymbol]:
    """Tone runs from `start` (normally the end of the hail) onward.

    Without an explicit floor, the activity threshold is derived from the
    loudest hop and the idle level just after `start`.
    """
    hop = cfg.hop_samples
    tail = buf.samples[start:]
    levels, freqs = hop_features(_hop_blocks(tail, hop), cfg)
    if floor is None:
        offset, count = _calibration_window(cfg)
        idle = [float(v) for v in levels[offset : offset + count]]
        floor = _floor(cfg, float(levels.max()) if levels.size else 0.0, idle)

    padded = _hop_blocks(tail, hop).reshape(-1)
    segmenter = _Segmenter(cfg, floor, 0, start, lambda a, b: padded[a - start : b - start])
    for index, (level, freq) in enumerate(zip(levels, freqs)):
        segmenter.step(index, float(level), float(freq))
    segmenter.close()
    return segmenter.symbols
