"""Seeded end-to-end benchmark: random corpus -> modem -> channel -> decoder -> link metrics."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List

import numpy as np
import pandas as pd

from app.schemas.link import REPORT_FIELDS, BenchReport, BenchSpec, MetricSummary, TrialRecord
from app.services.link import transmit
from app.services.morse import CHARSET

logger = logging.getLogger(__name__)

SUMMARY_FIELDS = ("ber", "cer", "throughput_bps", "audio_duration_sec")

_ALPHABET = np.array(sorted(CHARSET) + [" "])
_SPACE = len(_ALPHABET) - 1


def random_corpus(length: int, seed: int, trial: int) -> str:
    """Charset text with single spaces between words and none at either end."""
    if length <= 0:
        raise ValueError("corpus length must be positive")
    rng = np.random.default_rng([seed, trial])
    picks = rng.integers(0, len(_ALPHABET), size=length)
    letters = rng.integers(0, _SPACE, size=length)
    out: List[str] = []
    for index, pick in enumerate(picks):
        edge = index == 0 or index == length - 1
        if pick == _SPACE and (edge or out[-1] == " "):
            pick = letters[index]
        out.append(str(_ALPHABET[pick]))
    return "".join(out)


def run_trial(spec: BenchSpec, trial: int) -> TrialRecord:
    seed = spec.base_seed + trial
    corpus = random_corpus(spec.corpus_chars, spec.base_seed, trial)
    channel = spec.channel.model_copy(update={"seed": seed})
    result = transmit(corpus, spec.modem, channel)
    logger.debug("trial %d seed %d ber=%.5f", trial, seed, result.report.ber)
    return TrialRecord(
        trial=trial,
        seed=seed,
        report=result.report,
        dropped_frames=len(result.trace.dropped_frames),
        vad_suppressed_frames=len(result.trace.vad_suppressed_frames),
    )


def summarize(trials: List[TrialRecord]) -> Dict[str, MetricSummary]:
    frame = pd.DataFrame([t.report.model_dump() for t in trials])
    stats = frame[list(SUMMARY_FIELDS)].agg(["mean", "min", "max"])
    return {
        name: MetricSummary(
            mean=float(stats.at["mean", name]),
            min=float(stats.at["min", name]),
            max=float(stats.at["max", name]),
        )
        for name in SUMMARY_FIELDS
    }


def run_bench(spec: BenchSpec) -> BenchReport:
    indices = range(spec.trials)
    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            trials = list(pool.map(lambda i: run_trial(spec, i), indices))
    else:
        trials = [run_trial(spec, i) for i in indices]
    trials.sort(key=lambda t: t.trial)
    summary = summarize(trials)
    logger.info(
        "bench finished: %d trials, mean ber %.5f, mean throughput %.3f bps",
        len(trials),
        summary["ber"].mean,
        summary["throughput_bps"].mean,
    )
    return BenchReport(spec=spec, trials=trials, summary=summary)


def _cell(value: object) -> str:
    return f"{value:.6f}" if isinstance(value, float) else str(value)


def format_records(report: BenchReport) -> str:
    """One trial per line, LinkReport fields tab-separated, `#` header."""
    lines = ["#" + "\t".join(REPORT_FIELDS)]
    for record in report.trials:
        values = record.report.model_dump()
        lines.append("\t".join(_cell(values[name]) for name in REPORT_FIELDS))
    return "\n".join(lines) + "\n"


def format_table(report: BenchReport) -> str:
    rows = [{"trial": t.trial, "seed": t.seed, **t.report.model_dump(), "dropped": t.dropped_frames} for t in report.trials]
    per_trial = pd.DataFrame(rows).set_index("trial")
    summary = pd.DataFrame({name: s.model_dump() for name, s in report.summary.items()}).T
    return (
        per_trial.to_string(float_format=lambda v: f"{v:.4f}")
        + "\n\n"
        + summary.to_string(float_format=lambda v: f"{v:.4f}")
        + "\n"
    )
