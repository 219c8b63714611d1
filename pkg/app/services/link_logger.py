from __future__ import annotations

import json
import time
import uuid
from pathlib import Path
from typing import Any, Dict, Optional

from app.core.config import get_settings
from app.schemas.channel import ChannelTrace
from app.schemas.link import LinkReport


class LinkLogger:
    """Appends one JSON record per transmission to the local log the dashboard reads."""

    def __init__(self, log_path: Optional[str | Path] = None) -> None:
        self.log_path = Path(log_path or get_settings().log_path)
        self.log_path.parent.mkdir(parents=True, exist_ok=True)

    def _write_local(self, record: Dict[str, Any]) -> None:
        with self.log_path.open("a", encoding="utf-8") as fp:
            fp.write(json.dumps(record) + "\n")

    def log_transmission(
        self,
        kind: str,
        sent: str,
        received: str,
        report: LinkReport,
        trace: Optional[ChannelTrace] = None,
        seed: Optional[int] = None,
        metadata: Optional[Dict[str, Any]] = None,
        trace_id: Optional[str] = None,
    ) -> str:
        trace_key = trace_id or str(uuid.uuid4())
        record: Dict[str, Any] = {
            "trace_id": trace_key,
            "kind": kind,
            "sent": sent,
            "received": received,
            **report.model_dump(),
            "seed": seed,
            "dropped_frames": len(trace.dropped_frames) if trace else 0,
            "vad_suppressed_frames": len(trace.vad_suppressed_frames) if trace else 0,
            "metadata": metadata or {},
            "ts": time.time(),
        }
        self._write_local(record)
        return trace_key

    def log_decode(self, text: str, hail_at: Optional[int], warnings: int, trace_id: Optional[str] = None) -> str:
        trace_key = trace_id or str(uuid.uuid4())
        self._write_local(
            {"trace_id": trace_key, "kind": "decode", "received": text, "hail_at": hail_at, "warnings": warnings, "ts": time.time()}
        )
        return trace_key
