import json

import httpx
import numpy as np
import pytest
import pytest_asyncio
from scipy.io import wavfile

from app.main import app, get_link_logger
from app.services.link_logger import LinkLogger


@pytest.fixture
def log_path(tmp_path):
    path = tmp_path / "transmissions.jsonl"
    app.dependency_overrides[get_link_logger] = lambda: LinkLogger(str(path))
    yield path
    app.dependency_overrides.clear()


@pytest_asyncio.fixture
async def client(log_path):
    async with httpx.AsyncClient(transport=httpx.ASGITransport(app=app), base_url="http://modem") as c:
        yield c


def read_log(path):
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]


@pytest.mark.asyncio
async def test_health(client):
    resp = await client.get("/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok"}


@pytest.mark.asyncio
async def test_encode_then_decode(client, log_path):
    resp = await client.post("/encode", json={"text": "hello"})
    assert resp.status_code == 200
    assert resp.headers["content-type"] == "audio/wav"

    resp = await client.post("/decode", content=resp.content)
    assert resp.status_code == 200
    data = resp.json()
    assert data["text"] == "HELLO"
    assert data["hail_at"] == 0
    assert [s["element"] for s in data["symbols"][:4]] == ["dot", "dot", "dot", "dot"]
    assert read_log(log_path)[0]["trace_id"] == data["trace_id"]


@pytest.mark.asyncio
async def test_encode_errors(client):
    resp = await client.post("/encode", json={"text": "   "})
    assert resp.status_code == 422
    assert resp.json()["error"] == "EmptyPayload"

    resp = await client.post("/encode", json={"text": "A@", "strict": True})
    assert resp.json()["error"] == "UnsupportedCharacter"

    resp = await client.post("/encode", json={"text": "A", "modem": {"dot_freq": 1000}})
    assert resp.status_code == 422


@pytest.mark.asyncio
async def test_decode_rejects_bad_audio(client, tmp_path):
    resp = await client.post("/decode", content=b"not a wav file")
    assert resp.status_code == 422
    assert resp.json()["error"] == "FormatMismatch"

    path = tmp_path / "fast.wav"
    wavfile.write(path, 16000, np.zeros(1600, dtype=np.int16))
    resp = await client.post("/decode", content=path.read_bytes())
    assert resp.json()["error"] == "FormatMismatch"


@pytest.mark.asyncio
async def test_decode_strict_without_hail(client, tmp_path):
    path = tmp_path / "silence.wav"
    wavfile.write(path, 8000, np.zeros(8000, dtype=np.int16))
    resp = await client.post("/decode", content=path.read_bytes())
    assert resp.json()["text"] == ""
    assert resp.json()["hail_at"] is None
    resp = await client.post("/decode", params={"strict": "true"}, content=path.read_bytes())
    assert resp.json()["error"] == "NoHailFound"


@pytest.mark.asyncio
async def test_transmit_clean_channel(client, log_path):
    resp = await client.post("/transmit", json={"text": "cq de test", "metadata": {"run": "api"}})
    assert resp.status_code == 200
    data = resp.json()
    assert data["received"] == "CQ DE TEST"
    assert data["report"]["ber"] == 0.0
    assert data["trace"]["applied_snr_db"] == "inf"

    record = read_log(log_path)[0]
    assert record["kind"] == "transmit"
    assert record["trace_id"] == data["trace_id"]
    assert record["metadata"] == {"run": "api"}


@pytest.mark.asyncio
async def test_transmit_accepts_string_infinity(client):
    resp = await client.post("/transmit", json={"text": "E", "channel": {"snr_db": "inf", "seed": 5}})
    assert resp.status_code == 200
    assert resp.json()["received"] == "E"


@pytest.mark.asyncio
async def test_transmit_noisy_channel(client):
    channel = {"snr_db": 20.0, "codec": "mulaw", "seed": 9}
    resp = await client.post("/transmit", json={"text": "HELLO", "channel": channel})
    data = resp.json()
    assert data["received"] == "HELLO"
    assert data["trace"]["stages"] == ["gain", "bandpass", "mulaw", "noise"]
    assert abs(data["trace"]["applied_snr_db"] - 20.0) < 1.0


@pytest.mark.asyncio
async def test_bench(client, log_path):
    resp = await client.post("/bench", json={"corpus_chars": 12, "trials": 2, "base_seed": 3})
    assert resp.status_code == 200
    data = resp.json()
    assert [t["seed"] for t in data["trials"]] == [3, 4]
    assert data["summary"]["ber"]["max"] == 0.0
    assert data["spec"]["channel"]["snr_db"] == "inf"
    assert [r["kind"] for r in read_log(log_path)] == ["bench", "bench"]


@pytest.mark.asyncio
async def test_scenario(client):
    payload = {
        "trigger": "777",
        "events": [
            {"kind": "ring", "value": "777"},
            {"kind": "payload", "value": "Reboot"},
            {"kind": "payload", "value": "selfdestruct"},
            {"kind": "hangup"},
        ],
        "device": {"sms_inbox": ["first", "latest"]},
        "leak_on_answer": True,
    }
    resp = await client.post("/scenario", json=payload)
    assert resp.status_code == 200
    data = resp.json()
    assert [step["state"]["mode"] for step in data["transcript"]] == [
        "covert_session",
        "covert_session",
        "covert_session",
        "idle",
    ]
    assert data["transcript"][2]["outcomes"][0]["kind"] == "unknown_command"
    assert data["device"]["reboot_count"] == 1
    assert data["leaked"] == ["latest"]


@pytest.mark.asyncio
async def test_scenario_rejects_bad_event(client):
    resp = await client.post("/scenario", json={"trigger": "1", "events": [{"kind": "ring"}]})
    assert resp.status_code == 422
