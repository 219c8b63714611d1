import json

import numpy as np
import pytest
from scipy.io import wavfile

from app.cli import main
from app.core.config import get_settings


@pytest.fixture(autouse=True)
def _isolated_settings(settings_env):
    yield settings_env


@pytest.fixture
def hello_wav(tmp_path):
    path = tmp_path / "hello.wav"
    assert main(["encode", "--text", "hello world", "--out", str(path)]) == 0
    return path


def test_encode_decode_round_trip(hello_wav, capsys):
    capsys.readouterr()
    assert main(["decode", "--in", str(hello_wav)]) == 0
    assert capsys.readouterr().out.strip() == "HELLO WORLD"


def test_encode_from_text_file(tmp_path, capsys):
    source = tmp_path / "msg.txt"
    source.write_text("cq cq\n", encoding="utf-8")
    out = tmp_path / "cq.wav"
    assert main(["encode", "--in", str(source), "--out", str(out), "--json"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["samples"] > 0
    assert main(["decode", "--in", str(out), "--json"]) == 0
    decoded = json.loads(capsys.readouterr().out)
    assert decoded["text"] == "CQ CQ"
    assert decoded["hail_at"] == 0
    assert decoded["warnings"] == []


def test_modem_flags_must_match(tmp_path, capsys):
    out = tmp_path / "alt.wav"
    assert main(["encode", "--text", "TEST", "--out", str(out), "--dot-freq", "700", "--dash-freq", "1100"]) == 0
    capsys.readouterr()
    assert main(["decode", "--in", str(out), "--dot-freq", "700", "--dash-freq", "1100"]) == 0
    assert capsys.readouterr().out.strip() == "TEST"


def test_strict_decode_without_hail_fails(tmp_path, capsys):
    path = tmp_path / "silence.wav"
    wavfile.write(path, 8000, np.zeros(8000, dtype=np.int16))
    assert main(["decode", "--in", str(path)]) == 0
    assert main(["decode", "--in", str(path), "--strict"]) == 1
    assert "error" in capsys.readouterr().err


def test_bad_wav_format_fails(tmp_path, capsys):
    path = tmp_path / "stereo.wav"
    wavfile.write(path, 8000, np.zeros((800, 2), dtype=np.int16))
    assert main(["decode", "--in", str(path)]) == 1
    assert "mono" in capsys.readouterr().err


def test_encode_strict_rejects_unsupported(tmp_path):
    out = tmp_path / "x.wav"
    assert main(["encode", "--text", "A@B", "--out", str(out), "--strict"]) == 1
    assert main(["encode", "--text", "A@B", "--out", str(out)]) == 0


def test_channel_with_trace(hello_wav, tmp_path, capsys):
    out, trace = tmp_path / "rx.wav", tmp_path / "trace.txt"
    argv = ["channel", "--in", str(hello_wav), "--out", str(out), "--drop-prob", "0.2", "--seed", "3", "--trace", str(trace)]
    assert main(argv) == 0
    fields = dict(line.split("=", 1) for line in trace.read_text(encoding="utf-8").splitlines())
    assert set(fields) == {"dropped", "vad_suppressed", "applied_snr_db", "frame_count", "stages"}
    assert fields["dropped"]
    assert fields["applied_snr_db"] == "inf"
    first = out.read_bytes()
    assert main(argv) == 0
    assert out.read_bytes() == first


def test_channel_json(hello_wav, tmp_path, capsys):
    capsys.readouterr()
    assert main(["channel", "--in", str(hello_wav), "--out", str(tmp_path / "rx.wav"), "--codec", "mulaw", "--vad", "--json"]) == 0
    trace = json.loads(capsys.readouterr().out)
    assert trace["stages"] == ["gain", "bandpass", "mulaw", "vad"]
    assert trace["applied_snr_db"] == "inf"


def test_bench_records(capsys):
    assert main(["bench", "--chars", "15", "--trials", "2", "--seed", "4", "--records"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("#sent_chars\treceived_chars")
    assert len(lines) == 3


def test_bench_json_and_log(settings_env, capsys):
    assert main(["bench", "--chars", "10", "--trials", "2", "--json", "--log"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["summary"]["ber"]["mean"] == 0.0
    records = [json.loads(line) for line in settings_env.read_text(encoding="utf-8").splitlines()]
    assert [r["kind"] for r in records] == ["bench", "bench"]


def test_config_precedence(tmp_path, monkeypatch, capsys):
    base = tmp_path / "base.conf"
    base.write_text("dot_freq = 620\nhail_freq = 1500\n", encoding="utf-8")
    override = tmp_path / "override.conf"
    override.write_text("dot_freq = 650\nsnr_db = 18\n", encoding="utf-8")
    monkeypatch.setenv("MODEM_CONFIG_FILE", str(base))
    get_settings.cache_clear()

    assert main(["config", "--config", str(override), "--dot-freq", "700"]) == 0
    dumped = dict(line.split(" = ", 1) for line in capsys.readouterr().out.splitlines())
    assert dumped["dot_freq"] == "700.0"
    assert dumped["hail_freq"] == "1500.0"
    assert dumped["snr_db"] == "18.0"


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.conf"
    bad.write_text("volume = 11\n", encoding="utf-8")
    assert main(["config", "--config", str(bad)]) == 1
    assert main(["config", "--config", str(tmp_path / "missing.conf")]) == 1
    assert main(["config", "--dot-freq", "1000"]) == 1


@pytest.fixture
def trace_files(tmp_path):
    events = tmp_path / "events.txt"
    events.write_text("RING +15550100\nDIAL 911\nPAYLOAD Blueto\nPAYLOAD Clrlog\nHANGUP\nRING friend\n", encoding="utf-8")
    device = tmp_path / "device.txt"
    device.write_text("bluetooth=false\nreboots=0\ncalllog=mom;work\nsms=pin 4711\n", encoding="utf-8")
    return events, device


def test_scenario_replay(trace_files, capsys):
    events, device = trace_files
    assert main(["scenario", "--events", str(events), "--trigger", "+15550100", "--device", str(device)]) == 0
    out = capsys.readouterr().out
    assert "answer_covert, starve_looper(2)" in out
    assert "no_response" in out
    assert "pass_to_phone_app" in out
    assert "bluetooth=true" in out
    assert "calllog=\n" in out


def test_scenario_json(trace_files, capsys):
    events, device = trace_files
    assert main(["scenario", "--events", str(events), "--trigger", "+15550100", "--device", str(device), "--json"]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["device"]["bluetooth_on"] is True
    assert result["transcript"][-1]["state"]["mode"] == "normal_ringing"


def test_scenario_leak_out(trace_files, tmp_path, capsys):
    events, device = trace_files
    leak = tmp_path / "leak.wav"
    assert main(["scenario", "--events", str(events), "--trigger", "+15550100", "--device", str(device), "--leak-out", str(leak)]) == 0
    assert "leaked=pin 4711" in capsys.readouterr().out
    assert main(["decode", "--in", str(leak)]) == 0
    assert capsys.readouterr().out.strip() == "PIN 4711"


def test_scenario_over_channel(tmp_path, capsys):
    events = tmp_path / "events.txt"
    events.write_text("RING 777\nPAYLOAD reboot\nHANGUP\n", encoding="utf-8")
    argv = ["scenario", "--events", str(events), "--trigger", "777", "--over-channel", "--snr-db", "20", "--json"]
    assert main(argv) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["transcript"][1]["event"]["value"] == "REBOOT"
    assert result["device"]["reboot_count"] == 1


def test_scenario_bad_trace(tmp_path, capsys):
    events = tmp_path / "events.txt"
    events.write_text("FAX 1\n", encoding="utf-8")
    assert main(["scenario", "--events", str(events), "--trigger", "1"]) == 1


def test_chat(settings_env, capsys):
    assert main(["chat", "--message", "A:meet at 9", "--message", "B:ok", "--log"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("A: 'MEET AT 9' -> heard 'MEET AT 9'")
    assert out[1].startswith("B: 'OK' -> heard 'OK'")
    records = [json.loads(line) for line in settings_env.read_text(encoding="utf-8").splitlines()]
    assert [r["metadata"]["speaker"] for r in records] == ["A", "B"]
    assert main(["chat", "--message", "no speaker"]) == 1


def test_bench_rejects_bad_sizes(capsys):
    assert main(["bench", "--chars", "0", "--trials", "1"]) == 1
    assert capsys.readouterr().err.startswith("error: invalid bench settings")
    assert main(["bench", "--chars", "5", "--trials", "0"]) == 1


def test_decode_empty_wav_fails(tmp_path, capsys):
    path = tmp_path / "empty.wav"
    wavfile.write(path, 8000, np.zeros(0, dtype=np.int16))
    assert main(["decode", "--in", str(path)]) == 1
    assert "empty recording" in capsys.readouterr().err
