import numpy as np
import pytest

from app.core.errors import FormatMismatch, NoHailFound
from app.schemas.modem import AudioBuffer, ModemConfig, MorseElement, SymbolClass, SymbolTimeline, Tone
from app.services.detect import StreamingDecoder, classify, decode, find_hail, segment
from app.services.link import encode
from app.services.morse import CHARSET, normalize_text
from app.services.synth import render_timeline

DOT, DASH = MorseElement.DOT, MorseElement.DASH


def with_prefix(buf: AudioBuffer, seconds: float) -> AudioBuffer:
    return AudioBuffer(np.concatenate([np.zeros(int(seconds * buf.sample_rate)), buf.samples]), buf.sample_rate)


def test_classify(cfg):
    assert classify(600.0, cfg) is DOT
    assert classify(1025.0, cfg) is DASH
    assert classify(1400.0, cfg) is None
    assert classify(2500.0, cfg) is None


def test_find_hail_at_start(cfg):
    assert abs(find_hail(encode("E", cfg), cfg)) <= cfg.hop_samples


def test_find_hail_after_silence(cfg):
    shifted = with_prefix(encode("E", cfg), 1.0)
    assert abs(find_hail(shifted, cfg) - 8000) <= cfg.hop_samples


def test_no_hail_in_noise(cfg):
    # 10 s at -20 dBFS
    for seed in range(100):
        rng = np.random.default_rng(seed)
        noise = np.clip(rng.standard_normal(80000) * 0.1, -1, 1)
        assert find_hail(AudioBuffer(noise, 8000), cfg) is None


def test_segment_sos(cfg, sos_audio):
    start = find_hail(sos_audio, cfg) + cfg.ms_to_samples(cfg.hail_ms)
    symbols = segment(sos_audio, start, cfg)
    assert [s.element for s in symbols] == [DOT] * 3 + [DASH] * 3 + [DOT] * 3
    assert symbols[0].gap_before_ms == cfg.post_hail_gap_ms
    assert [s.gap_before_ms for s in symbols[1:3]] == [cfg.element_gap_ms] * 2
    assert symbols[3].gap_before_ms == cfg.char_gap_ms


def test_segment_silence(cfg):
    assert segment(AudioBuffer(np.zeros(16000), 8000), 0, cfg) == []


def test_foreign_tone_run_is_dropped(cfg):
    audio = encode("E E", cfg).samples.copy()
    # inside the word gap, hop aligned
    begin, end = cfg.ms_to_samples(1000), cfg.ms_to_samples(1200)
    n = np.arange(end - begin)
    audio[begin:end] = 0.8 * np.sin(2 * np.pi * 2500 * n / cfg.sample_rate)
    result = decode(AudioBuffer(audio, cfg.sample_rate), cfg)
    assert result.text == "E E"
    assert [s.element for s in result.symbols] == [DOT, DOT]
    assert len(result.warnings) == 1
    assert "2500" in result.warnings[0] or "matches neither" in result.warnings[0]


@pytest.mark.parametrize("text", ["SOS", "HELLO WORLD", "CQ DE 73", "0123456789"])
def test_clean_loopback(cfg, text):
    result = decode(encode(text, cfg), cfg)
    assert result.found
    assert result.text == text
    assert result.hail_at == 0


def test_random_loopback(cfg):
    rng = np.random.default_rng(2024)
    alphabet = np.array(sorted(CHARSET) + [" "] * 6)
    for _ in range(30):
        raw = "".join(rng.choice(alphabet, size=int(rng.integers(1, 65))))
        if not raw.strip():
            continue
        assert decode(encode(raw, cfg), cfg).text == normalize_text(raw)


def test_hail_only(cfg):
    audio = render_timeline(SymbolTimeline((Tone(SymbolClass.HAIL, cfg.hail_ms),)), cfg)
    result = decode(audio, cfg)
    assert result.found
    assert result.text == ""
    assert result.symbols == []


def test_no_hail_lenient_and_strict(cfg, tone):
    silent = AudioBuffer(np.zeros(8000), 8000)
    result = decode(silent, cfg)
    assert not result.found and result.text == ""
    with pytest.raises(NoHailFound):
        decode(silent, cfg, strict=True)
    # payload tones without a hail are ignored
    assert decode(tone(600, seconds=2.0), cfg).text == ""


def test_empty_buffer_rejected(cfg):
    with pytest.raises(FormatMismatch):
        decode(AudioBuffer(np.zeros(0), 8000), cfg)


def test_sample_rate_must_match(cfg, sos_audio):
    resampled = AudioBuffer(sos_audio.samples, 16000)
    with pytest.raises(FormatMismatch):
        decode(resampled, cfg)
    with pytest.raises(FormatMismatch):
        find_hail(resampled, cfg)


def test_shifted_transmission_decodes(cfg):
    for seconds in (0.02, 0.5, 1.0, 1.5, 2.0):
        shifted = with_prefix(encode("PARIS", cfg), seconds)
        result = decode(shifted, cfg)
        assert result.text == "PARIS"
        assert abs(result.hail_at - int(seconds * 8000)) <= cfg.hop_samples


def test_amplitude_invariance(cfg):
    rng = np.random.default_rng(17)
    letters = list("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789")
    words = ["".join(rng.choice(letters, size=int(rng.integers(1, 8)))) for _ in range(40)]
    text = " ".join(words)[:200].strip()
    audio = encode(text, cfg)
    decoded = {gain: decode(audio.scaled(gain), cfg) for gain in (0.1, 0.3, 1.0)}
    assert decoded[1.0].text == text
    assert decoded[0.1].text == decoded[0.3].text == decoded[1.0].text
    assert decoded[0.1].symbols == decoded[1.0].symbols


def test_streaming_matches_whole_buffer(cfg):
    audio = with_prefix(encode("STREAM 42", cfg), 0.3)
    whole = decode(audio, cfg)
    rng = np.random.default_rng(8)
    for _ in range(3):
        stream = StreamingDecoder(cfg)
        emitted = []
        position = 0
        while position < len(audio):
            size = int(rng.integers(1, 3000))
            emitted.extend(stream.feed(audio.samples[position : position + size]))
            position += size
        result = stream.finish()
        assert result.text == whole.text == "STREAM 42"
        assert result.symbols == whole.symbols
        assert emitted == result.symbols[: len(emitted)]


def test_streaming_emits_symbols_before_finish(cfg):
    audio = encode("TEST", cfg)
    stream = StreamingDecoder(cfg)
    emitted = stream.feed(audio)
    assert emitted
    assert all(s.element in (DOT, DASH) for s in emitted)
    assert stream.finish().text == "TEST"
    with pytest.raises(RuntimeError):
        stream.feed(audio)


def test_streaming_silence_timeout(cfg):
    first = encode("HI", cfg).samples
    second = encode("NO", cfg).samples
    audio = np.concatenate([first, np.zeros(cfg.ms_to_samples(cfg.silence_timeout_ms + 500)), second])
    stream = StreamingDecoder(cfg)
    stream.feed(audio)
    assert stream.complete
    assert stream.finish().text == "HI"


def test_custom_tones_decode():
    cfg = ModemConfig(dot_freq=700, dash_freq=1100, hail_freq=1500)
    assert decode(encode("CUSTOM 1", cfg), cfg).text == "CUSTOM 1"
