import numpy as np
import pytest

from app.core.config import get_settings
from app.schemas.modem import AudioBuffer, ModemConfig
from app.services.link import encode


def pytest_configure(config: pytest.Config) -> None:
    config.addinivalue_line("markers", "slow: long-running acceptance checks (deselect with '-m \"not slow\"')")


@pytest.fixture
def cfg() -> ModemConfig:
    return ModemConfig()


@pytest.fixture
def sos_audio(cfg: ModemConfig) -> AudioBuffer:
    return encode("SOS", cfg)


@pytest.fixture
def tone():
    def make(freq: float, seconds: float = 1.0, amplitude: float = 0.8, sample_rate: int = 8000) -> AudioBuffer:
        n = np.arange(int(seconds * sample_rate))
        return AudioBuffer(amplitude * np.sin(2 * np.pi * freq * n / sample_rate), sample_rate)

    return make


@pytest.fixture
def settings_env(tmp_path, monkeypatch):
    """Point the transmission log at a temp file and drop any cached settings."""
    log_path = tmp_path / "transmissions.jsonl"
    monkeypatch.setenv("MODEM_LOG_PATH", str(log_path))
    monkeypatch.setenv("MODEM_CONFIG_FILE", "")
    get_settings.cache_clear()
    yield log_path
    get_settings.cache_clear()
