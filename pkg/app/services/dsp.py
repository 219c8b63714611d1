"""Spectral primitives for the receiver: FIR low-pass, Hann window, FFT magnitude and peak picking."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import fft as sp_fft
from scipy import signal

from app.core.errors import InvalidCutoff, InvalidSize
from app.schemas.modem import AudioBuffer, FrameSpectrum, ModemConfig

DEFAULT_LOWPASS_TAPS = 64


@lru_cache(maxsize=32)
def _lowpass_kernel(cutoff: float, sample_rate: int, taps: int) -> np.ndarray:
    return signal.firwin(taps, cutoff, fs=sample_rate)


def fir_filter(samples: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Zero-padded linear convolution along the last axis, trimmed by the group delay.

    The trim removes (taps - 1) // 2 samples. Odd-length symmetric kernels come
    out aligned; an even length (the 64-tap default) leaves the output half a
    sample late.
    """
    if samples.shape[-1] == 0:
        return samples.copy()
    if not np.any(samples):
        return np.zeros_like(samples)
    delay = (kernel.size - 1) // 2
    kernel = kernel.reshape((1,) * (samples.ndim - 1) + (-1,))
    full = signal.fftconvolve(samples, kernel, mode="full", axes=-1)
    return full[..., delay : delay + samples.shape[-1]]


def low_pass_samples(samples: np.ndarray, cutoff: float, sample_rate: int, taps: int = DEFAULT_LOWPASS_TAPS) -> np.ndarray:
    """Windowed-sinc low-pass over the last axis of `samples` (1-D or a stack of frames)."""
    if not 0 < cutoff < sample_rate / 2:
        raise InvalidCutoff(f"cutoff {cutoff} Hz must lie in (0, {sample_rate / 2}) Hz")
    return fir_filter(np.asarray(samples, dtype=np.float64), _lowpass_kernel(float(cutoff), sample_rate, taps))


def low_pass(buf: AudioBuffer, cutoff: float, taps: int = DEFAULT_LOWPASS_TAPS) -> AudioBuffer:
    filtered = low_pass_samples(buf.samples, cutoff, buf.sample_rate, taps)
    return buf.with_samples(np.clip(filtered, -1.0, 1.0))


def hann_window(n: int) -> np.ndarray:
    """w[k] = 0.5 * (1 - cos(2 pi k / (n - 1))), symmetric with exact zero endpoints."""
    if n < 2:
        raise InvalidSize(f"a Hann window needs at least 2 points, got {n}")
    return np.hanning(n)


def magnitude(real: np.ndarray | float, imag: np.ndarray | float) -> np.ndarray | float:
    return np.sqrt(np.multiply(real, real) + np.multiply(imag, imag))


def _check_fft_size(n: int) -> None:
    if n < 2 or n & (n - 1):
        raise InvalidSize(f"fft size must be a power of two, got {n}")


def fft_magnitudes(frame: np.ndarray, fft_size: int) -> np.ndarray:
    """Magnitudes of bins 0..N/2 of the zero-padded frame (last axis)."""
    _check_fft_size(fft_size)
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape[-1] > fft_size:
        raise InvalidSize(f"frame of {frame.shape[-1]} samples does not fit fft size {fft_size}")
    spectrum = sp_fft.rfft(frame, n=fft_size, axis=-1)
    return magnitude(spectrum.real, spectrum.imag)


def normalize_spectrum(mags: np.ndarray) -> np.ndarray:
    mags = np.asarray(mags, dtype=np.float64)
    peak = mags.max(axis=-1, keepdims=True) if mags.size else np.zeros(mags.shape[:-1] + (1,))
    safe = np.where(peak > 0, peak, 1.0)
    return mags / safe


def bin_to_freq(i: int, sample_rate: float, fft_size: int) -> float:
    if not 0 <= i <= fft_size // 2:
        raise InvalidSize(f"bin {i} outside 0..{fft_size // 2}")
    return i * sample_rate / fft_size


def rms(samples: np.ndarray) -> np.ndarray | float:
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape[-1] == 0:
        return 0.0
    return np.sqrt(np.mean(samples * samples, axis=-1))


def analyze_frames(frames: np.ndarray, cfg: ModemConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized analysis of a (count, length) stack of frames.

    Returns (normalized magnitudes, peak bins, rms of the frames as received).
    """
    frames = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    length = frames.shape[-1]
    filtered = low_pass_samples(frames, cfg.lowpass_cutoff_hz, cfg.sample_rate, cfg.lowpass_taps)
    windowed = filtered * hann_window(length) if length >= 2 else filtered
    mags = normalize_spectrum(fft_magnitudes(windowed, cfg.fft_size))
    return mags, np.argmax(mags, axis=-1), np.atleast_1d(rms(frames))


def analyze_frame(frame: np.ndarray, cfg: ModemConfig) -> FrameSpectrum:
    """low-pass -> Hann -> FFT magnitude -> normalize -> peak bin -> frequency."""
    frame = np.asarray(frame, dtype=np.float64).reshape(-1)
    mags, peaks, levels = analyze_frames(frame[np.newaxis, :], cfg)
    peak_bin = int(peaks[0])
    return FrameSpectrum(
        magnitudes=mags[0],
        fft_size=cfg.fft_size,
        sample_rate=cfg.sample_rate,
        peak_bin=peak_bin,
        peak_freq=bin_to_freq(peak_bin, cfg.sample_rate, cfg.fft_size),
        rms=float(levels[0]),
    )
