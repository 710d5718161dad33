"""Minimal WAV decoding via the stdlib, multi-channel averaged to mono."""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np


class AudioDecodeError(ValueError):
    """The audio file could not be decoded."""


_SAMPLE_DTYPES = {1: np.uint8, 2: np.dtype("<i2"), 4: np.dtype("<i4")}


def read_wav(path: Path | str) -> tuple[np.ndarray, int]:
    """Return (mono float64 samples in [-1, 1], sample_rate)."""
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wav:
            channels = wav.getnchannels()
            width = wav.getsampwidth()
            rate = wav.getframerate()
            raw = wav.readframes(wav.getnframes())
    except (wave.Error, EOFError, OSError) as exc:
        raise AudioDecodeError(f"{path}: {exc}") from exc
    dtype = _SAMPLE_DTYPES.get(width)
    if dtype is None:
        raise AudioDecodeError(f"{path}: unsupported sample width {width} bytes")
    samples = np.frombuffer(raw, dtype=dtype).astype(np.float64)
    if width == 1:
        samples = (samples - 128.0) / 128.0
    else:
        samples /= float(2 ** (8 * width - 1))
    if channels > 1:
        usable = len(samples) - len(samples) % channels
        samples = samples[:usable].reshape(-1, channels).mean(axis=1)
    return samples, rate


def write_wav(path: Path | str, samples: np.ndarray, rate: int) -> None:
    """16-bit PCM writer, used by tests and fixtures."""
    clipped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    pcm = (clipped * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as wav:
        wav.setnchannels(1)
        wav.setsampwidth(2)
        wav.setframerate(rate)
        wav.writeframes(pcm.tobytes())
