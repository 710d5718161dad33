"""Feature-extraction backends.

``logmel`` (default) is a deterministic numpy log-mel featurizer that frames
audio at the requested hop, so the whole pipeline runs with no model downloads.
``hubert:<name>`` loads a HuBERT-style model through transformers/torch and
extracts the hidden states of a chosen layer (the usual choice is layer 9);
it is imported lazily and reports a clean error when unavailable.
"""

from __future__ import annotations

import math

import numpy as np


class ModelLoadError(RuntimeError):
    """The requested feature extractor could not be provided."""


def load_model(identifier: str):
    if identifier == "logmel" or identifier.startswith("logmel:"):
        _, _, arg = identifier.partition(":")
        return LogMelFeaturizer(n_mels=int(arg) if arg else 40)
    if identifier.startswith("hubert:"):
        return HubertFeaturizer(identifier.partition(":")[2])
    raise ModelLoadError(f"unknown model identifier {identifier!r}")


def _hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def _mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def _mel_filterbank(n_mels: int, n_fft: int, rate: int) -> np.ndarray:
    edges = _mel_to_hz(np.linspace(0.0, float(_hz_to_mel(rate / 2)), n_mels + 2))
    bins = np.floor((n_fft + 1) * edges / rate).astype(int)
    bank = np.zeros((n_mels, n_fft // 2 + 1))
    for m in range(n_mels):
        lo, mid, hi = bins[m], bins[m + 1], bins[m + 2]
        for b in range(lo, mid):
            if mid > lo:
                bank[m, b] = (b - lo) / (mid - lo)
        for b in range(mid, hi):
            if hi > mid:
                bank[m, b] = (hi - b) / (hi - mid)
    return bank


class LogMelFeaturizer:
    """Framewise log-mel energies; one frame per hop, window = 2 hops."""

    def __init__(self, n_mels: int = 40):
        if n_mels < 1:
            raise ModelLoadError(f"n_mels must be >= 1, got {n_mels}")
        self.n_mels = n_mels

    def extract(self, samples: np.ndarray, rate: int, hop_ms: float, layer: int) -> np.ndarray:
        del layer  # single-layer featurizer; index kept for interface parity
        hop = max(1, int(round(rate * hop_ms / 1000.0)))
        n = len(samples)
        frames = math.ceil(n / hop) if n else 0
        if frames == 0:
            return np.zeros((0, self.n_mels), dtype=np.float32)
        win = 2 * hop
        padded = np.zeros((frames - 1) * hop + win)
        padded[:n] = samples
        window = np.hanning(win)
        bank = _mel_filterbank(self.n_mels, win, rate)
        out = np.empty((frames, self.n_mels), dtype=np.float64)
        for t in range(frames):
            frame = padded[t * hop : t * hop + win] * window
            power = np.abs(np.fft.rfft(frame)) ** 2
            out[t] = np.log(bank @ power + 1e-10)
        return out.astype(np.float32)


class HubertFeaturizer:
    """Layer-wise activations from a pretrained HuBERT-style model (16 kHz)."""

    def __init__(self, model_name: str):
        if not model_name:
            raise ModelLoadError("hubert backend needs a model name, e.g. hubert:facebook/hubert-base-ls960")
        try:
            import torch  # noqa: F401
            import transformers  # noqa: F401
        except ImportError as exc:
            raise ModelLoadError(f"hubert backend requires torch and transformers: {exc}") from exc
        import torch
        from transformers import AutoModel

        try:
            self._model = AutoModel.from_pretrained(model_name)
        except Exception as exc:
            raise ModelLoadError(f"could not load {model_name!r}: {exc}") from exc
        self._model.eval()
        self._torch = torch

    def extract(self, samples: np.ndarray, rate: int, hop_ms: float, layer: int) -> np.ndarray:
        if rate != 16_000:
            raise ModelLoadError(f"hubert backend expects 16 kHz audio, got {rate} Hz")
        if layer < 1:
            raise ValueError(f"layer index must be >= 1, got {layer}")
        torch = self._torch
        with torch.no_grad():
            wav = torch.as_tensor(samples, dtype=torch.float32).unsqueeze(0)
            states = self._model(wav, output_hidden_states=True).hidden_states
            if layer >= len(states):
                raise ValueError(f"layer {layer} out of range (model has {len(states) - 1})")
            return states[layer].squeeze(0).numpy().astype(np.float32)
