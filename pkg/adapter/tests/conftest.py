"""WAV fixtures for adapter tests."""

import numpy as np
import pytest

from unitgrid_adapter.audio import write_wav


def make_tone(path, duration_s, rate, freq=220.0, seed=0):
    """Sine with a little seeded noise, 16-bit mono PCM."""
    n = int(round(duration_s * rate))
    t = np.arange(n) / rate
    rng = np.random.default_rng(seed)
    samples = 0.6 * np.sin(2 * np.pi * freq * t) + 0.05 * rng.normal(size=n)
    write_wav(path, samples, rate)
    return path


@pytest.fixture
def audio_workspace(tmp_path):
    """Ten utterances of varied duration and sample rate plus their manifest."""
    wav_dir = tmp_path / "wavs"
    wav_dir.mkdir()
    entries = []
    specs = [
        (0.50, 16000), (1.00, 16000), (2.00, 16000), (0.73, 16000), (1.31, 16000),
        (0.40, 8000), (1.20, 22050), (0.85, 44100), (2.00, 8000), (0.25, 16000),
    ]
    for i, (dur, rate) in enumerate(specs):
        utt_id = f"utt{i:02d}"
        make_tone(wav_dir / f"{utt_id}.wav", dur, rate, freq=180.0 + 40 * i, seed=i)
        entries.append((utt_id, f"{utt_id}.wav", dur))
    manifest = tmp_path / "audio.tsv"
    manifest.write_text(
        "".join(f"{utt}\twavs/{rel}\n" for utt, rel, _ in entries), encoding="utf-8"
    )
    durations = {utt: dur for utt, _, dur in entries}
    return manifest, durations
