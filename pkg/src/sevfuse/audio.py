"""Waveform to 256-D log-Mel statistical descriptor.

Pipeline: resample to 16 kHz, 64-bin log-Mel spectrogram (25 ms Hann
window, 10 ms stride, FFT 512), first-order deltas, then per-bin mean and
population std over time: [mean | std | mean(delta) | std(delta)] = 256.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile
from scipy.signal import get_window, resample_poly

log = logging.getLogger(__name__)

TARGET_RATE = 16000
N_MELS = 64
WIN_SAMPLES = 400   # 25 ms at 16 kHz
HOP_SAMPLES = 160   # 10 ms at 16 kHz
N_FFT = 512         # next power of two >= window
LOG_EPS = 1e-10
AUDIO_DIM = 4 * N_MELS


@dataclass
class AudioFeature:
    vector: np.ndarray  # (256,) float64
    present: bool

    @staticmethod
    def absent() -> "AudioFeature":
        return AudioFeature(np.zeros(AUDIO_DIM), False)


def load_wav(path: Path) -> tuple[np.ndarray, int]:
    """Read a PCM/float WAV as mono float64 in [-1, 1]."""
    rate, data = wavfile.read(path)
    wave = np.asarray(data)
    if wave.ndim == 2:
        wave = wave.mean(axis=1)
    if np.issubdtype(np.asarray(data).dtype, np.integer):
        wave = wave.astype(np.float64) / float(np.iinfo(data.dtype).max + 1)
    else:
        wave = wave.astype(np.float64)
    return wave, int(rate)


def resample(wave: np.ndarray, source_rate: int, target_rate: int = TARGET_RATE) -> np.ndarray:
    """Band-limited resampling; pass-through when rates already match."""
    if source_rate <= 0:
        raise ValueError(f"invalid sample rate: {source_rate}")
    wave = np.asarray(wave, dtype=np.float64)
    if wave.ndim == 2:
        wave = wave.mean(axis=1)
    if wave.size == 0:
        raise ValueError("empty waveform")
    if source_rate == target_rate:
        return wave
    g = math.gcd(int(source_rate), target_rate)
    return resample_poly(wave, target_rate // g, int(source_rate) // g)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int = N_MELS, n_fft: int = N_FFT,
                   rate: int = TARGET_RATE, f_min: float = 0.0,
                   f_max: float | None = None) -> np.ndarray:
    """Triangular filters (peak 1) on the mel scale, shape (n_mels, n_fft//2+1)."""
    if f_max is None:
        f_max = rate / 2.0
    mel_pts = np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2)
    hz_pts = mel_to_hz(mel_pts)
    fft_freqs = np.arange(n_fft // 2 + 1) * (rate / n_fft)
    fb = np.zeros((n_mels, n_fft // 2 + 1))
    for m in range(n_mels):
        lo, mid, hi = hz_pts[m], hz_pts[m + 1], hz_pts[m + 2]
        up = (fft_freqs - lo) / (mid - lo)
        down = (hi - fft_freqs) / (hi - mid)
        fb[m] = np.maximum(0.0, np.minimum(up, down))
    return fb


def frame_count(n_samples: int) -> int:
    return 1 + (n_samples - WIN_SAMPLES) // HOP_SAMPLES


def logmel(wave16k: np.ndarray, vad_db: float | None = None) -> np.ndarray:
    """Log-Mel matrix (frames x 64): natural log of Mel power + eps.

    vad_db, when set (e.g. -60), drops frames whose energy falls below that
    many dB relative to the loudest frame; if everything would be dropped
    the gate is skipped.
    """
    wave16k = np.asarray(wave16k, dtype=np.float64)
    if wave16k.size < WIN_SAMPLES:
        raise ValueError(f"waveform shorter than one window ({wave16k.size} < {WIN_SAMPLES})")
    frames = np.lib.stride_tricks.sliding_window_view(wave16k, WIN_SAMPLES)[::HOP_SAMPLES]
    window = get_window("hann", WIN_SAMPLES, fftbins=True)
    spectra = np.fft.rfft(frames * window, n=N_FFT, axis=1)
    power = spectra.real**2 + spectra.imag**2
    if vad_db is not None:
        energy = power.sum(axis=1)
        floor = energy.max() * (10.0 ** (vad_db / 10.0))
        keep = energy >= floor
        if keep.any():
            power = power[keep]
    mel = power @ mel_filterbank().T
    return np.log(mel + LOG_EPS)


def delta(matrix: np.ndarray) -> np.ndarray:
    """Central difference over time with replicated edge frames."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape[0] < 2:
        return np.zeros_like(matrix)
    padded = np.concatenate([matrix[:1], matrix, matrix[-1:]], axis=0)
    return (padded[2:] - padded[:-2]) / 2.0


def pool_audio(matrix: np.ndarray) -> AudioFeature:
    """[mean | std | mean(delta) | std(delta)] per mel bin; population std."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != N_MELS or matrix.shape[0] < 1:
        raise ValueError(f"expected (frames, {N_MELS}) matrix, got {matrix.shape}")
    d = delta(matrix)
    vec = np.concatenate([
        matrix.mean(axis=0), matrix.std(axis=0),
        d.mean(axis=0), d.std(axis=0),
    ])
    return AudioFeature(vec, True)


def extract_audio_feature(path: Path | None, vad_db: float | None = None) -> AudioFeature:
    """Full per-file pipeline; absent or unreadable audio yields a zero vector."""
    if path is None:
        return AudioFeature.absent()
    try:
        wave, rate = load_wav(Path(path))
        wave = resample(wave, rate)
        return pool_audio(logmel(wave, vad_db=vad_db))
    except (OSError, ValueError) as exc:
        log.warning("audio feature extraction failed for %s: %s", path, exc)
        return AudioFeature.absent()
