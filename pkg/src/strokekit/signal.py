"""DSP primitives shared by segmentation, feature extraction and synthesis.

All functions are pure and operate on 64-bit float arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps
from scipy.interpolate import CubicSpline


@dataclass(frozen=True)
class Signal1D:
    """A uniformly sampled single-channel signal.

    ``t0_ns`` anchors the first sample on an absolute (nanosecond) clock so that
    windows found on one stream can be located on another.
    """

    samples: np.ndarray
    sample_rate_hz: float
    t0_ns: int = 0

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim != 1:
            raise ValueError(f"expected 1-D samples, got shape {x.shape}")
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        if not np.all(np.isfinite(x)):
            raise ValueError("samples contain NaN or Inf")
        object.__setattr__(self, "samples", x)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz

    def time_ns(self, index) -> np.ndarray:
        """Absolute timestamp of sample ``index`` (scalar or array)."""
        return self.t0_ns + np.round(np.asarray(index) * 1e9 / self.sample_rate_hz).astype(np.int64)


@dataclass(frozen=True)
class Spectrum:
    magnitudes: np.ndarray
    bin_hz: float
    n_samples: int

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.magnitudes.shape[0]) * self.bin_hz


@dataclass(frozen=True)
class TimeFreqMap:
    values: np.ndarray  # frames x bins
    frame_hop_s: float
    bin_hz: float

    @property
    def shape(self):
        return self.values.shape


def _as_signal(signal, sample_rate_hz=None) -> Signal1D:
    if isinstance(signal, Signal1D):
        return signal
    if sample_rate_hz is None:
        raise TypeError("raw arrays need an explicit sample_rate_hz")
    return Signal1D(np.asarray(signal, dtype=np.float64), sample_rate_hz)


def lowpass_butterworth(signal: Signal1D, cutoff_hz: float, order: int = 2,
                        steady_start: bool = False) -> Signal1D:
    """Causal Butterworth low-pass filter.

    Realised as a cascade of second-order sections designed with the bilinear
    transform (pre-warped so the -3 dB point lands exactly on ``cutoff_hz``),
    run forward once. The filter state starts at rest, or with
    ``steady_start`` in the state a constant input equal to the first sample
    would have settled to (no start-up transient on a DC offset).
    """
    nyquist = signal.sample_rate_hz / 2.0
    if not 0 < cutoff_hz < nyquist:
        raise ValueError(
            f"cutoff_hz must lie in (0, {nyquist}) for fs={signal.sample_rate_hz}, got {cutoff_hz}"
        )
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    sos = sps.butter(order, cutoff_hz, btype="low", fs=signal.sample_rate_hz, output="sos")
    if steady_start and len(signal):
        y, _ = sps.sosfilt(sos, signal.samples, zi=sps.sosfilt_zi(sos) * signal.samples[0])
    else:
        y = sps.sosfilt(sos, signal.samples)
    return Signal1D(y, signal.sample_rate_hz, signal.t0_ns)


def butterworth_gain(freq_hz, cutoff_hz: float, sample_rate_hz: float, order: int = 2):
    """Closed-form magnitude response of the digital (bilinear) Butterworth low-pass."""
    warp = np.tan(np.pi * np.asarray(freq_hz, dtype=float) / sample_rate_hz)
    wc = np.tan(np.pi * cutoff_hz / sample_rate_hz)
    return 1.0 / np.sqrt(1.0 + (warp / wc) ** (2 * order))


def resample_grid(n_samples: int, source_rate_hz: float, target_rate_hz: float) -> np.ndarray:
    """Sample times (seconds from the first input sample) of a resampled signal.

    The input is taken to cover ``n_samples / source_rate_hz`` seconds, so the
    output holds ``round(n_samples * target / source)`` samples at ``k / target``.
    Up to ``target/source - 1`` trailing points fall after the last input
    sample; they are evaluated on the spline's end polynomial.
    """
    n_out = int(round(n_samples * target_rate_hz / source_rate_hz))
    return np.arange(n_out) / target_rate_hz


def resample_cubic_spline(signal: Signal1D, target_rate_hz: float) -> Signal1D:
    """Natural cubic spline resampling onto a grid anchored at the first sample."""
    if len(signal) < 4:
        raise ValueError(f"need at least 4 samples to fit a cubic spline, got {len(signal)}")
    if not target_rate_hz > 0:
        raise ValueError(f"target_rate_hz must be positive, got {target_rate_hz}")
    t_in = np.arange(len(signal)) / signal.sample_rate_hz
    spline = CubicSpline(t_in, signal.samples, bc_type="natural", extrapolate=True)
    t_out = resample_grid(len(signal), signal.sample_rate_hz, target_rate_hz)
    return Signal1D(spline(t_out), target_rate_hz, signal.t0_ns)


def resample_rows(x: np.ndarray, source_rate_hz: float, target_rate_hz: float) -> np.ndarray:
    """Resample every row of a 2-D array; same convention as :func:`resample_cubic_spline`."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] < 4:
        raise ValueError(f"need at least 4 samples to fit a cubic spline, got {x.shape[-1]}")
    t_in = np.arange(x.shape[-1]) / source_rate_hz
    spline = CubicSpline(t_in, x, axis=-1, bc_type="natural", extrapolate=True)
    return spline(resample_grid(x.shape[-1], source_rate_hz, target_rate_hz))


def fft_magnitude(signal: Signal1D) -> Spectrum:
    """One-sided magnitude spectrum ``|X_k|``, k = 0 .. n//2 (unnormalised DFT)."""
    n = len(signal)
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    mags = np.abs(np.fft.rfft(signal.samples))
    return Spectrum(mags, signal.sample_rate_hz / n, n)


def spectrum_energy(spectrum: Spectrum) -> float:
    """Time-domain energy implied by a one-sided spectrum (Parseval)."""
    m2 = spectrum.magnitudes**2
    n = spectrum.n_samples
    # interior bins appear twice in the two-sided spectrum; DC and (even n) Nyquist once
    mirrored = m2[1:-1].sum() if n % 2 == 0 else m2[1:].sum()
    total = m2[0] + 2.0 * mirrored
    if n % 2 == 0:
        total += m2[-1]
    return float(total / n)


def welch_psd(signal: Signal1D, seg_len: int, overlap: float = 0.5) -> Spectrum:
    """Welch power spectral density with a Hann window (one-sided, density scaling)."""
    n = len(signal)
    if seg_len < 2 or seg_len > n:
        raise ValueError(f"seg_len must be in [2, {n}], got {seg_len}")
    if not 0 <= overlap < 1:
        raise ValueError(f"overlap must be in [0, 1), got {overlap}")
    noverlap = int(np.floor(seg_len * overlap))
    freqs, pxx = sps.welch(
        signal.samples,
        fs=signal.sample_rate_hz,
        window="hann",
        nperseg=seg_len,
        noverlap=noverlap,
        detrend=False,
        scaling="density",
    )
    return Spectrum(pxx, freqs[1] - freqs[0], seg_len)


def stft_frame_count(n_samples: int, win_len: int, hop: int) -> int:
    return (n_samples - win_len) // hop + 1


def stft_array(x: np.ndarray, win_len: int = 50, hop: int = 6) -> np.ndarray:
    """Hann-windowed STFT magnitudes of the last axis; returns (..., frames, bins)."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    if win_len < 2 or win_len > n:
        raise ValueError(f"win_len must be in [2, {n}], got {win_len}")
    if hop < 1:
        raise ValueError(f"hop must be >= 1, got {hop}")
    frames = np.lib.stride_tricks.sliding_window_view(x, win_len, axis=-1)[..., ::hop, :]
    window = sps.get_window("hann", win_len)
    return np.abs(np.fft.rfft(frames * window, axis=-1))


def stft(signal: Signal1D, win_len: int = 50, hop: int = 6) -> TimeFreqMap:
    values = stft_array(signal.samples, win_len, hop)
    fs = signal.sample_rate_hz
    return TimeFreqMap(values, hop / fs, fs / win_len)


def energy_envelope(audio: Signal1D, frame_ms: float = 10.0) -> Signal1D:
    """Sum of squared samples over consecutive non-overlapping frames.

    A trailing partial frame is dropped. The result is sampled at
    ``1000 / frame_ms`` Hz and shares ``t0_ns`` with the input.
    """
    if not frame_ms > 0:
        raise ValueError(f"frame_ms must be positive, got {frame_ms}")
    frame_len = max(1, int(round(frame_ms * audio.sample_rate_hz / 1000.0)))
    n_frames = len(audio) // frame_len
    x = audio.samples[: n_frames * frame_len].reshape(n_frames, frame_len)
    return Signal1D((x * x).sum(axis=1), 1000.0 / frame_ms, audio.t0_ns)
