"""Frequency-domain analysis of observable time series and the Delta -> -Delta symmetry check."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.signal


@dataclass(frozen=True, eq=False)
class FrequencySpectrum:
    """One-sided magnitude spectrum in angular frequency.

    Magnitudes use the unitary DFT normalization ``|X_k| / sqrt(N)``.
    """

    omega: np.ndarray
    magnitude: np.ndarray
    num_samples: int
    dt: float

    @property
    def bin_width(self) -> float:
        return 2 * np.pi / (self.num_samples * self.dt)


@dataclass(frozen=True)
class Peak:
    omega: float
    magnitude: float
    prominence: float
    bin: int


@dataclass(frozen=True)
class PeakSet:
    peaks: tuple[Peak, ...]
    bin_width: float

    def __len__(self) -> int:
        return len(self.peaks)

    def __iter__(self):
        return iter(self.peaks)

    def __getitem__(self, i) -> Peak:
        return self.peaks[i]

    def near(self, omega: float, tolerance: float) -> Peak | None:
        """Strongest peak within ``tolerance`` of ``omega``, if any."""
        for p in self.peaks:
            if abs(p.omega - omega) <= tolerance:
                return p
        return None


@dataclass(frozen=True)
class GradientEstimate:
    B: float
    uncertainty: float
    mode: str
    omega_top: float


@dataclass(frozen=True)
class SymmetryReport:
    max_deviation: float
    centroid: float
    params_a: dict = field(default_factory=dict)
    params_b: dict = field(default_factory=dict)
    compared: int = 0
    skipped: int = 0

    def to_dict(self) -> dict:
        return {
            "max_deviation": self.max_deviation,
            "initial_centroid": self.centroid,
            "run_a": self.params_a,
            "run_b": self.params_b,
            "compared_pairs": self.compared,
            "skipped_pairs": self.skipped,
        }


def _check_uniform(times: np.ndarray, rtol: float = 1e-9) -> float:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.shape[0] < 2:
        raise ValueError("need a one-dimensional time axis with at least two samples")
    steps = np.diff(times)
    dt = float(steps.mean())
    if dt <= 0 or np.max(np.abs(steps - dt)) > rtol * max(abs(dt), abs(times[-1])):
        raise ValueError("time samples are not uniformly spaced")
    return dt


def dft_spectrum(times, values, window: str = "none") -> FrequencySpectrum:
    """Mean-subtracted one-sided DFT magnitude of a uniformly sampled real series.

    ``omega_k = 2 pi k / (N dt)`` for ``k = 0 ... N // 2``. ``window`` is ``"none"``
    or ``"hann"``.
    """
    values = np.asarray(values, dtype=float)
    dt = _check_uniform(times)
    n = values.shape[0]
    if n != len(times):
        raise ValueError("times and values differ in length")
    if n < 16:
        raise ValueError(f"need at least 16 samples, got {n}")
    x = values - values.mean()
    if window == "hann":
        x = x * scipy.signal.get_window("hann", n, fftbins=True)
    elif window != "none":
        raise ValueError(f"unknown window {window!r}")
    mag = np.abs(np.fft.rfft(x, norm="ortho"))
    omega = 2 * np.pi * np.fft.rfftfreq(n, d=dt)
    return FrequencySpectrum(omega, mag, n, dt)


def parseval_power(spectrum: FrequencySpectrum) -> float:
    """Two-sided power ``sum_k |X_k|^2`` rebuilt from the one-sided magnitudes."""
    w = np.full(spectrum.magnitude.shape, 2.0)
    w[0] = 1.0
    if spectrum.num_samples % 2 == 0:
        w[-1] = 1.0
    return float(np.sum(w * spectrum.magnitude ** 2))


def find_peaks(spectrum: FrequencySpectrum, min_prominence_fraction: float = 0.05) -> PeakSet:
    """Strict local maxima with prominence above a fraction of the global maximum.

    Peak frequencies are refined by a parabola through the three bins around
    each maximum. Sorted by descending magnitude.
    """
    if not 0 < min_prominence_fraction < 1:
        raise ValueError("min_prominence_fraction must lie in (0, 1)")
    mag = np.asarray(spectrum.magnitude)
    if mag.size == 0:
        raise ValueError("empty spectrum")
    top = float(mag.max())
    if top <= 0:
        return PeakSet((), spectrum.bin_width)
    idx, props = scipy.signal.find_peaks(mag, prominence=min_prominence_fraction * top)
    peaks = []
    dw = spectrum.bin_width
    for i, prom in zip(idx, props["prominences"]):
        a, b, c = mag[i - 1], mag[i], mag[i + 1]
        if not (b > a and b > c):
            continue
        offset = 0.5 * (a - c) / (a - 2 * b + c)
        omega = spectrum.omega[i] + offset * dw
        height = b - 0.25 * (a - c) * offset
        peaks.append(Peak(float(omega), float(height), float(prom), int(i)))
    peaks.sort(key=lambda p: -p.magnitude)
    return PeakSet(tuple(peaks), dw)


def estimate_gradient(peaks: PeakSet, mode: str = "auto") -> GradientEstimate:
    """Field gradient from the strongest peak.

    ``fundamental``: ``B = omega_top``. ``doubled``: ``B = omega_top / 2``.
    ``auto``: halve only if another peak sits within one bin of ``omega_top / 2``.
    The uncertainty is half a frequency bin.
    """
    if len(peaks) == 0:
        raise ValueError("no peaks to estimate the gradient from")
    top = peaks[0].omega
    half_bin = 0.5 * peaks.bin_width
    if mode == "fundamental":
        return GradientEstimate(top, half_bin, mode, top)
    if mode == "doubled":
        return GradientEstimate(top / 2, half_bin, mode, top)
    if mode != "auto":
        raise ValueError(f"unknown mode {mode!r}")
    secondary = [p for p in peaks.peaks[1:] if abs(p.omega - top / 2) <= peaks.bin_width]
    if secondary:
        return GradientEstimate(top / 2, half_bin, "doubled", top)
    return GradientEstimate(top, half_bin, "fundamental", top)


def dynamical_symmetry_check(corr_a: np.ndarray, corr_b: np.ndarray, sites, initial_centroid: float,
                             params_a: dict | None = None, params_b: dict | None = None) -> SymmetryReport:
    """Compare ``C_a[l', l''](t)`` with ``C_b[2 l_c - l', 2 l_c - l''](t)``.

    ``corr_a``/``corr_b`` have shape ``(T, L_t, L_t)`` on a shared grid. Reflected
    sites that fall off the chain are skipped and counted.
    """
    corr_a = np.asarray(corr_a)
    corr_b = np.asarray(corr_b)
    if corr_a.shape != corr_b.shape:
        raise ValueError(f"correlation histories differ in shape: {corr_a.shape} vs {corr_b.shape}")
    sites = np.asarray(sites)
    mirror2 = 2 * initial_centroid
    if abs(mirror2 - round(mirror2)) > 1e-12:
        raise ValueError("the initial centroid must be an integer or half-integer site")
    reflected = int(round(mirror2)) - sites
    pos = {int(s): i for i, s in enumerate(sites)}
    src = np.array([i for i, r in enumerate(reflected) if int(r) in pos])
    dst = np.array([pos[int(reflected[i])] for i in src])
    n = sites.shape[0]
    skipped = n * n - src.size ** 2
    diff = corr_a[:, src[:, None], src[None, :]] - corr_b[:, dst[:, None], dst[None, :]]
    return SymmetryReport(float(np.max(np.abs(diff))), float(initial_centroid),
                          params_a or {}, params_b or {}, int(src.size ** 2), int(skipped))
