"""Eight-feature noise fingerprint of a chunk.

Five time-domain statistics (mean, Bessel-corrected standard deviation, mean
absolute deviation, skewness, excess kurtosis) and three spectral quantities
(magnitude-weighted RMS bin frequency, magnitude-weighted centroid frequency,
DC magnitude) computed from an unnormalized discrete Fourier transform of the
zero-padded chunk.

Formula conventions, fixed deliberately and verified against independent
oracles in the test suite:

* std_dev divides by (N - 1); skewness and kurtosis divide by N but use that
  Bessel-corrected std_dev, and kurtosis subtracts 3 (excess form).
* the chunk is zero-padded to the next power of two P, the transform is
  unnormalized, and the one-sided spectrum keeps bins 0..P/2 with bin
  frequencies i/P in cycles per sample.
* spectral sums run over ALL one-sided bins including bin 0; spectral_std is
  the RMS of bin frequency (not the spread around the centroid).
* degenerate chunks (constant, or all-zero spectrum) yield zeros plus a flag
  instead of an error, because saturation attacks produce exactly this case
  and the detector must see it.
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import InsufficientDataError, RejectedInputError
from .timeseries import NoiseChunk

FEATURE_NAMES: Tuple[str, ...] = (
    "mean",
    "std",
    "mad",
    "skew",
    "kurt",
    "sstd",
    "scentroid",
    "dc",
)
FEATURE_COUNT = len(FEATURE_NAMES)


@dataclass(frozen=True)
class Spectrum:
    """One-sided magnitude spectrum of a chunk.

    bin_freqs ascend from 0 to 0.5 cycles/sample; magnitudes are the complex
    magnitudes of the corresponding transform bins.
    """

    bin_freqs: np.ndarray
    magnitudes: np.ndarray

    def __post_init__(self):
        freqs = np.asarray(self.bin_freqs, dtype=np.float64)
        mags = np.asarray(self.magnitudes, dtype=np.float64)
        if freqs.shape != mags.shape or freqs.ndim != 1:
            raise RejectedInputError("bin_freqs and magnitudes must be equal-length 1-D")
        if freqs.size == 0 or freqs[0] != 0.0:
            raise RejectedInputError("spectrum must start at bin frequency 0")
        if not np.all(np.isfinite(mags)) or np.any(mags < 0):
            raise RejectedInputError("magnitudes must be finite and non-negative")
        freqs.setflags(write=False)
        mags.setflags(write=False)
        object.__setattr__(self, "bin_freqs", freqs)
        object.__setattr__(self, "magnitudes", mags)


@dataclass(frozen=True)
class FeatureVector:
    """The eight fingerprint features of one chunk."""

    mean: float
    std_dev: float
    mean_abs_dev: float
    skewness: float
    kurtosis: float
    spectral_std: float
    spectral_centroid: float
    dc_component: float
    degenerate: bool = False

    def __post_init__(self):
        values = self.as_array()
        if not np.all(np.isfinite(values)):
            raise RejectedInputError("feature vector contains non-finite values")
        if self.std_dev < 0 or self.mean_abs_dev < 0:
            raise RejectedInputError("deviation features must be non-negative")
        if self.spectral_std < 0 or self.dc_component < 0:
            raise RejectedInputError("spectral features must be non-negative")
        if not (0.0 <= self.spectral_centroid <= 0.5):
            raise RejectedInputError("spectral centroid must lie in [0, 0.5]")

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.mean,
                self.std_dev,
                self.mean_abs_dev,
                self.skewness,
                self.kurtosis,
                self.spectral_std,
                self.spectral_centroid,
                self.dc_component,
            ],
            dtype=np.float64,
        )


def next_power_of_two(n: int) -> int:
    if n < 1:
        raise RejectedInputError("length must be >= 1")
    return 1 << (n - 1).bit_length()


def _bit_reversal_permutation(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for _ in range(bits):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    return rev


def fft_radix2(values: np.ndarray) -> np.ndarray:
    """Unnormalized decimation-in-time radix-2 transform.

    Input length must be a power of two. Returns the full two-sided complex
    transform; callers slice the one-sided part they need.
    """
    x = np.asarray(values, dtype=np.complex128)
    n = x.size
    if n & (n - 1):
        raise RejectedInputError("radix-2 transform needs a power-of-two length, got %d" % n)
    if n <= 1:
        return x.copy()
    out = x[_bit_reversal_permutation(n)]
    size = 2
    while size <= n:
        half = size // 2
        twiddle = np.exp(-2j * np.pi * np.arange(half) / size)
        blocks = out.reshape(n // size, size)
        even = blocks[:, :half]
        odd = blocks[:, half:] * twiddle
        out = np.concatenate((even + odd, even - odd), axis=1).reshape(n)
        size *= 2
    return out


def transform(chunk: NoiseChunk) -> Spectrum:
    """One-sided magnitude spectrum of a chunk, zero-padded to a power of two.

    Bin i of the returned spectrum sits at frequency i/P cycles per sample,
    where P is the padded length; magnitudes are unnormalized.
    """
    values = chunk.values
    n = values.size
    padded_len = next_power_of_two(n)
    if padded_len != n:
        padded = np.zeros(padded_len, dtype=np.float64)
        padded[:n] = values
    else:
        padded = values
    bins = fft_radix2(padded)[: padded_len // 2 + 1]
    freqs = np.arange(padded_len // 2 + 1, dtype=np.float64) / padded_len
    return Spectrum(bin_freqs=freqs, magnitudes=np.abs(bins))


@dataclass(frozen=True)
class TimeStats:
    mean: float
    std_dev: float
    mean_abs_dev: float
    skewness: float
    kurtosis: float
    degenerate: bool


def time_features(chunk: NoiseChunk) -> TimeStats:
    """Time-domain statistics of a chunk.

    A constant chunk has zero variance; its skewness and kurtosis are defined
    as 0 and the degenerate flag is set rather than raising, so saturated
    windows flow through to the detector.
    """
    values = chunk.values
    n = values.size
    if n < 2:
        raise InsufficientDataError(
            "time statistics need at least 2 samples, got %d" % n
        )
    mean = float(values.mean())
    dev = values - mean
    sq_sum = float(np.sum(dev * dev))
    mad = float(np.mean(np.abs(dev)))
    if sq_sum == 0.0:
        return TimeStats(mean, 0.0, mad, 0.0, 0.0, True)
    std = math.sqrt(sq_sum / (n - 1))
    z = dev / std
    skew = float(np.mean(z ** 3))
    kurt = float(np.mean(z ** 4)) - 3.0
    return TimeStats(mean, std, mad, skew, kurt, False)


@dataclass(frozen=True)
class SpectralStats:
    spectral_std: float
    spectral_centroid: float
    dc_component: float
    degenerate: bool


def spectral_features(spectrum: Spectrum) -> SpectralStats:
    """Magnitude-weighted spectral statistics.

    spectral_centroid is the magnitude-weighted mean bin frequency and
    spectral_std the magnitude-weighted RMS bin frequency, both over all
    one-sided bins including bin 0. An all-zero spectrum yields zeros with
    the degenerate flag set.
    """
    mags = spectrum.magnitudes
    freqs = spectrum.bin_freqs
    total = float(np.sum(mags))
    if total == 0.0:
        return SpectralStats(0.0, 0.0, 0.0, True)
    centroid = float(np.sum(freqs * mags) / total)
    rms_freq = math.sqrt(float(np.sum(freqs * freqs * mags) / total))
    return SpectralStats(rms_freq, centroid, float(mags[0]), False)


def extract(chunk: NoiseChunk) -> FeatureVector:
    """Compute the full eight-feature fingerprint of a chunk.

    Deterministic: repeated calls on the same chunk return bit-identical
    vectors. The degenerate flag is set when either the time-domain or the
    spectral part hit a degenerate case.
    """
    t = time_features(chunk)
    s = spectral_features(transform(chunk))
    return FeatureVector(
        mean=t.mean,
        std_dev=t.std_dev,
        mean_abs_dev=t.mean_abs_dev,
        skewness=t.skewness,
        kurtosis=t.kurtosis,
        spectral_std=s.spectral_std,
        spectral_centroid=s.spectral_centroid,
        dc_component=s.dc_component,
        degenerate=t.degenerate or s.degenerate,
    )


def extract_matrix(chunks) -> np.ndarray:
    """Feature matrix (len(chunks) x 8) for a chunk list, row order preserved."""
    if not chunks:
        return np.empty((0, FEATURE_COUNT), dtype=np.float64)
    return np.vstack([extract(c).as_array() for c in chunks])


FEATURE_DUMP_HEADER = "sensor_id,chunk_index," + ",".join(FEATURE_NAMES)


def format_feature_row(sensor_id: str, chunk_index: int, vector: FeatureVector) -> str:
    """One feature-dump line; repr round-trips every float64 exactly."""
    values = ",".join(repr(float(v)) for v in vector.as_array())
    return "%s,%d,%s" % (sensor_id, chunk_index, values)
