"""Sensor time series, noise extraction, chunking, and train/test segmentation.

A sensor's raw readings fluctuate around the measured quantity; those
fluctuations are the fingerprint this package works with. This module turns
raw series into noise series (by subtracting a per-series reference), slices
noise into fixed-size chunks, and splits chunk lists into train/test parts.

The readings file format handled here is one record per line,
``timestamp,sensor_id,value``, with a literal header line. Records for one
sensor must be contiguous, time-ascending, and uniformly spaced.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np

from .errors import InsufficientDataError, RejectedInputError

MIN_CHUNK_SIZE = 8
DEFAULT_CHUNK_SIZE = 120

ALLOWED_TRAIN_FRACTIONS = (
    Fraction(1, 2),
    Fraction(1, 3),
    Fraction(1, 4),
    Fraction(1, 5),
    Fraction(1, 10),
)

READINGS_HEADER = "timestamp,sensor_id,value"


def _as_float_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise RejectedInputError("values must be one-dimensional")
    return arr


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled readings of one sensor.

    Attributes:
        sensor_id: label of the sensor that produced the readings.
        values: measurement array, length >= 1, all finite.
        sampling_interval: seconds between consecutive samples (> 0).
        start_time: integer epoch seconds of the first sample.
        reference: value subtracted to obtain these samples, if the series
            is the output of extract_noise; None for raw series.
    """

    sensor_id: str
    values: np.ndarray
    sampling_interval: float = 1.0
    start_time: int = 0
    reference: Optional[float] = None

    def __post_init__(self):
        arr = _as_float_array(self.values)
        if arr.size < 1:
            raise RejectedInputError("time series must contain at least one sample")
        if not np.all(np.isfinite(arr)):
            raise RejectedInputError(
                "time series for %r contains non-finite values" % self.sensor_id
            )
        if not (self.sampling_interval > 0):
            raise RejectedInputError("sampling_interval must be positive")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True, eq=False)
class NoiseChunk:
    """A fixed-length window of noise samples from one sensor.

    Attributes:
        sensor_id: owning sensor.
        chunk_index: position of the window, consecutive from 0.
        values: exactly chunk_size noise samples.
        reference: the real value that was subtracted to obtain the noise.
    """

    sensor_id: str
    chunk_index: int
    values: np.ndarray
    reference: float = 0.0

    def __post_init__(self):
        arr = _as_float_array(self.values)
        if arr.size < 1:
            raise RejectedInputError("chunk must contain at least one sample")
        if not np.all(np.isfinite(arr)):
            raise RejectedInputError("chunk contains non-finite values")
        if self.chunk_index < 0:
            raise RejectedInputError("chunk_index must be >= 0")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class SegmentationScheme:
    """Prefix train/test split expressed as a training fraction.

    Only the fractions 1/2, 1/3, 1/4, 1/5, 1/10 are meaningful splits for
    this workload; anything else is rejected.
    """

    train_fraction: Fraction = field(default=Fraction(1, 3))

    def __post_init__(self):
        frac = self.train_fraction
        if not isinstance(frac, Fraction):
            try:
                frac = Fraction(frac).limit_denominator(1000)
            except (TypeError, ValueError):
                raise RejectedInputError(
                    "train_fraction must be a fraction, got %r" % (self.train_fraction,)
                ) from None
            object.__setattr__(self, "train_fraction", frac)
        if frac not in ALLOWED_TRAIN_FRACTIONS:
            allowed = ", ".join(str(f) for f in ALLOWED_TRAIN_FRACTIONS)
            raise RejectedInputError(
                "train_fraction must be one of {%s}, got %s" % (allowed, frac)
            )

    @classmethod
    def from_string(cls, text: str) -> "SegmentationScheme":
        """Parse a scheme written as 'num/den', e.g. '1/3'."""
        try:
            frac = Fraction(text.strip())
        except (ValueError, ZeroDivisionError):
            raise RejectedInputError("cannot parse segmentation scheme %r" % text) from None
        return cls(train_fraction=frac)

    def train_count(self, total_chunks: int) -> int:
        return math.ceil(total_chunks * self.train_fraction)

    def __str__(self) -> str:
        return str(self.train_fraction)


def extract_noise(series: TimeSeries, reference: Optional[float] = None) -> TimeSeries:
    """Subtract a per-series reference, leaving only the noise.

    Args:
        series: raw readings.
        reference: the known true value of the measured quantity (for
            example a tank-level setpoint). When omitted, the arithmetic
            mean of the whole series is used.

    Returns:
        A new TimeSeries of the same length, id, and timing whose values are
        ``series.values - reference``; the reference used is recorded on the
        result.
    """
    if reference is None:
        reference = float(series.values.mean())
    else:
        reference = float(reference)
        if not math.isfinite(reference):
            raise RejectedInputError("reference must be finite")
    return TimeSeries(
        sensor_id=series.sensor_id,
        values=series.values - reference,
        sampling_interval=series.sampling_interval,
        start_time=series.start_time,
        reference=reference,
    )


def chunk(noise: TimeSeries, chunk_size: int = DEFAULT_CHUNK_SIZE) -> List[NoiseChunk]:
    """Slice a noise series into consecutive fixed-size chunks.

    Chunk i covers samples [i*chunk_size, (i+1)*chunk_size); the trailing
    remainder of fewer than chunk_size samples is discarded so every chunk
    is statistically homogeneous.

    Raises:
        InsufficientDataError: chunk_size < 8 or the series is shorter than
            one chunk.
    """
    if chunk_size < MIN_CHUNK_SIZE:
        raise InsufficientDataError(
            "chunk_size must be >= %d, got %d" % (MIN_CHUNK_SIZE, chunk_size)
        )
    n = len(noise)
    if n < chunk_size:
        raise InsufficientDataError(
            "series of length %d is shorter than one chunk of %d" % (n, chunk_size)
        )
    count = n // chunk_size
    ref = noise.reference if noise.reference is not None else 0.0
    return [
        NoiseChunk(
            sensor_id=noise.sensor_id,
            chunk_index=i,
            values=noise.values[i * chunk_size : (i + 1) * chunk_size].copy(),
            reference=ref,
        )
        for i in range(count)
    ]


def segment(
    chunks: List[NoiseChunk], scheme: SegmentationScheme
) -> Tuple[List[NoiseChunk], List[NoiseChunk]]:
    """Split chunks into a training prefix and a test remainder.

    The first ceil(m * train_fraction) chunks (in chunk_index order) become
    the training part; the rest are the test part. The split is prefix
    ordered and deterministic, so repeated runs agree.

    Raises:
        InsufficientDataError: fewer than 2 chunks.
    """
    if len(chunks) < 2:
        raise InsufficientDataError(
            "segmentation needs at least 2 chunks, got %d" % len(chunks)
        )
    ordered = sorted(chunks, key=lambda c: c.chunk_index)
    n_train = scheme.train_count(len(ordered))
    return ordered[:n_train], ordered[n_train:]


def write_readings(path, series_list: List[TimeSeries]) -> None:
    """Write series to a readings file (one `timestamp,sensor_id,value` per line).

    Timestamps are integer seconds, so each series' sampling interval must be
    a whole number of seconds. Values are written with repr, which round-trips
    float64 exactly.
    """
    lines = [READINGS_HEADER]
    for series in series_list:
        step = series.sampling_interval
        if step != int(step):
            raise RejectedInputError(
                "readings files carry integer timestamps; interval %r of %r "
                "is not a whole number of seconds" % (step, series.sensor_id)
            )
        step = int(step)
        if "," in series.sensor_id or series.sensor_id.strip() != series.sensor_id:
            raise RejectedInputError("sensor id %r is not file-safe" % series.sensor_id)
        t0 = series.start_time
        lines.extend(
            "%d,%s,%s" % (t0 + i * step, series.sensor_id, repr(float(v)))
            for i, v in enumerate(series.values)
        )
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def read_readings(path) -> List[TimeSeries]:
    """Parse a readings file into one TimeSeries per sensor.

    Enforces the format contract: literal header, integer timestamps,
    records per sensor contiguous, time-ascending, and uniformly spaced.
    Errors name the offending file and line.

    Returns:
        Series in order of first appearance in the file.
    """
    def fail(lineno, msg):
        raise RejectedInputError("%s:%d: %s" % (path, lineno, msg))

    with open(path, "r", encoding="ascii") as fh:
        raw_lines = fh.read().splitlines()
    if not raw_lines:
        raise RejectedInputError("%s:1: empty readings file" % path)
    if raw_lines[0].strip() != READINGS_HEADER:
        raise RejectedInputError(
            "%s:1: expected header %r, got %r" % (path, READINGS_HEADER, raw_lines[0])
        )

    order: List[str] = []
    closed = set()
    per_sensor_times = {}
    per_sensor_values = {}
    current = None
    for lineno, line in enumerate(raw_lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            fail(lineno, "expected 3 comma-separated fields, got %d" % len(parts))
        ts_text, sensor_id, value_text = parts
        try:
            ts = int(ts_text)
        except ValueError:
            fail(lineno, "timestamp %r is not an integer" % ts_text)
        try:
            value = float(value_text)
        except ValueError:
            fail(lineno, "value %r is not a number" % value_text)
        if not math.isfinite(value):
            fail(lineno, "value %r is not finite" % value_text)
        if sensor_id != current:
            if sensor_id in closed:
                fail(lineno, "records for sensor %r are not contiguous" % sensor_id)
            if current is not None:
                closed.add(current)
            current = sensor_id
            order.append(sensor_id)
            per_sensor_times[sensor_id] = []
            per_sensor_values[sensor_id] = []
        times = per_sensor_times[sensor_id]
        if times and ts <= times[-1]:
            fail(lineno, "timestamps for sensor %r are not ascending" % sensor_id)
        if len(times) >= 2 and ts - times[-1] != times[-1] - times[-2]:
            fail(lineno, "timestamps for sensor %r are not uniformly spaced" % sensor_id)
        times.append(ts)
        per_sensor_values[sensor_id].append(value)

    if not order:
        raise RejectedInputError("%s:2: readings file has a header but no records" % path)

    result = []
    for sensor_id in order:
        times = per_sensor_times[sensor_id]
        step = times[1] - times[0] if len(times) >= 2 else 1
        result.append(
            TimeSeries(
                sensor_id=sensor_id,
                values=np.array(per_sensor_values[sensor_id], dtype=np.float64),
                sampling_interval=float(step),
                start_time=times[0],
            )
        )
    return result
