"""Physical-domain challenge-response verification of a live sensor.

A challenger perturbs the measured quantity itself with a small tone burst
during a secret window [t, t+delta). A verifier that enrolled the joint
sensor-plus-challenger fingerprint then demands that reported chunks flip to
the challenged fingerprint exactly inside the window and nowhere else. An
attacker feeding the system recorded or fabricated values either misses the
challenge entirely (replay) or reacts one learning delay late (adaptive),
and the window arithmetic exposes both.

Window starts are drawn on the chunk grid so every chunk is cleanly inside
or outside the window; chunks straddling a boundary are excluded from the
verdict because their features mix both classes.
"""

import warnings
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from .errors import RejectedInputError
from .features import extract_matrix
from .simulate import SensorProfile, Tone, derive_seed, generate, make_rng, tone_waveform
from .svm import (
    DEFAULT_C,
    DEFAULT_GAMMA,
    DEFAULT_MAX_PASSES,
    DEFAULT_TOL,
    LabeledDataset,
    MulticlassSvmModel,
    train,
)
from .timeseries import DEFAULT_CHUNK_SIZE, TimeSeries, chunk as chunk_series, extract_noise

NORMAL_LABEL = "normal"
CHALLENGED_LABEL = "challenged"

ADVERSARY_NONE = "none"
ADVERSARY_REPLAY = "replay"
ADVERSARY_ADAPTIVE = "adaptive"
ADVERSARY_KINDS = (ADVERSARY_NONE, ADVERSARY_REPLAY, ADVERSARY_ADAPTIVE)

MAX_AMPLITUDE_FRACTION = 0.05

# chunks of samples preceding the window; the verifier's noise reference is
# estimated from them, so several chunks keep that estimate tight
MIN_REFERENCE_CHUNKS = 4

# stream tags for seed derivation, so enrollment, deployment, and attacker
# recordings never share a noise stream
_STREAM_ENROLL_NORMAL = 11
_STREAM_ENROLL_CHALLENGED = 12
_STREAM_DEPLOY = 21
_STREAM_RECORDING = 22
_STREAM_SCHEDULE = 31


@dataclass(frozen=True)
class ChallengeSchedule:
    """Secret challenge window: start sample t and length delta."""

    t: int
    delta: int
    seed: int
    chunk_size: int = DEFAULT_CHUNK_SIZE

    def __post_init__(self):
        if self.chunk_size < 1:
            raise RejectedInputError("chunk_size must be >= 1")
        if self.delta < 2 * self.chunk_size:
            raise RejectedInputError(
                "challenge window must span at least 2 chunks (delta >= %d), got %d"
                % (2 * self.chunk_size, self.delta)
            )
        if self.t < 0:
            raise RejectedInputError("window start must be >= 0")

    @property
    def end(self) -> int:
        return self.t + self.delta


def draw_schedule(
    duration: int,
    seed: int,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    delta: Optional[int] = None,
) -> ChallengeSchedule:
    """Draw a chunk-aligned window start uniformly from the allowed range.

    The window needs margin on both sides: chunks before it supply the
    verifier's pre-challenge noise reference (several when the series allows,
    so the reference estimate is tight), one chunk after it observes a late
    adversary reaction.
    """
    if delta is None:
        delta = 2 * chunk_size
    latest = duration - delta - chunk_size
    if latest < chunk_size:
        raise RejectedInputError(
            "series of %d samples too short for a %d-sample window with margins"
            % (duration, delta)
        )
    rng = make_rng(seed, _STREAM_SCHEDULE)
    last_block = latest // chunk_size
    first_block = min(MIN_REFERENCE_CHUNKS, last_block)
    t = int(rng.integers(first_block, last_block + 1)) * chunk_size
    return ChallengeSchedule(t=t, delta=delta, seed=seed, chunk_size=chunk_size)


@dataclass(frozen=True)
class ChallengerProfile:
    """The challenger's perturbation: tones with amplitudes as baseline fractions.

    Amplitudes are kept tiny relative to the process setpoint so the
    perturbation never disturbs control logic; the summed fraction is capped
    at 5% of baseline.
    """

    tones: Tuple[Tone, ...] = ((0.37, 0.02, 0.0),)

    def __post_init__(self):
        if not self.tones:
            raise RejectedInputError("challenger needs at least one tone")
        total = 0.0
        for tone in self.tones:
            if len(tone) != 3:
                raise RejectedInputError("a tone is (frequency, amplitude_fraction, phase)")
            freq, frac, _ = (float(v) for v in tone)
            if not (0.0 < freq < 0.5):
                raise RejectedInputError("tone frequency must lie in (0, 0.5)")
            if frac <= 0:
                raise RejectedInputError("amplitude fraction must be positive")
            total += frac
        if total > MAX_AMPLITUDE_FRACTION:
            raise RejectedInputError(
                "summed amplitude fraction %.4f exceeds the %.2f cap"
                % (total, MAX_AMPLITUDE_FRACTION)
            )

    def waveform(self, baseline: float, indices: np.ndarray) -> np.ndarray:
        """Challenge perturbation at absolute sample indices."""
        scaled = tuple((f, frac * abs(baseline), ph) for f, frac, ph in self.tones)
        return tone_waveform(scaled, indices)


_CANDIDATE_FREQS = tuple(0.05 + 0.02 * k for k in range(21))


def design_challenger(
    sensor: SensorProfile,
    fraction: float = MAX_AMPLITUDE_FRACTION,
    phase: float = 0.0,
) -> ChallengerProfile:
    """Pick a challenge tone the sensor's own spectrum leaves room for.

    The frequency is the grid candidate farthest from every tone the sensor
    already carries, so the challenge lands in a quiet band where it shifts
    the spectral fingerprint most. The amplitude defaults to the full allowed
    fraction of baseline, the strongest perturbation the control-safety cap
    admits; sensors with large noise floors need all of it.
    """
    own = [float(t[0]) for t in sensor.tones]
    if own:
        freq = max(_CANDIDATE_FREQS, key=lambda f: min(abs(f - g) for g in own))
    else:
        freq = 0.25
    return ChallengerProfile(tones=((freq, float(fraction), float(phase)),))


@dataclass(frozen=True)
class AdversaryModel:
    """What sits between the true quantity and the reported values."""

    kind: str = ADVERSARY_NONE
    learning_delay: int = DEFAULT_CHUNK_SIZE
    recorded_start: int = 0

    def __post_init__(self):
        if self.kind not in ADVERSARY_KINDS:
            raise RejectedInputError(
                "adversary kind must be one of %s" % ", ".join(ADVERSARY_KINDS)
            )
        if self.learning_delay < 0:
            raise RejectedInputError("learning delay must be >= 0")
        if self.recorded_start < 0:
            raise RejectedInputError("recorded window start must be >= 0")


@dataclass(frozen=True)
class EnrollmentResult:
    """Joint fingerprint model plus its training-quality readback."""

    model: MulticlassSvmModel
    reclassification_accuracy: float
    chunk_size: int
    low_quality: bool


def enroll_joint(
    sensor: SensorProfile,
    challenger: ChallengerProfile,
    duration: int,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    C: float = DEFAULT_C,
    gamma: float = DEFAULT_GAMMA,
    tol: float = DEFAULT_TOL,
    max_passes: int = DEFAULT_MAX_PASSES,
    streams: int = 4,
) -> EnrollmentResult:
    """Train the two-class normal/challenged model from enrollment streams.

    Both classes are simulated with fresh noise streams derived from the
    sensor seed: plain ones, and ones with the challenger perturbation
    applied throughout. Each class gets several independent streams, and each
    stream's noise reference is estimated from its leading chunks, the same
    procedure the verifier applies to pre-challenge samples. The model
    therefore sees reference estimation jitter as within-class spread and
    cannot mistake one stream's reference draw for class signal. Training
    chunks are reclassified afterwards; accuracy well below separation
    triggers a warning, since a challenge the model cannot see leaves
    verification blind.
    """
    if streams < 1:
        raise RejectedInputError("enrollment needs at least 1 stream per class")
    stream_len = duration // streams
    if stream_len < 2 * chunk_size:
        raise RejectedInputError(
            "enrollment needs at least 2 chunks of samples per stream"
        )

    chunk_sets = []
    labels = []
    for tag, label, perturbed in (
        (_STREAM_ENROLL_NORMAL, NORMAL_LABEL, False),
        (_STREAM_ENROLL_CHALLENGED, CHALLENGED_LABEL, True),
    ):
        for k in range(streams):
            series = generate(
                replace(sensor, seed=derive_seed(sensor.seed, tag, k)), stream_len
            )
            if perturbed:
                indices = np.arange(stream_len, dtype=np.float64)
                series = replace(
                    series,
                    values=series.values + challenger.waveform(sensor.baseline, indices),
                )
            prefix = min(MIN_REFERENCE_CHUNKS, stream_len // chunk_size) * chunk_size
            reference = float(np.mean(series.values[:prefix]))
            chunks = chunk_series(extract_noise(series, reference=reference), chunk_size)
            chunk_sets.append(extract_matrix(chunks))
            labels.extend([label] * len(chunks))
    vectors = np.vstack(chunk_sets)
    data = LabeledDataset(vectors=vectors, labels=tuple(labels))
    model = train(data, c=C, gamma=gamma, tol=tol, max_passes=max_passes)

    predicted = model.predict_many(vectors)
    accuracy = float(np.mean([p == a for p, a in zip(predicted, labels)]))
    low_quality = accuracy < 0.9
    if low_quality:
        warnings.warn(
            "joint enrollment reclassification accuracy %.3f: challenge may be "
            "invisible to the verifier" % accuracy,
            stacklevel=2,
        )
    return EnrollmentResult(
        model=model,
        reclassification_accuracy=accuracy,
        chunk_size=chunk_size,
        low_quality=low_quality,
    )


def run_protocol(
    sensor: SensorProfile,
    challenger: ChallengerProfile,
    schedule: ChallengeSchedule,
    adversary: AdversaryModel,
    duration: int,
) -> TimeSeries:
    """Produce the values the verifier receives during one protocol run.

    none: the live sensor with the challenge added inside [t, t+delta).
    replay: a pre-recorded attack-free stream; the challenge never appears.
    adaptive: the attacker forwards the live stream but can only imitate the
    challenge after its learning delay, so the perturbation lands in
    [t+delay, t+delta+delay) instead.
    """
    if duration < schedule.end + schedule.chunk_size:
        raise RejectedInputError(
            "duration %d does not cover the window plus one trailing chunk" % duration
        )
    live = generate(
        replace(sensor, seed=derive_seed(sensor.seed, _STREAM_DEPLOY, schedule.seed)),
        duration,
    )

    if adversary.kind == ADVERSARY_REPLAY:
        recorded = generate(
            replace(sensor, seed=derive_seed(sensor.seed, _STREAM_RECORDING, schedule.seed)),
            duration + adversary.recorded_start,
        )
        values = recorded.values[adversary.recorded_start : adversary.recorded_start + duration]
        return TimeSeries(sensor_id=sensor.sensor_id, values=values.copy())

    if adversary.kind == ADVERSARY_ADAPTIVE:
        start = schedule.t + adversary.learning_delay
        end = schedule.end + adversary.learning_delay
    else:
        start, end = schedule.t, schedule.end
    end = min(end, duration)
    values = live.values.copy()
    if start < end:
        window = np.arange(start, end, dtype=np.float64)
        values[start:end] += challenger.waveform(sensor.baseline, window)
    return TimeSeries(sensor_id=sensor.sensor_id, values=values)


@dataclass(frozen=True)
class ChunkVerdict:
    """One chunk's place in the verification verdict."""

    chunk_index: int
    expected: Optional[str]
    predicted: str
    included: bool

    @property
    def matched(self) -> bool:
        return self.included and self.expected == self.predicted


@dataclass(frozen=True)
class VerificationResult:
    passed: bool
    verdicts: Tuple[ChunkVerdict, ...]

    @property
    def offending(self) -> Tuple[ChunkVerdict, ...]:
        return tuple(v for v in self.verdicts if v.included and not v.matched)


def verify(
    model: MulticlassSvmModel,
    reported: TimeSeries,
    schedule: ChallengeSchedule,
) -> VerificationResult:
    """Check that the challenged fingerprint appears exactly inside the window.

    Chunks fully inside [t, t+delta) must classify challenged, chunks fully
    outside must classify normal, boundary-straddling chunks are excluded.
    The noise reference is the mean of the pre-challenge samples, which the
    verifier always has at least one chunk of.
    """
    L = schedule.chunk_size
    if schedule.t < L or schedule.end + L > len(reported):
        raise RejectedInputError(
            "reported series must cover the window plus one chunk on each side"
        )
    reference = float(np.mean(reported.values[: schedule.t]))
    noise = extract_noise(reported, reference=reference)
    chunks = chunk_series(noise, L)
    vectors = extract_matrix(chunks)
    predictions = model.predict_many(vectors)

    verdicts = []
    passed = True
    for c, predicted in zip(chunks, predictions):
        start = c.chunk_index * L
        end = start + L
        if start >= schedule.t and end <= schedule.end:
            expected: Optional[str] = CHALLENGED_LABEL
        elif end <= schedule.t or start >= schedule.end:
            expected = NORMAL_LABEL
        else:
            expected = None
        included = expected is not None
        verdicts.append(
            ChunkVerdict(
                chunk_index=c.chunk_index,
                expected=expected,
                predicted=predicted,
                included=included,
            )
        )
        if included and predicted != expected:
            passed = False
    return VerificationResult(passed=passed, verdicts=tuple(verdicts))
