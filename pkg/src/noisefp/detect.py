"""Runtime authentication of noise chunks against a fingerprint model.

Verdict pipeline per chunk: a near-zero-variance chunk is declared saturated
before any classification (a constant reading carries no noise to
fingerprint); otherwise the chunk is classified and is authentic exactly
when the predicted sensor matches the claimed one. An optional noise-floor
energy test runs as a separate composed check so each verdict stays
independently testable.
"""

from dataclasses import dataclass, replace
from typing import IO, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InsufficientDataError, RejectedInputError
from .features import extract, extract_matrix
from .simulate import energy
from .svm import (
    DEFAULT_C,
    DEFAULT_GAMMA,
    DEFAULT_MAX_PASSES,
    DEFAULT_TOL,
    LabeledDataset,
    MulticlassSvmModel,
    train,
)
from .timeseries import NoiseChunk

VERDICT_AUTHENTIC = "authentic"
VERDICT_MISMATCH = "mismatch"
VERDICT_SATURATED = "saturated"
VERDICT_ENERGY_ANOMALY = "energy_anomaly"

SATURATION_EPS = 1e-12
DEFAULT_ENERGY_K = 3.0

NORMAL_LABEL = "normal"
ATTACK_LABEL = "attack"

VERDICT_HEADER = "sensor_id,chunk_index,claimed,predicted,verdict,energy"


@dataclass(frozen=True)
class AuthDecision:
    """Per-chunk authentication outcome."""

    chunk_index: int
    claimed_id: str
    predicted_id: Optional[str]
    verdict: str
    energy: float
    degenerate: bool = False

    def __post_init__(self):
        if self.verdict not in (
            VERDICT_AUTHENTIC,
            VERDICT_MISMATCH,
            VERDICT_SATURATED,
            VERDICT_ENERGY_ANOMALY,
        ):
            raise RejectedInputError("unknown verdict %r" % self.verdict)
        if self.verdict == VERDICT_AUTHENTIC and self.predicted_id != self.claimed_id:
            raise RejectedInputError("authentic verdict requires predicted == claimed")

    @property
    def authentic(self) -> bool:
        return self.verdict == VERDICT_AUTHENTIC


@dataclass(frozen=True)
class NoiseFloorProfile:
    """Per-sensor chunk-energy statistics for the anomaly check."""

    sensor_id: str
    mean_chunk_energy: float
    energy_std: float
    k: float = DEFAULT_ENERGY_K

    def __post_init__(self):
        if self.energy_std < 0:
            raise RejectedInputError("energy_std must be >= 0")
        if self.k <= 0:
            raise RejectedInputError("threshold multiplier k must be positive")


def authenticate(
    model: MulticlassSvmModel,
    chunk: NoiseChunk,
    claimed_id: str,
    saturation_eps: float = SATURATION_EPS,
) -> AuthDecision:
    """Authenticate one noise chunk against its claimed sensor identity."""
    if claimed_id not in model.classes:
        raise RejectedInputError(
            "claimed id %r is not a class of the model" % claimed_id
        )
    chunk_energy = energy(chunk.values, dt=1.0)
    if float(np.var(chunk.values)) < saturation_eps:
        return AuthDecision(
            chunk_index=chunk.chunk_index,
            claimed_id=claimed_id,
            predicted_id=None,
            verdict=VERDICT_SATURATED,
            energy=chunk_energy,
        )
    vector = extract(chunk)
    predicted = model.predict(vector.as_array())
    verdict = VERDICT_AUTHENTIC if predicted == claimed_id else VERDICT_MISMATCH
    return AuthDecision(
        chunk_index=chunk.chunk_index,
        claimed_id=claimed_id,
        predicted_id=predicted,
        verdict=verdict,
        energy=chunk_energy,
        degenerate=vector.degenerate,
    )


def fit_noise_floor(
    sensor_id: str,
    chunks: Sequence[NoiseChunk],
    k: float = DEFAULT_ENERGY_K,
) -> NoiseFloorProfile:
    """Mean and spread of per-chunk noise energy over training chunks."""
    if len(chunks) < 5:
        raise InsufficientDataError(
            "noise floor needs >= 5 chunks, got %d" % len(chunks)
        )
    energies = np.array([energy(c.values, dt=1.0) for c in chunks], dtype=np.float64)
    return NoiseFloorProfile(
        sensor_id=sensor_id,
        mean_chunk_energy=float(energies.mean()),
        energy_std=float(energies.std()),
        k=k,
    )


def energy_test(profile: NoiseFloorProfile, chunk: NoiseChunk) -> bool:
    """True when the chunk's energy deviates more than k standard deviations."""
    deviation = abs(energy(chunk.values, dt=1.0) - profile.mean_chunk_energy)
    return deviation > profile.k * profile.energy_std


def apply_energy_check(
    decision: AuthDecision,
    profile: NoiseFloorProfile,
    chunk: NoiseChunk,
) -> AuthDecision:
    """Demote an authentic verdict to energy_anomaly when the floor check fires.

    Saturated and mismatch verdicts already flag the chunk and take
    precedence; only an otherwise-authentic chunk is re-examined.
    """
    if decision.verdict == VERDICT_AUTHENTIC and energy_test(profile, chunk):
        return replace(decision, verdict=VERDICT_ENERGY_ANOMALY)
    return decision


def authenticate_chunks(
    model: MulticlassSvmModel,
    chunks: Iterable[NoiseChunk],
    claimed_id: str,
    floor: Optional[NoiseFloorProfile] = None,
    saturation_eps: float = SATURATION_EPS,
) -> List[AuthDecision]:
    """Authenticate a stream of chunks, with the optional energy check composed."""
    decisions = []
    for chunk in chunks:
        decision = authenticate(model, chunk, claimed_id, saturation_eps)
        if floor is not None:
            decision = apply_energy_check(decision, floor, chunk)
        decisions.append(decision)
    return decisions


def spoof_classifier_train(
    normal_chunks: Sequence[NoiseChunk],
    attacked_chunks: Sequence[NoiseChunk],
    C: float = DEFAULT_C,
    gamma: float = DEFAULT_GAMMA,
    tol: float = DEFAULT_TOL,
    max_passes: int = DEFAULT_MAX_PASSES,
) -> MulticlassSvmModel:
    """Train the attack-presence classifier from labeled chunk sets.

    Returns a two-class model (labels "attack" and "normal") so the feature
    scaling fitted here travels with it.
    """
    if not normal_chunks or not attacked_chunks:
        raise RejectedInputError("both normal and attacked chunk sets must be nonempty")
    vectors = np.vstack(
        [extract_matrix(normal_chunks), extract_matrix(attacked_chunks)]
    )
    labels = [NORMAL_LABEL] * len(normal_chunks) + [ATTACK_LABEL] * len(attacked_chunks)
    data = LabeledDataset(vectors=vectors, labels=tuple(labels))
    return train(data, c=C, gamma=gamma, tol=tol, max_passes=max_passes)


def spoof_classifier_test(model: MulticlassSvmModel, chunk: NoiseChunk) -> bool:
    """True when the classifier puts the chunk on the attack side."""
    return model.predict(extract(chunk).as_array()) == ATTACK_LABEL


def format_verdict_line(decision: AuthDecision, sensor_id: str) -> str:
    predicted = decision.predicted_id if decision.predicted_id is not None else "-"
    return "%s,%d,%s,%s,%s,%s" % (
        sensor_id,
        decision.chunk_index,
        decision.claimed_id,
        predicted,
        decision.verdict,
        repr(decision.energy),
    )


def write_verdicts(
    out: IO[str],
    rows: Iterable[Tuple[str, AuthDecision]],
    header: bool = True,
) -> int:
    """Write (sensor_id, decision) rows as the verdict log; returns row count."""
    count = 0
    if header:
        out.write(VERDICT_HEADER + "\n")
    for sensor_id, decision in rows:
        out.write(format_verdict_line(decision, sensor_id) + "\n")
        count += 1
    return count
