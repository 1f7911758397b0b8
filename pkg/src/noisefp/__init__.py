"""Sensor-noise fingerprinting and integrity-attack detection.

Sensors carry involuntary noise signatures: per-device offsets, white-noise
levels, and faint spectral tones. This package simulates fleets of such
sensors, condenses each data chunk into an 8-dimensional fingerprint,
trains a multi-class RBF-SVM to identify the emitting sensor, and uses the
same machinery to authenticate live data, flag integrity attacks, and run a
physical-domain challenge-response protocol.

Typical flow: simulate or load readings, extract noise, chunk, extract
features, train, then authenticate or verify.
"""

from .challenge import (
    AdversaryModel,
    ChallengerProfile,
    ChallengeSchedule,
    EnrollmentResult,
    VerificationResult,
    design_challenger,
    draw_schedule,
    enroll_joint,
    run_protocol,
    verify,
)
from .config import RunConfig, load_run_config, load_scenario
from .detect import (
    AuthDecision,
    NoiseFloorProfile,
    apply_energy_check,
    authenticate,
    authenticate_chunks,
    energy_test,
    fit_noise_floor,
    spoof_classifier_test,
    spoof_classifier_train,
)
from .errors import (
    InsufficientClassDataError,
    InsufficientDataError,
    InvalidAttackSpecError,
    NoiseFpError,
    RejectedInputError,
    TrainingBudgetExceededError,
    UndefinedSnrError,
)
from .evaluation import (
    ConfusionMatrix,
    EvalReport,
    SweepCell,
    confusion,
    cross_validate,
    grid_search,
    metrics,
    sweep,
)
from .features import (
    FEATURE_COUNT,
    FEATURE_NAMES,
    FeatureVector,
    Spectrum,
    extract,
    extract_matrix,
    fft_radix2,
    transform,
)
from .simulate import (
    ATTACK_SCENARIOS,
    AttackSpec,
    PlantScenario,
    SensorProfile,
    apply_attack,
    energy,
    generate,
    sample_fleet,
    snr,
)
from .svm import (
    BinarySvmModel,
    LabeledDataset,
    MulticlassSvmModel,
    ScalingParams,
    load_model,
    predict,
    predict_many,
    rbf_kernel,
    save_model,
    train,
    train_binary,
)
from .timeseries import (
    DEFAULT_CHUNK_SIZE,
    MIN_CHUNK_SIZE,
    NoiseChunk,
    SegmentationScheme,
    TimeSeries,
    chunk,
    extract_noise,
    read_readings,
    segment,
    write_readings,
)

__version__ = "0.1.0"

__all__ = [
    "AdversaryModel",
    "AttackSpec",
    "ATTACK_SCENARIOS",
    "AuthDecision",
    "BinarySvmModel",
    "ChallengeSchedule",
    "ChallengerProfile",
    "ConfusionMatrix",
    "DEFAULT_CHUNK_SIZE",
    "EnrollmentResult",
    "EvalReport",
    "FEATURE_COUNT",
    "FEATURE_NAMES",
    "FeatureVector",
    "InsufficientClassDataError",
    "InsufficientDataError",
    "InvalidAttackSpecError",
    "LabeledDataset",
    "MIN_CHUNK_SIZE",
    "MulticlassSvmModel",
    "NoiseChunk",
    "NoiseFloorProfile",
    "NoiseFpError",
    "PlantScenario",
    "RejectedInputError",
    "RunConfig",
    "ScalingParams",
    "SegmentationScheme",
    "SensorProfile",
    "Spectrum",
    "SweepCell",
    "TimeSeries",
    "TrainingBudgetExceededError",
    "UndefinedSnrError",
    "VerificationResult",
    "apply_attack",
    "apply_energy_check",
    "authenticate",
    "authenticate_chunks",
    "chunk",
    "confusion",
    "cross_validate",
    "design_challenger",
    "draw_schedule",
    "energy",
    "energy_test",
    "enroll_joint",
    "extract",
    "extract_matrix",
    "extract_noise",
    "fft_radix2",
    "fit_noise_floor",
    "generate",
    "grid_search",
    "load_model",
    "load_run_config",
    "load_scenario",
    "metrics",
    "predict",
    "predict_many",
    "rbf_kernel",
    "read_readings",
    "run_protocol",
    "sample_fleet",
    "save_model",
    "segment",
    "snr",
    "spoof_classifier_test",
    "spoof_classifier_train",
    "sweep",
    "train",
    "train_binary",
    "transform",
    "verify",
    "write_readings",
]
