"""TOML configuration: run tunables and plant scenario descriptions.

Both file kinds are versioned with a top-level `config_version = 1`. The run
config carries the tunables every command understands; a scenario file
describes a fleet (sampled, explicit, or both) and the attacks to run
against it. Command-line flags override run-config values.
"""

import sys
from dataclasses import dataclass, fields, replace
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised only on older interpreters
    import tomli as tomllib

from .detect import DEFAULT_ENERGY_K, SATURATION_EPS
from .errors import RejectedInputError
from .simulate import (
    ATTACK_SCENARIOS,
    DEFAULT_BASELINE,
    AttackSpec,
    PlantScenario,
    SensorProfile,
    derive_seed,
    sample_fleet,
)
from .svm import DEFAULT_C, DEFAULT_GAMMA, DEFAULT_MAX_PASSES, DEFAULT_TOL
from .timeseries import DEFAULT_CHUNK_SIZE, SegmentationScheme

CONFIG_VERSION = 1


@dataclass(frozen=True)
class RunConfig:
    """Tunables shared by the command-line pipeline."""

    chunk_size: int = DEFAULT_CHUNK_SIZE
    train_fraction: Fraction = Fraction(1, 3)
    C: float = DEFAULT_C
    gamma: float = DEFAULT_GAMMA
    tol: float = DEFAULT_TOL
    max_passes: int = DEFAULT_MAX_PASSES
    energy_k: float = DEFAULT_ENERGY_K
    saturation_eps: float = SATURATION_EPS
    seed: int = 0

    def __post_init__(self):
        if self.chunk_size < 1:
            raise RejectedInputError("chunk_size must be >= 1")
        SegmentationScheme(self.train_fraction)  # validates the allowed set
        if self.C <= 0 or self.gamma <= 0 or self.tol <= 0:
            raise RejectedInputError("C, gamma, and tol must be positive")
        if self.max_passes < 1:
            raise RejectedInputError("max_passes must be >= 1")
        if self.energy_k <= 0:
            raise RejectedInputError("energy_k must be positive")
        if self.saturation_eps < 0:
            raise RejectedInputError("saturation_eps must be >= 0")

    @property
    def scheme(self) -> SegmentationScheme:
        return SegmentationScheme(self.train_fraction)

    def override(self, **updates: Any) -> "RunConfig":
        """Apply non-None flag values on top of this config."""
        effective = {k: v for k, v in updates.items() if v is not None}
        if "train_fraction" in effective and isinstance(effective["train_fraction"], str):
            effective["train_fraction"] = SegmentationScheme.from_string(
                effective["train_fraction"]
            ).train_fraction
        return replace(self, **effective) if effective else self


def _load_toml(path: str) -> Dict[str, Any]:
    try:
        with open(path, "rb") as handle:
            document = tomllib.load(handle)
    except FileNotFoundError:
        raise RejectedInputError("%s: file not found" % path)
    except tomllib.TOMLDecodeError as exc:
        # the decoder message already carries "at line X, column Y"
        raise RejectedInputError("%s: %s" % (path, exc))
    version = document.get("config_version")
    if version != CONFIG_VERSION:
        raise RejectedInputError(
            "%s: config_version must be %d, got %r" % (path, CONFIG_VERSION, version)
        )
    return document


def _reject_unknown(path: str, section: str, table: Mapping[str, Any], allowed) -> None:
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise RejectedInputError(
            "%s: unknown key %r in %s" % (path, unknown[0], section)
        )


def load_run_config(path: str) -> RunConfig:
    """Read a run-config file; missing keys keep their defaults."""
    document = _load_toml(path)
    _reject_unknown(path, "top level", document, ("config_version", "run"))
    table = document.get("run", {})
    known = {f.name for f in fields(RunConfig)} | {"scheme"}
    _reject_unknown(path, "[run]", table, known)
    values: Dict[str, Any] = dict(table)
    scheme = values.pop("scheme", None)
    if scheme is not None:
        values["train_fraction"] = SegmentationScheme.from_string(str(scheme)).train_fraction
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise RejectedInputError("%s: %s" % (path, exc))


_SENSOR_KEYS = ("id", "baseline", "offset", "noise_std", "tones", "seed")
_ATTACK_KEYS = (
    "sensor",
    "scenario",
    "start",
    "end",
    "partner",
    "held_value",
    "tones",
    "bias",
    "slope",
    "match_mean",
    "match_std",
    "noise_seed",
    "replay_src",
    "replacement",
)
_REPLACEMENT_KEYS = ("id", "baseline", "offset", "noise_std", "tones", "seed")


def _parse_tones(path: str, where: str, raw: Any) -> Tuple[Tuple[float, float, float], ...]:
    if not isinstance(raw, list):
        raise RejectedInputError("%s: tones in %s must be a list of triples" % (path, where))
    tones = []
    for item in raw:
        if not isinstance(item, list) or len(item) != 3:
            raise RejectedInputError(
                "%s: each tone in %s is [frequency, amplitude, phase]" % (path, where)
            )
        tones.append(tuple(float(v) for v in item))
    return tuple(tones)


def _parse_sensor(
    path: str,
    table: Mapping[str, Any],
    default_baseline: float,
    fallback_seed: int,
    where: str,
) -> SensorProfile:
    _reject_unknown(path, where, table, _SENSOR_KEYS)
    try:
        return SensorProfile(
            sensor_id=str(table["id"]),
            baseline=float(table.get("baseline", default_baseline)),
            offset=float(table.get("offset", 0.0)),
            noise_std=float(table["noise_std"]),
            tones=_parse_tones(path, where, table.get("tones", [])),
            seed=int(table.get("seed", fallback_seed)),
        )
    except KeyError as exc:
        raise RejectedInputError("%s: %s missing key %s" % (path, where, exc))


def _parse_attack(
    path: str,
    index: int,
    table: Mapping[str, Any],
    master_seed: int,
    default_baseline: float,
) -> Tuple[str, AttackSpec]:
    where = "attack %d" % index
    _reject_unknown(path, where, table, _ATTACK_KEYS)
    for key in ("sensor", "scenario", "start", "end"):
        if key not in table:
            raise RejectedInputError("%s: %s missing key %r" % (path, where, key))
    scenario = str(table["scenario"])
    if scenario not in ATTACK_SCENARIOS:
        raise RejectedInputError(
            "%s: %s has unknown scenario %r" % (path, where, scenario)
        )
    replacement = None
    if "replacement" in table:
        repl = dict(table["replacement"])
        repl.setdefault("id", "%s_replacement" % table["sensor"])
        if "noise_std" not in repl:
            raise RejectedInputError(
                "%s: %s replacement profile needs noise_std" % (path, where)
            )
        replacement = _parse_sensor(
            path,
            repl,
            default_baseline,
            derive_seed(master_seed, 1, index),
            where + " replacement",
        )
    tones = None
    if "tones" in table:
        tones = _parse_tones(path, where, table["tones"])
    spec = AttackSpec(
        scenario=scenario,
        start=int(table["start"]),
        end=int(table["end"]),
        replacement=replacement,
        partner_id=str(table["partner"]) if "partner" in table else None,
        held_value=float(table["held_value"]) if "held_value" in table else None,
        tones=tones,
        bias=float(table.get("bias", 0.0)),
        slope=float(table.get("slope", 0.0)),
        match_mean=float(table["match_mean"]) if "match_mean" in table else None,
        match_std=float(table["match_std"]) if "match_std" in table else None,
        noise_seed=int(table["noise_seed"]) if "noise_seed" in table else None,
        replay_src=int(table["replay_src"]) if "replay_src" in table else None,
    )
    return str(table["sensor"]), spec


def load_scenario(path: str) -> PlantScenario:
    """Read a plant scenario: fleet (sampled and/or explicit) plus attacks."""
    document = _load_toml(path)
    _reject_unknown(
        path,
        "top level",
        document,
        ("config_version", "scenario", "fleet", "sensor", "attack"),
    )
    if "scenario" not in document:
        raise RejectedInputError("%s: missing [scenario] section" % path)
    scen = document["scenario"]
    _reject_unknown(path, "[scenario]", scen, ("duration", "master_seed"))
    if "duration" not in scen:
        raise RejectedInputError("%s: [scenario] needs duration" % path)
    duration = int(scen["duration"])
    master_seed = int(scen.get("master_seed", 0))

    profiles: List[SensorProfile] = []
    default_baseline = DEFAULT_BASELINE
    if "fleet" in document:
        fleet = document["fleet"]
        _reject_unknown(path, "[fleet]", fleet, ("count", "baseline", "id_prefix"))
        if "count" not in fleet:
            raise RejectedInputError("%s: [fleet] needs count" % path)
        default_baseline = float(fleet.get("baseline", DEFAULT_BASELINE))
        profiles.extend(
            sample_fleet(
                count=int(fleet["count"]),
                master_seed=master_seed,
                baseline=default_baseline,
                id_prefix=str(fleet.get("id_prefix", "s")),
            )
        )
    for i, table in enumerate(document.get("sensor", [])):
        profiles.append(
            _parse_sensor(
                path,
                table,
                default_baseline,
                derive_seed(master_seed, 2, i),
                "sensor %d" % i,
            )
        )
    if not profiles:
        raise RejectedInputError("%s: scenario defines no sensors" % path)

    attacks = tuple(
        _parse_attack(path, i, table, master_seed, default_baseline)
        for i, table in enumerate(document.get("attack", []))
    )
    return PlantScenario(
        profiles=tuple(profiles),
        duration=duration,
        attacks=attacks,
        master_seed=master_seed,
    )
