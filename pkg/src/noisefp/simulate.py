"""Synthetic sensor fleets and integrity-attack injection.

Every sensor is a profile: process baseline, per-sensor measurement offset,
white-noise level, and a small set of sinusoidal tones that give the sensor
its spectral signature. Generation is bit-reproducible: each profile carries
a seed, and every derived stream (attack noise, recordings, trials) is keyed
through SeedSequence with a tag, never through global RNG state.

Attack scenarios, all window-local over [start, end):

* S1_replacement   victim's samples regenerated from a replacement sensor
  profile installed at the same process baseline.
* S2_swap / S5_digital_swap   victim and partner windows exchanged (physical
  re-plumbing vs. in-network swap; identical sample-level effect).
* S3_saturation    constant held value, no noise at all.
* S4_analog_spoof  attacker tones added on top of the legitimate samples,
  strictly raising window energy for any nonzero amplitude.
* S6_injection     constant bias and/or linear ramp added.
* S7_stealthy      samples replaced by white noise matching the victim's
  mean and standard deviation but carrying no tones.
* S8_replay        samples replaced by a bit-identical copy of an earlier,
  non-overlapping window of the same sensor.
"""

import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    InvalidAttackSpecError,
    RejectedInputError,
    UndefinedSnrError,
)
from .timeseries import TimeSeries

S1_REPLACEMENT = "S1_replacement"
S2_SWAP = "S2_swap"
S3_SATURATION = "S3_saturation"
S4_ANALOG_SPOOF = "S4_analog_spoof"
S5_DIGITAL_SWAP = "S5_digital_swap"
S6_INJECTION = "S6_injection"
S7_STEALTHY = "S7_stealthy"
S8_REPLAY = "S8_replay"

ATTACK_SCENARIOS = (
    S1_REPLACEMENT,
    S2_SWAP,
    S3_SATURATION,
    S4_ANALOG_SPOOF,
    S5_DIGITAL_SWAP,
    S6_INJECTION,
    S7_STEALTHY,
    S8_REPLAY,
)

_SWAP_SCENARIOS = (S2_SWAP, S5_DIGITAL_SWAP)

# default fleet sampler ranges (engineering units)
DEFAULT_BASELINE = 20.0                # process setpoint; noise is 0.25-2.5% of it
NOISE_STD_RANGE = (0.05, 0.5)          # log-uniform
OFFSET_RANGE = (-0.2, 0.2)             # uniform
TONE_AMP_FACTOR_RANGE = (3.0, 6.0)     # relative to the sensor's noise_std
TONE_GRID_RANGE = (0.05, 0.45)         # cycles/sample, one grid point per sensor
TONE_GRID_JITTER = 0.3                 # fraction of grid spacing


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Counter-based generator for a seed plus an optional stream tag path."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, stream)])))


def derive_seed(seed: int, *stream: int) -> int:
    """A stable 63-bit child seed for labeling derived profiles."""
    state = np.random.SeedSequence([int(seed), *map(int, stream)]).generate_state(1, dtype=np.uint64)
    return int(state[0] >> np.uint64(1))


Tone = Tuple[float, float, float]  # frequency (cycles/sample), amplitude, phase


def _check_tones(tones: Sequence[Tone]) -> Tuple[Tone, ...]:
    checked = []
    for tone in tones:
        if len(tone) != 3:
            raise RejectedInputError("a tone is (frequency, amplitude, phase), got %r" % (tone,))
        freq, amp, phase = (float(v) for v in tone)
        if not (0.0 < freq < 0.5):
            raise RejectedInputError("tone frequency must lie in (0, 0.5), got %r" % freq)
        if amp < 0:
            raise RejectedInputError("tone amplitude must be >= 0, got %r" % amp)
        checked.append((freq, amp, phase))
    return tuple(checked)


@dataclass(frozen=True)
class SensorProfile:
    """Noise signature of one synthetic sensor."""

    sensor_id: str
    baseline: float
    offset: float
    noise_std: float
    tones: Tuple[Tone, ...]
    seed: int

    def __post_init__(self):
        if self.noise_std <= 0:
            raise RejectedInputError("noise_std must be positive")
        object.__setattr__(self, "tones", _check_tones(self.tones))


def tone_waveform(tones: Sequence[Tone], indices: np.ndarray) -> np.ndarray:
    """Sum of the profile tones evaluated at absolute sample indices."""
    total = np.zeros(indices.shape, dtype=np.float64)
    for freq, amp, phase in tones:
        if amp != 0.0:
            total += amp * np.sin(2.0 * np.pi * freq * indices + phase)
    return total


def generate(profile: SensorProfile, duration: int) -> TimeSeries:
    """Simulate `duration` samples of the sensor.

    value(n) = baseline + offset + sum of tones at n + white noise, with the
    white noise drawn from a counter-based generator keyed by the profile
    seed, so repeated calls are bit-identical.
    """
    if duration < 1:
        raise RejectedInputError("duration must be >= 1 sample")
    n = np.arange(duration, dtype=np.float64)
    rng = make_rng(profile.seed)
    values = (
        profile.baseline
        + profile.offset
        + tone_waveform(profile.tones, n)
        + rng.normal(0.0, profile.noise_std, duration)
    )
    return TimeSeries(sensor_id=profile.sensor_id, values=values)


@dataclass(frozen=True)
class AttackSpec:
    """One parameterized attack over the window [start, end).

    Scenario-specific fields: replacement (S1), partner_id (S2/S5),
    held_value (S3), tones (S4), bias/slope (S6), match_mean/match_std and
    noise_seed (S7), replay_src (S8). Everything else stays None/0.
    """

    scenario: str
    start: int
    end: int
    replacement: Optional[SensorProfile] = None
    partner_id: Optional[str] = None
    held_value: Optional[float] = None
    tones: Optional[Tuple[Tone, ...]] = None
    bias: float = 0.0
    slope: float = 0.0
    match_mean: Optional[float] = None
    match_std: Optional[float] = None
    noise_seed: Optional[int] = None
    replay_src: Optional[int] = None

    def __post_init__(self):
        if self.scenario not in ATTACK_SCENARIOS:
            raise InvalidAttackSpecError(
                "unknown scenario %r; expected one of %s"
                % (self.scenario, ", ".join(ATTACK_SCENARIOS))
            )
        if self.tones is not None:
            object.__setattr__(self, "tones", _check_tones(self.tones))

    def validate_against(self, series_length: int) -> None:
        """Window and parameter-completeness checks against a concrete series."""
        if not (0 <= self.start < self.end <= series_length):
            raise InvalidAttackSpecError(
                "window [%d, %d) invalid for series of length %d"
                % (self.start, self.end, series_length)
            )
        s = self.scenario
        if s == S1_REPLACEMENT and self.replacement is None:
            raise InvalidAttackSpecError("S1 needs a replacement profile")
        if s in _SWAP_SCENARIOS and self.partner_id is None:
            raise InvalidAttackSpecError("%s needs a partner sensor" % s)
        if s == S3_SATURATION and self.held_value is None:
            raise InvalidAttackSpecError("S3 needs the held value")
        if s == S4_ANALOG_SPOOF and not self.tones:
            raise InvalidAttackSpecError("S4 needs at least one attacker tone")
        if s == S6_INJECTION and self.bias == 0.0 and self.slope == 0.0:
            raise InvalidAttackSpecError("S6 needs a nonzero bias or slope")
        if s == S7_STEALTHY:
            if self.match_mean is None or self.match_std is None:
                raise InvalidAttackSpecError("S7 needs match_mean and match_std")
            if self.match_std < 0:
                raise InvalidAttackSpecError("S7 match_std must be >= 0")
            if self.noise_seed is None:
                raise InvalidAttackSpecError("S7 needs a noise_seed")
        if s == S8_REPLAY:
            if self.replay_src is None:
                raise InvalidAttackSpecError("S8 needs replay_src")
            length = self.end - self.start
            src_start, src_end = self.replay_src, self.replay_src + length
            if src_start < 0 or src_end > series_length:
                raise InvalidAttackSpecError(
                    "replay source [%d, %d) outside series of length %d"
                    % (src_start, src_end, series_length)
                )
            if src_start < self.end and self.start < src_end:
                raise InvalidAttackSpecError(
                    "replay source [%d, %d) overlaps attack window [%d, %d)"
                    % (src_start, src_end, self.start, self.end)
                )


def apply_attack(
    series: TimeSeries,
    spec: AttackSpec,
    partner: Optional[TimeSeries] = None,
) -> Union[TimeSeries, Tuple[TimeSeries, TimeSeries]]:
    """Apply one attack to a series; swap scenarios return both modified series.

    Samples outside [start, end) are untouched. The input series are never
    mutated.
    """
    spec.validate_against(len(series))
    window = slice(spec.start, spec.end)
    values = series.values.copy()
    s = spec.scenario

    if s in _SWAP_SCENARIOS:
        if partner is None:
            raise InvalidAttackSpecError("%s needs the partner series" % s)
        if len(partner) < spec.end:
            raise InvalidAttackSpecError(
                "partner series of length %d does not cover the window" % len(partner)
            )
        partner_values = partner.values.copy()
        values[window], partner_values[window] = (
            partner.values[window].copy(),
            series.values[window].copy(),
        )
        return (
            replace(series, values=values),
            replace(partner, values=partner_values),
        )

    if s == S1_REPLACEMENT:
        full = generate(spec.replacement, len(series))
        values[window] = full.values[window]
    elif s == S3_SATURATION:
        values[window] = spec.held_value
    elif s == S4_ANALOG_SPOOF:
        idx = np.arange(spec.start, spec.end, dtype=np.float64)
        values[window] = values[window] + tone_waveform(spec.tones, idx)
    elif s == S6_INJECTION:
        ramp = spec.slope * np.arange(spec.end - spec.start, dtype=np.float64)
        values[window] = values[window] + spec.bias + ramp
    elif s == S7_STEALTHY:
        rng = make_rng(spec.noise_seed)
        values[window] = rng.normal(spec.match_mean, spec.match_std, spec.end - spec.start)
    elif s == S8_REPLAY:
        length = spec.end - spec.start
        values[window] = series.values[spec.replay_src : spec.replay_src + length]
    else:
        raise InvalidAttackSpecError("unhandled scenario %r" % s)
    return replace(series, values=values)


def energy(values, dt: float = 1.0) -> float:
    """Discrete signal energy: sum of squared values times the sample period."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise RejectedInputError("energy of an empty sequence is undefined")
    return float(np.sum(arr * arr) * dt)


def snr(signal_energy: float, noise_energy: float) -> float:
    """Ratio of signal energy to noise energy."""
    if signal_energy < 0 or noise_energy < 0:
        raise RejectedInputError("energies must be non-negative")
    if noise_energy == 0:
        raise UndefinedSnrError("SNR undefined for zero noise energy")
    return signal_energy / noise_energy


def sample_fleet(
    count: int,
    master_seed: int,
    baseline: float = DEFAULT_BASELINE,
    id_prefix: str = "s",
) -> List[SensorProfile]:
    """Draw a fleet of distinct sensor profiles from one master seed.

    Per sensor: noise_std log-uniform in [0.05, 0.5], offset uniform in
    [-0.2, 0.2], and one dominant tone whose frequency is jittered around
    that sensor's own grid point (grid points are distinct by construction)
    with amplitude 3 to 6 times its noise_std, strong enough that the tone
    bin stands clear of the per-chunk noise floor. The per-sensor
    white-noise seed is drawn from the same master stream.
    """
    if count < 1:
        raise RejectedInputError("fleet needs at least 1 sensor")
    rng = make_rng(master_seed)
    lo, hi = TONE_GRID_RANGE
    if count > 1:
        grid = np.linspace(lo, hi, count)
        spacing = (hi - lo) / (count - 1)
    else:
        grid = np.array([(lo + hi) / 2.0])
        spacing = hi - lo
    width = len(str(count))
    profiles = []
    for i in range(count):
        noise_std = float(np.exp(rng.uniform(math.log(NOISE_STD_RANGE[0]),
                                             math.log(NOISE_STD_RANGE[1]))))
        offset = float(rng.uniform(*OFFSET_RANGE))
        freq = float(grid[i] + rng.uniform(-TONE_GRID_JITTER, TONE_GRID_JITTER) * spacing)
        freq = min(max(freq, 0.01), 0.49)
        amp = float(rng.uniform(*TONE_AMP_FACTOR_RANGE)) * noise_std
        phase = float(rng.uniform(0.0, 2.0 * np.pi))
        seed = int(rng.integers(0, 2 ** 62))
        profiles.append(
            SensorProfile(
                sensor_id="%s%0*d" % (id_prefix, width, i + 1),
                baseline=baseline,
                offset=offset,
                noise_std=noise_std,
                tones=((freq, amp, phase),),
                seed=seed,
            )
        )
    return profiles


@dataclass(frozen=True)
class PlantScenario:
    """A fleet plus the attacks to run against it."""

    profiles: Tuple[SensorProfile, ...]
    duration: int
    attacks: Tuple[Tuple[str, AttackSpec], ...] = ()
    master_seed: int = 0

    def __post_init__(self):
        ids = [p.sensor_id for p in self.profiles]
        if len(ids) != len(set(ids)):
            raise RejectedInputError("sensor ids must be unique")
        if self.duration < 1:
            raise RejectedInputError("scenario duration must be >= 1")
        known = set(ids)
        for sensor_id, spec in self.attacks:
            if sensor_id not in known:
                raise InvalidAttackSpecError("attack targets unknown sensor %r" % sensor_id)
            if spec.scenario in _SWAP_SCENARIOS and spec.partner_id not in known:
                raise InvalidAttackSpecError(
                    "swap partner %r is not in the fleet" % spec.partner_id
                )
        object.__setattr__(self, "profiles", tuple(self.profiles))
        object.__setattr__(self, "attacks", tuple(self.attacks))

    def profile(self, sensor_id: str) -> SensorProfile:
        for p in self.profiles:
            if p.sensor_id == sensor_id:
                return p
        raise RejectedInputError("unknown sensor %r" % sensor_id)

    def reference(self, sensor_id: str) -> float:
        """The commanded setpoint a detector would know: baseline + offset."""
        p = self.profile(sensor_id)
        return p.baseline + p.offset

    def realize(self) -> Dict[str, TimeSeries]:
        """Generate the clean fleet, keyed by sensor id, in profile order."""
        return {p.sensor_id: generate(p, self.duration) for p in self.profiles}

    def realize_attacked(self) -> Dict[str, TimeSeries]:
        """Generate the fleet and apply every attack in listed order."""
        fleet = self.realize()
        for sensor_id, spec in self.attacks:
            victim = fleet[sensor_id]
            if spec.scenario in _SWAP_SCENARIOS:
                attacked, partner_attacked = apply_attack(
                    victim, spec, partner=fleet[spec.partner_id]
                )
                fleet[sensor_id] = attacked
                fleet[spec.partner_id] = partner_attacked
                continue
            spec = self._complete_spec(sensor_id, spec)
            fleet[sensor_id] = apply_attack(victim, spec)
        return fleet

    def _complete_spec(self, sensor_id: str, spec: AttackSpec) -> AttackSpec:
        """Fill scenario-derived defaults that need fleet context."""
        victim = self.profile(sensor_id)
        if spec.scenario == S1_REPLACEMENT and spec.replacement is not None:
            # a replacement sensor measures the same process: same baseline
            if spec.replacement.baseline != victim.baseline:
                spec = replace(spec, replacement=replace(spec.replacement,
                                                         baseline=victim.baseline))
        if spec.scenario == S7_STEALTHY:
            updates = {}
            if spec.match_mean is None or spec.match_std is None:
                clean = generate(victim, self.duration).values
                if spec.match_mean is None:
                    updates["match_mean"] = float(clean.mean())
                if spec.match_std is None:
                    updates["match_std"] = float(clean.std())
            if spec.noise_seed is None:
                updates["noise_seed"] = derive_seed(self.master_seed, 7, _stable_tag(sensor_id))
            if updates:
                spec = replace(spec, **updates)
        return spec


def _stable_tag(text: str) -> int:
    """Deterministic small integer tag for a sensor id (not a hash of Python's)."""
    tag = 0
    for ch in text:
        tag = (tag * 131 + ord(ch)) % (2 ** 31)
    return tag
