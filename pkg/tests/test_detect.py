"""Chunk authentication verdicts, noise-floor checks, spoof classifier."""

import io

import numpy as np
import pytest

import fleetlab
from noisefp.detect import (
    ATTACK_LABEL,
    DEFAULT_ENERGY_K,
    NORMAL_LABEL,
    VERDICT_AUTHENTIC,
    VERDICT_ENERGY_ANOMALY,
    VERDICT_HEADER,
    VERDICT_MISMATCH,
    VERDICT_SATURATED,
    AuthDecision,
    NoiseFloorProfile,
    apply_energy_check,
    authenticate,
    authenticate_chunks,
    energy_test,
    fit_noise_floor,
    format_verdict_line,
    spoof_classifier_test,
    spoof_classifier_train,
    write_verdicts,
)
from noisefp.errors import InsufficientDataError, RejectedInputError
from noisefp.evaluation import confusion, metrics
from noisefp.simulate import generate
from noisefp.timeseries import NoiseChunk, chunk, extract_noise

from test_simulate import plain_profile


def noise_chunk(values, sensor_id="a", index=0):
    return NoiseChunk(sensor_id=sensor_id, chunk_index=index,
                      values=np.asarray(values, dtype=float), reference=0.0)


def toneless_chunks(seed, noise_std=0.2, duration=2400, sensor_id="flat"):
    profile = plain_profile(sensor_id, noise_std=noise_std, seed=seed)
    series = generate(profile, duration)
    return chunk(extract_noise(series, reference=profile.baseline), 120)


def test_verdict_vocabulary_pinned():
    assert (VERDICT_AUTHENTIC, VERDICT_MISMATCH, VERDICT_SATURATED,
            VERDICT_ENERGY_ANOMALY) == (
        "authentic", "mismatch", "saturated", "energy_anomaly")
    assert (NORMAL_LABEL, ATTACK_LABEL) == ("normal", "attack")
    assert DEFAULT_ENERGY_K == 3.0


class TestAuthenticate:
    def test_saturated_precedes_classification(self, fleet_model_tuned):
        claimed = fleet_model_tuned.classes[0]
        flat = noise_chunk([4.2] * 120, sensor_id=claimed)
        decision = authenticate(fleet_model_tuned, flat, claimed)
        assert decision.verdict == VERDICT_SATURATED
        assert decision.predicted_id is None
        assert not decision.authentic

    def test_saturated_survives_energy_check(self, fleet_model_tuned):
        claimed = fleet_model_tuned.classes[0]
        flat = noise_chunk([4.2] * 120, sensor_id=claimed)
        floor = NoiseFloorProfile(sensor_id=claimed, mean_chunk_energy=5.0,
                                  energy_std=0.5)
        decisions = authenticate_chunks(fleet_model_tuned, [flat], claimed,
                                        floor=floor)
        assert decisions[0].verdict == VERDICT_SATURATED

    def test_unknown_claim_rejected(self, fleet_model_tuned):
        probe = noise_chunk(np.linspace(-1, 1, 120))
        with pytest.raises(RejectedInputError):
            authenticate(fleet_model_tuned, probe, "nobody")

    def test_true_claims_mostly_authentic(self, fleet_model_tuned,
                                          fleet_chunks):
        _, test_map = fleet_chunks
        total = hits = 0
        for sid in sorted(test_map):
            for decision in authenticate_chunks(fleet_model_tuned,
                                                test_map[sid], sid):
                total += 1
                hits += decision.authentic
        assert hits / total >= 0.95

    def test_false_claims_mostly_mismatch(self, fleet_model_tuned,
                                          fleet_chunks):
        _, test_map = fleet_chunks
        sids = sorted(test_map)
        total = hits = 0
        for i, sid in enumerate(sids):
            impostor_claim = sids[(i + 7) % len(sids)]
            for decision in authenticate_chunks(fleet_model_tuned,
                                                test_map[sid], impostor_claim):
                total += 1
                hits += decision.verdict == VERDICT_MISMATCH
        assert hits / total >= 0.95

    def test_default_model_false_positive_rates(self, fleet_model_defaults,
                                                fleet_chunks, fleet_floors):
        # authenticate every held-out chunk under its true claim with the
        # per-sensor energy floor composed, then check both ways of reading
        # the false-alarm budget: per-sensor one-vs-rest FPR from the pooled
        # attribution confusion, and the overall share of flagged chunks
        _, test_map = fleet_chunks
        pairs = []
        flagged = total = 0
        for sid in sorted(test_map):
            decisions = authenticate_chunks(
                fleet_model_defaults, test_map[sid], sid,
                floor=fleet_floors[sid])
            for decision in decisions:
                total += 1
                flagged += not decision.authentic
                if decision.predicted_id is not None:
                    pairs.append((decision.predicted_id, sid))
        report = metrics(confusion(pairs,
                                   classes=fleet_model_defaults.classes))
        worst_fpr = max(stats.fpr for stats in report.per_class)
        assert worst_fpr <= 0.05
        assert flagged / total <= 0.05


class TestNoiseFloor:
    def test_fit_matches_expected_energy(self):
        floor = fit_noise_floor("flat", toneless_chunks(seed=810))
        # 120 samples of N(0, 0.2^2) noise: expected chunk energy 120 * 0.04
        assert floor.sensor_id == "flat"
        assert abs(floor.mean_chunk_energy - 4.8) <= 0.48
        assert floor.energy_std > 0
        assert floor.k == DEFAULT_ENERGY_K

    def test_needs_five_chunks(self):
        chunks = toneless_chunks(seed=811)[:4]
        with pytest.raises(InsufficientDataError):
            fit_noise_floor("flat", chunks)

    def test_threshold_is_strict_inequality(self):
        floor = NoiseFloorProfile(sensor_id="x", mean_chunk_energy=0.0,
                                  energy_std=1.0, k=3.0)
        assert not energy_test(floor, noise_chunk([1.0, 1.0, 1.0]))
        assert energy_test(floor, noise_chunk([1.0, 1.0, 1.0, 0.5]))

    def test_zero_spread_floor_never_fires_on_exact_energy(self):
        chunks = [noise_chunk([1.0, -1.0, 1.0], index=i) for i in range(5)]
        floor = fit_noise_floor("x", chunks)
        assert floor.energy_std == 0.0
        assert not energy_test(floor, chunks[0])
        assert energy_test(floor, noise_chunk([1.0, -1.0, 1.5]))

    def test_validation(self):
        with pytest.raises(RejectedInputError):
            NoiseFloorProfile(sensor_id="x", mean_chunk_energy=1.0,
                              energy_std=-0.1)
        with pytest.raises(RejectedInputError):
            NoiseFloorProfile(sensor_id="x", mean_chunk_energy=1.0,
                              energy_std=0.1, k=0.0)

    def test_energy_check_demotes_only_authentic(self):
        floor = NoiseFloorProfile(sensor_id="x", mean_chunk_energy=0.0,
                                  energy_std=0.001)
        hot = noise_chunk([5.0, -5.0, 5.0])
        authentic = AuthDecision(chunk_index=0, claimed_id="x",
                                 predicted_id="x",
                                 verdict=VERDICT_AUTHENTIC, energy=75.0)
        mismatch = AuthDecision(chunk_index=0, claimed_id="x",
                                predicted_id="y",
                                verdict=VERDICT_MISMATCH, energy=75.0)
        saturated = AuthDecision(chunk_index=0, claimed_id="x",
                                 predicted_id=None,
                                 verdict=VERDICT_SATURATED, energy=75.0)
        assert apply_energy_check(authentic, floor, hot).verdict == \
            VERDICT_ENERGY_ANOMALY
        assert apply_energy_check(mismatch, floor, hot).verdict == \
            VERDICT_MISMATCH
        assert apply_energy_check(saturated, floor, hot).verdict == \
            VERDICT_SATURATED

    def test_quiet_chunk_keeps_authentic_verdict(self):
        floor = NoiseFloorProfile(sensor_id="x", mean_chunk_energy=3.0,
                                  energy_std=1.0)
        calm = noise_chunk([1.0, 1.0, 1.0])
        decision = AuthDecision(chunk_index=0, claimed_id="x",
                                predicted_id="x",
                                verdict=VERDICT_AUTHENTIC, energy=3.0)
        assert apply_energy_check(decision, floor, calm).verdict == \
            VERDICT_AUTHENTIC


class TestDecisionModel:
    def test_authentic_requires_matching_prediction(self):
        with pytest.raises(RejectedInputError):
            AuthDecision(chunk_index=0, claimed_id="a", predicted_id="b",
                         verdict=VERDICT_AUTHENTIC, energy=1.0)

    def test_unknown_verdict_rejected(self):
        with pytest.raises(RejectedInputError):
            AuthDecision(chunk_index=0, claimed_id="a", predicted_id="a",
                         verdict="fine", energy=1.0)


class TestSpoofClassifier:
    def test_separable_round_trip(self):
        normal = toneless_chunks(seed=812, sensor_id="n")
        spiked_profile = plain_profile("n", noise_std=0.2,
                                       tones=((0.33, 1.5, 0.0),), seed=813)
        series = generate(spiked_profile, 2400)
        attacked = chunk(extract_noise(series,
                                       reference=spiked_profile.baseline), 120)
        model = spoof_classifier_train(normal[:10], attacked[:10],
                                       C=fleetlab.SPOOF_C,
                                       gamma=fleetlab.SPOOF_GAMMA)
        assert sorted(model.classes) == [ATTACK_LABEL, NORMAL_LABEL]
        for probe in normal[10:]:
            assert not spoof_classifier_test(model, probe)
        for probe in attacked[10:]:
            assert spoof_classifier_test(model, probe)

    def test_identical_sets_reclassify_at_chance(self):
        chunks = toneless_chunks(seed=814)
        model = spoof_classifier_train(chunks, chunks)
        hits = sum(not spoof_classifier_test(model, c) for c in chunks)
        hits += sum(spoof_classifier_test(model, c) for c in chunks)
        assert hits / (2 * len(chunks)) == 0.5

    def test_empty_side_rejected(self):
        chunks = toneless_chunks(seed=815)
        with pytest.raises(RejectedInputError):
            spoof_classifier_train([], chunks)
        with pytest.raises(RejectedInputError):
            spoof_classifier_train(chunks, [])


class TestVerdictLog:
    def test_line_fields(self):
        decision = AuthDecision(chunk_index=3, claimed_id="s07",
                                predicted_id="s07",
                                verdict=VERDICT_AUTHENTIC, energy=4.25)
        line = format_verdict_line(decision, "s07")
        assert line == "s07,3,s07,s07,authentic,4.25"

    def test_saturated_line_uses_dash(self):
        decision = AuthDecision(chunk_index=0, claimed_id="s01",
                                predicted_id=None,
                                verdict=VERDICT_SATURATED, energy=0.0)
        assert format_verdict_line(decision, "s01").split(",")[3] == "-"

    def test_write_verdicts_header_and_count(self):
        decision = AuthDecision(chunk_index=0, claimed_id="a",
                                predicted_id="a",
                                verdict=VERDICT_AUTHENTIC, energy=1.0)
        out = io.StringIO()
        count = write_verdicts(out, [("a", decision), ("a", decision)])
        lines = out.getvalue().splitlines()
        assert count == 2
        assert lines[0] == VERDICT_HEADER
        assert len(lines) == 3

    def test_write_verdicts_headerless(self):
        decision = AuthDecision(chunk_index=0, claimed_id="a",
                                predicted_id="a",
                                verdict=VERDICT_AUTHENTIC, energy=1.0)
        out = io.StringIO()
        assert write_verdicts(out, [("a", decision)], header=False) == 1
        assert out.getvalue().splitlines()[0].startswith("a,0,")
