"""Command-line front end wiring the whole pipeline.

Subcommands: simulate, features, train, identify, evaluate, attack,
challenge. Every tunable can come from a TOML run config (--config) or a
flag; flags win. Exit codes: 0 success, 2 invalid input, 3 attack or
authentication failure detected under --fail-on-attack, 4 numeric failure
such as an exhausted training budget.
"""

import argparse
import contextlib
import math
import sys
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import challenge as challenge_mod
from . import detect, evaluation, svm
from .config import RunConfig, load_run_config, load_scenario
from .errors import NoiseFpError, RejectedInputError, TrainingBudgetExceededError
from .features import FEATURE_DUMP_HEADER, extract, extract_matrix, format_feature_row
from .timeseries import (
    SegmentationScheme,
    TimeSeries,
    chunk as chunk_series,
    extract_noise,
    read_readings,
    segment,
    write_readings,
)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="TOML run config")
    parser.add_argument("--chunk-size", type=int, metavar="L")
    parser.add_argument("--scheme", metavar="FRAC", help="training fraction, e.g. 1/3")
    parser.add_argument("--c", dest="c", type=float, metavar="C", help="SVM penalty")
    parser.add_argument("--gamma", type=float, metavar="G", help="RBF kernel width")
    parser.add_argument("--tol", type=float, metavar="T", help="KKT tolerance")
    parser.add_argument("--max-passes", type=int, metavar="N")
    parser.add_argument("--energy-k", type=float, metavar="K")
    parser.add_argument("--saturation-eps", type=float, metavar="E")
    parser.add_argument("--seed", type=int, metavar="S")


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    config = load_run_config(args.config) if args.config else RunConfig()
    return config.override(
        chunk_size=args.chunk_size,
        train_fraction=args.scheme,
        C=args.c,
        gamma=args.gamma,
        tol=args.tol,
        max_passes=getattr(args, "max_passes", None),
        energy_k=getattr(args, "energy_k", None),
        saturation_eps=getattr(args, "saturation_eps", None),
        seed=args.seed,
    )


@contextlib.contextmanager
def _open_out(path: Optional[str]):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="ascii") as handle:
            yield handle


def _read_references(path: str) -> Dict[str, float]:
    """Optional `sensor_id,reference` table for noise extraction."""
    header = "sensor_id,reference"
    with open(path, "r", encoding="ascii") as handle:
        lines = handle.read().splitlines()
    if not lines or lines[0].strip() != header:
        raise RejectedInputError("%s:1: expected header %r" % (path, header))
    references = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise RejectedInputError(
                "%s:%d: expected 2 comma-separated fields" % (path, lineno)
            )
        try:
            references[parts[0]] = float(parts[1])
        except ValueError:
            raise RejectedInputError(
                "%s:%d: reference %r is not a number" % (path, lineno, parts[1])
            )
    return references


def _series_chunks(
    series: TimeSeries,
    chunk_size: int,
    references: Optional[Dict[str, float]] = None,
):
    reference = None
    if references is not None and series.sensor_id in references:
        reference = references[series.sensor_id]
    noise = extract_noise(series, reference=reference)
    return chunk_series(noise, chunk_size)


def cmd_simulate(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    fleet = scenario.realize_attacked() if args.attacked else scenario.realize()
    write_readings(args.out, list(fleet.values()))
    print(
        "wrote %d sensors x %d samples to %s"
        % (len(fleet), scenario.duration, args.out)
    )
    return 0


def cmd_features(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    references = _read_references(args.references) if args.references else None
    series_list = read_readings(args.readings)
    with _open_out(args.out) as out:
        out.write(FEATURE_DUMP_HEADER + "\n")
        for series in series_list:
            for c in _series_chunks(series, config.chunk_size, references):
                out.write(
                    format_feature_row(series.sensor_id, c.chunk_index, extract(c))
                    + "\n"
                )
    return 0


def _training_dataset(
    series_list: Sequence[TimeSeries],
    chunk_size: int,
    scheme: SegmentationScheme,
    references: Optional[Dict[str, float]] = None,
) -> svm.LabeledDataset:
    vectors, labels = [], []
    for series in sorted(series_list, key=lambda s: s.sensor_id):
        chunks = _series_chunks(series, chunk_size, references)
        train_part, _ = segment(chunks, scheme)
        vectors.append(extract_matrix(train_part))
        labels.extend([series.sensor_id] * len(train_part))
    return svm.LabeledDataset(vectors=np.vstack(vectors), labels=tuple(labels))


def cmd_train(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    references = _read_references(args.references) if args.references else None
    series_list = read_readings(args.readings)
    data = _training_dataset(series_list, config.chunk_size, config.scheme, references)
    model = svm.train(
        data,
        c=config.C,
        gamma=config.gamma,
        tol=config.tol,
        max_passes=config.max_passes,
    )
    svm.save_model(model, args.model)
    sv_total = sum(len(b.alphas_signed) for b in model.binaries)
    print(
        "trained %d classes from %d chunks (%d pairwise models, %d support vectors); "
        "model written to %s"
        % (len(model.classes), len(data), len(model.binaries), sv_total, args.model)
    )
    return 0


def _emit_verdicts(
    out_path: Optional[str],
    rows: Sequence[Tuple[str, detect.AuthDecision]],
    summaries: Sequence[str],
) -> None:
    with _open_out(out_path) as out:
        detect.write_verdicts(out, rows)
    if out_path is not None:
        for line in summaries:
            print(line)


def _summarize(rows: Sequence[Tuple[str, detect.AuthDecision]]) -> List[str]:
    counts: Dict[str, Dict[str, int]] = {}
    for sensor_id, decision in rows:
        per = counts.setdefault(sensor_id, {})
        per[decision.verdict] = per.get(decision.verdict, 0) + 1
    lines = []
    for sensor_id in sorted(counts):
        per = counts[sensor_id]
        total = sum(per.values())
        flagged = total - per.get(detect.VERDICT_AUTHENTIC, 0)
        parts = ["%s=%d" % (v, per[v]) for v in sorted(per)]
        lines.append(
            "summary %s: %d chunks, %d flagged (%s)"
            % (sensor_id, total, flagged, ", ".join(parts))
        )
    return lines


def cmd_identify(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    references = _read_references(args.references) if args.references else None
    model = svm.load_model(args.model)
    series_list = read_readings(args.readings)
    rows: List[Tuple[str, detect.AuthDecision]] = []
    for series in series_list:
        claimed = args.claimed or series.sensor_id
        chunks = _series_chunks(series, config.chunk_size, references)
        decisions = detect.authenticate_chunks(
            model, chunks, claimed, saturation_eps=config.saturation_eps
        )
        rows.extend((series.sensor_id, d) for d in decisions)
    _emit_verdicts(args.out, rows, _summarize(rows))
    flagged = sum(1 for _, d in rows if not d.authentic)
    if args.fail_on_attack and flagged:
        return 3
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    chunk_sizes = (
        [int(v) for v in args.chunk_sizes.split(",")]
        if args.chunk_sizes
        else [config.chunk_size]
    )
    schemes = (
        [SegmentationScheme.from_string(v) for v in args.schemes.split(",")]
        if args.schemes
        else [config.scheme]
    )
    series_list = read_readings(args.readings)
    series_by_sensor = {s.sensor_id: s for s in series_list}
    if len(series_by_sensor) != len(series_list):
        raise RejectedInputError("duplicate sensor ids in %s" % args.readings)

    if len(chunk_sizes) == 1 and len(schemes) == 1:
        train_set, test_set = evaluation.train_test_split_features(
            series_by_sensor, chunk_sizes[0], schemes[0]
        )
        report = evaluation.evaluate_split(
            train_set,
            test_set,
            c=config.C,
            gamma=config.gamma,
            tol=config.tol,
            metadata={"chunk_size": chunk_sizes[0], "scheme": str(schemes[0])},
        )
        print(
            "chunk %d, train %s: acc_plain %.4f, acc_eq1 %.4f (%d train / %d test chunks)"
            % (
                chunk_sizes[0],
                schemes[0],
                report.acc_plain,
                report.acc_eq1,
                len(train_set),
                len(test_set),
            )
        )
        for stats in report.per_class:
            print(
                "class %s: TPR %.4f FPR %.4f (tp=%d fp=%d tn=%d fn=%d)"
                % (stats.label, stats.tpr, stats.fpr, stats.tp, stats.fp, stats.tn, stats.fn)
            )
        if args.records:
            with open(args.records, "w", encoding="ascii") as handle:
                handle.write("metric,scope,value\n")
                for metric, scope, value in report.records():
                    handle.write("%s,%s,%s" % (metric, scope, repr(value)) + "\n")
        return 0

    cells = evaluation.sweep(
        series_by_sensor,
        chunk_sizes,
        schemes,
        c=config.C,
        gamma=config.gamma,
        tol=config.tol,
    )
    print(evaluation.format_table(cells))
    if args.records:
        with open(args.records, "w", encoding="ascii") as handle:
            handle.write("metric,scope,value\n")
            for cell in cells:
                scope = "chunk=%d;train=%s" % (cell.chunk_size, cell.scheme)
                handle.write("acc_plain,%s,%s\n" % (scope, repr(cell.acc_plain)))
                handle.write("acc_eq1,%s,%s\n" % (scope, repr(cell.acc_eq1)))
    return 0


def _window_chunk_range(start: int, end: int, chunk_size: int) -> range:
    """Indices of chunks that lie fully inside the sample window [start, end)."""
    first = math.ceil(start / chunk_size)
    last = end // chunk_size
    return range(first, max(first, last))


def cmd_attack(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    scenario = load_scenario(args.scenario)
    model = svm.load_model(args.model)
    references = {p.sensor_id: scenario.reference(p.sensor_id) for p in scenario.profiles}

    floors: Dict[str, detect.NoiseFloorProfile] = {}
    if args.energy_check:
        clean = scenario.realize()
        for sensor_id, series in clean.items():
            chunks = _series_chunks(series, config.chunk_size, references)
            floors[sensor_id] = detect.fit_noise_floor(
                sensor_id, chunks, k=config.energy_k
            )

    attacked = scenario.realize_attacked()
    rows: List[Tuple[str, detect.AuthDecision]] = []
    decisions_by_sensor: Dict[str, List[detect.AuthDecision]] = {}
    for sensor_id, series in attacked.items():
        chunks = _series_chunks(series, config.chunk_size, references)
        decisions = detect.authenticate_chunks(
            model,
            chunks,
            sensor_id,
            floor=floors.get(sensor_id),
            saturation_eps=config.saturation_eps,
        )
        decisions_by_sensor[sensor_id] = decisions
        rows.extend((sensor_id, d) for d in decisions)

    summaries = _summarize(rows)
    for sensor_id, spec in scenario.attacks:
        window = _window_chunk_range(spec.start, spec.end, config.chunk_size)
        affected = [sensor_id]
        if spec.partner_id is not None:
            affected.append(spec.partner_id)
        for target in affected:
            inside = [
                d for d in decisions_by_sensor[target] if d.chunk_index in window
            ]
            flagged = sum(1 for d in inside if not d.authentic)
            summaries.append(
                "attack %s on %s: %d/%d window chunks flagged"
                % (spec.scenario, target, flagged, len(inside))
            )
    _emit_verdicts(args.out, rows, summaries)
    flagged_total = sum(1 for _, d in rows if not d.authentic)
    if args.fail_on_attack and flagged_total:
        return 3
    return 0


def cmd_challenge(args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    scenario = load_scenario(args.scenario)
    if args.sensor:
        profile = scenario.profile(args.sensor)
    else:
        profile = scenario.profiles[0]
    if args.challenge_freq is not None:
        challenger = challenge_mod.ChallengerProfile(
            tones=((args.challenge_freq, args.amplitude_fraction, 0.0),)
        )
    else:
        challenger = challenge_mod.design_challenger(
            profile, fraction=args.amplitude_fraction
        )
    adversary = challenge_mod.AdversaryModel(
        kind=args.adversary,
        learning_delay=(
            args.learning_delay if args.learning_delay is not None else config.chunk_size
        ),
    )
    enrollment = challenge_mod.enroll_joint(
        profile,
        challenger,
        duration=scenario.duration,
        chunk_size=config.chunk_size,
        C=config.C,
        gamma=config.gamma,
        tol=config.tol,
        max_passes=config.max_passes,
    )
    schedule = challenge_mod.draw_schedule(
        scenario.duration,
        seed=config.seed,
        chunk_size=config.chunk_size,
        delta=args.delta,
    )
    reported = challenge_mod.run_protocol(
        profile, challenger, schedule, adversary, scenario.duration
    )
    result = challenge_mod.verify(enrollment.model, reported, schedule)
    print(
        "schedule: t=%d delta=%d chunk_size=%d seed=%d"
        % (schedule.t, schedule.delta, schedule.chunk_size, schedule.seed)
    )
    print(
        "enrollment: sensor %s, reclassification accuracy %.4f%s"
        % (
            profile.sensor_id,
            enrollment.reclassification_accuracy,
            " (LOW QUALITY)" if enrollment.low_quality else "",
        )
    )
    print("adversary: %s" % adversary.kind)
    print("verdict: %s" % ("PASS" if result.passed else "FAIL"))
    for v in result.offending:
        print(
            "offending chunk %d: expected %s, predicted %s"
            % (v.chunk_index, v.expected, v.predicted)
        )
    if args.fail_on_attack and not result.passed:
        return 3
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noisefp",
        description="Sensor-noise fingerprinting: simulate, train, authenticate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a readings file from a scenario")
    p.add_argument("scenario", help="scenario TOML file")
    p.add_argument("--out", required=True, help="readings file to write")
    p.add_argument("--attacked", action="store_true", help="apply scenario attacks")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("features", help="dump per-chunk feature vectors")
    p.add_argument("readings")
    p.add_argument("--out", help="feature CSV (default stdout)")
    p.add_argument("--references", help="sensor_id,reference CSV for noise extraction")
    _add_config_flags(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train and persist a fingerprint model")
    p.add_argument("readings")
    p.add_argument("--model", required=True, help="model file to write")
    p.add_argument("--references", help="sensor_id,reference CSV for noise extraction")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("identify", help="authenticate chunks against a model")
    p.add_argument("readings")
    p.add_argument("--model", required=True)
    p.add_argument("--claimed", help="claimed sensor id (default: each series' own)")
    p.add_argument("--references", help="sensor_id,reference CSV for noise extraction")
    p.add_argument("--out", help="verdict log (default stdout)")
    p.add_argument("--fail-on-attack", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("evaluate", help="accuracy report or chunk/scheme sweep")
    p.add_argument("readings")
    p.add_argument("--chunk-sizes", help="comma-separated, e.g. 60,120,240")
    p.add_argument("--schemes", help="comma-separated, e.g. 1/2,1/3")
    p.add_argument("--records", help="write metric,scope,value records here")
    _add_config_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("attack", help="run scenario attacks against a model")
    p.add_argument("scenario")
    p.add_argument("--model", required=True)
    p.add_argument("--out", help="verdict log (default stdout)")
    p.add_argument("--energy-check", action="store_true", help="add the noise-floor test")
    p.add_argument("--fail-on-attack", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("challenge", help="run the challenge-response protocol")
    p.add_argument("scenario")
    p.add_argument("--sensor", help="sensor id (default: first in scenario)")
    p.add_argument(
        "--adversary",
        choices=challenge_mod.ADVERSARY_KINDS,
        default=challenge_mod.ADVERSARY_NONE,
    )
    p.add_argument("--delta", type=int, help="challenge window length in samples")
    p.add_argument("--learning-delay", type=int, help="adaptive adversary delay")
    p.add_argument(
        "--challenge-freq",
        type=float,
        help="challenge tone frequency (default: picked clear of the sensor's tones)",
    )
    p.add_argument(
        "--amplitude-fraction",
        type=float,
        default=challenge_mod.MAX_AMPLITUDE_FRACTION,
        help="challenge amplitude as a fraction of baseline",
    )
    p.add_argument("--fail-on-attack", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=cmd_challenge)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TrainingBudgetExceededError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 4
    except NoiseFpError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
