"""gpk: command line front end.

Subcommands cover the library end to end: privatizing feature CSVs, utility
sweeps, retained-coefficient search, correlation profiles, identity-leakage
evaluation, a two-party kernel protocol demo, and the raw-sample feature
pipeline. Exit codes: 0 success, 2 configuration errors, 3 input-data errors.
Output files are written atomically (temp file + rename). When no seed is
given one is drawn and printed, so every run can be reproduced.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import secrets
import sys
import tempfile
from typing import Sequence

import numpy as np

from ._rng import derive_seed, derived_rng
from .datasets import (
    Dataset,
    gen_ar1_dataset,
    gen_regression_set,
    parse_feature_csv,
    parse_samples_csv,
    write_feature_csv,
)
from .errors import (
    DegenerateDenominatorError,
    DuplicateRowError,
    RowParseError,
    SchemaError,
    UndefinedCorrelationError,
)
from .evaluation import (
    clamp_budget,
    evaluate_mechanism,
    correlation_profile,
    optimal_k_table,
    reports_to_csv,
    reports_to_json,
)
from .leakage import (
    leakage_report_to_csv,
    leakage_report_to_json,
    loocv_person,
    person_id_eval,
    windows_from_dataset,
)
from .mechanisms import (
    MECHANISMS,
    PrivacyBudget,
    budget_with,
    composed_epsilon,
    compute_sensitivity_table,
    privatize,
)
from .pipeline import (
    Collider,
    detect_events,
    divisive_baseline,
    gaze_hits,
    interpolate_gaps,
    ooi_attention,
    pupil_series,
    sg_smooth,
    window_features,
)
from .reprotocol import (
    PartyData,
    ProtocolConfig,
    communication_cost_bytes,
    plaintext_reference,
    run_protocol,
)

EPSILON_GRID = (0.48, 2.4, 4.8, 24.0, 48.0)

_DATA_ERRORS = (SchemaError, RowParseError, DuplicateRowError)


class _ConfigError(Exception):
    pass


class _DataError(Exception):
    pass


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".gpk-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        _atomic_write(path, text)
        print(f"wrote {path}")


def _resolve_seed(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else secrets.randbits(32)
    print(f"seed: {seed}")
    return seed


def _read_file(path: str) -> str:
    try:
        with open(path, "r") as handle:
            return handle.read()
    except OSError as exc:
        raise _DataError(f"cannot read {path}: {exc}") from exc


def _add_seed(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help="base seed (drawn and printed when omitted)")


def _add_dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="feature CSV (omit to synthesize AR(1) signals)")
    p.add_argument("--participants", type=int, default=10)
    p.add_argument("--features", default="3",
                   help="feature count or comma-separated names for synthesis")
    p.add_argument("--length", type=int, default=512)
    p.add_argument("--rho", type=float, default=0.9)
    p.add_argument("--offset-scale", type=float, default=10.0,
                   help="per-participant level offset scale for synthesis")
    p.add_argument("--level", type=float, default=0.0,
                   help="shared baseline added to every synthesized signal")


def _load_dataset(args: argparse.Namespace, seed: int) -> Dataset:
    if args.input is not None:
        try:
            return parse_feature_csv(_read_file(args.input))
        except _DATA_ERRORS as exc:
            raise _DataError(str(exc)) from exc
        except ValueError as exc:
            raise _DataError(str(exc)) from exc
    features: int | list[str]
    if "," in args.features or not args.features.isdigit():
        features = [f for f in args.features.split(",") if f]
    else:
        features = int(args.features)
    if not abs(args.rho) < 1:
        raise _ConfigError("--rho must satisfy |rho| < 1")
    if args.participants < 1 or args.length < 1:
        raise _ConfigError("--participants and --length must be >= 1")
    return gen_ar1_dataset(
        args.participants, features, args.length, args.rho,
        participant_offset_scale=args.offset_scale, seed=seed, level=args.level,
    )


def _parse_epsilons(args: argparse.Namespace) -> list[float]:
    if getattr(args, "epsilon", None) is not None:
        grid = [args.epsilon]
    elif getattr(args, "epsilon_grid", None):
        try:
            grid = [float(e) for e in args.epsilon_grid.split(",") if e]
        except ValueError as exc:
            raise _ConfigError(f"bad --epsilon-grid: {exc}") from exc
    else:
        grid = list(EPSILON_GRID)
    if not grid or any(e <= 0 for e in grid):
        raise _ConfigError("epsilons must be positive")
    return grid


def _build_budget(args: argparse.Namespace, epsilon: float) -> PrivacyBudget:
    mechanism = args.mechanism
    chunk_size = getattr(args, "chunk_size", None)
    if mechanism in ("cfpa", "dcfpa") and chunk_size is None:
        raise _ConfigError(f"{mechanism} needs --chunk-size")
    if mechanism in ("lpa", "fpa"):
        chunk_size = None
    try:
        return PrivacyBudget(
            epsilon=epsilon,
            k=getattr(args, "k", None),
            chunk_size=chunk_size,
            accounting=getattr(args, "accounting", "single-release"),
        )
    except ValueError as exc:
        raise _ConfigError(str(exc)) from exc


def _sensitivity_table(dataset: Dataset, mechanism: str, budget: PrivacyBudget,
                       exclude_zero_min: bool):
    if mechanism in ("lpa", "fpa"):
        return compute_sensitivity_table(dataset, None, "raw", exclude_zero_min)
    representation = "difference" if mechanism == "dcfpa" else "raw"
    return compute_sensitivity_table(dataset, budget.chunk_size, representation,
                                     exclude_zero_min)


def _privatize_dataset(dataset: Dataset, args: argparse.Namespace, epsilon: float,
                       seed: int) -> tuple[Dataset, PrivacyBudget, dict]:
    mechanism = args.mechanism
    budget = _build_budget(args, epsilon)
    table = _sensitivity_table(dataset, mechanism, budget,
                               getattr(args, "exclude_zero_min", False))
    chosen: dict[tuple[str, str], int | dict[int, int]] = {}
    if mechanism != "lpa" and budget.k is None:
        chosen = optimal_k_table(
            dataset, mechanism, budget,
            trials=getattr(args, "optimal_k_trials", 25),
            base_seed=seed, sensitivities=table,
        )
    out = Dataset()
    chunk = budget.chunk_size if mechanism in ("cfpa", "dcfpa") else None
    for signal in dataset:
        key = (signal.feature, signal.recording_type)
        if (signal.feature, signal.recording_type, 0) not in table.entries:
            continue
        per_group = budget_with(budget, k=chosen[key]) if key in chosen else budget
        per_signal = clamp_budget(per_group, len(signal), chunk)
        rng = derived_rng(seed, "privatize", signal.feature, signal.recording_type,
                          signal.participant)
        out.add(privatize(signal, mechanism, table, per_signal, rng))
    return out, budget, {f"{f}/{r}": k for (f, r), k in chosen.items()}


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_privatize(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args)
    dataset = _load_dataset(args, seed)
    epsilons = _parse_epsilons(args)
    if len(epsilons) != 1:
        raise _ConfigError("privatize takes exactly one --epsilon")
    released, budget, chosen = _privatize_dataset(dataset, args, epsilons[0], seed)
    lengths = [len(s) for s in released]
    if not lengths:
        raise _DataError("no signals survived sensitivity computation")
    joint = max(
        composed_epsilon(args.mechanism, budget, n) for n in lengths
    )
    print(f"mechanism: {args.mechanism}  epsilon: {epsilons[0]}  "
          f"composed epsilon: {joint}")
    if chosen:
        print(f"chosen k: {json.dumps(chosen, sort_keys=True)}")
    _emit(write_feature_csv(released), args.output)
    return 0


def _cmd_utility(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args)
    dataset = _load_dataset(args, seed)
    epsilons = _parse_epsilons(args)
    reports = []
    for epsilon in epsilons:
        budget = _build_budget(args, epsilon)
        try:
            reports.extend(
                evaluate_mechanism(
                    dataset, args.mechanism, budget,
                    trials=args.trials, base_seed=seed,
                    optimal_k_trials=args.optimal_k_trials,
                    exclude_zero_min_features=args.exclude_zero_min,
                    threads=args.threads,
                )
            )
        except ValueError as exc:
            raise _ConfigError(str(exc)) from exc
    fmt = args.format or ("csv" if (args.output or "").endswith(".csv") else "json")
    text = reports_to_csv(reports) if fmt == "csv" else reports_to_json(reports)
    _emit(text, args.output)
    return 0


def _cmd_optimal_k(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args)
    dataset = _load_dataset(args, seed)
    epsilons = _parse_epsilons(args)
    if len(epsilons) != 1:
        raise _ConfigError("optimal-k takes exactly one --epsilon")
    budget = _build_budget(args, epsilons[0])
    try:
        table = optimal_k_table(dataset, args.mechanism, budget,
                                trials=args.trials, base_seed=seed,
                                exclude_zero_min_features=args.exclude_zero_min)
    except ValueError as exc:
        raise _ConfigError(str(exc)) from exc
    records = [
        {
            "feature": feature,
            "recording_type": rectype,
            "k": {str(ci): v for ci, v in k.items()} if isinstance(k, dict) else k,
        }
        for (feature, rectype), k in sorted(table.items())
    ]
    payload = {
        "mechanism": args.mechanism,
        "epsilon": epsilons[0],
        "chunk_size": budget.chunk_size,
        "trials": args.trials,
        "seed": seed,
        "groups": records,
    }
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.output)
    return 0


def _cmd_correlate(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args)
    dataset = _load_dataset(args, seed)
    rectype = args.recording_type
    if rectype is None:
        rectypes = dataset.recording_types()
        if len(rectypes) != 1:
            raise _ConfigError(
                f"--recording-type required; dataset has {list(rectypes)}"
            )
        rectype = rectypes[0]
    try:
        profile = correlation_profile(
            dataset, args.feature, rectype,
            ref_index=args.ref_index, max_lag=args.max_lag,
            transform=args.transform,
        )
    except UndefinedCorrelationError as exc:
        raise _DataError(str(exc)) from exc
    except ValueError as exc:
        raise _ConfigError(str(exc)) from exc
    payload = {
        "feature": profile.feature,
        "recording_type": profile.recording_type,
        "transform": profile.transform,
        "ref_index": profile.ref_index,
        "lags": profile.lags.tolist(),
        "values": [None if math.isnan(v) else v for v in profile.values],
        "sample_counts": profile.sample_counts.tolist(),
        "undefined_lags": list(profile.undefined_lags),
        "excluded": {str(lag): list(p) for lag, p in profile.excluded.items()},
    }
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.output)
    return 0


def _cmd_leak_eval(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args)
    dataset = _load_dataset(args, seed)
    if args.mechanism is not None:
        if args.epsilon is None:
            raise _ConfigError("--mechanism needs --epsilon")
        dataset, _, _ = _privatize_dataset(dataset, args, args.epsilon, seed)
    try:
        if args.task == "person-id":
            report = person_id_eval(dataset, window=args.window, k=args.neighbors,
                                    majority=not args.no_majority, base_seed=seed)
        else:
            windows = windows_from_dataset(dataset, args.window, label=args.label)
            report = loocv_person(windows, k=args.neighbors, base_seed=seed,
                                  label_kind=args.label)
    except ValueError as exc:
        raise _DataError(str(exc)) from exc
    fmt = args.format or ("csv" if (args.output or "").endswith(".csv") else "json")
    text = (leakage_report_to_csv(report) if fmt == "csv"
            else leakage_report_to_json(report))
    _emit(text, args.output)
    return 0


def _cmd_re_demo(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args)
    if args.n_features < 1 or args.n_alice < 2 or args.n_bob < 2:
        raise _ConfigError("need --n-features >= 1 and at least 2 samples per party")
    gamma = args.gamma
    if args.kernel == "rbf" and gamma is None:
        gamma = 1.0 / (2.0 * args.n_features)
    quantum = 2.0 ** -10 if args.exact else None
    mask_bound = 128.0 if args.exact else args.mask_bound
    try:
        config = ProtocolConfig(
            kernel=args.kernel, gamma=gamma, ridge=args.ridge,
            mask_bound=mask_bound, quantum=quantum,
            test_fraction=args.test_fraction,
        )
    except ValueError as exc:
        raise _ConfigError(str(exc)) from exc
    alice_set = gen_regression_set(args.n_alice, args.n_features, args.noise,
                                   seed=derive_seed(seed, "alice"), mixing_seed=seed)
    bob_set = gen_regression_set(args.n_bob, args.n_features, args.noise,
                                 seed=derive_seed(seed, "bob"), mixing_seed=seed)
    alice = PartyData(alice_set.features, alice_set.targets)
    bob = PartyData(bob_set.features, bob_set.targets)
    result = run_protocol(alice, bob, config, base_seed=seed)
    plain = plaintext_reference(alice, bob, config, base_seed=seed)
    deviation = float(np.max(np.abs(result.kernel - plain.kernel)))
    identical = bool(np.array_equal(result.predictions, plain.predictions))
    formula = communication_cost_bytes(args.n_features, args.n_alice, args.n_bob)
    print(f"kernel: {args.kernel}  gamma: {gamma}  ridge: {args.ridge}  "
          f"exact: {args.exact}")
    print(f"mean angular error: {math.degrees(result.mean_angular_error):.4f} deg "
          f"(plaintext {math.degrees(plain.mean_angular_error):.4f} deg)")
    print(f"max kernel deviation from plaintext: {deviation:.3e}")
    print(f"predictions bit-identical to plaintext: {identical}")
    print(f"dot-product bytes: {result.transcript.dot_product_payload_bytes} "
          f"(closed form {formula})")
    print(f"total transcript bytes: {result.transcript.total_payload_bytes}")
    if args.transcript:
        _atomic_write(args.transcript, result.transcript.to_jsonl())
        print(f"wrote {args.transcript}")
    if args.output:
        lines = ["index,pred_pitch,pred_yaw,true_pitch,true_yaw"]
        for i, (pred, true) in enumerate(zip(result.predictions, result.test_targets)):
            cells = ",".join(repr(float(v)) for v in (pred[0], pred[1], true[0], true[1]))
            lines.append(f"{i},{cells}")
        _atomic_write(args.output, "\n".join(lines) + "\n")
        print(f"wrote {args.output}")
    return 0


def _load_colliders(path: str) -> list[Collider]:
    try:
        records = json.loads(_read_file(path))
        return [
            Collider(r["object_id"], np.asarray(r["center"], dtype=np.float64),
                     np.asarray(r["half_extents"], dtype=np.float64))
            for r in records
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise _DataError(f"bad collider file {path}: {exc}") from exc


def _cmd_pipeline(args: argparse.Namespace) -> int:
    if args.smooth_window and (args.smooth_window % 2 == 0 or args.smooth_window < 1):
        raise _ConfigError("--smooth-window must be odd and positive")
    try:
        streams = parse_samples_csv(_read_file(args.input))
    except _DATA_ERRORS as exc:
        raise _DataError(str(exc)) from exc
    except ValueError as exc:
        raise _DataError(str(exc)) from exc
    colliders = _load_colliders(args.colliders) if args.colliders else None
    dataset = Dataset()
    attention: dict[str, dict] = {}
    for (participant, recording) in sorted(streams):
        samples = streams[(participant, recording)]
        try:
            samples = interpolate_gaps(samples)
            events = detect_events(samples)
            times, pupil = pupil_series(samples)
            if args.smooth_window:
                pupil = sg_smooth(pupil, args.smooth_window, args.smooth_order)
            if args.baseline_duration is not None:
                sample_step = float(np.median(np.diff(times))) if len(times) > 1 else args.step
                pupil = divisive_baseline(pupil, args.baseline_duration,
                                          sample_step, args.baseline_stat)
            produced = window_features(events, times, pupil,
                                       window=args.window, step=args.step,
                                       participant=participant,
                                       recording_type=recording)
        except DegenerateDenominatorError as exc:
            raise _DataError(f"({participant}, {recording}): {exc}") from exc
        except ValueError as exc:
            raise _DataError(f"({participant}, {recording}): {exc}") from exc
        for signal in produced.signals.values():
            dataset.add(signal)
        if colliders is not None:
            records = ooi_attention(gaze_hits(samples, colliders),
                                    threshold=args.dwell_threshold)
            attention[f"{participant}/{recording}"] = {
                obj: {"total_dwell": rec.total_dwell, "visits": rec.visits}
                for obj, rec in records.items()
            }
        n_events = len(events)
        print(f"{participant}/{recording}: {len(samples)} samples, "
              f"{n_events} events")
    _emit(write_feature_csv(dataset), args.output)
    if args.attention_output:
        _atomic_write(args.attention_output,
                      json.dumps(attention, indent=2, sort_keys=True) + "\n")
        print(f"wrote {args.attention_output}")
    elif attention:
        print("note: --colliders given without --attention-output, dwell stats dropped")
    return 0


# ---------------------------------------------------------------------------
# Parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpk",
        description="Privacy toolkit for eye-movement feature signals.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("privatize", help="privatize a feature CSV")
    _add_dataset_args(p)
    p.add_argument("--mechanism", required=True, choices=MECHANISMS)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--k", type=int, default=None,
                   help="retained coefficients (omit for exhaustive search)")
    p.add_argument("--chunk-size", type=int, default=None)
    p.add_argument("--accounting", choices=("single-release", "sequential"),
                   default="single-release")
    p.add_argument("--optimal-k-trials", type=int, default=25)
    p.add_argument("--exclude-zero-min", action="store_true",
                   help="drop features whose minimum is 0 for every participant")
    p.add_argument("--output", default=None, help="output CSV (stdout when omitted)")
    _add_seed(p)
    p.set_defaults(func=_cmd_privatize)

    p = sub.add_parser("utility", help="utility sweep over an epsilon grid")
    _add_dataset_args(p)
    p.add_argument("--mechanism", required=True, choices=MECHANISMS)
    p.add_argument("--epsilon", type=float, default=None,
                   help="single epsilon (overrides --epsilon-grid)")
    p.add_argument("--epsilon-grid", default=None,
                   help=f"comma-separated grid (default {','.join(map(str, EPSILON_GRID))})")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--chunk-size", type=int, default=None)
    p.add_argument("--accounting", choices=("single-release", "sequential"),
                   default="single-release")
    p.add_argument("--optimal-k-trials", type=int, default=25)
    p.add_argument("--exclude-zero-min", action="store_true")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: GPK_THREADS or 1)")
    p.add_argument("--format", choices=("json", "csv"), default=None)
    p.add_argument("--output", default=None)
    _add_seed(p)
    p.set_defaults(func=_cmd_utility)

    p = sub.add_parser("optimal-k", help="retained-coefficient search per group")
    _add_dataset_args(p)
    p.add_argument("--mechanism", choices=("fpa", "cfpa", "dcfpa"), default="fpa")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--chunk-size", type=int, default=None)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--exclude-zero-min", action="store_true")
    p.add_argument("--output", default=None)
    _add_seed(p)
    p.set_defaults(func=_cmd_optimal_k)

    p = sub.add_parser("correlate", help="cross-participant correlation profile")
    _add_dataset_args(p)
    p.add_argument("--feature", required=True)
    p.add_argument("--recording-type", default=None)
    p.add_argument("--ref-index", type=int, default=5)
    p.add_argument("--max-lag", type=int, default=10)
    p.add_argument("--transform", choices=("raw", "difference"), default="raw")
    p.add_argument("--output", default=None)
    _add_seed(p)
    p.set_defaults(func=_cmd_correlate)

    p = sub.add_parser("leak-eval", help="identity / label leakage via k-NN")
    _add_dataset_args(p)
    p.add_argument("--task", choices=("person-id", "label"), default="person-id")
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--neighbors", type=int, default=11, help="k for the k-NN vote")
    p.add_argument("--no-majority", action="store_true",
                   help="skip per-recording majority voting (person-id only)")
    p.add_argument("--label", choices=("participant", "recording_type"),
                   default="recording_type", help="target label for --task label")
    p.add_argument("--mechanism", choices=MECHANISMS, default=None,
                   help="privatize before evaluating")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--k", type=int, default=None,
                   help="retained coefficients for the mechanism")
    p.add_argument("--chunk-size", type=int, default=None)
    p.add_argument("--accounting", choices=("single-release", "sequential"),
                   default="single-release")
    p.add_argument("--optimal-k-trials", type=int, default=25)
    p.add_argument("--exclude-zero-min", action="store_true")
    p.add_argument("--format", choices=("json", "csv"), default=None)
    p.add_argument("--output", default=None)
    _add_seed(p)
    p.set_defaults(func=_cmd_leak_eval)

    p = sub.add_parser("re-demo", help="two-party kernel protocol on synthetic data")
    p.add_argument("--n-alice", type=int, default=200)
    p.add_argument("--n-bob", type=int, default=200)
    p.add_argument("--n-features", type=int, default=36)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--kernel", choices=("linear", "rbf"), default="rbf")
    p.add_argument("--gamma", type=float, default=None,
                   help="rbf width (default 1 / (2 n_features))")
    p.add_argument("--ridge", type=float, default=1e-6)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--mask-bound", type=float, default=1e3)
    p.add_argument("--exact", action="store_true",
                   help="quantize to a dyadic lattice for bit-exact decoding")
    p.add_argument("--transcript", default=None, help="write transcript JSONL here")
    p.add_argument("--output", default=None, help="write test predictions CSV here")
    _add_seed(p)
    p.set_defaults(func=_cmd_re_demo)

    p = sub.add_parser("pipeline", help="raw samples CSV to windowed feature CSV")
    p.add_argument("--input", required=True, help="raw gaze samples CSV")
    p.add_argument("--output", default=None, help="feature CSV (stdout when omitted)")
    p.add_argument("--window", type=float, default=30.0)
    p.add_argument("--step", type=float, default=0.5)
    p.add_argument("--smooth-window", type=int, default=0,
                   help="odd pupil smoothing window (0 disables)")
    p.add_argument("--smooth-order", type=int, default=2)
    p.add_argument("--baseline-duration", type=float, default=None,
                   help="divide pupil by the statistic of this many leading seconds")
    p.add_argument("--baseline-stat", choices=("median", "mean"), default="median")
    p.add_argument("--colliders", default=None,
                   help="JSON list of {object_id, center, half_extents} boxes")
    p.add_argument("--dwell-threshold", type=float, default=0.200)
    p.add_argument("--attention-output", default=None)
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except _ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
