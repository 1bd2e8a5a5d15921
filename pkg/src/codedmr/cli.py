"""Command-line front end.

Subcommands: plan, load, simulate, sweep, bound, gap, table.
Exit codes: 0 success, 1 infeasible configuration, 2 parse/config error,
3 internal consistency failure (simulation disagrees with the formula).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from . import allocation, analytics, assignment as fa, presets, simulator
from .model import (
    ComputationProfile,
    DomainError,
    FileCountOverflowError,
    FunctionAssignment,
    InternalConsistencyError,
    format_decimal,
    format_rational,
    load_config,
    parse_rational,
    fractions_from_csv,
    validate_profile,
)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_PARSE = 2
EXIT_INTERNAL = 3

LARGE_COUNT_DISPLAY = 10 ** 9


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to a profile/assignment JSON file")
    common.add_argument("--precision", type=int, default=6,
                        help="decimal digits in rendered values (default 6)")
    fmt = common.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="emit JSON output")
    fmt.add_argument("--csv", action="store_true", help="emit CSV output")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for synthetic intermediate values")
    common.add_argument("--out", help="write output to this path instead of stdout")

    parser = argparse.ArgumentParser(
        prog="codedmr",
        description="Plan, evaluate, and simulate coded MapReduce shuffles "
                    "on heterogeneous nodes.")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("plan", parents=[common],
                   help="file allocation plan plus minimal instance sizes")

    p_load = sub.add_parser("load", parents=[common],
                            help="analytic load report for one assignment")
    p_load.add_argument("--strategy", choices=fa.STRATEGIES,
                        help="overrides the strategy in the config")

    p_sim = sub.add_parser("simulate", parents=[common],
                           help="run Map/Shuffle/Reduce and measure the load")
    p_sim.add_argument("--strategy", choices=fa.STRATEGIES)
    p_sim.add_argument("--files", type=int, help="file count N (default minimal)")
    p_sim.add_argument("--functions", type=int, help="function count Q (default minimal)")
    p_sim.add_argument("--iv-bits", type=int, default=32,
                       help="bits per intermediate value (default 32)")
    p_sim.add_argument("--transcript", help="write per-message JSONL records here")

    p_sweep = sub.add_parser("sweep", parents=[common],
                             help="CSV of loads across scaled profiles")
    p_sweep.add_argument("--preset", choices=sorted(presets.SWEEP_COEFFS),
                         help="named coefficient vector")
    p_sweep.add_argument("--coeffs", help='explicit coefficients, e.g. "0.9,1,1.1"')
    p_sweep.add_argument("--step", default="0.01", help="grid step (default 0.01)")
    p_sweep.add_argument("--mbar-min", dest="mbar_min", help="grid start")
    p_sweep.add_argument("--mbar-max", dest="mbar_max", help="grid end")

    p_bound = sub.add_parser("bound", parents=[common],
                             help="cut-set lower bound with maximizing subset")
    p_bound.add_argument("--strategy", choices=fa.STRATEGIES)

    sub.add_parser("gap", parents=[common],
                   help="multiplicative gap to the equivalent homogeneous optimum")

    p_table = sub.add_parser("table", parents=[common],
                             help="benchmark table reproduction")
    p_table.add_argument("--preset", choices=("table1", "table2"), required=True)

    return parser


def _require_config(args) -> tuple[ComputationProfile, FunctionAssignment | None, str | None]:
    if not args.config:
        raise ValueError("this command requires --config")
    return load_config(args.config)


def _resolve_assignment(args, profile, plan, custom, declared):
    strategy = getattr(args, "strategy", None) or declared
    if strategy is None:
        strategy = "custom" if custom is not None else None
    if strategy is None:
        raise ValueError('config must declare "strategy" or "w"')
    return strategy, fa.assignment_for(strategy, profile, plan, custom)


def _both(value: Fraction, precision: int) -> dict:
    return {"exact": format_rational(value),
            "decimal": format_decimal(value, precision)}


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, data: dict) -> None:
    _emit(args, json.dumps(data, indent=2) + "\n")


def _file_count_fields(plan) -> dict:
    fields: dict = {}
    try:
        value = allocation.minimal_file_count(plan)
        fields["minimal_files"] = value
    except FileCountOverflowError as exc:
        value = exc.value
        fields["minimal_files"] = None
        fields["minimal_files_overflow"] = True
    fields["minimal_files_symbolic"] = allocation.format_factored(value)
    fields["minimal_files_estimate"] = format_rational(
        allocation.file_count_estimate(plan))
    return fields


def cmd_plan(args) -> int:
    profile, custom, _ = _require_config(args)
    plan = allocation.build_plan(profile)
    data = {
        "profile": profile.to_json(),
        "plan": plan.to_json(),
        **_file_count_fields(plan),
        "minimal_functions": {},
    }
    data["minimal_functions"]["even"] = fa.minimal_function_count(
        fa.even_assignment(profile.K))
    data["minimal_functions"]["computation"] = fa.minimal_function_count(
        fa.computation_aware(profile))
    try:
        data["minimal_functions"]["shuffle"] = fa.minimal_function_count(
            fa.shuffle_aware(profile, plan))
    except DomainError:
        data["minimal_functions"]["shuffle"] = None
    if custom is not None:
        data["minimal_functions"]["custom"] = fa.minimal_function_count(custom)
    _emit_json(args, data)
    return EXIT_OK


def cmd_load(args) -> int:
    profile, custom, declared = _require_config(args)
    plan = allocation.build_plan(profile, include_subbatches=False)
    strategy, w = _resolve_assignment(args, profile, plan, custom, declared)
    report = analytics.build_load_report(profile, plan, w)
    data = {
        "profile": profile.to_json(),
        "strategy": strategy,
        "w": w.to_json(),
        "report": report.to_json(args.precision),
    }
    _emit_json(args, data)
    return EXIT_OK


def cmd_simulate(args) -> int:
    profile, custom, declared = _require_config(args)
    plan = allocation.build_plan(profile)
    strategy, w = _resolve_assignment(args, profile, plan, custom, declared)
    instance, plan, report = simulator.simulate(
        profile, w, N=args.files, Q=args.functions, T=args.iv_bits,
        seed=args.seed, log_messages=bool(args.transcript))
    analytic = analytics.achievable_load(profile, plan, w).total
    if report.measured_load != analytic:
        raise InternalConsistencyError(
            f"measured load {report.measured_load} != analytic {analytic}")
    if args.transcript:
        with open(args.transcript, "w", encoding="utf-8") as fh:
            for record in report.message_log or []:
                fh.write(json.dumps(record) + "\n")
    data = {
        "profile": profile.to_json(),
        "strategy": strategy,
        "instance": {"N": instance.N, "Q": instance.Q, "T": instance.T,
                     "seed": instance.seed},
        "analytic_load": _both(analytic, args.precision),
        "report": report.to_json(args.precision),
    }
    _emit_json(args, data)
    return EXIT_OK


def _sweep_grid(args, coeffs) -> list[Fraction]:
    step = parse_rational(args.step)
    if step <= 0:
        raise ValueError("--step must be positive")
    total = sum(coeffs, Fraction(0))
    cmax = max(coeffs)
    lo = parse_rational(args.mbar_min) if args.mbar_min else Fraction(1) / total
    hi = parse_rational(args.mbar_max) if args.mbar_max else Fraction(1) / cmax
    first = -((-lo) // step)  # ceil(lo / step)
    points = []
    t = first
    while t * step <= hi:
        points.append(t * step)
        t += 1
    return points


def cmd_sweep(args) -> int:
    if bool(args.preset) == bool(args.coeffs):
        raise ValueError("sweep needs exactly one of --preset or --coeffs")
    coeffs = (presets.SWEEP_COEFFS[args.preset] if args.preset
              else fractions_from_csv(args.coeffs))
    K = len(coeffs)
    precision = args.precision
    rows = []
    for mbar in _sweep_grid(args, coeffs):
        row = {"mbar": format_decimal(mbar, precision), "L_even": "",
               "L_computation": "", "L_shuffle": "", "L_hom_optimal": "",
               "note": ""}
        notes = []
        try:
            profile = validate_profile([mbar * c for c in coeffs])
        except DomainError as exc:
            row["note"] = f"skipped: {exc}"
            rows.append(row)
            continue
        plan = allocation.build_plan(profile, include_subbatches=False)
        load = analytics.achievable_load(
            profile, plan, fa.even_assignment(K)).total
        row["L_even"] = format_decimal(load, precision)
        row["L_computation"] = format_decimal(
            analytics.load_computation_aware(profile, plan), precision)
        if profile.total > 1:
            row["L_shuffle"] = format_decimal(
                analytics.load_shuffle_aware(profile, plan), precision)
        else:
            notes.append("shuffle-aware undefined at total load 1")
        try:
            row["L_hom_optimal"] = format_decimal(
                analytics.homogeneous_optimal(K, mbar), precision)
        except DomainError:
            notes.append("homogeneous optimum undefined at this point")
        row["note"] = "; ".join(notes)
        rows.append(row)

    buf = io.StringIO()
    writer = csv.DictWriter(
        buf, fieldnames=["mbar", "L_even", "L_computation", "L_shuffle",
                         "L_hom_optimal", "note"])
    writer.writeheader()
    writer.writerows(rows)
    _emit(args, buf.getvalue())
    return EXIT_OK


def cmd_bound(args) -> int:
    profile, custom, declared = _require_config(args)
    plan = allocation.build_plan(profile, include_subbatches=False)
    strategy, w = _resolve_assignment(args, profile, plan, custom, declared)
    bound, witness = analytics.lower_bound(profile, w)
    data = {
        "profile": profile.to_json(),
        "strategy": strategy,
        "lower_bound": _both(bound, args.precision),
        "witness": sorted(witness),
    }
    _emit_json(args, data)
    return EXIT_OK


def cmd_gap(args) -> int:
    profile, _, _ = _require_config(args)
    ratio, regime = analytics.gap_to_homogeneous(profile)
    data = {
        "profile": profile.to_json(),
        "mbar": _both(profile.mean, args.precision),
        "regime": regime,
        "gap_to_homogeneous": _both(ratio, args.precision),
        "within_bound": bool(ratio < analytics.HOMOGENEOUS_GAP_BOUND),
    }
    _emit_json(args, data)
    return EXIT_OK


# Published values of other schemes on the same benchmarks, for context only.
REPORTED_TABLE1 = [
    ("cascaded baseline", "0.528", "0.497"),
    ("non-cascaded baseline", "0.357", "0.185"),
    ("this scheme, non-cascaded baseline's assignment", "0.349", "0.208"),
]

REPORTED_TABLE2 = {
    "K=3": [
        ("homogeneous baseline, m=[2/3 x3]", "3", "3"),
        ("3-node optimal-tradeoff baseline", "15", "3"),
    ],
    "K=12 profile-1": [
        ("homogeneous baseline, m=[1/4 x12]", "220", "12"),
        ("cascaded baseline", "54", "54"),
        ("non-cascaded baseline", "54", "42"),
    ],
    "K=12 profile-2": [
        ("homogeneous baseline, m=[1/3 x12]", "495", "12"),
        ("cascaded baseline", "48", "48"),
        ("non-cascaded baseline", "48", "36"),
    ],
}


def _table1_data(precision: int) -> dict:
    columns = {}
    for name, profile in (("m1", presets.profile_k12_m1()),
                          ("m2", presets.profile_k12_m2())):
        plan = allocation.build_plan(profile, include_subbatches=False)
        even = analytics.achievable_load(
            profile, plan, fa.even_assignment(profile.K)).total
        columns[name] = {
            "even": even,
            "computation": analytics.load_computation_aware(profile, plan),
            "shuffle": analytics.load_shuffle_aware(profile, plan),
        }
    rows = []
    for label, key in (("Even FA", "even"),
                       ("Computation-aware FA", "computation"),
                       ("Shuffle-aware FA", "shuffle")):
        rows.append({
            "scheme": label,
            "m1": format_decimal(columns["m1"][key], 3),
            "m2": format_decimal(columns["m2"][key], 3),
            "m1_exact": format_rational(columns["m1"][key]),
            "m2_exact": format_rational(columns["m2"][key]),
            "status": "computed",
        })
    for label, v1, v2 in REPORTED_TABLE1:
        rows.append({"scheme": label, "m1": v1, "m2": v2,
                     "status": "reported, not reproduced"})
    return {"title": "Communication load, K=12 benchmark profiles",
            "rows": rows}


def _format_count(value: int) -> str:
    if value >= LARGE_COUNT_DISPLAY:
        return allocation.format_factored(value)
    return str(value)


def _table2_data() -> dict:
    sections = []
    for section, profile in (("K=3", presets.profile_k3_hetero()),
                             ("K=12 profile-1", presets.profile_k12_m1()),
                             ("K=12 profile-2", presets.profile_k12_m2())):
        plan = allocation.build_plan(profile)
        try:
            min_n = allocation.minimal_file_count(plan)
        except FileCountOverflowError as exc:
            min_n = exc.value
        rows = [
            {"scheme": scheme, "files": files, "functions": functions,
             "status": "reported, not reproduced"}
            for scheme, files, functions in REPORTED_TABLE2[section]
        ]
        rows.append({
            "scheme": "Computation-aware FA",
            "files": _format_count(min_n),
            "functions": str(fa.minimal_function_count(fa.computation_aware(profile))),
            "status": "computed",
        })
        rows.append({
            "scheme": "Shuffle-aware FA",
            "files": _format_count(min_n),
            "functions": str(fa.minimal_function_count(fa.shuffle_aware(profile, plan))),
            "status": "computed",
        })
        sections.append({"section": section, "rows": rows})
    return {"title": "Least numbers of input files and output functions",
            "sections": sections}


def _render_rows(rows: list[dict], columns: list[tuple[str, str]]) -> str:
    widths = {key: max(len(title), *(len(str(row.get(key, ""))) for row in rows))
              for key, title in columns}
    lines = ["  ".join(title.ljust(widths[key]) for key, title in columns)]
    lines.append("  ".join("-" * widths[key] for key, _ in columns))
    for row in rows:
        lines.append("  ".join(
            str(row.get(key, "")).ljust(widths[key]) for key, _ in columns))
    return "\n".join(lines)


def cmd_table(args) -> int:
    if args.preset == "table1":
        data = _table1_data(args.precision)
        if args.json:
            _emit_json(args, data)
        else:
            text = data["title"] + "\n\n" + _render_rows(
                data["rows"],
                [("scheme", "Scheme"), ("m1", "m1"), ("m2", "m2"),
                 ("status", "Status")]) + "\n"
            _emit(args, text)
        return EXIT_OK
    data = _table2_data()
    if args.json:
        _emit_json(args, data)
        return EXIT_OK
    parts = [data["title"]]
    for section in data["sections"]:
        parts.append("\n" + section["section"] + "\n" + _render_rows(
            section["rows"],
            [("scheme", "Scheme"), ("files", "Files N"),
             ("functions", "Functions Q"), ("status", "Status")]))
    _emit(args, "\n".join(parts) + "\n")
    return EXIT_OK


COMMANDS = {
    "plan": cmd_plan,
    "load": cmd_load,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "bound": cmd_bound,
    "gap": cmd_gap,
    "table": cmd_table,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except InternalConsistencyError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
