"""Command-line front end: ``solve``, ``info``, ``axioms`` and ``bench``.

Reports are JSON by default (sorted keys, exact rationals as strings); CSV
and text are projections of the same report. Exit status is 0 on success,
2 when the input cannot be read or parsed, 3 when a solver resource cap is hit.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import asdict
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import axioms as ax
from .core import (
    Instance,
    InstanceError,
    ResourceLimitError,
    cost_gcd,
    hcbp_check,
    max_vote_size,
    maxmin_value,
    minimax_disutility_value,
    scalable_limit,
)
from .exact import brute_force, bnb_solve, dp_solve
from .ingest import DatasetMeta, GeneratorParams, ParseError, generate, load
from .relax import (
    MAXMIN,
    MINIMAX,
    additive_bound_certificate,
    compute_lo_ho,
    minimax_bound_check,
    ordered_relax,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_CAP = 3

EXACT_METHODS = ("brute", "dp", "bnb")
TIMING_KEYS = frozenset({"wall_time_s", "exact_time_s", "relax_time_s", "total_time_s"})


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (frozenset, set)):
        return sorted(_jsonable(v) for v in obj)
    return obj


def strip_timing(obj):
    """Copy of a report with every timing field removed."""
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k not in TIMING_KEYS}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def dump_json(report: dict) -> str:
    return json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"


# -- shared helpers -----------------------------------------------------------------


def _read_instance(args) -> tuple[Instance, DatasetMeta]:
    inst = load(args.input, args.format, args.decimals)
    if getattr(args, "budget", None) is not None:
        inst = inst.with_budget(args.budget)
    return inst, DatasetMeta.of(inst, Path(args.input).stem, Path(args.input).name)


def _ordered(inst: Instance, ids) -> list[str]:
    ids = set(ids)
    return [pid for pid in inst.ids if pid in ids]


def _exact(inst: Instance, method: str, want_all: bool, args):
    if method == "brute":
        return brute_force(inst, want_all, cap=args.brute_cap, enum_cap=args.enum_cap)
    if method == "dp":
        if want_all:
            raise ValueError("--all-optimal needs --method brute or bnb")
        return dp_solve(inst, max_states=args.dp_states)
    return bnb_solve(inst, want_all, max_nodes=args.bnb_nodes, enum_cap=args.enum_cap)


def _exact_entry(inst: Instance, method: str, objective: str, want_all: bool, args) -> dict:
    start = time.perf_counter()
    if objective == MINIMAX and method == "brute":
        res = brute_force(inst, want_all, objective=MINIMAX, cap=args.brute_cap, enum_cap=args.enum_cap)
        value = res.value
    else:
        res = _exact(inst, method, want_all, args)
        # the two objectives share their optimal sets; only the value is re-expressed
        value = res.value if objective == MAXMIN else inst.budget - res.value
    entry = {
        "method": method,
        "objective": objective,
        "value": value,
        "witness": _ordered(inst, res.witness.selected),
        "cost": res.witness.total_cost,
        "zero_optimum": res.zero_optimum,
        "wall_time_s": round(time.perf_counter() - start, 6),
    }
    if want_all:
        entry["winners"] = _ordered(inst, res.winners)
        entry["truncated"] = res.truncated
        entry["all_optimal"] = None if res.all_optimal is None else [_ordered(inst, o.selected) for o in res.all_optimal]
    return entry


def _relax_entry(inst: Instance, objective: str) -> tuple[dict, object]:
    start = time.perf_counter()
    outcome, sol = ordered_relax(inst, objective)
    value = maxmin_value(inst, outcome) if objective == MAXMIN else minimax_disutility_value(inst, outcome)
    entry = {
        "method": "ordered-relax",
        "objective": objective,
        "value": value,
        "witness": _ordered(inst, outcome.selected),
        "cost": outcome.total_cost,
        "lp_q_star": sol.q_star,
        "lp_x_star": {pid: sol.x_star[pid] for pid in inst.ids},
        "wall_time_s": round(time.perf_counter() - start, 6),
    }
    return entry, outcome


def _certificate_dict(cert) -> dict:
    return {
        "alg_value": cert.alg_value,
        "opt_value": cert.opt_value,
        "worst_voter": cert.worst_voter,
        "eta": cert.eta,
        "bound_rhs": cert.bound_rhs,
        "holds": cert.holds,
        "eta_undefined": cert.eta_undefined,
    }


# -- commands -----------------------------------------------------------------------


def cmd_solve(args) -> dict:
    inst, meta = _read_instance(args)
    report = {"command": "solve", "dataset": asdict(meta), "results": [], "certificates": {}}
    if args.method == "ordered-relax":
        entry, outcome = _relax_entry(inst, args.objective)
        report["results"].append(entry)
        if args.certify:
            exact = _exact_entry(inst, args.certify_method, MAXMIN, False, args)
            report["results"].append(exact)
            if args.objective == MAXMIN:
                cert = additive_bound_certificate(inst, outcome, exact["value"])
                report["certificates"]["additive_bound"] = _certificate_dict(cert)
            else:
                rep = minimax_bound_check(inst, exact["value"])
                report["certificates"]["minimax_bound"] = {
                    "applicable": rep.applicable,
                    "alg_disutility": rep.alg_disutility,
                    "opt_disutility": rep.opt_disutility,
                    "h_o": rep.h_o,
                    "bound": rep.bound,
                    "holds": rep.holds,
                }
    else:
        report["results"].append(_exact_entry(inst, args.method, args.objective, args.all_optimal, args))
    return report


def cmd_info(args) -> dict:
    inst, meta = _read_instance(args)
    l_o, h_o = compute_lo_ho(inst)
    return {
        "command": "info",
        "dataset": asdict(meta),
        "analysis": {
            "l_o": l_o,
            "h_o": h_o,
            "h_A": max_vote_size(inst),
            "hcbp": hcbp_check(inst),
            "scalable_limit": scalable_limit(inst),
            "gcd": cost_gcd(inst),
        },
    }


def cmd_axioms(args) -> dict:
    inst, meta = _read_instance(args)
    reports = ax.audit(inst, args.rule, args.axiom or None)
    return {
        "command": "axioms",
        "dataset": asdict(meta),
        "rule": args.rule,
        "reports": [r.to_dict() for r in reports],
    }


def _bench_row(name: str, inst: Instance, args) -> dict:
    row = {"name": name, "m": inst.m, "n": inst.n, "budget": inst.budget}
    start = time.perf_counter()
    exact = _exact(inst, args.method, False, args)
    row["exact_time_s"] = round(time.perf_counter() - start, 6)
    start = time.perf_counter()
    outcome, _ = ordered_relax(inst)
    row["relax_time_s"] = round(time.perf_counter() - start, 6)
    relax_value = maxmin_value(inst, outcome)
    cert = additive_bound_certificate(inst, outcome, exact.value)
    row.update(
        exact_value=exact.value,
        relax_value=relax_value,
        match=relax_value == exact.value,
        certificate_holds=cert.holds,
        eta=cert.eta,
        relax_witness=_ordered(inst, outcome.selected),
        exact_witness=_ordered(inst, exact.witness.selected),
    )
    return row


def _bench_inputs(args):
    if args.dir is not None:
        root = Path(args.dir)
        if not root.is_dir():
            raise FileNotFoundError(f"not a directory: {root}")
        for path in sorted(p for p in root.iterdir() if p.suffix.lower() in (".json", ".pb")):
            yield path.name, lambda path=path: load(path, None, args.decimals)
    else:
        for k in range(args.synthetic):
            params = GeneratorParams(
                m=args.m, n=args.n, n_distinct=min(args.n_distinct, args.n),
                cost_range=(1, args.max_cost), budget_fraction=args.budget_fraction,
                seed=args.seed + k, hcbp=args.hcbp,
            )
            yield f"synthetic-{args.seed + k}", lambda params=params: generate(params)


def cmd_bench(args) -> dict:
    rows = []
    total_start = time.perf_counter()
    for name, make in _bench_inputs(args):
        try:
            rows.append(_bench_row(name, make(), args))
        except (ParseError, InstanceError, ResourceLimitError, OSError, ValueError) as exc:
            rows.append({"name": name, "error": f"{type(exc).__name__}: {exc}"})
    done = [r for r in rows if "error" not in r]
    matched = sum(r["match"] for r in done)
    summary = {
        "rows": len(rows),
        "solved": len(done),
        "failed": len(rows) - len(done),
        "matched": matched,
        "match_rate": Fraction(matched, len(done)) if done else None,
        "certificates_hold": sum(r["certificate_holds"] for r in done),
        "total_time_s": round(time.perf_counter() - total_start, 6),
    }
    source = {"dir": Path(args.dir).name} if args.dir is not None else {
        "synthetic": args.synthetic, "seed": args.seed, "m": args.m, "n": args.n,
        "n_distinct": args.n_distinct, "max_cost": args.max_cost,
        "budget_fraction": args.budget_fraction, "hcbp": args.hcbp,
    }
    return {"command": "bench", "method": args.method, "source": source, "rows": rows, "summary": summary}


# -- output -------------------------------------------------------------------------


def _csv_rows(report: dict) -> list[dict]:
    cmd = report["command"]
    if cmd == "solve":
        return [
            {k: r.get(k) for k in ("method", "objective", "value", "cost", "witness", "wall_time_s")}
            for r in report["results"]
        ]
    if cmd == "info":
        return [{"key": k, "value": v} for k, v in {**report["dataset"], **report["analysis"]}.items()]
    if cmd == "axioms":
        return [{k: r.get(k, "") for k in ("axiom", "verdict", "cases", "note")} for r in report["reports"]]
    keys = ("name", "m", "n", "budget", "exact_value", "relax_value", "match", "certificate_holds",
            "eta", "exact_time_s", "relax_time_s", "error")
    return [{k: r.get(k, "") for k in keys} for r in report["rows"]]


def render(report: dict, fmt: str, timing: bool = True) -> str:
    if not timing:
        report = strip_timing(report)
    if fmt == "json":
        return dump_json(report)
    rows = [{k: v for k, v in row.items() if timing or k not in TIMING_KEYS}
            for row in _jsonable(_csv_rows(report))]
    if fmt == "csv":
        buf = io.StringIO()
        if rows:
            fields = list(rows[0])
            writer = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: " ".join(v) if isinstance(v, list) else v for k, v in row.items()})
        return buf.getvalue()
    lines = [f"# {report['command']}"]
    if "dataset" in report:
        d = report["dataset"]
        lines.append(f"dataset {d['name']}: m={d['num_projects']} n={d['num_voters']} b={d['budget']}")
    for row in rows:
        lines.append("  ".join(
            f"{k}={' '.join(v) if isinstance(v, list) else v}" for k, v in row.items() if v not in ("", None)
        ))
    for name, cert in report.get("certificates", {}).items():
        lines.append(f"{name}: " + "  ".join(f"{k}={v}" for k, v in sorted(_jsonable(cert).items())))
    if "summary" in report:
        lines.append("summary: " + "  ".join(f"{k}={v}" for k, v in sorted(_jsonable(report["summary"]).items())))
    return "\n".join(lines) + "\n"


# -- argument parsing ------------------------------------------------------------------


def _add_caps(p):
    g = p.add_argument_group("resource caps (defaults come from MAXMIN_PB_* environment variables)")
    g.add_argument("--brute-cap", type=int, default=None, help="max projects for brute force (default 22)")
    g.add_argument("--dp-states", type=int, default=None, help="max DP states (default 2,000,000)")
    g.add_argument("--bnb-nodes", type=int, default=None, help="max branch-and-bound nodes (default unlimited)")
    g.add_argument("--enum-cap", type=int, default=None, help="max optimal sets listed (default 10,000)")


def _add_output(p):
    p.add_argument("--out", choices=("json", "csv", "text"), default="json")
    p.add_argument("--out-file", default=None, help="write the report here instead of stdout")
    p.add_argument("--no-timing", action="store_true", help="omit wall-time fields")


def _add_input(p, budget=True):
    p.add_argument("--input", required=True, help="instance file (.pb for Pabulib, otherwise native JSON)")
    p.add_argument("--format", choices=("pabulib", "native"), default=None)
    p.add_argument("--decimals", type=int, default=0,
                   help="scale fractional Pabulib costs and budget by 10**DECIMALS")
    if budget:
        p.add_argument("--budget", type=int, default=None, help="override the instance budget")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maxmin-pb", description="Maxmin participatory budgeting toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an instance")
    _add_input(p)
    p.add_argument("--method", choices=EXACT_METHODS + ("ordered-relax",), default="bnb")
    p.add_argument("--objective", choices=(MAXMIN, MINIMAX), default=MAXMIN)
    p.add_argument("--all-optimal", action="store_true", help="list every optimal set and the winners")
    p.add_argument("--certify", action="store_true",
                   help="with ordered-relax: also solve exactly and report the bound certificate")
    p.add_argument("--certify-method", choices=EXACT_METHODS, default="bnb")
    _add_caps(p)
    _add_output(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("info", help="instance statistics")
    _add_input(p)
    _add_output(p)
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("axioms", help="audit a rule against the axioms")
    _add_input(p)
    p.add_argument("--rule", choices=("mpb", "mpb-brute", "mpb-bnb", "utilitarian", "utilitarian-baseline"),
                   default="mpb")
    p.add_argument("--axiom", action="append", choices=ax.AXIOMS, help="restrict to this axiom (repeatable)")
    _add_output(p)
    p.set_defaults(func=cmd_axioms)

    p = sub.add_parser("bench", help="compare Ordered-Relax with an exact solver")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--dir", help="directory of .json / .pb instances")
    src.add_argument("--synthetic", type=int, metavar="COUNT", help="number of generated instances")
    p.add_argument("--method", choices=EXACT_METHODS, default="bnb")
    p.add_argument("--decimals", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--n-distinct", type=int, default=4)
    p.add_argument("--max-cost", type=int, default=20)
    p.add_argument("--budget-fraction", type=float, default=0.5)
    p.add_argument("--hcbp", action="store_true")
    _add_caps(p)
    _add_output(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("brute_cap", "dp_states", "bnb_nodes", "enum_cap"):
        if not hasattr(args, name):
            setattr(args, name, None)
    try:
        report = args.func(args)
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ParseError, InstanceError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    report["status"] = EXIT_OK
    text = render(report, args.out, timing=not args.no_timing)
    if args.out_file:
        Path(args.out_file).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
