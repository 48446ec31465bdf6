"""clchain command-line interface.

Subcommands: enumerate, check, spectrum, simulate, converge.  Every report
embeds the resolved configuration; timing lives in its own field so that
replaying a config reproduces everything else byte for byte.  The exit
status is 0 iff every check passed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from fractions import Fraction

from . import bruteforce
from .checks import (
    CheckResult,
    check_basis,
    check_composability_simulation,
    check_curious,
    check_detailed_balance,
    check_duality,
    check_moments,
    check_two_level_balance,
    check_two_step_exact,
    parse_types,
)
from .counting import aut_count
from .grouptype import GroupType, WindowSpec, parse_type
from .measures import fraction_str, mu0_unnormalized
from .randmat import CONSTRUCTIONS, ExperimentSpec, extension_class_check, run_experiment
from .spectral import convergence, curious_check, eigenmeasure_check, spectrum_table

CHECKS = ("reversibility", "basis", "curious", "moments", "duality", "composability")

DEFAULTS = {
    "p": 2,
    "window": 6,
    "tol": 1e-3,
    "seed": 0,
    "out": None,
    "format": "json",
    "bound": bruteforce.DEFAULT_BOUND_EXP,
    # check
    "which": None,
    "f1": None,
    "f2": None,
    "types": "0;1;2;1,1",
    "max_exp": 3,
    "samples": 10_000,
    "source": "0",
    # spectrum
    "residual_window": 4,
    # simulate
    "construction": "delta0",
    "precision": None,
    "size": None,
    "k": 1,
    "matrix": None,
    # converge
    "steps": 15,
}


def load_config(path: str | None) -> dict:
    """JSON object or key=value lines; values are typed against DEFAULTS."""
    if not path:
        return {}
    with open(path) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        doc = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            doc[key.strip().replace("-", "_")] = value.strip()
    out = {}
    for key, value in doc.items():
        key = key.replace("-", "_")
        default = DEFAULTS.get(key)
        if isinstance(value, str) and isinstance(default, bool):
            value = value.lower() in ("1", "true", "yes")
        elif isinstance(value, str) and isinstance(default, int):
            value = int(value)
        elif isinstance(value, str) and isinstance(default, float):
            value = float(value)
        elif isinstance(value, str) and key in ("precision", "size"):
            value = int(value)
        out[key] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=int, help=f"prime (default {DEFAULTS['p']})")
    common.add_argument("--window", type=int, help=f"window: |G| <= p^window (default {DEFAULTS['window']})")
    common.add_argument("--tol", type=float, help=f"relative tolerance (default {DEFAULTS['tol']})")
    common.add_argument("--seed", type=int, help="master seed for simulations (default 0)")
    common.add_argument("--out", help="write the report here instead of standard output")
    common.add_argument("--format", choices=("json", "csv"), help="report format (default json)")
    common.add_argument("--bound", type=int, help="brute-force bound exponent: groups up to p^bound (default 8)")
    common.add_argument("--config", help="JSON or key=value file; command-line flags win")

    parser = argparse.ArgumentParser(prog="clchain", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("enumerate", parents=[common], help="list window states with |Aut| and weight 1/|Aut|")

    chk = sub.add_parser("check", parents=[common], help="run an exact verification")
    chk.add_argument("which", choices=CHECKS)
    chk.add_argument("--f1", help="first type for curious (default: all pairs up to p^max-exp)")
    chk.add_argument("--f2", help="second type for curious")
    chk.add_argument("--types", help='moment types, ";"-separated (default "0;1;2;1,1")')
    chk.add_argument("--max-exp", type=int, dest="max_exp", help="largest |F| = p^max-exp for duality/basis/curious (default 3)")
    chk.add_argument("--samples", type=int, help="samples for composability (default 10000)")
    chk.add_argument("--source", help='source type for composability (default "0")')

    spec = sub.add_parser("spectrum", parents=[common], help="eigenvalues 1/|F| with solve residuals")
    spec.add_argument("--max-exp", type=int, dest="max_exp", help="list F with |F| <= p^max-exp (default 3)")
    spec.add_argument(
        "--residual-window",
        type=int,
        dest="residual_window",
        help="window for the certified eigenmeasure residual bound; -1 skips it (default 4)",
    )

    sim = sub.add_parser("simulate", parents=[common], help="bordered random-matrix experiment")
    sim.add_argument("--construction", choices=CONSTRUCTIONS, help="default delta0")
    sim.add_argument("--precision", type=int, help="starting precision N (default order_exp(source)+8)")
    sim.add_argument("--size", type=int, help="matrix size (default rank(source); 8 for fw)")
    sim.add_argument("--samples", type=int, help="number of samples (default 10000)")
    sim.add_argument("--source", help='source type, e.g. "2,1" (default "0")')
    sim.add_argument("--k", type=int, help="border width for the dk construction (default 1)")
    sim.add_argument("--matrix", help='extclass matrix as rows ";"-separated, e.g. "2,0;0,2"')

    conv = sub.add_parser("converge", parents=[common], help="exact TV to stationarity per step")
    conv.add_argument("--source", help='starting type (default "0")')
    conv.add_argument("--steps", type=int, help="number of steps (default 15)")
    return parser


def resolve(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    cfg.update(load_config(args.config))
    for key, value in vars(args).items():
        if key in ("config", "command"):
            continue
        if value is not None:
            cfg[key] = value
    cfg["command"] = args.command
    return {k: cfg[k] for k in sorted(cfg)}


# ---------------------------------------------------------------- commands


def cmd_enumerate(cfg: dict) -> tuple[list[dict], list[CheckResult]]:
    w = WindowSpec(cfg["p"], cfg["window"])
    rows = []
    for G in w.states:
        rows.append(
            {
                "type": str(G),
                "order_exp": G.order_exp,
                "rank": G.rank,
                "aut": str(aut_count(w.p, G)),
                "weight": fraction_str(mu0_unnormalized(w.p, G)),
            }
        )
    return rows, []


def cmd_check(cfg: dict) -> tuple[list[dict], list[CheckResult]]:
    p, m, which = cfg["p"], cfg["window"], cfg["which"]
    bruteforce_bound = cfg["bound"]
    bruteforce.DEFAULT_BOUND_EXP = bruteforce_bound
    if which == "reversibility":
        results = [check_detailed_balance(p, m), check_two_level_balance(p, m)]
    elif which == "duality":
        results = [check_duality(p, cfg["max_exp"])]
    elif which == "basis":
        results = [check_basis(p, m, cfg["max_exp"], rel_width=1e-6)]
    elif which == "moments":
        results = [check_moments(p, m, parse_types(cfg["types"]), cfg["tol"])]
    elif which == "curious":
        if cfg["f1"] is not None:
            results = [_single_curious(p, parse_type(cfg["f1"]), parse_type(cfg["f2"] or cfg["f1"]), m, cfg["tol"])]
        else:
            results = [check_curious(p, cfg["max_exp"], m, cfg["tol"])]
    elif which == "composability":
        src = parse_type(cfg["source"])
        results = [
            check_two_step_exact(p, src, m),
            check_composability_simulation(p, src, cfg["samples"], cfg["seed"]),
        ]
    else:
        raise ValueError(which)
    rows = [{"check": r.name, "status": "pass" if r.passed else "fail", "details": r.details} for r in results]
    return rows, results


def _single_curious(p: int, F1: GroupType, F2: GroupType, m: int, tol: float) -> CheckResult:
    t = time.perf_counter()
    rep = curious_check(p, F1, F2, WindowSpec(p, m))
    gap = float(rep.relative_gap)
    ok = rep.rhs == rep.subgroup_oracle and rep.monotone and gap <= tol
    return CheckResult(
        f"curious formula p={p} F1={F1} F2={F2} m={m}",
        ok,
        {
            "lhs_partial": fraction_str(rep.lhs_partial),
            "lhs_times_c0": rep.lhs_times_c0.to_json(),
            "rhs": fraction_str(rep.rhs),
            "subgroup_oracle": rep.subgroup_oracle,
            "relative_gap": gap,
            "monotone": rep.monotone,
        },
        time.perf_counter() - t,
    )


def cmd_spectrum(cfg: dict) -> tuple[list[dict], list[CheckResult]]:
    p = cfg["p"]
    table = spectrum_table(p, cfg["max_exp"], fast=True)
    rw = cfg["residual_window"]
    rows = []
    results = []
    for r in table:
        F = r["F"]
        bound = None
        zero_inside = True
        if rw >= 0:
            chk = eigenmeasure_check(p, F, WindowSpec(p, rw))
            bound = chk.l1_bound
            zero_inside = chk.contains_zero
        rows.append(
            {
                "F": str(F),
                "eigenvalue": fraction_str(r["eigenvalue"]),
                "solve_residual": fraction_str(r["residual"]),
                "residual_bound": "" if bound is None else f"{float(bound):.6e}",
                "window_m": "" if rw < 0 else rw,
            }
        )
        results.append(CheckResult(f"e_F F={F}", r["residual"] == 0 and zero_inside))
    return rows, results


def _parse_matrix(text: str) -> list[list[int]]:
    return [[int(x) for x in row.split(",")] for row in text.split(";")]


def cmd_simulate(cfg: dict) -> tuple[list[dict], list[CheckResult]]:
    if cfg["construction"] == "extclass":
        matrix = _parse_matrix(cfg["matrix"]) if cfg["matrix"] else _default_ext_matrix(cfg)
        rep = extension_class_check(matrix, cfg["p"], cfg["samples"], cfg["seed"])
        doc = rep.to_json()
        return [doc], [CheckResult("extension classes", rep.passed, doc)]
    spec = ExperimentSpec(
        construction=cfg["construction"],
        p=cfg["p"],
        samples=cfg["samples"],
        seed=cfg["seed"],
        source=str(parse_type(cfg["source"])),
        size=cfg["size"],
        precision=cfg["precision"],
        window=cfg["window"],
        k=cfg["k"],
    )
    res = run_experiment(spec)
    doc = res.to_json()
    return [doc], [CheckResult(f"simulate {spec.construction}", res.passed, doc)]


def _default_ext_matrix(cfg: dict) -> list[list[int]]:
    G = parse_type(cfg["source"])
    n = max(G.rank, 1)
    diag = list(G.padded(n))
    return [[cfg["p"] ** diag[i] if i == j else 0 for j in range(n)] for i in range(n)]


def cmd_converge(cfg: dict) -> tuple[list[dict], list[CheckResult]]:
    p = cfg["p"]
    rep = convergence(p, parse_type(cfg["source"]), WindowSpec(p, cfg["window"]), cfg["steps"])
    rows = []
    for k, iv, ratio in zip(rep.steps, rep.tv, [None] + rep.ratios):
        rows.append(
            {
                "k": k,
                "tv_lo": f"{float(iv.lo):.12e}",
                "tv_hi": f"{float(iv.hi):.12e}",
                "ratio": "" if ratio is None else f"{ratio:.6f}",
            }
        )
    fitted = rep.fitted_ratio
    ok = abs(fitted - 1 / p) <= 0.05
    return rows, [CheckResult("fitted decay ratio within 0.05 of 1/p", ok, {"fitted_ratio": fitted, "target": 1 / p})]


COMMANDS = {
    "enumerate": cmd_enumerate,
    "check": cmd_check,
    "spectrum": cmd_spectrum,
    "simulate": cmd_simulate,
    "converge": cmd_converge,
}


# ---------------------------------------------------------------- output


def _jsonable(x):
    if isinstance(x, Fraction):
        return fraction_str(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, GroupType):
        return str(x)
    return x


def render(cfg: dict, rows: list[dict], results: list[CheckResult], elapsed: float) -> str:
    if cfg["format"] == "csv":
        buf = io.StringIO()
        flat = [{k: (json.dumps(_jsonable(v)) if isinstance(v, (dict, list)) else v) for k, v in r.items()} for r in rows]
        fields = list(flat[0]) if flat else ["check"]
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(flat)
        return buf.getvalue()
    doc = {
        "config": cfg,
        "rows": _jsonable(rows),
        "checks": [{"name": r.name, "status": "pass" if r.passed else "fail"} for r in results],
        "passed": all(r.passed for r in results),
        "timing": {"seconds": round(elapsed, 3), "checks": {r.name: round(r.seconds, 3) for r in results}},
    }
    return json.dumps(doc, indent=2) + "\n"


def summary(results: list[CheckResult]) -> str:
    if not results:
        return ""
    width = max(len(r.name) for r in results)
    lines = [f"{'check'.ljust(width)}  status"]
    lines += [f"{r.name.ljust(width)}  {'pass' if r.passed else 'FAIL'}" for r in results]
    return "\n".join(lines) + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = resolve(args)
    t = time.perf_counter()
    rows, results = COMMANDS[cfg["command"]](cfg)
    text = render(cfg, rows, results, time.perf_counter() - t)
    if cfg["out"]:
        with open(cfg["out"], "w") as fh:
            fh.write(text)
        sys.stdout.write(summary(results))
    else:
        sys.stdout.write(text)
        if results:
            sys.stderr.write(summary(results))
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":
    sys.exit(main())
