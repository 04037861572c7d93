"""Command-line front end.

Subcommands mirror the library operations: ``solve``, ``capacity``,
``balayage``, ``exhaust``, ``thinness``, ``check-pd``.  Each reads a JSON
problem config (``thinness`` takes flags instead), runs the operation, and
emits one JSON record per line (or a CSV table with ``--format csv``).

Exit codes: 0 on success, 2 when the problem was feasible but a solve did
not reach its tolerance, 1 on parse/infeasibility/domain errors.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys

from .analysis import balayage, balayage_gram, equilibrium, exhaustion_experiment, thinness_demo
from .config import parse_config
from .errors import VequilError
from .geometry import PROFILES
from .kernels import assemble_gram, check_positive_definite
from .solver import Problem, SolverConfig, solve


def _records_to_csv(records: list[dict]) -> str:
    keys: list[str] = []
    for rec in records:
        for key, val in rec.items():
            if isinstance(val, (list, dict)):
                continue
            if key not in keys:
                keys.append(key)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(keys)
    for rec in records:
        writer.writerow([rec.get(k, "") for k in keys])
    return buf.getvalue()


def _emit(records: list[dict], fmt: str, out: str | None) -> None:
    if fmt == "csv":
        text = _records_to_csv(records)
    else:
        text = "\n".join(json.dumps(rec) for rec in records) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _with_seed(problem: Problem, seed: int | None) -> Problem:
    if seed is None:
        return problem
    cfg = dataclasses.replace(problem.config, seed=seed)
    return dataclasses.replace(problem, config=cfg)


def _cmd_solve(args) -> int:
    parsed = parse_config(args.config)
    problem = _with_seed(parsed.problem, args.seed)
    rep = problem.solve()
    record = {
        "command": "solve",
        "value": rep.value,
        "kkt_residual": rep.kkt_residual,
        "iterations": rep.iterations,
        "converged": rep.converged,
        "algorithm": rep.algorithm,
        "multipliers": list(rep.multipliers),
        "plates": [
            {"id": p.id, "weights": [float(w) for w in wts]}
            for p, wts in zip(problem.condenser.plates, rep.minimizer.weights)
        ],
    }
    _emit([record], args.format, args.out)
    return 0 if rep.converged else 2


def _cmd_capacity(args) -> int:
    parsed = parse_config(args.config)
    section = parsed.capacity
    plate_idx = int(section.get("plate", 0))
    plates = parsed.problem.condenser.plates
    if not 0 <= plate_idx < len(plates):
        raise VequilError(f"capacity.plate: no plate {plate_idx}")
    plate = plates[plate_idx]
    gram = assemble_gram(parsed.problem.gram.spec, plate.nodes)
    tol = section.get("frostman_tol")
    cfg = parsed.problem.config
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    eq = equilibrium(plate.nodes, gram, frostman_tol=tol, config=cfg)
    record = {
        "command": "capacity",
        "plate": plate_idx,
        "n_nodes": plate.n_nodes,
        "capacity": eq.capacity,
        "robin_constant": eq.robin_constant,
        "frostman_violation": eq.frostman_violation,
        "frostman_tol": eq.frostman_tol,
        "kkt_residual": eq.kkt_residual,
        "converged": eq.converged,
        "unit_minimizer": [float(w) for w in eq.unit_minimizer],
    }
    _emit([record], args.format, args.out)
    return 0 if eq.converged else 2


def _cmd_balayage(args) -> int:
    parsed = parse_config(args.config)
    section = parsed.balayage
    if not section:
        raise VequilError("balayage: config has no balayage section")
    from .config import _parse_scalar_measure  # shared field-anchored parser

    source = _parse_scalar_measure(section["source"], "balayage.source")
    plate_idx = int(section.get("target_plate", 0))
    plates = parsed.problem.condenser.plates
    if not 0 <= plate_idx < len(plates):
        raise VequilError(f"balayage.target_plate: no plate {plate_idx}")
    target = plates[plate_idx].nodes
    tol = float(section.get("tol", 1e-9))
    joint = balayage_gram(parsed.problem.gram.spec, source, target)
    rep = balayage(source, target, joint, tol=tol)
    ok = rep.potential_residual <= tol
    record = {
        "command": "balayage",
        "target_plate": plate_idx,
        "potential_residual": rep.potential_residual,
        "mass_ratio": rep.mass_ratio,
        "swept_energy": rep.swept_energy,
        "source_energy": rep.source_energy,
        "within_tol": ok,
        "swept": [float(w) for w in rep.swept],
    }
    _emit([record], args.format, args.out)
    return 0 if ok else 2


def _cmd_exhaust(args) -> int:
    parsed = parse_config(args.config)
    section = parsed.exhaust
    if not section:
        raise VequilError("exhaust: config has no exhaust section")
    problem = _with_seed(parsed.problem, args.seed)
    trace = exhaustion_experiment(
        problem, section["fractions"], section.get("sigma_scales")
    )
    records = []
    for st in trace.stages:
        records.append(
            {
                "command": "exhaust",
                "node_fraction": st.node_fraction,
                "sigma_scale": st.sigma_scale,
                "feasible": st.feasible,
                "value": st.value,
                "semimetric_gap": st.semimetric_gap,
                "converged": st.converged,
                "full_value": trace.full_value,
            }
        )
    _emit(records, args.format, args.out)
    ok = all(st.converged for st in trace.stages if st.feasible)
    return 0 if ok else 2


def _cmd_thinness(args) -> int:
    rep = thinness_demo(
        args.profile,
        args.s,
        args.radii,
        q=args.q,
        include_gap=not args.no_gap,
    )
    records = []
    for st in rep.stages:
        records.append(
            {
                "command": "thinness",
                "profile": rep.profile,
                "s": rep.s,
                "radius": st.radius,
                "n_body_nodes": st.n_body_nodes,
                "capacity": st.capacity,
                "minimizer_mass_center": st.minimizer_mass_center,
                "gap_to_balayage_candidate": st.gap_to_balayage_candidate,
                "swept_mass": st.swept_mass,
                "converged": st.converged,
                "note": rep.note,
            }
        )
    _emit(records, args.format, args.out)
    return 0 if all(st.converged for st in rep.stages) else 2


def _cmd_check_pd(args) -> int:
    parsed = parse_config(args.config)
    report = check_positive_definite(parsed.problem.gram)
    record = {
        "command": "check-pd",
        "min_eigenvalue": report.min_eigenvalue,
        "max_eigenvalue": report.max_eigenvalue,
        "pd_tol": report.pd_tol,
        "is_pd": report.is_pd,
        "is_strictly_pd": report.is_strictly_pd,
    }
    _emit([record], args.format, args.out)
    return 0


def _add_common(sub: argparse.ArgumentParser, with_config: bool = True) -> None:
    if with_config:
        sub.add_argument("config", help="path to a JSON problem config")
    sub.add_argument("--out", default=None, help="write records to this file")
    sub.add_argument("--seed", type=int, default=None, help="override the solver seed")
    sub.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vequil",
        description="Constrained weighted-energy problems on signed condensers",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    _add_common(subs.add_parser("solve", help="minimize the weighted energy"))
    _add_common(subs.add_parser("capacity", help="equilibrium measure and capacity of a plate"))
    _add_common(subs.add_parser("balayage", help="sweep a source measure onto a plate"))
    _add_common(subs.add_parser("exhaust", help="value continuity under node-set exhaustion"))
    thin = subs.add_parser("thinness", help="capacity dichotomy of thinning bodies")
    thin.add_argument("--profile", required=True, choices=PROFILES)
    thin.add_argument("--s", type=float, required=True, help="profile decay parameter")
    thin.add_argument("--radii", type=float, nargs="+", required=True)
    thin.add_argument("--q", type=float, default=1.0, help="axial start of the body")
    thin.add_argument("--no-gap", action="store_true",
                      help="skip the two-plate solve; report capacities only")
    _add_common(thin, with_config=False)
    _add_common(subs.add_parser("check-pd", help="positive-definiteness diagnosis"))
    return parser


_DISPATCH = {
    "solve": _cmd_solve,
    "capacity": _cmd_capacity,
    "balayage": _cmd_balayage,
    "exhaust": _cmd_exhaust,
    "thinness": _cmd_thinness,
    "check-pd": _cmd_check_pd,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except VequilError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
