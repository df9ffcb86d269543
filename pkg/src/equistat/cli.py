"""Command-line entry point.

Exit codes: 0 every requested verdict holds, 1 a property is falsified,
2 bad input, 3 a solver gave up without a certificate.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__
from .conv import EPS_LOGIT, argmax_correspondence, logit_taxonomy
from .corr import MONOTONICITY_PROPERTIES, SUBSTITUTES_NOTIONS, FiniteCorrespondence, _jsonable, check_property, classify
from .errors import Inconclusive, InputError
from .fixtures import fixture, names
from .flow import (
    random_feasible_prices,
    sample_equilibrium_correspondence,
    solve_additive,
    solve_general,
    verify_equilibrium,
    feasible_prices,
)
from .io import InstanceFile, load, load_outcome, save
from .latt import INVERSE_PROPERTIES, check_inverse, fibers, solution_sets
from .markets import (
    check_stability_itu,
    check_stability_ntu,
    equilibrium_lattice_report,
    flow_to_matching,
    gale_shapley,
    hedonic_solve,
    hedonic_to_flow,
    itu_solve,
    itu_to_flow,
    lattice_closure,
    ntu_excess_supply,
    ntu_m0_check,
    ntu_solve,
    verify_hedonic,
)
from .rat import fmt, fmt_point, point

ALL_PROPERTIES = SUBSTITUTES_NOTIONS + MONOTONICITY_PROPERTIES + INVERSE_PROPERTIES


class Report:
    """Collects verdicts and data for one command; renders as JSON or text."""

    def __init__(self, argv):
        self.command = list(argv)
        self.verdicts = []
        self.data = {}
        self.start = time.perf_counter()

    def verdict(self, v):
        self.verdicts.append(v)
        return v

    @property
    def ok(self) -> bool:
        return all(v.holds for v in self.verdicts)

    def to_dict(self, status: int) -> dict:
        return {
            "command": self.command,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "data": _jsonable(self.data),
            "wall_clock_s": round(time.perf_counter() - self.start, 4),
            "exit_status": status,
        }

    def text(self, status: int) -> str:
        lines = [v.summary() for v in self.verdicts]
        for k, v in self.data.items():
            lines.append(f"{k}: {json.dumps(_jsonable(v))}")
        lines.append(f"exit {status} ({time.perf_counter() - self.start:.3f}s)")
        return "\n".join(lines)


def _correspondence(inst: InstanceFile) -> FiniteCorrespondence:
    if inst.kind == "correspondence":
        return inst.obj
    if inst.kind == "producer":
        if inst.grid is None:
            raise InputError("a producer file needs a 'grid' to tabulate its supply")
        return argmax_correspondence(inst.obj, inst.grid)
    if inst.kind == "objective_table":
        return inst.obj.argmax()
    raise InputError(f"expected a correspondence-like instance, got kind {inst.kind!r}")


def _k(text):
    return None if text is None else point(x for x in text.split(","))


def _levels(text):
    return [Fraction(x) for x in text.split(",")]


def _grid(inst: InstanceFile, args, dim: int):
    if getattr(args, "levels", None):
        from .corr import product_grid

        return product_grid(_levels(args.levels), dim)
    if inst.grid is None:
        raise InputError("no grid: put a 'grid' in the file or pass --levels")
    return inst.grid


# commands


def cmd_check(args, rep: Report):
    Q = _correspondence(load(args.input))
    if args.property in INVERSE_PROPERTIES:
        rep.verdict(check_inverse(Q, args.property))
    else:
        rep.verdict(check_property(Q, args.property, _k(args.k)))


def cmd_classify(args, rep: Report):
    inst = load(args.input)
    if inst.kind == "logit":
        grid = _grid(inst, args, inst.obj.dim)
        eps = float(Fraction(args.eps))
        tax = logit_taxonomy(inst.obj, grid, eps if eps > 0 else EPS_LOGIT)
    else:
        tax = classify(_correspondence(inst))
    rep.data["taxonomy"] = tax.to_dict()


def cmd_invert(args, rep: Report):
    Q = _correspondence(load(args.input))
    rep.data["fibers"] = [{"q": fmt_point(q), "p": [fmt_point(p) for p in ps]} for q, ps in sorted(fibers(Q).items())]
    for prop in ([args.property] if args.property else INVERSE_PROPERTIES):
        v = check_inverse(Q, prop)
        if args.property:
            rep.verdict(v)
        else:
            rep.data[prop] = v.to_dict()


def _sampled_equilibria(prob, seed: int, count: int):
    """Distinct equilibrium price vectors from several randomized starts."""
    rng = random.Random(seed)
    nodes = prob.network.nodes
    found = {}
    for _ in range(count):
        try:
            start = random_feasible_prices(prob, rng)
            out = solve_general(prob, p0=start)
        except Inconclusive:
            continue
        found[tuple(out.p[z] for z in nodes)] = out.p
    return list(found.values())


def cmd_lattice(args, rep: Report):
    inst = load(args.input)
    if inst.kind == "correspondence" or inst.kind in ("producer", "objective_table"):
        sets = solution_sets(_correspondence(inst), _k(args.target))
        rep.data["solution_sets"] = sets.to_dict()
        for v in (sets.join_closed, sets.meet_closed, sets.coincidence):
            rep.verdict(v)
        return
    if inst.kind == "ntu":
        m = inst.obj
        outs = ntu_solve(m)
        stable = {o.v for o in outs}
        member = lambda v: all(x == 0 for x in ntu_excess_supply(m, dict(zip(m.women, v))).values())
        rep.data["stable_v"] = [fmt_point(v) for v in sorted(stable)]
        rep.verdict(lattice_closure(stable, member, "stable_payoffs_lattice"))
        return
    if inst.kind == "itu":
        prob = itu_to_flow(inst.obj)
    elif inst.kind == "hedonic":
        prob = hedonic_to_flow(inst.obj)
    elif inst.kind == "network":
        prob = inst.obj
    else:
        raise InputError(f"lattice report does not handle kind {inst.kind!r}")
    prices = _sampled_equilibria(prob, args.seed, args.samples)
    if not prices:
        raise Inconclusive("no equilibrium price vector found from any start")
    report = equilibrium_lattice_report(prob, prices)
    rep.data["nodes"] = list(prob.network.nodes)
    rep.data["equilibrium_prices"] = [fmt_point([p[z] for z in prob.network.nodes]) for p in prices]
    rep.verdict(report.closure)


def _solve_flow(prob, solver: str, max_iter: int):
    if solver == "additive" or (solver == "auto" and prob.network.is_additive()):
        return solve_additive(prob)
    return solve_general(prob, max_iter=max_iter)


def cmd_flow(args, rep: Report):
    inst = load(args.input)
    if inst.kind != "network":
        raise InputError(f"flow commands need a network file, got kind {inst.kind!r}")
    prob = inst.obj
    if args.action == "solve":
        out = _solve_flow(prob, args.solver, args.max_iter)
        rep.data["outcome"] = out.to_dict()
        rep.verdict(verify_equilibrium(prob, out, Fraction(args.eps)))
        if args.output:
            Path(args.output).write_text(json.dumps(out.to_dict(), indent=2) + "\n")
    elif args.action == "verify":
        if not args.outcome:
            raise InputError("flow verify needs --outcome")
        v = rep.verdict(verify_equilibrium(prob, load_outcome(args.outcome), Fraction(args.eps)))
        rep.data["residuals"] = v.details
    else:
        grid = _grid(inst, args, len(prob.network.nodes))
        keep, drop = feasible_prices(prob.network, grid)
        Q = sample_equilibrium_correspondence(prob.network, keep, args.cap)
        rep.data["retained"] = len(keep)
        rep.data["filtered_out"] = [fmt_point(p) for p in drop]
        rep.verdict(check_property(Q, "ugs"))
        rep.verdict(check_inverse(Q, "sublattice_fibers"))
        if args.output:
            save(InstanceFile("correspondence", Q, {"nodes": list(prob.network.nodes)}), args.output)


def cmd_match(args, rep: Report):
    inst = load(args.input)
    if args.kind == "ntu":
        if inst.kind != "ntu":
            raise InputError(f"--kind ntu needs an ntu file, got {inst.kind!r}")
        m = inst.obj
        outs = ntu_solve(m)
        rep.data["stable_outcomes"] = [
            {"v": fmt_point(o.v), "pairs": sorted([x, y] for (x, y), val in o.matching.mu.items() if val)}
            for o in outs]
        for side in ("men", "women"):
            gs = gale_shapley(m, side)
            rep.data[f"gale_shapley_{side}"] = sorted([x, y] for (x, y), val in gs.mu.items() if val)
            rep.verdict(check_stability_ntu(m, gs))
        rep.verdict(ntu_m0_check(m))
        return
    if inst.kind != "itu":
        raise InputError(f"--kind {args.kind} needs an itu file, got {inst.kind!r}")
    m = inst.obj
    if args.kind == "tu" and not m.is_tu():
        raise InputError("--kind tu needs U = alpha + w and V = gamma - w on every pair")
    out = itu_solve(m, max_iter=args.max_iter)
    match = flow_to_matching(m, out)
    rep.data["matching"] = match.to_dict()
    rep.data["prices"] = {z: fmt(v) for z, v in out.p.items()}
    rep.verdict(check_stability_itu(m, match))


def cmd_hedonic(args, rep: Report):
    inst = load(args.input)
    if inst.kind != "hedonic":
        raise InputError(f"hedonic solve needs a hedonic file, got {inst.kind!r}")
    h = hedonic_solve(inst.obj, max_iter=args.max_iter)
    rep.data["prices"] = {w: fmt(v) for w, v in h.p.items()}
    rep.data["u"] = {x: fmt(v) for x, v in h.u.items()}
    rep.data["v"] = {y: fmt(v) for y, v in h.v.items()}
    rep.data["mu"] = [{"from": a, "to": b, "mass": fmt(v)} for (a, b), v in sorted(h.mu.items()) if v]
    rep.verdict(verify_hedonic(inst.obj, h.p, h.mu, Fraction(args.eps)))


def cmd_fixtures(args, rep: Report):
    if args.name is None:
        rep.data["fixtures"] = names()
        return
    inst = fixture(args.name)
    if args.output:
        save(inst, args.output)
        rep.data["written"] = args.output
    else:
        rep.data["instance"] = inst.to_dict()


def _find_acceptance() -> Path | None:
    for base in [Path.cwd(), *Path(__file__).resolve().parents]:
        cand = base / "tests" / "test_acceptance.py"
        if cand.is_file():
            return cand
    return None


def cmd_suite(args, rep: Report):
    target = _find_acceptance()
    if target is None:
        raise InputError("acceptance battery not found (run from a source checkout)")
    env = dict(os.environ, EQUISTAT_SEED=str(args.seed))
    proc = subprocess.run([sys.executable, "-m", "pytest", str(target), "-q", "-p", "no:cacheprovider"],
                          env=env, capture_output=True, text=True, cwd=target.parent.parent)
    # the conftest summary section lists one indented line per criterion
    lines = [ln.strip() for ln in proc.stdout.splitlines() if ln.startswith(("  PASS criterion", "  FAIL criterion"))]
    rep.data["criteria"] = lines
    rep.data["pytest_exit"] = proc.returncode
    rep.suite_failed = proc.returncode != 0


# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="equistat", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable report")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--eps", default="0", help="tolerance, e.g. 0 or 1e-9")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="check one property on a correspondence file")
    p.add_argument("--input", required=True)
    p.add_argument("--property", required=True, choices=ALL_PROPERTIES)
    p.add_argument("--k", help="comma-separated positive weights")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("classify", parents=[common], help="taxonomy label")
    p.add_argument("--input", required=True)
    p.add_argument("--levels", help="grid levels per coordinate (logit files)")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("invert", parents=[common], help="inverse correspondence and its properties")
    p.add_argument("--input", required=True)
    p.add_argument("--property", choices=INVERSE_PROPERTIES)
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("lattice", parents=[common], help="lattice structure of solutions or equilibria")
    p.add_argument("action", choices=["report"])
    p.add_argument("--input", required=True)
    p.add_argument("--target", help="comma-separated target quantity (correspondences)")
    p.add_argument("--samples", type=int, default=8, help="randomized solver starts (markets, networks)")
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("flow", parents=[common], help="equilibrium flow problems")
    p.add_argument("action", choices=["solve", "verify", "sample"])
    p.add_argument("--input", required=True)
    p.add_argument("--outcome", help="flow outcome file (verify)")
    p.add_argument("--output", help="write the outcome or sampled correspondence here")
    p.add_argument("--cap", type=int, default=1, help="integer flow cap per arc (sample)")
    p.add_argument("--levels", help="price levels per node (sample)")
    p.add_argument("--solver", choices=["auto", "additive", "general"], default="auto")
    p.add_argument("--max-iter", type=int, default=5000)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("match", parents=[common], help="matching markets")
    p.add_argument("action", choices=["solve"])
    p.add_argument("--kind", required=True, choices=["tu", "itu", "ntu"])
    p.add_argument("--input", required=True)
    p.add_argument("--max-iter", type=int, default=5000)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("hedonic", parents=[common], help="hedonic pricing")
    p.add_argument("action", choices=["solve"])
    p.add_argument("--input", required=True)
    p.add_argument("--max-iter", type=int, default=5000)
    p.set_defaults(func=cmd_hedonic)

    p = sub.add_parser("fixtures", parents=[common], help="list or emit catalog instances")
    p.add_argument("name", nargs="?")
    p.add_argument("--output")
    p.set_defaults(func=cmd_fixtures)

    p = sub.add_parser("suite", parents=[common], help="run the acceptance battery")
    p.set_defaults(func=cmd_suite)
    return ap


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    rep = Report(argv)
    try:
        Fraction(args.eps)
    except ValueError:
        print(f"error: bad --eps {args.eps!r}", file=sys.stderr)
        return 2
    try:
        args.func(args, rep)
        status = 0 if rep.ok and not getattr(rep, "suite_failed", False) else 1
    except Inconclusive as exc:
        status = 3
        rep.data["error"] = str(exc)
        if exc.report is not None:
            rep.data["solver_report"] = exc.report.to_dict()
    except InputError as exc:
        status = 2
        rep.data["error"] = str(exc)
    out = json.dumps(rep.to_dict(status), indent=2) if args.json else rep.text(status)
    print(out, file=sys.stderr if status == 2 and not args.json else sys.stdout)
    return status


if __name__ == "__main__":
    sys.exit(main())
