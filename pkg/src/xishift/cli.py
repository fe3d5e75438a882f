"""Command line entry point: ``xishift {verify,ssf,flow,bk}``.

Exit status is 0 when every report entry passes, 1 when some entry fails and
2 for unusable input. The report is written in every case that gets as far
as evaluating the problem.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np

from . import generate
from .errors import XiShiftError
from .matcore import Interval, kernel_dim, spectral_projection
from .oplog import xi_operator
from .pairindex import index_pair, trindex
from .problem import ProblemFile, parse_problem
from .report import Check, VerificationReport
from .spectralflow import ANCHORS as FLOW_ANCHORS
from .spectralflow import (
    FlowInstance,
    arctan_log_identity,
    arctan_trend,
    birman_krein,
    cauchy_average,
    crossing_profile,
    log_trace_formula,
    verify_ttr8,
)
from .ssf import ANCHORS as SSF_ANCHORS
from .ssf import (
    PerturbationPair,
    gap_formulas,
    generalized_bs,
    krein_residual,
    nudge_off_spectrum,
    poisson_check,
    ssf_averaged_rep,
    ssf_table,
)

log = logging.getLogger("xishift")

FLOW_SUITES = ("index", "trindex", "ttr8", "bk", "logtrace", "arctan")
PAIR_SUITES = ("ssf", "poisson", "gap", "gbs")
DEFAULT_EPS = (0.1, 0.01)
LOGTRACE_Z = (1j, 2j, 0.5 + 1j)

EXTRA_ANCHORS = {
    "index": "index(P, Q) = -index(Q, P) = plateau value of n(t)",
    "trindex": "trindex(A, Q) does not depend on the auxiliary projection P",
}


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------


def thread_cap():
    raw = os.environ.get("XISHIFT_THREADS")
    if raw is None or raw.strip() == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"XISHIFT_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"XISHIFT_THREADS must be a positive integer, got {raw!r}")
    return n


def _run_jobs(jobs, workers=None):
    """Run ``(sort_key, fn)`` jobs concurrently; results come back in key order."""
    def timed(fn):
        t0 = time.perf_counter()
        out = fn()
        dt = time.perf_counter() - t0
        for c in out:
            c.timing = dt
        return out

    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [(key, pool.submit(timed, fn)) for key, fn in jobs]
        done = [(key, f.result()) for key, f in futures]
    done.sort(key=lambda kv: kv[0])
    return [c for _, out in done for c in out]


def _guard(suite, name, anchor, tolerance, fn):
    """Turn a library error into a failing entry rather than an abort."""
    def run():
        try:
            return fn()
        except (XiShiftError, np.linalg.LinAlgError, ValueError) as exc:
            return [Check(suite, f"{name}: {type(exc).__name__}: {exc}", anchor, math.inf, tolerance)]
    return run


def _grid_points(grid):
    lo, hi, count = grid
    return np.linspace(lo, hi, count) if count > 1 else np.array([lo])


def _default_grid(pair: PerturbationPair):
    spec = np.concatenate([pair.eig_H0, pair.eig_H])
    return (float(spec.min()) - 1.0, float(spec.max()) + 1.0, 21)


def _flow_instance(p: ProblemFile):
    return FlowInstance.build(p["S"], p.matrices.get("A"), p.matrices.get("B"), p.tol)


def _pair(p: ProblemFile):
    return PerturbationPair.build(p["H0"], p["V"], p.tol)


# --------------------------------------------------------------------------
# suites
# --------------------------------------------------------------------------


def _flow_jobs(p: ProblemFile, suites):
    tol = p.tol
    inst = _flow_instance(p)
    n = inst.n
    jobs = []

    if "index" in suites:
        def index_checks():
            prof = crossing_profile(inst, tol)
            Q = spectral_projection(inst.S, Interval.negative(), tol, on_collision="exclude")
            out = []
            for t, plateau in zip(prof.sample_points(), prof.plateaus):
                t = float(t)
                P = spectral_projection(inst.M + t * inst.B, Interval.negative(), tol)
                k = index_pair(P, Q, tol)
                res = abs(k + index_pair(Q, P, tol)) + abs(k - plateau)
                out.append(Check("index", f"t={t!r}", EXTRA_ANCHORS["index"], float(res), 0.0, float(k)))
            return out
        jobs.append((("index", 0), _guard("index", "profile", EXTRA_ANCHORS["index"], 0.0, index_checks)))

    if "trindex" in suites:
        lim = n * tol.tol_proj

        def trindex_checks():
            X = xi_operator(inst.M + 1j * inst.B, tol)
            Q = spectral_projection(inst.S, Interval.negative(), tol)
            Ps = [
                Q,
                np.zeros((n, n)),
                np.eye(n),
                spectral_projection(inst.M, Interval.negative(), tol, on_collision="exclude"),
                spectral_projection(inst.S + inst.B, Interval.negative(), tol, on_collision="exclude"),
            ]
            vals = [trindex(X, Q, P, tol) for P in Ps]
            return [Check("trindex", "P-independence", EXTRA_ANCHORS["trindex"], max(vals) - min(vals), lim, vals[0])]
        jobs.append((("trindex", 0), _guard("trindex", "P-independence", EXTRA_ANCHORS["trindex"], lim, trindex_checks)))

    if "ttr8" in suites:
        jobs.append((("ttr8", 0), _guard("ttr8", "trindex vs Cauchy average", FLOW_ANCHORS["ttr8"], 1e-8 * (1 + n),
                                         lambda: [verify_ttr8(inst, tol)])))

    if "bk" in suites:
        lim = 1e-10 * n

        def bk_checks():
            r = birman_krein(inst, tol)
            res = max(r.residual, r.unitarity_defect)
            return [Check("bk", "determinant and unitarity", FLOW_ANCHORS["bk_det"], res, lim, r.trindex)]
        jobs.append((("bk", 0), _guard("bk", "determinant and unitarity", FLOW_ANCHORS["bk_det"], lim, bk_checks)))

    if "logtrace" in suites:
        for k, z in enumerate(LOGTRACE_Z):
            def lt(z=z):
                lhs, rhs = log_trace_formula(inst.S, inst.B, z, tol)
                return [Check("logtrace", f"z={z!r}", FLOW_ANCHORS["logtrace"], abs(lhs - rhs), 1e-8, lhs.imag)]
            jobs.append((("logtrace", k), _guard("logtrace", f"z={z!r}", FLOW_ANCHORS["logtrace"], 1e-8, lt)))

    if "arctan" in suites:
        def arctan_checks():
            if kernel_dim(inst.S, tol) == 0:
                lhs, rhs = arctan_log_identity(inst.S, inst.B, tol)
                return [Check("arctan", "invertible S", FLOW_ANCHORS["arctan_log"], abs(lhs - rhs), 1e-9, lhs)]
            tr = arctan_trend(inst.S, inst.B, tol=tol)
            out = [
                Check("arctan", f"eps={e!r}", FLOW_ANCHORS["arctan_limit"], r, 10 * e * tr.c_instance)
                for e, r in zip(tr.eps, tr.residuals)
            ]
            out.append(Check("arctan", "residual decreasing", FLOW_ANCHORS["arctan_limit"],
                             0.0 if tr.decreasing else 1.0, 0.0))
            return out
        jobs.append((("arctan", 0), _guard("arctan", "arctan trace", FLOW_ANCHORS["arctan_limit"], 1e-9, arctan_checks)))
    return jobs


def _pair_jobs(p: ProblemFile, suites, eps, grid):
    tol = p.tol
    pair = _pair(p)
    pair.xi()
    pair.factors(tol)
    grid = grid or p.grid or _default_grid(pair)
    eps = tuple(eps if eps is not None else (p.eps or DEFAULT_EPS))
    pts = _grid_points(grid)
    jobs = []

    if "ssf" in suites:
        jobs.append((("ssf", 0), _guard("ssf", "resolvent trace formula", SSF_ANCHORS["krein"], 1e-9,
                                        lambda: [Check("ssf", "resolvent trace formula", SSF_ANCHORS["krein"],
                                                       krein_residual(pair), 1e-9)])))

    if "poisson" in suites:
        for k, e in enumerate(x for x in eps if x > 0):
            def pc(e=e):
                res = max(poisson_check(pair, float(lam), e, tol)[2] for lam in pts)
                return [Check("poisson", f"eps={e!r} over {len(pts)} points", SSF_ANCHORS["poisson"], res, 1e-6)]
            jobs.append((("poisson", k), _guard("poisson", f"eps={e!r}", SSF_ANCHORS["poisson"], 1e-6, pc)))

    if "gap" in suites:
        for k, lam in enumerate(pts):
            def gc(lam=float(lam)):
                lam, _ = nudge_off_spectrum(pair, lam, tol)
                g = gap_formulas(pair, lam, tol)
                g["averaged"] = ssf_averaged_rep(pair, lam, 0.0, tol)
                res = max(abs(v - g["exact"]) for v in g.values())
                return [Check("gap", f"lambda={lam!r}", SSF_ANCHORS["gap"], float(res), 1e-8, float(g["exact"]))]
            jobs.append((("gap", k), _guard("gap", f"lambda={float(lam)!r}", SSF_ANCHORS["gap"], 1e-8, gc)))

    if "gbs" in suites:
        gbs_eps = sorted(set(eps) | {0.0})
        for k, lam in enumerate(pts):
            def bc(lam=float(lam)):
                lam, _ = nudge_off_spectrum(pair, lam, tol)
                out = []
                for e in gbs_eps:
                    lhs, _, res = generalized_bs(pair, lam, e, tol)
                    out.append(Check("gbs", f"lambda={lam!r} eps={e!r}", SSF_ANCHORS["gbs"], res, 1e-8, lhs))
                return out
            jobs.append((("gbs", k), _guard("gbs", f"lambda={float(lam)!r}", SSF_ANCHORS["gbs"], 1e-8, bc)))
    return jobs


def cmd_verify(problem: ProblemFile, suites: Sequence[str], eps=None, grid=None, tol=None, workers=None) -> VerificationReport:
    """Run the requested suites; identity failures become failing entries."""
    allowed = FLOW_SUITES if problem.kind == "flow" else PAIR_SUITES
    bad = [s for s in suites if s not in allowed]
    if bad:
        raise UsageError(f"suite(s) {', '.join(bad)} not available for kind {problem.kind!r}; choose from {', '.join(allowed)}")
    report = VerificationReport()
    if not suites:
        return report
    if problem.kind == "flow":
        jobs = _flow_jobs(problem, set(suites))
    else:
        jobs = _pair_jobs(problem, set(suites), eps, grid)
    checks = _run_jobs(jobs, workers)
    if tol is not None:
        for c in checks:
            c.tolerance = tol
    report.extend(checks)
    return report


# --------------------------------------------------------------------------
# serialisation of the non-report outputs
# --------------------------------------------------------------------------


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def to_csv(columns, rows):
    lines = [",".join(columns)] + [",".join(_cell(v) for v in r) for r in rows]
    return "\n".join(lines) + "\n"


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def to_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def flow_output(problem: ProblemFile, fmt: str) -> str:
    inst = _flow_instance(problem)
    prof = crossing_profile(inst, problem.tol)
    edges = prof.edges()
    mults = [m for _, m in prof.crossings] + [None]
    rows = [(float(edges[i]), float(edges[i + 1]), prof.plateaus[i], mults[i]) for i in range(len(prof.plateaus))]
    if fmt == "csv":
        return to_csv(["t_lo", "t_hi", "n", "multiplicity_at_t_hi"], rows)
    return to_json({
        "crossings": [{"t": t, "multiplicity": m} for t, m in prof.crossings],
        "plateaus": list(prof.plateaus),
        "base_index": prof.base_index,
        "reference": prof.reference,
        "cauchy_average": cauchy_average(prof),
    })


def bk_output(problem: ProblemFile, fmt: str):
    inst = _flow_instance(problem)
    r = birman_krein(inst, problem.tol)
    ok = r.residual <= 1e-8 and r.unitarity_defect <= 1e-10 * inst.n
    if fmt == "csv":
        rows = [
            ("det_re", r.det.real), ("det_im", r.det.imag), ("trindex", r.trindex),
            ("residual", r.residual), ("unitarity_defect", r.unitarity_defect), ("passed", ok),
        ]
        return to_csv(["quantity", "value"], rows), ok
    doc = {
        "det": [r.det.real, r.det.imag],
        "trindex": r.trindex,
        "residual": r.residual,
        "unitarity_defect": r.unitarity_defect,
        "passed": ok,
        "smatrix": [[[z.real, z.imag] for z in row] for row in r.smatrix],
    }
    return to_json(doc), ok


def ssf_output(problem: ProblemFile, fmt: str, eps=None, grid=None, tol=None, workers=None):
    pair = _pair(problem)
    grid = grid or problem.grid or _default_grid(pair)
    eps = tuple(eps if eps is not None else (problem.eps or (0.0,) + DEFAULT_EPS))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rep = ssf_table(pair, _grid_points(grid), eps, problem.tol, mapper=pool.map)
    limit = 1e-6 if tol is None else tol
    ok = rep.max_residual <= limit
    if fmt == "csv":
        return to_csv(rep.columns, rep.rows), ok
    return to_json({
        "columns": rep.columns,
        "rows": rep.rows,
        "nudged": [list(x) for x in rep.nudged],
        "max_residual": rep.max_residual,
        "passed": ok,
    }), ok


# --------------------------------------------------------------------------
# argument handling
# --------------------------------------------------------------------------


def _floats(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers, got {text!r}") from None


def _grid(text):
    parts = text.split(",")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except (ValueError, IndexError):
        raise argparse.ArgumentTypeError(f"expected min,max,count, got {text!r}") from None
    if len(parts) != 3 or count < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"expected min,max,count with count >= 1 and min <= max, got {text!r}")
    return lo, hi, count


def _suites(text):
    return tuple(s.strip() for s in text.split(",") if s.strip())


def build_parser():
    parser = argparse.ArgumentParser(prog="xishift", description="Verify Xi-operator trace identities on matrices.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("verify", "run verification suites and write a report"),
        ("ssf", "tabulate the spectral shift function and its representations"),
        ("flow", "write the crossing profile of S + A + tB"),
        ("bk", "write the scattering matrix determinant report"),
    ):
        sp = sub.add_parser(name, help=helptext)
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--in", dest="input", metavar="PATH", help="problem JSON file")
        src.add_argument("--random", type=int, metavar="N", help="generate a random problem of dimension N")
        sp.add_argument("--seed", type=int, default=0, help="seed for --random (default 0)")
        sp.add_argument("--kind", choices=("flow", "pair"), help="kind of problem for --random")
        sp.add_argument("--out", metavar="PATH", help="output file (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="json" if name != "flow" else "csv")
        sp.add_argument("--eps", type=_floats, help="comma separated eps values")
        sp.add_argument("--grid", type=_grid, help="lambda grid as min,max,count")
        sp.add_argument("--tol", type=float, help="override the pass tolerance of every entry")
        sp.add_argument("--suites", type=_suites, help="comma separated suites (default: all for the kind)")
        sp.add_argument("--timing", action="store_true", help="include per-entry wall time in the report")
        sp.add_argument("-v", "--verbose", action="store_true")
    return parser


def _random_problem(kind, n, seed):
    if n < 1:
        raise UsageError("--random needs N >= 1")
    rng = np.random.default_rng(seed)
    if kind == "flow":
        inst = generate.random_flow_instance(n, rng)
        return ProblemFile("flow", {"S": inst.S, "A": inst.A, "B": inst.B}, seed=seed)
    pair = generate.random_pair(n, rng)
    return ProblemFile("pair", {"H0": pair.H0, "V": pair.V}, seed=seed)


def _load(args):
    default_kind = "pair" if args.command == "ssf" else "flow"
    if args.input is not None:
        if args.kind is not None:
            raise UsageError("--kind only applies to --random")
        return parse_problem(os.fspath(args.input))
    return _random_problem(args.kind or default_kind, args.random, args.seed)


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _join_negative_values(argv):
    # let "--grid -2,2,5" and "--eps -1" through argparse's option detection
    out, it = [], iter(argv)
    for a in it:
        if a in ("--grid", "--eps", "--tol"):
            nxt = next(it, None)
            if nxt is not None and nxt.startswith("-") and len(nxt) > 1 and (nxt[1].isdigit() or nxt[1] == "."):
                out.append(f"{a}={nxt}")
                continue
            out.append(a)
            if nxt is not None:
                out.append(nxt)
        else:
            out.append(a)
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_negative_values(argv))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        workers = thread_cap()
        problem = _load(args)
        need = "pair" if args.command == "ssf" else ("flow" if args.command in ("flow", "bk") else None)
        if need and problem.kind != need:
            raise UsageError(f"command {args.command!r} needs a problem of kind {need!r}, got {problem.kind!r}")
        if args.command == "verify":
            suites = args.suites if args.suites is not None else (FLOW_SUITES if problem.kind == "flow" else PAIR_SUITES)
            report = cmd_verify(problem, suites, args.eps, args.grid, args.tol, workers)
            text = report.to_csv(args.timing) if args.format == "csv" else report.to_json(args.timing)
            ok = report.ok
        elif args.command == "ssf":
            text, ok = ssf_output(problem, args.format, args.eps, args.grid, args.tol, workers)
        elif args.command == "flow":
            text, ok = flow_output(problem, args.format), True
        else:
            text, ok = bk_output(problem, args.format)
    except (UsageError, XiShiftError, OSError) as exc:
        print(f"xishift: error: {exc}", file=sys.stderr)
        return 2
    _emit(text, args.out)
    return 0 if ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
