"""Batch command line front end."""
from __future__ import annotations

import argparse
import functools
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import io as dio
from .config import ExperimentConfig, load_config
from .errors import BudgetError, ConfigError, DiocurveError

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


def _pool_map(fn, units, workers: int):
    """Ordered map; the output order never depends on the worker count."""
    if workers <= 1 or len(units) <= 1:
        return [fn(u) for u in units]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, units))


def _guarded(fn, unit):
    try:
        return fn(unit)
    except BudgetError as e:
        return {"_budget": str(e), "unit": unit[1:]}


def _budget_guard(fn):
    """Wrap a work unit so budget exhaustion comes back as a marker; stays picklable."""
    return functools.partial(_guarded, fn)


class Run:
    def __init__(self, cfg: ExperimentConfig, out: Path, workers: int):
        self.cfg = cfg
        self.out = out
        self.workers = workers
        self.h = cfg.hash
        out.mkdir(parents=True, exist_ok=True)

    def csv(self, name, cols, rows):
        return dio.write_csv(self.out / name, cols, rows, self.h)

    def jsonl(self, name, recs):
        return dio.write_jsonl(self.out / name, recs, self.h)


def _split_budget(results):
    ok = [r for r in results if not (isinstance(r, dict) and "_budget" in r)]
    bad = [r for r in results if isinstance(r, dict) and "_budget" in r]
    return ok, bad


# ubiquity -------------------------------------------------------------------

def _ubiquity_unit(unit):
    data, i = unit
    from .ubiquity import coverage_sweep, default_J_list
    cfg = ExperimentConfig(data)
    u = data["ubiquity"]
    curve = cfg.curve()
    label, lam = cfg.shifts()[i]
    J = default_J_list(curve, data["seed"], tuple(u["J_lengths"]), u["J_per_length"])
    t0, t1 = u["t_range"]
    rep = coverage_sweep(curve, lam, range(t0, t1 + 1), J, u["kappa"], u["calibration_t"],
                         u["target"], data["budget"])
    return label, rep


def cmd_ubiquity(run: Run) -> int:
    cfg = run.cfg
    fn = _budget_guard(_ubiquity_unit)
    res = _pool_map(fn, [(cfg.data, i) for i in range(len(cfg["shifts"]))], run.workers)
    res, bad = _split_budget(res)
    k_min = cfg["ubiquity"]["k_min"]
    rows, recs, plot, series = [], [], [], []
    passed = True
    for label, rep in res:
        for r in rep.records:
            rows.append({"shift": label, **r})
        by_t = {}
        for r in rep.records:
            by_t[r["t"]] = min(by_t.get(r["t"], 1.0), r["ratio"])
        for t, v in by_t.items():
            plot.append({"shift": label, "t": t, "min_ratio": v})
        series.append({"x": list(by_t), "y": list(by_t.values()), "label": f"lambda={label}", "style": "line"})
        ok = rep.liminf_proxy >= k_min
        passed &= ok
        recs.append({"shift": label, "kappa": rep.kappa, "calibration_t": rep.calibration_t,
                     "liminf_proxy": rep.liminf_proxy, "k_min": k_min, "pass": ok,
                     "rho_regular": rep.rho_regular,
                     "min_ratio_by_J": [[a, b, v] for (a, b), v in rep.min_ratio_by_J.items()]})
    cols = ["shift", "t", "Q", "kappa", "radius", "J_lo", "J_hi", "covered", "ratio"]
    run.csv("ubiquity.csv", cols, rows)
    run.csv("ubiquity_plot.csv", ["shift", "t", "min_ratio"], plot)
    run.jsonl("ubiquity.jsonl", recs + [{"budget_exhausted": b["_budget"], "partial": True} for b in bad])
    dio.write_svg(run.out / "ubiquity.svg", series, "coverage ratio (min over J)", "t", "ratio",
                  logx=False, logy=False)
    for r in recs:
        print(f"ubiquity lambda={r['shift']}: kappa={r['kappa']:.6g} liminf proxy={r['liminf_proxy']:.4f} "
              f"{'PASS' if r['pass'] else 'FAIL'}")
    if bad:
        return EXIT_BUDGET
    return EXIT_PASS if passed else EXIT_FAIL


# dimension ------------------------------------------------------------------

def _dimension_unit(unit):
    data, i, v = unit
    from .dimension import box_dimension, build_stage, default_scales, svolume_critical_exponent
    cfg = ExperimentConfig(data)
    d = data["dimension"]
    curve = cfg.curve()
    label, lam = cfg.shifts()[i]
    scales = default_scales(*d["scales"])
    stages = None
    if d["mode"] == "survivor":
        t0, t1 = d["stage_t"]
        stages = [build_stage(curve, lam, v, t, budget=data["budget"]) for t in range(t0, t1 + 1)]
    est = box_dimension(curve, lam, v, scales, d["mode"], stages, d["survivors"], data["budget"])
    if d["svolume_t"]:
        t0, t1 = d["svolume_t"]
        st = [build_stage(curve, lam, v, t, keep=False, budget=data["budget"]) for t in range(t0, t1 + 1)]
        est.s_star = svolume_critical_exponent(st).s_star
    return label, est


def cmd_dimension(run: Run) -> int:
    cfg = run.cfg
    d = cfg["dimension"]
    units = [(cfg.data, i, float(v)) for i in range(len(cfg["shifts"])) for v in d["v_list"]]
    res, bad = _split_budget(_pool_map(_budget_guard(_dimension_unit), units, run.workers))
    tol = d["tolerance"]
    rows, counts, recs, series = [], [], [], []
    passed = True
    for label, e in res:
        within = abs(e.slope - e.target) <= tol
        floor = e.slope >= e.lower_target - tol
        passed &= within and floor
        rows.append({"shift": label, "v": e.v, "mode": e.mode, "target": e.target,
                     "lower_target": e.lower_target, "slope": e.slope, "residual": e.residual,
                     "error": e.error, "s_star": e.s_star, "within_tolerance": within,
                     "above_floor": floor})
        for j, (sc, n) in enumerate(zip(e.scales, e.counts)):
            counts.append({"shift": label, "v": e.v, "scale": sc, "count": n,
                           "height": e.meta.get("heights", [None] * len(e.scales))[j]})
        recs.append({"shift": label, "v": e.v, "mode": e.mode, "scales": e.scales, "counts": e.counts,
                     "slope": e.slope, "intercept": e.intercept, "residual": e.residual,
                     "target": e.target, "lower_target": e.lower_target, "s_star": e.s_star,
                     "zero_counts": e.zero_counts, "monotone": e.monotone, "meta": e.meta})
        series.append({"x": [1 / s for s in e.scales], "y": e.counts,
                       "label": f"{label} v={e.v:g}", "style": "line"})
    run.csv("dimension.csv", ["shift", "v", "mode", "target", "lower_target", "slope", "residual", "error",
                              "s_star", "within_tolerance", "above_floor"], rows)
    run.csv("dimension_counts.csv", ["shift", "v", "scale", "count", "height"], counts)
    run.jsonl("dimension.jsonl", recs + [{"budget_exhausted": b["_budget"], "partial": True} for b in bad])
    dio.write_svg(run.out / "dimension.svg", series, "box counts", "1/eps", "N(eps)")
    for r in rows:
        print(f"dimension lambda={r['shift']} v={r['v']:g}: slope={r['slope']:.4f} target={r['target']:.4f} "
              f"{'PASS' if r['within_tolerance'] and r['above_floor'] else 'FAIL'}")
    if bad:
        return EXIT_BUDGET
    return EXIT_PASS if passed else EXIT_FAIL


# count ----------------------------------------------------------------------

def _count_unit(unit):
    data, i, delta, H = unit
    from .counting import count_N
    cfg = ExperimentConfig(data)
    c = data["count"]
    label, lam = cfg.shifts()[i]
    return label, count_N(cfg.curve(), lam, H, delta, c["v"], c["convention"], data["budget"])


def cmd_count(run: Run) -> int:
    cfg = run.cfg
    c = cfg["count"]
    units = [(cfg.data, i, float(dl), int(H)) for i in range(len(cfg["shifts"]))
             for dl in c["deltas"] for H in c["H_list"]]
    res, bad = _split_budget(_pool_map(_budget_guard(_count_unit), units, run.workers))
    rows = []
    base = {}
    passed = True
    for label, r in res:
        key = (label, r.delta)
        base.setdefault(key, r.ratio)
        ok = r.ratio <= c["growth_cap"] * base[key]
        passed &= ok
        rows.append({"shift": label, "H": r.H, "delta": r.delta, "v": r.v, "convention": r.convention,
                     "count": r.count, "count_upper": r.count_upper, "ratio": r.ratio,
                     "ratio_upper": r.ratio_upper, "bounded": ok})
    run.csv("count.csv", ["shift", "H", "delta", "v", "convention", "count", "count_upper", "ratio",
                          "ratio_upper", "bounded"], rows)
    run.jsonl("count.jsonl", rows + [{"budget_exhausted": b["_budget"], "partial": True} for b in bad])
    print(f"count: {sum(r['bounded'] for r in rows)}/{len(rows)} cells bounded")
    if bad:
        return EXIT_BUDGET
    return EXIT_PASS if passed else EXIT_FAIL


# construct ------------------------------------------------------------------

def construct_points(data: dict, Q: int) -> list:
    k = data["construct"]
    if k["xi"] is not None:
        return [float(x) for x in k["xi"]]
    rng = np.random.default_rng([int(data["seed"]), int(Q)])
    lo, hi = k["xi_range"]
    return rng.uniform(lo, hi, int(k["xi_count"])).tolist()


def _construct_unit(unit):
    data, i, Q = unit
    from .construct import nearby_resonant
    cfg = ExperimentConfig(data)
    k = data["construct"]
    curve = cfg.curve()
    label, lam = cfg.shifts()[i]
    xis = construct_points(data, Q)
    traces = [nearby_resonant(x, curve, lam, Q, k["delta"], k["variant"]) for x in xis]
    # the other slope target is run too so both outcomes are on record
    other = "n+1" if k["variant"] == "printed" else "printed"
    alt = [nearby_resonant(x, curve, lam, Q, k["delta"], other) for x in xis]
    alt = [t for t in alt if not t.exceptional]
    alt_rate = sum(t.satisfies_target for t in alt) / len(alt) if alt else 0.0
    return label, Q, traces, alt_rate


def cmd_construct(run: Run) -> int:
    cfg = run.cfg
    k = cfg["construct"]
    units = [(cfg.data, i, int(Q)) for i in range(len(cfg["shifts"])) for Q in k["Q_list"]]
    res, bad = _split_budget(_pool_map(_budget_guard(_construct_unit), units, run.workers))
    rows, recs = [], []
    passed = True
    first, last = {}, {}
    for label, Q, traces, alt_rate in res:
        ne = [t for t in traces if not t.exceptional]
        ok = [t for t in ne if t.satisfies_target]
        rate = len(ok) / len(ne) if ne else 0.0
        K1 = max((t.constants.get("K1", math.nan) for t in ne), default=math.nan)
        K2 = max((t.constants.get("K2", math.nan) for t in ne), default=math.nan)
        rK1 = max((t.realized_K1 for t in ok), default=math.nan)
        rK2 = max((t.realized_K2 for t in ok), default=math.nan)
        good = rate >= k["min_success"]
        passed &= good
        first.setdefault(label, (K1, K2))
        last[label] = (K1, K2)
        rows.append({"shift": label, "Q": Q, "points": len(traces), "exceptional": len(traces) - len(ne),
                     "successes": len(ok), "rate": rate, "max_K1": K1, "max_K2": K2,
                     "max_realized_K1": rK1, "max_realized_K2": rK2, "rate_ok": good,
                     "other_variant_rate": alt_rate})
        for t in traces:
            recs.append({"shift": label, **t.to_record()})
    growth = {}
    for label in first:
        g1 = last[label][0] / first[label][0]
        g2 = last[label][1] / first[label][1]
        growth[label] = (g1, g2)
        passed &= g1 <= k["constant_growth"] and g2 <= k["constant_growth"]
    run.csv("construct.csv", ["shift", "Q", "points", "exceptional", "successes", "rate", "max_K1", "max_K2",
                              "max_realized_K1", "max_realized_K2", "rate_ok", "other_variant_rate"], rows)
    run.jsonl("construct.jsonl", recs + [{"budget_exhausted": b["_budget"], "partial": True} for b in bad])
    for r in rows:
        print(f"construct lambda={r['shift']} Q={r['Q']}: {r['successes']}/{r['points'] - r['exceptional']} "
              f"non-exceptional succeed ({r['rate']:.3f}; other slope target {r['other_variant_rate']:.3f})")
    for label, (g1, g2) in growth.items():
        print(f"construct lambda={label}: K1 growth {g1:.3f}, K2 growth {g2:.3f}")
    if bad:
        return EXIT_BUDGET
    return EXIT_PASS if passed else EXIT_FAIL


# covers ---------------------------------------------------------------------

def _covers_unit(unit):
    data, i, t = unit
    from .dimension import build_stage, classify, incidence_run
    cfg = ExperimentConfig(data)
    cv = data["covers"]
    curve = cfg.curve()
    label, lam = cfg.shifts()[i]
    rep = incidence_run(curve, lam, cv["v"], t, cv["epsilon1"], cv["threshold_constant"], data["budget"])
    cls = None
    if t <= cv["classify_t_max"]:
        st = build_stage(curve, lam, cv["v"], t, budget=data["budget"])
        cls = classify(st, cv["epsilon"], cv["epsilon1"])
    return label, t, rep, cls


def cmd_covers(run: Run) -> int:
    cfg = run.cfg
    cv = cfg["covers"]
    units = [(cfg.data, i, int(t)) for i in range(len(cfg["shifts"])) for t in cv["t_list"]]
    res, bad = _split_budget(_pool_map(_budget_guard(_covers_unit), units, run.workers))
    rows, crow, recs = [], [], []
    violations = 0
    for label, t, rep, cls in res:
        violations += len(rep.violations)
        rows.append({"shift": label, "t": t, "cells": rep.ncells, "class_II": rep.class_II,
                     "segments": rep.segments, **rep.cases})
        for dg in rep.diagnostics:
            recs.append({"shift": label, "t": t, "cell": list(dg.cell), "count": dg.count, "case": dg.case,
                         "plane": dg.plane, "line_point": dg.line_point, "line_direction": dg.line_direction,
                         "quadruple": dg.quadruple, "x": dg.x, "slope_gap": dg.slope_gap,
                         "curve_gap": dg.curve_gap, "T": dg.T, "bounds": dg.bounds})
        if cls is not None:
            for c in (1, 2, 3):
                crow.append({"shift": label, "t": t, "class": f"A{c}", "pieces": cls.counts[c],
                             "measure": cls.measures[c], "partition_error": cls.partition_error})
    run.csv("covers.csv", ["shift", "t", "cells", "class_II", "segments", "empty", "point", "line", "plane",
                           "violation"], rows)
    run.csv("classes.csv", ["shift", "t", "class", "pieces", "measure", "partition_error"], crow)
    run.jsonl("incidence.jsonl", recs + [{"budget_exhausted": b["_budget"], "partial": True} for b in bad])
    print(f"covers: {violations} class-II cells with four affinely independent triples")
    if bad:
        return EXIT_BUDGET
    return EXIT_PASS if violations == 0 else EXIT_FAIL


# divergence -----------------------------------------------------------------

def divergence_grid(data: dict) -> list:
    dv = data["divergence"]
    n = int(dv["n"])
    grid = []
    for v in dv["v_list"]:
        b = (n + 1) / (float(v) + 1)
        for off in dv["s_offsets"]:
            s = min(b + float(off), 1.0)
            if s > 0:
                grid.append((float(v), s))
    return grid


def cmd_divergence(run: Run) -> int:
    from .funcspace import ApproxFunction
    from .ubiquity import divergence_diagnostic
    dv = run.cfg["divergence"]
    rows = []
    for v, s in divergence_grid(run.cfg.data):
        r = divergence_diagnostic(ApproxFunction.power(v), s, int(dv["n"]), int(dv["q_max"]))
        rows.append({"v": v, "s": s, "threshold": r.threshold, "exact": r.exact, "numeric": r.numeric,
                     "slope": r.slope, "match": r.numeric == r.exact})
    run.csv("divergence.csv", ["v", "s", "threshold", "exact", "numeric", "slope", "match"], rows)
    run.jsonl("divergence.jsonl", rows)
    ok = sum(r["match"] for r in rows)
    print(f"divergence: {ok}/{len(rows)} verdicts match the threshold")
    return EXIT_PASS if ok == len(rows) else EXIT_FAIL


COMMANDS = {
    "ubiquity": cmd_ubiquity,
    "dimension": cmd_dimension,
    "count": cmd_count,
    "construct": cmd_construct,
    "covers": cmd_covers,
    "divergence": cmd_divergence,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="diocurve", description="Diophantine approximation experiments on curves")
    p.add_argument("--version", action="version", version=f"diocurve {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="YAML experiment file")
        s.add_argument("--out", help="output directory (default: $DIOCURVE_OUT or ./out)")
        s.add_argument("--workers", type=int, help="worker processes")
        s.add_argument("--budget", type=int, help="cap on enumeration work (roots or triples examined)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    over = {}
    if args.workers is not None:
        over["workers"] = args.workers
    if args.budget is not None:
        over["budget"] = args.budget
    try:
        cfg = load_config(args.config, over)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(args.out or os.environ.get("DIOCURVE_OUT", "out"))
    run = Run(cfg, out, cfg["workers"])
    try:
        return COMMANDS[args.command](run)
    except BudgetError as e:
        print(f"budget exhausted: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DiocurveError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
