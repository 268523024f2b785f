"""Command-line entry point.

Subcommands expose the kernel evaluators, the regularized propagators, the
forest enumeration, the seeded estimate sweeps, and the flow experiments.
Outputs are machine-readable: a versioned JSON summary on stdout (and on
disk) plus CSV series where a run produces one.  A fixed seed makes sweep
outputs byte-identical because every sample draws from its own
counter-based substream.

Exit codes: 0 on success, 1 when a sweep reports violations, 2 on usage
errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import flow as fl
from . import forests as fo
from . import weights as wt
from .kernels import BoundaryKind, Wall, bulk, star_kernel, surface_kernel
from .propagators import (CutoffPair, Part, PropagatorQuery,
                          closed_form_propagator, flowing_propagator)
from .kernels import KernelContext

SCHEMA = "boundaryflow/1"

_WALLS = {"bulk": Wall.BULK, "dirichlet": Wall.DIRICHLET,
          "neumann": Wall.NEUMANN, "robin": Wall.ROBIN}


def _bc(name: str, c: float) -> BoundaryKind:
    wall = _WALLS[name]
    if wall is Wall.ROBIN:
        return BoundaryKind(wall, c)
    return BoundaryKind(wall)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, float) and (np.isnan(x) or np.isinf(x)):
        return repr(x)
    return x


def _emit(args, payload: dict, csv_rows=None, csv_fields=None,
          name: str = "run") -> None:
    payload = {"schema": SCHEMA, **_jsonable(payload)}
    text = json.dumps(payload, sort_keys=True, indent=2)
    print(text)
    outdir = args.output_dir or os.environ.get("BOUNDARYFLOW_OUTDIR")
    if outdir:
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.json").write_text(text + "\n")
        if csv_rows is not None:
            with open(out / f"{name}.csv", "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=csv_fields)
                w.writeheader()
                for row in csv_rows:
                    w.writerow({k: repr(v) if isinstance(v, float) else v
                                for k, v in row.items()})
    elif csv_rows is not None:
        w = csv.DictWriter(sys.stdout, fieldnames=csv_fields)
        w.writeheader()
        for row in csv_rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v
                        for k, v in row.items()})


def _cmd_kernel(args) -> int:
    bc = _bc(args.bc, args.c)
    if args.surface:
        value = float(surface_kernel(bc, args.tau, args.z, args.zp))
    elif bc.kind is Wall.BULK:
        value = float(bulk(args.tau, args.z, args.zp))
    else:
        value = float(star_kernel(bc, args.tau, args.z, args.zp))
    _emit(args, {"command": "kernel", "bc": args.bc, "c": args.c,
                 "tau": args.tau, "z": args.z, "zp": args.zp,
                 "surface": bool(args.surface), "value": value},
          name="kernel")
    return 0


def _cmd_prop(args) -> int:
    bc = _bc(args.bc, args.c)
    ctx = KernelContext(mass=args.mass, bc=bc)
    q = PropagatorQuery(p=args.p, z=args.z, zp=args.zp, ctx=ctx,
                        cut=CutoffPair(args.lam, args.lambda0))
    value = float(flowing_propagator(q, Part.FULL))
    closed = float(closed_form_propagator(bc, args.p, args.z, args.zp,
                                          args.mass))
    _emit(args, {"command": "prop", "bc": args.bc, "c": args.c,
                 "p": args.p, "z": args.z, "zp": args.zp,
                 "mass": args.mass, "lam": args.lam,
                 "lambda0": args.lambda0, "value": value,
                 "closed_form_full_range": closed}, name="prop")
    return 0


def _cmd_forest(args) -> int:
    forests = list(fo.enumerate_forests(args.s, args.l,
                                        max_internal=args.max_internal))
    rows = [{"index": i, "n_trees": len(f.trees),
             "v2": sum(t.v2 for t in f.all_trees())}
            for i, f in enumerate(forests)]
    _emit(args, {"command": "forest", "s": args.s, "l": args.l,
                 "max_internal": args.max_internal,
                 "count": len(forests)},
          csv_rows=rows, csv_fields=["index", "n_trees", "v2"],
          name="forest")
    return 0


_LEMMAS = {
    "reduction": lambda a: wt.check_reduction_lemma(
        n_samples=a.samples, seed=a.seed, mass=a.mass),
    "fusion-forest": lambda a: wt.check_fusion_lemmas(
        "forest_forest", n_samples=a.samples, seed=a.seed, mass=a.mass),
    "fusion-tree": lambda a: wt.check_fusion_lemmas(
        "tree_forest", n_samples=a.samples, seed=a.seed, mass=a.mass),
    "chain": lambda a: wt.check_chain_collapse(
        n_samples=a.samples, seed=a.seed, mass=a.mass),
    "testfunction": lambda a: wt.check_testfunction_lemmas(
        n_samples=a.samples, seed=a.seed, mass=a.mass),
}


def _cmd_lemma(args) -> int:
    report = _LEMMAS[args.lemma](args)
    reports = report if "ratios" not in report else {args.lemma: report}
    violations = 0
    rows = []
    for name, rep in sorted(reports.items()):
        if not isinstance(rep, dict) or "ratios" not in rep:
            continue
        violations += rep.get("violations", 0)
        for i, r in enumerate(rep["ratios"]):
            rows.append({"sweep": name, "index": i, "ratio": float(r)})
    summary = {k: {kk: vv for kk, vv in v.items() if kk != "ratios"}
               if isinstance(v, dict) else v
               for k, v in reports.items()}
    _emit(args, {"command": "lemma", "lemma": args.lemma,
                 "samples": args.samples, "seed": args.seed,
                 "violations": violations, "reports": summary},
          csv_rows=rows, csv_fields=["sweep", "index", "ratio"],
          name=f"lemma_{args.lemma}")
    return 0 if violations == 0 else 1


def _cmd_flow_tadpole(args) -> int:
    if args.bc == "bulk":
        cts = fl.integrate_bulk_tadpole(args.coupling, args.mass,
                                        args.lambda0)
        rows = [{"lam": r["lam"], "a": r["a"]} for r in cts.series]
        fields = ["lam", "a"]
        summary = {"a_at_lambda0": cts.meta["a_at_lam0"],
                   "roundtrip_residual": cts.meta["roundtrip_residual"]}
    else:
        cts = fl.integrate_surface_tadpole(args.coupling, args.mass,
                                           args.c, args.bc, args.lambda0)
        rows = [{"lam": r["lam"], "s": r["s"], "e": r["e"], "h": r["h"]}
                for r in cts.series]
        fields = ["lam", "s", "e", "h"]
        summary = {"surface": cts.surface,
                   "roundtrip_residual": cts.meta["roundtrip_residual"],
                   "eh_gap": cts.meta["eh_gap"]}
    _emit(args, {"command": "flow tadpole", "bc": args.bc, "c": args.c,
                 "coupling": args.coupling, "mass": args.mass,
                 "lambda0": args.lambda0, **summary},
          csv_rows=rows, csv_fields=fields, name="tadpole")
    return 0


def _cmd_flow_fourpoint(args) -> int:
    obj = fl.one_loop_four_point(args.coupling, args.mass, args.bc,
                                 lam=args.lam, lam0=args.lambda0)
    z = obj.grid.z_nodes
    c = obj.local_part["c_profile"]
    rows = [{"z": float(zz), "c": float(cc)} for zz, cc in zip(z, c)]
    _emit(args, {"command": "flow fourpoint", "bc": args.bc,
                 "coupling": args.coupling, "mass": args.mass,
                 "lam": args.lam, "lambda0": args.lambda0,
                 "v_surface": obj.local_part["v_surface"],
                 "c_max": float(np.max(np.abs(c)))},
          csv_rows=rows, csv_fields=["z", "c"], name="fourpoint")
    return 0


def _cmd_flow_robin_limit(args) -> int:
    rep = fl.robin_dirichlet_limit(args.coupling, args.mass, args.lam,
                                   args.lambda0, args.c_list)
    rows = [{"c": r["c"], "value": r["value"], "gap": r["gap"]}
            for r in rep["rows"]]
    _emit(args, {"command": "flow robin-limit", **rep},
          csv_rows=rows, csv_fields=["c", "value", "gap"],
          name="robin_limit")
    return 0 if rep["gaps_decreasing"] else 1


def _cmd_flow_amputation(args) -> int:
    if args.s_ct is None or args.e_ct is None:
        cts = fl.integrate_surface_tadpole(args.coupling, args.mass,
                                           args.c, "robin",
                                           args.lambda0).surface
        s_ct = cts["s"] if args.s_ct is None else args.s_ct
        e_ct = cts["e"] if args.e_ct is None else args.e_ct
    else:
        s_ct, e_ct = args.s_ct, args.e_ct
    rep = fl.amputation_comparison(s_ct, e_ct, args.c, args.mass,
                                   args.p, args.y1, args.y2)
    _emit(args, {"command": "flow amputation", "s_ct": s_ct, "e_ct": e_ct,
                 **rep}, name="amputation")
    return 0


def _cmd_flow_power_counting(args) -> int:
    if args.family == "both":
        rep = fl.power_counting_gap(args.coupling, args.mass)
        rep.pop("bulk", None)
        rep.pop("surface", None)
    else:
        rep = fl.power_counting_probe(args.family, args.r1, args.r2,
                                      args.coupling, args.mass)
        rep.pop("lams", None)
        rep.pop("moments", None)
    _emit(args, {"command": "flow power-counting", **rep},
          name="power_counting")
    return 0


def _add_common(p):
    p.add_argument("--config", type=str, default=None,
                   help="JSON file whose entries override flags")
    p.add_argument("--output-dir", type=str, default=None,
                   help="directory for JSON/CSV artifacts "
                        "(default: $BOUNDARYFLOW_OUTDIR)")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="boundaryflow")
    sub = ap.add_subparsers(dest="command", required=True)

    k = sub.add_parser("kernel", help="evaluate a heat kernel with a wall")
    k.add_argument("--bc", choices=list(_WALLS), default="bulk")
    k.add_argument("--c", type=float, default=0.0)
    k.add_argument("--tau", type=float, required=True)
    k.add_argument("--z", type=float, required=True)
    k.add_argument("--zp", type=float, required=True)
    k.add_argument("--surface", action="store_true",
                   help="evaluate only the wall part of the kernel")
    _add_common(k)
    k.set_defaults(func=_cmd_kernel)

    p = sub.add_parser("prop", help="evaluate a regularized propagator")
    p.add_argument("--bc", choices=list(_WALLS), default="bulk")
    p.add_argument("--c", type=float, default=0.0)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--z", type=float, required=True)
    p.add_argument("--zp", type=float, required=True)
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=1e-3)
    p.add_argument("--lambda0", type=float, default=1e3)
    _add_common(p)
    p.set_defaults(func=_cmd_prop)

    f = sub.add_parser("forest", help="enumerate admissible forests")
    f.add_argument("--s", type=int, required=True)
    f.add_argument("--l", type=int, required=True)
    f.add_argument("--max-internal", type=int, default=wt.MAX_INTERNAL)
    _add_common(f)
    f.set_defaults(func=_cmd_forest)

    m = sub.add_parser("lemma", help="run a seeded estimate sweep")
    m.add_argument("--lemma", choices=list(_LEMMAS), required=True)
    m.add_argument("--samples", type=int, default=100)
    m.add_argument("--mass", type=float, default=1.0)
    _add_common(m)
    m.set_defaults(func=_cmd_lemma)

    fw = sub.add_parser("flow", help="flow experiments")
    fsub = fw.add_subparsers(dest="flow_command", required=True)

    t = fsub.add_parser("tadpole")
    t.add_argument("--bc", choices=["bulk", "neumann", "robin"],
                   default="neumann")
    t.add_argument("--c", type=float, default=0.0)
    t.add_argument("--coupling", type=float, default=1.0)
    t.add_argument("--mass", type=float, default=1.0)
    t.add_argument("--lambda0", type=float, default=50.0)
    _add_common(t)
    t.set_defaults(func=_cmd_flow_tadpole)

    q = fsub.add_parser("fourpoint")
    q.add_argument("--bc", choices=["bulk", "neumann", "dirichlet"],
                   default="neumann")
    q.add_argument("--coupling", type=float, default=1.0)
    q.add_argument("--mass", type=float, default=1.0)
    q.add_argument("--lam", type=float, default=1.0)
    q.add_argument("--lambda0", type=float, default=20.0)
    _add_common(q)
    q.set_defaults(func=_cmd_flow_fourpoint)

    r = fsub.add_parser("robin-limit")
    r.add_argument("--coupling", type=float, default=1.0)
    r.add_argument("--mass", type=float, default=1.0)
    r.add_argument("--lam", type=float, default=1.0)
    r.add_argument("--lambda0", type=float, default=20.0)
    r.add_argument("--c-list", type=float, nargs="+",
                   default=[1.0, 10.0, 100.0, 1000.0])
    _add_common(r)
    r.set_defaults(func=_cmd_flow_robin_limit)

    a = fsub.add_parser("amputation")
    a.add_argument("--s-ct", type=float, default=None)
    a.add_argument("--e-ct", type=float, default=None)
    a.add_argument("--c", type=float, default=1.0)
    a.add_argument("--coupling", type=float, default=1.0)
    a.add_argument("--mass", type=float, default=1.0)
    a.add_argument("--p", type=float, default=0.0)
    a.add_argument("--y1", type=float, default=0.5)
    a.add_argument("--y2", type=float, default=0.7)
    a.add_argument("--lambda0", type=float, default=50.0)
    _add_common(a)
    a.set_defaults(func=_cmd_flow_amputation)

    w = fsub.add_parser("power-counting")
    w.add_argument("--family", choices=["bulk", "surface", "both"],
                   default="both")
    w.add_argument("--r1", type=int, default=0)
    w.add_argument("--r2", type=int, default=0)
    w.add_argument("--coupling", type=float, default=1.0)
    w.add_argument("--mass", type=float, default=1.0)
    _add_common(w)
    w.set_defaults(func=_cmd_flow_power_counting)

    return ap


def _apply_config(args) -> None:
    if getattr(args, "config", None):
        with open(args.config) as fh:
            overrides = json.load(fh)
        for key, val in overrides.items():
            attr = key.replace("-", "_")
            if not hasattr(args, attr):
                raise SystemExit(2)
            setattr(args, attr, val)


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        _apply_config(args)
    except SystemExit:
        return 2
    try:
        return args.func(args)
    except (ValueError, wt.CapacityError) as exc:
        print(json.dumps({"schema": SCHEMA, "error": str(exc)}),
              file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
