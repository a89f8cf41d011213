"""Command-line experiment runner.

Verbs: build-set, norms, extend, verify, roundtrip, report.  Configuration
comes from a JSON file (--config); common flags override it.  Outputs are
UTF-8 JSON / CSV / SVG under --out.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import experiments, report as reporting
from .corpus import atom_corpus
from .dset import audit_regularity, build_dset, export_atoms_csv
from .exceptions import ConfigError, FractraceError
from .extension import trace
from .grids import GridFunction
from .norms import besov_norm_on_set


def _load_config(args):
    cfg = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.depth is not None:
        if cfg.get("ifs"):
            cfg["ifs"]["depth"] = args.depth
        else:
            cfg["depth"] = args.depth
    if args.grid is not None:
        cfg.setdefault("grid", {})["size"] = args.grid
    if args.out is not None:
        cfg["output_dir"] = args.out
    if getattr(args, "suite", None):
        cfg["suites"] = list(args.suite)
    return experiments.ExperimentConfig.from_dict(cfg)


def _outdir(config):
    os.makedirs(config.output_dir, exist_ok=True)
    return config.output_dir


def cmd_build_set(args):
    config = _load_config(args)
    out = _outdir(config)
    S = build_dset(config.ifs)
    export_atoms_csv(S, os.path.join(out, "atoms.csv"))
    audit = audit_regularity(S, samples=min(200, len(S.atoms)), rng_seed=config.seed)
    summary = {
        "atoms": len(S.atoms),
        "dimension": S.d,
        "spacing": S.spacing,
        "depth": config.ifs.depth,
        "regularity": {
            "c1": audit.c1,
            "c2": audit.c2,
            "r_range": list(audit.r_range),
            "regular": audit.regular,
        },
    }
    with open(os.path.join(out, "set.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=1)
    print(f"built {len(S.atoms)} atoms, d = {S.d:.4f}; wrote {out}/atoms.csv")
    return 0


def cmd_norms(args):
    config = _load_config(args)
    out = _outdir(config)
    S = build_dset(config.ifs)
    corpus = atom_corpus(S, config.params.k, count=args.count, seed=config.seed)
    results = {}
    per_scale = {}
    for name, f in corpus:
        rep = besov_norm_on_set(f, S, config.params)
        results[name] = rep.to_dict()
        per_scale[name] = rep.per_scale
        rep.save_per_scale_csv(os.path.join(out, f"per_scale_{name}.csv"))
    with open(os.path.join(out, "norms.json"), "w", encoding="utf-8") as fh:
        json.dump(results, fh, sort_keys=True, indent=1)
    reporting.plot_per_scale(per_scale, os.path.join(out, "per_scale.svg"))
    print(f"wrote {len(results)} norm reports to {out}/norms.json")
    return 0


def cmd_extend(args):
    config = _load_config(args)
    out = _outdir(config)
    bench = experiments.Workbench(config)
    S = bench.dset()
    corpus = atom_corpus(S, config.params.k, count=max(args.index + 1, 1), seed=config.seed)
    name, f = corpus[args.index]
    ext, grid = bench.extender(config.ifs.depth, config.params.k, config.grid_size)
    fld = ext.transform(np.asarray(f), grid)
    fld.grid.save_csv(os.path.join(out, f"extension_{name}.csv"))
    fld.grid.save_binary(
        os.path.join(out, f"extension_{name}.f64"),
        os.path.join(out, f"extension_{name}.json"),
    )
    tr = trace(fld, S, [4 * grid.step, 2 * grid.step, grid.step])
    print(
        f"extended '{name}' on a {config.grid_size}^2 grid; "
        f"max traceback error {float(np.max(np.abs(tr.values - f))):.3e}; wrote {out}/"
    )
    return 0


def cmd_verify(args):
    config = _load_config(args)
    if not config.suites:
        config = experiments.ExperimentConfig(
            ifs=config.ifs,
            params=config.params,
            grid_size=config.grid_size,
            margin=config.margin,
            delta=config.delta,
            seed=config.seed,
            suites=[],
            output_dir=config.output_dir,
        )
    rep = experiments.run(config)
    path = reporting.write_outputs(rep, _outdir(config))
    for rec in rep.records:
        print(f"[{rec['status']:>11}] {rec['name']}  (measured: {rec['measured_constant']})")
    print(f"report: {path}")
    return 1 if rep.failed else 0


def cmd_roundtrip(args):
    config = _load_config(args)
    config.suites = ["roundtrip"]
    rep = experiments.run(config)
    path = reporting.write_outputs(rep, _outdir(config))
    for rec in rep.records:
        print(f"[{rec['status']:>11}] {rec['name']}  (measured: {rec['measured_constant']})")
    print(f"report: {path}")
    return 1 if rep.failed else 0


def cmd_report(args):
    config = _load_config(args)
    out = _outdir(config)
    src = args.input or os.path.join(out, "report.json")
    with open(src, encoding="utf-8") as fh:
        data = json.load(fh)
    ratios = [
        r.get("measured_constant")
        for r in data.get("records", [])
        if isinstance(r.get("measured_constant"), (int, float))
    ]
    reporting.plot_ratio_histogram(ratios, os.path.join(out, "ratios.svg"))
    counts = {}
    for r in data.get("records", []):
        counts[r["status"]] = counts.get(r["status"], 0) + 1
    print(f"{src}: {counts}")
    return 0 if not counts.get("fail") else 1


def build_parser():
    ap = argparse.ArgumentParser(
        prog="fractrace",
        description="Local polynomial approximation norms, Whitney extension and "
        "trace operators on fractal atom clouds, with verification suites.",
    )
    ap.add_argument("--config", help="JSON experiment config")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("--depth", type=int, default=None, help="IFS generation count")
    ap.add_argument("--grid", type=int, default=None, help="grid points per axis")
    sub = ap.add_subparsers(dest="verb", required=True)

    sub.add_parser("build-set", help="build the atom cloud, audit regularity")
    p_norms = sub.add_parser("norms", help="corpus Besov norms on the set")
    p_norms.add_argument("--count", type=int, default=8)
    p_ext = sub.add_parser("extend", help="extend a corpus function to the grid")
    p_ext.add_argument("--index", type=int, default=0)
    p_verify = sub.add_parser("verify", help="run verification suites")
    p_verify.add_argument("--suite", action="append", help="suite name (repeatable)")
    sub.add_parser("roundtrip", help="trace-extension round-trip ratios")
    p_rep = sub.add_parser("report", help="summarize an existing report")
    p_rep.add_argument("--input", default=None)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    handlers = {
        "build-set": cmd_build_set,
        "norms": cmd_norms,
        "extend": cmd_extend,
        "verify": cmd_verify,
        "roundtrip": cmd_roundtrip,
        "report": cmd_report,
    }
    try:
        return handlers[args.verb](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FractraceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
