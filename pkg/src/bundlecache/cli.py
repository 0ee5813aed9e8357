"""Command line entry point: ``bundlecache <subcommand> ...``."""
from __future__ import annotations

import argparse
import logging
import os
import sys

from . import bounds, core, phases
from .distributed import VirtualCacheLayout, run_distributed
from .experiment import (SEED_ENV, ConfigError, VerifyConfig, load_config, presets,
                         run_experiment, summarize, verify_bounds)
from .output import emit_csv, emit_svg, rows_to_csv
from .policies import PolicyKind, run_policy
from .workloads import WorkloadError, WorkloadKind, WorkloadSpec, generate

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2


def _env_seed(default):
    env = os.environ.get(SEED_ENV)
    return int(env) if env is not None else default


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as f:
            f.write(text)


def cmd_gen(args):
    spec = WorkloadSpec(kind=args.kind, n=args.n, l=args.l, t=args.t, s=args.s,
                        candidates=args.candidates, k=args.k, h=args.h, m=args.m,
                        ensemble_size=args.ensemble, seed=_env_seed(args.seed))
    if spec.kind in (WorkloadKind.CYCLIC, WorkloadKind.DETERMINISTIC_ADVERSARY,
                     WorkloadKind.RANDOMIZED_ADVERSARY) and spec.k is None:
        raise ConfigError(f"--k is required for {spec.kind.value}")
    if spec.kind is WorkloadKind.RANDOMIZED_ADVERSARY and spec.h is None:
        raise ConfigError("--h is required for rand-adversary")
    _write(core.format_trace(generate(spec)), args.output)
    return EXIT_OK


def cmd_simulate(args):
    trace = core.read_trace(args.trace)
    mlog = run_policy(args.policy, trace, args.k, _env_seed(args.seed))
    _write(mlog.to_csv(), args.output)
    return EXIT_OK


def cmd_distributed(args):
    trace = core.read_trace(args.trace)
    layout = VirtualCacheLayout(args.k, args.l)
    mlog, _ = run_distributed(trace, args.k, args.l, args.policy, _env_seed(args.seed))
    trailer = [f"m={layout.num_caches} virtual_capacity={layout.virtual_capacity}"]
    _write(mlog.to_csv(trailer), args.output)
    return EXIT_OK


def cmd_phases(args):
    trace = core.read_trace(args.trace)
    threshold = args.threshold if args.threshold is not None else args.k + 1
    lines = ["phase_index,start,end,distinct_pages,new_pages"]
    lines += [",".join(map(str, row)) for row in phases.phase_table(trace, threshold)]
    _write("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_bounds(args):
    if not 1 <= args.l <= args.k:
        raise ConfigError(f"need 1 <= l <= k, got l={args.l} k={args.k}")
    rows = bounds.bound_table(args.k, args.h, args.l, args.kstar, args.n, args.r)
    if args.format == "csv":
        text = "bound,value\n" + "".join(f"{name},{v}\n" for name, v in rows)
    else:
        width = max(len(name) for name, _ in rows)
        text = "".join(f"{name:<{width}}  {v:.6f}\n" if isinstance(v, (int, float))
                       else f"{name:<{width}}  {v}\n" for name, v in rows)
    _write(text, args.output)
    return EXIT_OK


def cmd_sweep(args):
    if args.config:
        configs = [load_config(args.config)]
    else:
        configs = presets(args.preset, t=args.t)
    rows = []
    errors = []
    for cfg in configs:
        if args.repetitions is not None:
            cfg.repetitions = args.repetitions
        cfg.seed = _env_seed(cfg.seed)
        part = run_experiment(cfg, jobs=args.jobs, errors=errors)
        rows.extend(part)
        for (preset, pol, n, l, k), (mean, sd, cnt) in sorted(summarize(part).items()):
            logging.info("%s %-13s N=%d l=%d k=%d miss_ratio=%.4f sd=%.4f n=%d",
                         preset, pol, n, l, k, mean, sd, cnt)
    csv_path = args.csv or (configs[0].csv if args.config else None)
    if csv_path:
        emit_csv(rows, csv_path)
    else:
        sys.stdout.write(rows_to_csv(rows))
    svg_path = args.svg or (configs[0].svg if args.config else None)
    if svg_path and rows:
        for cfg in configs:
            part = [r for r in rows if r.preset == cfg.name]
            path = svg_path if len(configs) == 1 else svg_path.replace(".svg", f"-{cfg.name}.svg")
            if part:
                emit_svg(part, path, cfg.x_field, title=cfg.name)
    return EXIT_OK


def cmd_verify(args):
    vc = VerifyConfig(instances=args.instances, hk_instances=args.hk_instances,
                      marking_seeds=args.seeds, distributed_instances=args.distributed_instances,
                      seed=_env_seed(args.seed))
    report = verify_bounds(vc)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.ok else EXIT_VIOLATION


def build_parser():
    p = argparse.ArgumentParser(prog="bundlecache", description="File-bundle caching simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a trace file")
    g.add_argument("--kind", choices=[k.value for k in WorkloadKind], default="zipf")
    g.add_argument("--n", type=int, default=10_000)
    g.add_argument("--l", type=int, default=10)
    g.add_argument("--t", type=int, default=40_000)
    g.add_argument("--s", type=float, default=1.0)
    g.add_argument("--candidates", type=int, default=2000)
    g.add_argument("--k", type=int)
    g.add_argument("--h", type=int)
    g.add_argument("--m", type=int)
    g.add_argument("--ensemble", type=int, default=2000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("simulate", help="run one policy over a trace file")
    s.add_argument("--trace", required=True)
    s.add_argument("--policy", choices=[k.value for k in PolicyKind], default="lru")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="run a figure preset or a config file")
    src = w.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=["fig1", "fig2", "fig3", "fig4", "fig5"])
    src.add_argument("--config")
    w.add_argument("--t", type=int, help="override the number of queries")
    w.add_argument("--repetitions", type=int)
    w.add_argument("--jobs", type=int, default=1)
    w.add_argument("--csv")
    w.add_argument("--svg")
    w.set_defaults(func=cmd_sweep)

    d = sub.add_parser("distributed", help="l+1-cache virtual reduction over a trace file")
    d.add_argument("--trace", required=True)
    d.add_argument("--k", type=int, required=True)
    d.add_argument("--l", type=int, required=True)
    d.add_argument("--policy", choices=["lru", "marking"], default="lru")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("-o", "--output")
    d.set_defaults(func=cmd_distributed)

    ph = sub.add_parser("phases", help="print the phase partition of a trace")
    ph.add_argument("--trace", required=True)
    grp = ph.add_mutually_exclusive_group(required=True)
    grp.add_argument("--k", type=int)
    grp.add_argument("--threshold", type=int)
    ph.add_argument("-o", "--output")
    ph.set_defaults(func=cmd_phases)

    b = sub.add_parser("bounds", help="evaluate competitive-ratio bounds")
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--h", type=int)
    b.add_argument("--l", type=int, required=True)
    b.add_argument("--kstar", type=int)
    b.add_argument("--n", type=int)
    b.add_argument("--r", type=int)
    b.add_argument("--format", choices=["table", "csv"], default="table")
    b.add_argument("-o", "--output")
    b.set_defaults(func=cmd_bounds)

    v = sub.add_parser("verify", help="check bounds instance-wise against the exact optimum")
    v.add_argument("--instances", type=int, default=1000)
    v.add_argument("--hk-instances", type=int, default=200)
    v.add_argument("--distributed-instances", type=int, default=200)
    v.add_argument("--seeds", type=int, default=200)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, WorkloadError, core.TraceError, bounds.BoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
