"""Run the figure presets and write one CSV and SVG per figure.

Example: python3 scripts/sweep_figures.py --figures fig1 fig2 --t 10000 --out results/
"""
import argparse
import logging
from pathlib import Path

from bundlecache.experiment import presets, run_experiment, summarize
from bundlecache.output import emit_csv, emit_svg


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--figures", nargs="+", default=["fig1", "fig2", "fig3", "fig4", "fig5"])
    ap.add_argument("--t", type=int, help="queries per trace (preset default otherwise)")
    ap.add_argument("--repetitions", type=int, default=5)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for fig in args.figures:
        for cfg in presets(fig, t=args.t):
            cfg.repetitions = args.repetitions
            rows = run_experiment(cfg, jobs=args.jobs)
            emit_csv(rows, out / f"{cfg.name}.csv")
            if rows:
                emit_svg(rows, out / f"{cfg.name}.svg", cfg.x_field, title=cfg.name)
            for (_, pol, n, l, k), (mean, sd, cnt) in sorted(summarize(rows).items()):
                logging.info("%-13s %-13s N=%-6d l=%-3d k=%-5d miss_ratio=%.4f sd=%.4f",
                             cfg.name, pol, n, l, k, mean, sd)


if __name__ == "__main__":
    main()
