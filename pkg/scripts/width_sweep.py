"""Empirical NTK against width for a pruned network and its unpruned control.

    python scripts/width_sweep.py --out results/width.csv
    python scripts/width_sweep.py --widths 32,128,512 --samples 16 --no-rescale
"""

import argparse
import json
import sys
import time
from pathlib import Path

from pruned_ntk.experiments import DEFAULT_WIDTHS, WidthSweepSpec, run_width_sweep


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--widths", default=",".join(map(str, DEFAULT_WIDTHS)))
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--rescale", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", type=Path, default=None, help="CSV path; metadata goes next to it as .json")
    args = p.parse_args(argv)

    spec = WidthSweepSpec(
        widths=tuple(int(w) for w in args.widths.split(",")),
        depth=args.depth,
        alpha=args.alpha,
        rescale=args.rescale,
        n_samples=args.samples,
        seed=args.seed,
        include_control=True,
        threads=args.threads,
    )
    t0 = time.perf_counter()
    result = run_width_sweep(spec)
    print(f"theta_inf = {result.metadata['theta_inf']:.6f}   ({time.perf_counter() - t0:.1f}s)", file=sys.stderr)
    print(f"{'alpha':>6} {'width':>6} {'mean':>10} {'std':>10} {'MAD':>10} {'limit':>10}", file=sys.stderr)
    for r in result.rows:
        print(f"{r.sweep_var:6.2f} {r.width:6d} {r.mean:10.5f} {r.std:10.5f} {r.mad:10.5f} {r.limit:10.5f}", file=sys.stderr)

    if args.out is None:
        sys.stdout.write(result.to_csv())
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(result.to_csv())
        args.out.with_suffix(".json").write_text(json.dumps(result.metadata, indent=2) + "\n")


if __name__ == "__main__":
    main()
