"""Gap between the empirical and limiting NTK across keep-probabilities.

Width grows as d_ref/alpha (linear) or d_ref/alpha^2 (quadratic) so the
surviving fan-in stays at least d_ref.

    python scripts/alpha_sweep.py --scaling linear --out results/alpha_linear.csv
    python scripts/alpha_sweep.py --scaling quadratic --d-ref 256 --samples 20
"""

import argparse
import json
import sys
import time
from pathlib import Path

from pruned_ntk.experiments import DEFAULT_ALPHAS, AlphaSweepSpec, noise_band, run_alpha_sweep


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--alphas", default=",".join(map(str, DEFAULT_ALPHAS)))
    p.add_argument("--d-ref", type=int, default=1024)
    p.add_argument("--scaling", choices=("linear", "quadratic"), default="linear")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--rescale", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-width", type=int, default=20000)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", type=Path, default=None)
    args = p.parse_args(argv)

    spec = AlphaSweepSpec(
        alphas=tuple(float(a) for a in args.alphas.split(",")),
        d_ref=args.d_ref,
        scaling=args.scaling,
        n_samples=args.samples,
        depth=args.depth,
        rescale=args.rescale,
        seed=args.seed,
        max_width=args.max_width,
        threads=args.threads,
    )
    t0 = time.perf_counter()
    result = run_alpha_sweep(spec)
    print(f"theta_inf = {result.metadata['theta_inf']:.6f}   ({time.perf_counter() - t0:.1f}s)", file=sys.stderr)
    print(f"{'alpha':>6} {'width':>6} {'mean':>10} {'std':>10} {'MAD':>10}", file=sys.stderr)
    for r in result.rows:
        print(f"{r.sweep_var:6.2f} {r.width:6d} {r.mean:10.5f} {r.std:10.5f} {r.mad:10.5f}", file=sys.stderr)
    first, last = result.rows[0], result.rows[-1]
    print(f"MAD change {first.sweep_var:g} -> {last.sweep_var:g}: {last.mad - first.mad:+.5f}"
          f"  (2-sigma noise band {noise_band(first, last):.5f})", file=sys.stderr)

    if args.out is None:
        sys.stdout.write(result.to_csv())
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(result.to_csv())
        args.out.with_suffix(".json").write_text(json.dumps(result.metadata, indent=2) + "\n")


if __name__ == "__main__":
    main()
