"""Command-line entry point: ``pruned-ntk {ntk,sweep-width,sweep-alpha,regress,replay}``.

Exit codes: 0 ok, 1 replay mismatch, 2 usage/config, 3 numerical, 4 I/O.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .analytic import kernel_recursion, limit_matrix, ntk_regress, pruned_limit
from .empirical import ntk_monte_carlo
from .errors import ConfigError, ResourceError, ShapeError
from .experiments import (
    DEFAULT_ALPHAS,
    DEFAULT_WIDTHS,
    AlphaSweepSpec,
    WidthSweepSpec,
    run_alpha_sweep,
    run_width_sweep,
)
from .model import NetworkConfig, unit_input_pair

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    tool: str
    version: str
    command: str
    argv: list[str]
    config: dict
    seed: int
    started: str
    finished: str = ""
    outputs: dict[str, str] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))


def manifest_path(out: str) -> str:
    return out + ".manifest.json"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _json_float(v):
    return None if v is None or (isinstance(v, float) and math.isnan(v)) else v


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from exc


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}") from exc


def vector_arg(text: str) -> list[float]:
    """Inline ``0.6,0.8`` or a path to a CSV file whose first row is the vector."""
    if os.path.isfile(text):
        rows = _read_rows(text)
        if not rows:
            raise argparse.ArgumentTypeError(f"{text} holds no vector")
        return rows[0]
    vec = _float_list(text)
    if not vec:
        raise argparse.ArgumentTypeError("empty vector")
    return vec


def _read_rows(path: str) -> list[list[float]]:
    """Numeric CSV rows; a non-numeric first row is taken as a header."""
    with open(path, newline="") as fh:
        raw = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    rows = []
    for k, r in enumerate(raw):
        try:
            rows.append([float(c) for c in r])
        except ValueError:
            if k == 0:
                continue
            raise UsageError(f"{path}: non-numeric row {k + 1}")
    return rows


def _resolve_seed(seed):
    if seed is not None:
        return seed
    env = os.environ.get("NTK_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"NTK_SEED is not an integer: {env!r}")


def _inputs(args):
    if (args.x is None) != (args.x2 is None):
        raise UsageError("give both --x and --x2 or neither")
    if args.x is None:
        x, x2 = unit_input_pair(args.seed, args.input_dim)
        return x, x2
    x, x2 = np.array(args.x), np.array(args.x2)
    if x.shape != x2.shape:
        raise UsageError(f"--x has length {x.size}, --x2 has length {x2.size}")
    return x, x2


def _emit(args, text: str, config: dict):
    """Write ``text`` to ``--out`` (plus manifest) or stdout."""
    if not getattr(args, "out", None):
        sys.stdout.write(text)
        return
    data = text.encode()
    with open(args.out, "wb") as fh:
        fh.write(data)
    manifest = RunManifest(
        tool="pruned-ntk",
        version=__version__,
        command=args.command,
        argv=args.resolved_argv,
        config=config,
        seed=args.seed,
        started=args.started,
        finished=_now(),
        outputs={os.path.basename(args.out): _digest(data)},
    )
    with open(manifest_path(args.out), "w") as fh:
        fh.write(manifest.to_json())


def cmd_ntk(args) -> int:
    x, x2 = _inputs(args)
    cfg = NetworkConfig.uniform(args.depth, args.width, x.size, alpha=args.alpha, rescale=args.rescale, seed=args.seed)
    limit = math.nan
    if args.limit:
        limit = pruned_limit(kernel_recursion(x, x2, args.depth), args.alpha, args.rescale)
    agg = ntk_monte_carlo(cfg, x, x2, args.samples, limit, args.threads)
    config = {
        "depth": args.depth,
        "width": args.width,
        "alpha": args.alpha,
        "rescale": args.rescale,
        "samples": args.samples,
        "seed": args.seed,
        "input_dim": int(x.size),
    }
    doc = {
        "config": config,
        "x": x.tolist(),
        "x2": x2.tolist(),
        "mean": agg.mean,
        "std": agg.sample_std,
        "mad": _json_float(agg.mad_vs_limit),
        "limit": _json_float(limit if args.limit else None),
        "n_samples": agg.n_samples,
        "per_layer": list(agg.per_layer_mean),
        "samples": [{"sample_id": e.sample_id, "total": e.total, "per_layer": list(e.per_layer)} for e in agg.estimates],
    }
    _emit(args, json.dumps(doc, indent=2) + "\n", config)
    return EXIT_OK


def _explicit_pair(args):
    if (args.x is None) != (args.x2 is None):
        raise UsageError("give both --x and --x2 or neither")
    return (None, None) if args.x is None else (tuple(args.x), tuple(args.x2))


def cmd_sweep_width(args) -> int:
    x, x2 = _explicit_pair(args)
    spec = WidthSweepSpec(
        widths=tuple(args.widths),
        depth=args.depth,
        alpha=args.alpha,
        rescale=args.rescale,
        n_samples=args.samples,
        seed=args.seed,
        input_dim=args.input_dim,
        x=x,
        x2=x2,
        include_control=args.control,
        threads=args.threads,
    )
    result = run_width_sweep(spec)
    _emit(args, result.to_csv(), {**asdict(spec), **{"metadata": result.metadata}})
    return EXIT_OK


def cmd_sweep_alpha(args) -> int:
    x, x2 = _explicit_pair(args)
    spec = AlphaSweepSpec(
        alphas=tuple(args.alphas),
        d_ref=args.d_ref,
        scaling=args.scaling,
        n_samples=args.samples,
        depth=args.depth,
        rescale=args.rescale,
        seed=args.seed,
        input_dim=args.input_dim,
        x=x,
        x2=x2,
        max_width=args.max_width,
        threads=args.threads,
    )
    result = run_alpha_sweep(spec)
    _emit(args, result.to_csv(), {**asdict(spec), **{"metadata": result.metadata}})
    return EXIT_OK


def cmd_regress(args) -> int:
    train = _read_rows(args.train)
    test = _read_rows(args.test)
    if not train:
        raise UsageError(f"{args.train} has no rows")
    if any(len(r) != len(train[0]) for r in train) or len(train[0]) < 2:
        raise UsageError("training rows need equal length and at least one input column plus y")
    train = np.array(train)
    X, y = train[:, :-1], train[:, -1]
    lines = []
    if test:
        T = np.array(test)
        if T.ndim != 2 or T.shape[1] != X.shape[1]:
            raise UsageError(f"test rows must have {X.shape[1]} columns")
        gram = args.kernel_scale * limit_matrix(X, X, args.depth)
        gram = 0.5 * (gram + gram.T)
        kmat = args.kernel_scale * limit_matrix(T, X, args.depth)
        pred = ntk_regress(gram, kmat, y, jitter=args.jitter)
        lines = [repr(float(v)) + "\n" for v in np.atleast_1d(pred)]
    config = {"train": args.train, "test": args.test, "depth": args.depth, "jitter": args.jitter}
    _emit(args, "".join(lines), config)
    return EXIT_OK


def cmd_replay(args) -> int:
    with open(args.manifest) as fh:
        manifest = RunManifest.from_json(fh.read())
    rc = main([*manifest.argv, "--out", args.out])
    if rc != EXIT_OK:
        return rc
    with open(args.out, "rb") as fh:
        digest = _digest(fh.read())
    expected = next(iter(manifest.outputs.values()))
    print(f"{'match' if digest == expected else 'MISMATCH'} {digest}")
    return EXIT_OK if digest == expected else EXIT_MISMATCH


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common(p, samples_default):
    p.add_argument("--depth", type=int, default=3, help="number of hidden layers L")
    p.add_argument("--rescale", action=argparse.BooleanOptionalAction, default=True, help="scale surviving weights by 1/sqrt(alpha)")
    p.add_argument("--samples", type=int, default=samples_default, help="Monte-Carlo samples per point")
    p.add_argument("--seed", type=int, default=None, help="master seed (fallback: $NTK_SEED, then 0)")
    p.add_argument("--x", type=vector_arg, default=None, help="first input, inline 'a,b,...' or CSV file")
    p.add_argument("--x2", type=vector_arg, default=None, help="second input, inline or CSV file")
    p.add_argument("--input-dim", type=int, default=16, help="dimension of seed-derived unit inputs")
    p.add_argument("--threads", type=int, default=1, help="worker threads over Monte-Carlo samples")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pruned-ntk", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ntk", help="empirical NTK at one input pair")
    _common(p, samples_default=1)
    p.add_argument("--width", type=int, default=1024, help="width of every hidden layer")
    p.add_argument("--alpha", type=float, default=1.0, help="keep-probability")
    p.add_argument("--limit", action="store_true", help="include the width limit and MAD against it")
    p.add_argument("--out", default=None, help="JSON output path (default stdout)")
    p.set_defaults(func=cmd_ntk)

    p = sub.add_parser("sweep-width", help="NTK convergence as width grows")
    _common(p, samples_default=64)
    p.add_argument("--widths", type=_int_list, default=list(DEFAULT_WIDTHS))
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--control", action=argparse.BooleanOptionalAction, default=False, help="add alpha=1 rows")
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=cmd_sweep_width)

    p = sub.add_parser("sweep-alpha", help="NTK deviation across keep-probabilities")
    _common(p, samples_default=100)
    p.add_argument("--alphas", type=_float_list, default=list(DEFAULT_ALPHAS))
    p.add_argument("--d-ref", type=int, default=1024, help="width at alpha=1")
    p.add_argument("--scaling", choices=("linear", "quadratic"), default="linear")
    p.add_argument("--max-width", type=int, default=20000)
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=cmd_sweep_alpha)

    p = sub.add_parser("regress", help="NTK kernel regression with the width-limit kernel")
    p.add_argument("--train", required=True, help="CSV rows: x_1..x_d, y")
    p.add_argument("--test", required=True, help="CSV rows: x_1..x_d")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--jitter", type=float, default=0.0)
    p.add_argument("--kernel-scale", type=float, default=1.0, help=argparse.SUPPRESS)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=None, help=argparse.SUPPRESS)
    p.add_argument("--out", default=None, help="prediction output path (default stdout)")
    p.set_defaults(func=cmd_regress)

    p = sub.add_parser("replay", help="re-run a manifest and compare output digests")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_replay)
    return parser


def _resolved_argv(argv: list[str], seed) -> list[str]:
    """Original arguments without ``--out``, with the effective seed pinned."""
    out, skip = [], False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok == "--out":
            skip = True
            continue
        if tok.startswith("--out="):
            continue
        out.append(tok)
    if seed is not None:
        out += ["--seed", str(seed)]
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.started = _now()
        if hasattr(args, "seed") and args.command != "replay":
            args.seed = _resolve_seed(args.seed)
            args.resolved_argv = _resolved_argv(argv, args.seed)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ShapeError, ResourceError) as exc:
        print(f"pruned-ntk: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:
        print(f"pruned-ntk: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"pruned-ntk: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
