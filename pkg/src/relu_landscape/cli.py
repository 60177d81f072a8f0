"""Command-line driver.

Exit codes: 0 on success, 1 when the analysis finds nothing to report (for
example a cell without a genuine minimum), 2 on bad input.
"""

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import fixtures, kernels
from .cells import DEFAULT_STRICT_EPS, ActivationPattern, pattern_from_weights
from .errors import InvalidInputError, ParseError
from .linalg_core import DEFAULT_RANK_TOL
from .minima import analyze_cell
from .model import Dataset, NetworkParams
from .nondiff import lemma2_check, nondiff_sweep
from .probability import PRESETS, load_setup, parse_setup, probability_sweep
from .reports import boundary_report, cell_report, dumps, saddle_report
from .saddle import saddle_sweep

EXIT_OK, EXIT_EMPTY, EXIT_INPUT = 0, 1, 2


def _threads():
    raw = os.environ.get("RELU_LANDSCAPE_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise InvalidInputError(f"RELU_LANDSCAPE_THREADS must be an integer, got {raw!r}")
    return max(1, n)


@contextmanager
def _executor():
    n = _threads()
    if n == 1:
        yield None
        return
    with ThreadPoolExecutor(max_workers=n) as ex:
        yield ex


def _emit(text, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _positive(name):
    def conv(s):
        v = float(s)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"{name} must be positive")
        return v
    return conv


def _load_dataset(args):
    return Dataset.from_csv(args.dataset, augment=not args.no_augment)


def _load_pattern(args, data):
    if args.pattern and args.weights:
        raise InvalidInputError("give either --pattern or --weights, not both")
    if args.pattern:
        pattern = ActivationPattern.load(args.pattern)
    elif args.weights:
        path = Path(args.weights)
        try:
            obj = json.loads(path.read_text())
            w = np.asarray(obj["w"], dtype=float)
        except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ParseError(f'weights JSON must hold {{"w": [[...], ...]}} ({exc})', path) from exc
        pattern = pattern_from_weights(w, data)
    else:
        raise InvalidInputError("need --pattern or --weights")
    if pattern.N != data.N:
        raise InvalidInputError(f"pattern has {pattern.N} rows but the dataset has {data.N} samples")
    return pattern


def cmd_minima(args):
    data = _load_dataset(args)
    pattern = _load_pattern(args, data)
    analysis = analyze_cell(pattern, data, args.rank_tol, args.strict_eps)
    _emit(dumps(cell_report(pattern, analysis)), args.out)
    return EXIT_OK if analysis.genuine else EXIT_EMPTY


def cmd_saddles(args):
    data = _load_dataset(args)
    pattern = _load_pattern(args, data)
    with _executor() as ex:
        results = saddle_sweep(pattern, data, args.max_subsets, args.rank_tol,
                               args.strict_eps, executor=ex)
    report = {"K": pattern.K, "subsets": [saddle_report(r) for r in results],
              "genuine_subsets": [list(r.subset) for r in results if r.genuine]}
    _emit(dumps(report), args.out)
    return EXIT_OK


def cmd_nondiff(args):
    data = _load_dataset(args)
    pattern = _load_pattern(args, data)
    with _executor() as ex:
        results = nondiff_sweep(pattern, data, args.strict_eps, args.rank_tol, executor=ex)
    report = {"pairs": [boundary_report(r, data, lemma2_check) for r in results],
              "accepted": [[r.m, r.n] for r in results if r.status == "accepted"]}
    _emit(dumps(report), args.out)
    return EXIT_OK


PROB_HEADER = ["offset", "P_t_analytic", "P_t_mc", "ci_lo", "ci_hi", "loss_mean"]


def cmd_prob(args):
    if args.config and args.preset:
        raise InvalidInputError("give either --config or --preset, not both")
    if args.config:
        setup = load_setup(args.config)
    else:
        setup = parse_setup(PRESETS[args.preset or "two-weight"], args.preset or "two-weight")
    N = args.samples or setup.N
    with _executor() as ex:
        rows = probability_sweep(setup.cfg, setup.model, setup.weight, setup.values, N,
                                 args.trials, args.seed, args.gap, executor=ex)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    extra = ["P_t_product", "P_t_max"] if args.all_columns else []
    w.writerow(PROB_HEADER + extra)
    for r in rows:
        vals = [r.offset, r.P_t_analytic, r.P_t_mc, r.ci_lo, r.ci_hi, r.loss_mean]
        if extra:
            vals += [r.P_t_product, r.P_t_max]
        w.writerow([repr(float(v)) for v in vals])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def grid_losses(data, lo, hi, resolution, z=1.0):
    """Loss of a single-neuron network over a square grid of 2-D hidden weights."""
    if data.d != 2:
        raise InvalidInputError("the grid needs 2-D samples (one weight per axis)")
    if resolution < 1:
        raise InvalidInputError("grid resolution must be at least 1")
    axis = np.linspace(lo, hi, resolution) if resolution > 1 else np.array([float(lo)])
    W1, W2 = np.meshgrid(axis, axis, indexing="ij")
    W = np.stack([W1.ravel(), W2.ravel()], axis=1)[:, None, :]
    Z = np.full((W.shape[0], 1), float(z))
    loss = kernels.relu_loss_batch(data.X, data.y, Z, W)
    return W[:, 0, 0], W[:, 0, 1], loss


def cmd_grid(args):
    if args.dataset:
        data = _load_dataset(args)
    else:
        data = fixtures.two_sample_dataset(args.y2)
    w1, w2, loss = grid_losses(data, args.lo, args.hi, args.resolution, args.z)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["w1", "w2", "loss"])
    for row in zip(w1, w2, loss):
        w.writerow([repr(float(v)) for v in row])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def two_sample_report(y2=1.0, rank_tol=DEFAULT_RANK_TOL, strict_eps=DEFAULT_STRICT_EPS):
    data = fixtures.two_sample_dataset(y2)
    cells = {}
    for name in fixtures.CELLS:
        pattern = fixtures.cell_pattern(name)
        cells[name] = cell_report(pattern, analyze_cell(pattern, data, rank_tol, strict_eps))
    return {"samples": data.X.tolist(), "labels": data.y.tolist(), "cells": cells}


def cmd_two_sample(args):
    _emit(dumps(two_sample_report(args.y2, args.rank_tol, args.strict_eps)), args.out)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="relu-landscape",
                                description="Loss-landscape analysis of one-hidden-layer ReLU networks.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, data=True):
        if data:
            sp.add_argument("--dataset", required=True, help="CSV with header f1,...,label")
            sp.add_argument("--pattern", help='pattern JSON {"I": [[0|1, ...], ...]}')
            sp.add_argument("--weights", help='hidden weights JSON {"w": [[...], ...]}')
            sp.add_argument("--no-augment", action="store_true",
                            help="do not append the constant bias input")
        sp.add_argument("--rank-tol", type=_positive("rank-tol"), default=DEFAULT_RANK_TOL)
        sp.add_argument("--strict-eps", type=_positive("strict-eps"), default=DEFAULT_STRICT_EPS)
        sp.add_argument("--out", help="output file (default: stdout)")

    sp = sub.add_parser("minima", help="cell minima and their genuineness")
    common(sp)
    sp.set_defaults(func=cmd_minima)

    sp = sub.add_parser("saddles", help="sweep stationary subsets for saddle points")
    common(sp)
    sp.add_argument("--max-subsets", type=int, default=None)
    sp.set_defaults(func=cmd_saddles)

    sp = sub.add_parser("nondiff", help="sweep boundary minima over (neuron, sample) pairs")
    common(sp)
    sp.set_defaults(func=cmd_nondiff)

    sp = sub.add_parser("prob", help="trap probability along an offset sweep (CSV)")
    sp.add_argument("--config", help="sweep config JSON")
    sp.add_argument("--preset", choices=sorted(PRESETS))
    sp.add_argument("--trials", type=int, default=10000)
    sp.add_argument("--samples", type=int, default=None, help="override the sample count N")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--gap", choices=("population", "empirical"), default="population")
    sp.add_argument("--all-columns", action="store_true",
                    help="also emit the product-form and single-gap trap probabilities")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_prob)

    sp = sub.add_parser("grid", help="loss over a 2-D weight grid (CSV)")
    sp.add_argument("--dataset")
    sp.add_argument("--no-augment", action="store_true")
    sp.add_argument("--y2", type=float, default=1.0, help="second label of the built-in instance")
    sp.add_argument("--lo", type=float, default=-2.0)
    sp.add_argument("--hi", type=float, default=2.0)
    sp.add_argument("--resolution", type=int, default=81)
    sp.add_argument("--z", type=float, default=1.0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_grid)

    sp = sub.add_parser("reproduce-appendix-b", help="all four cells of the two-sample instance")
    common(sp, data=False)
    sp.add_argument("--y2", type=float, default=1.0)
    sp.set_defaults(func=cmd_two_sample)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "trials", 0) is not None and getattr(args, "trials", 0) < 0:
            raise InvalidInputError("--trials must be non-negative")
        if getattr(args, "max_subsets", None) is not None and args.max_subsets < 1:
            raise InvalidInputError("--max-subsets must be at least 1")
        return args.func(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
