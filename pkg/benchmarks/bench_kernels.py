"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from relu_landscape import kernels


def loss_case(rng):
    # an 81 x 81 grid of single-neuron networks on 100 samples
    X = rng.standard_normal((100, 2))
    y = rng.choice([-1.0, 1.0], 100)
    W = rng.standard_normal((6561, 1, 2))
    Z = np.ones((6561, 1))
    return X, y, Z, W


def curve_case(rng):
    # a 200-point offset sweep of four parallel weights on 2000 samples
    X = np.column_stack([rng.standard_normal(2000), np.ones(2000)])
    y = rng.choice([-1.0, 1.0], 2000)
    W = rng.standard_normal((200, 4, 2))
    Z = rng.choice([-1.0, 1.0], (200, 4))
    return X, y, Z, W


def trap_case(rng):
    # one sweep point: 10k trials of 100 samples, two gaps
    x = rng.standard_normal((10000, 100))
    return x, np.array([0.0, 2.0]), np.array([0.3, 2.2])


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    cases = {
        "loss grid 81x81": (kernels.relu_loss_batch, loss_case(rng)),
        "loss curve 200x4": (kernels.relu_loss_batch, curve_case(rng)),
        "count_trapped 10k": (kernels.count_trapped, trap_case(rng)),
    }
    names = sorted(kernels.backends)
    print(f"{'case':<20}" + "".join(f"{n + ' ms':>14}" for n in names) + f"{'speedup':>10}")
    for label, (fn, data) in cases.items():
        times = {}
        for n in names:
            impl = kernels.backends[n]
            fn(*data, impl=impl)
            t = min(timeit.repeat(lambda: fn(*data, impl=impl), number=1, repeat=args.repeat))
            times[n] = 1e3 * t
        speed = times["numpy"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:<20}" + "".join(f"{times[n]:>14.2f}" for n in names) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
