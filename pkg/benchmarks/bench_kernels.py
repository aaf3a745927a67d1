"""Times the compiled geometry kernels against the pure-Python fallback.

Runs each kernel on the same seeded workload under both backends, checks
that the outputs agree bit for bit, then prints a small table. Invoke as

    python3 benchmarks/bench_kernels.py [--nodes N] [--repeat R]

No package import tricks are needed: both backend modules are loaded
directly, so the LEARNMESH_PURE_PYTHON switch is irrelevant here.
"""

import argparse
import random
import time
from array import array

from learnmesh import _kernels_py

try:
    from learnmesh import _kernels_c
except ImportError:
    _kernels_c = None


def make_field(rng, n, width=1000.0, height=800.0):
    x = array("d", (rng.uniform(0, width) for _ in range(n)))
    y = array("d", (rng.uniform(0, height) for _ in range(n)))
    tx = array("d", (rng.uniform(0, width) for _ in range(n)))
    ty = array("d", (rng.uniform(0, height) for _ in range(n)))
    speed = array("d", (rng.uniform(1, 5) for _ in range(n)))
    radius = array("d", (rng.uniform(20, 40) for _ in range(n)))
    return x, y, tx, ty, speed, radius


def bench_advance(impl, n, iters, seed=11):
    rng = random.Random(seed)
    x, y, tx, ty, speed, _ = make_field(rng, n)
    start = time.perf_counter()
    for _ in range(iters):
        impl.advance_positions(x, y, tx, ty, speed)
    elapsed = time.perf_counter() - start
    return elapsed, (x.tobytes(), y.tobytes())


def bench_contacts(impl, n, iters, seed=12):
    rng = random.Random(seed)
    x, y, _, _, _, radius = make_field(rng, n)
    start = time.perf_counter()
    for _ in range(iters):
        pairs = impl.contact_pairs(x, y, radius)
    elapsed = time.perf_counter() - start
    return elapsed, tuple(pairs)


def bench_components(impl, n, iters, seed=13):
    rng = random.Random(seed)
    pairs = [tuple(sorted(rng.sample(range(n), 2))) for _ in range(3 * n)]
    start = time.perf_counter()
    for _ in range(iters):
        labels = impl.component_labels(n, pairs)
    elapsed = time.perf_counter() - start
    return elapsed, tuple(labels)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--nodes", type=int, default=400)
    parser.add_argument("--repeat", type=int, default=3,
                        help="timing repetitions; the best run is reported")
    args = parser.parse_args(argv)

    kernels = [
        ("advance_positions", bench_advance, 5 * args.nodes, 200),
        ("contact_pairs", bench_contacts, args.nodes, 40),
        ("component_labels", bench_components, 5 * args.nodes, 200),
    ]

    print(f"workload: nodes={args.nodes}, repeat={args.repeat}, "
          f"compiled={'yes' if _kernels_c else 'no'}")
    print(f"{'kernel':<20} {'python':>10} {'compiled':>10} {'speedup':>8}")
    for name, fn, n, iters in kernels:
        best_py = min(fn(_kernels_py, n, iters)[0] for _ in range(args.repeat))
        row = f"{name:<20} {best_py * 1000:>8.1f}ms"
        if _kernels_c is not None:
            best_c = min(fn(_kernels_c, n, iters)[0] for _ in range(args.repeat))
            _, out_py = fn(_kernels_py, n, iters)
            _, out_c = fn(_kernels_c, n, iters)
            if out_py != out_c:
                raise SystemExit(f"{name}: backends disagree")
            row += f" {best_c * 1000:>8.1f}ms {best_py / best_c:>7.1f}x"
        else:
            row += f" {'-':>10} {'-':>8}"
        print(row)
    if _kernels_c is not None:
        print("outputs agree bit for bit across backends")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
