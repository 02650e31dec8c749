#!/usr/bin/env python3
"""Compare the compiled kernel against the pure-Python fallback.

Times filtration build plus full persistence (dims 0-2) on smoothed random
volumes. Example:

    python3 benchmarks/bench_engines.py --sizes 8,16,24 --repeats 3
"""

import argparse
import time

import numpy as np

from topocube import Volume, build_superlevel_filtration, compute_persistence
from topocube.persistence import available_engines


def smooth_volume(seed: int, n: int) -> Volume:
    rng = np.random.default_rng(seed)
    g = np.indices((n, n, n)).astype(np.float64)
    out = np.zeros((n, n, n))
    for _ in range(6):
        c = rng.uniform(0.15 * n, 0.85 * n, 3)
        w = rng.uniform(0.1 * n, 0.3 * n, 3)
        out += rng.uniform(0.4, 1.0) * np.exp(
            -(((g[0] - c[0]) / w[0]) ** 2 + ((g[1] - c[1]) / w[1]) ** 2 + ((g[2] - c[2]) / w[2]) ** 2)
        )
    return Volume(out / out.max() * 0.95)


def bench(engine: str, filt, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        compute_persistence(filt, engine=engine)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="8,16,24", help="comma list of cubic side lengths")
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    engines = available_engines()

    print(f"engines: {', '.join(engines)}")
    header = f"{'input':>14} " + " ".join(f"{e:>12}" for e in engines)
    if len(engines) == 2:
        header += f" {'speedup':>9}"
    print(header)
    for n in sizes:
        rng = np.random.default_rng(1)
        for label, volume in (
            ("smooth", smooth_volume(1, n)),
            ("noise", Volume(rng.random((n, n, n)))),
        ):
            filt = build_superlevel_filtration(volume)
            times = {e: bench(e, filt, args.repeats) for e in engines}
            row = f"{n:>4}^3 {label:>8} " + " ".join(
                f"{times[e] * 1000:>10.1f}ms" for e in engines
            )
            if "compiled" in times and "python" in times:
                row += f" {times['python'] / times['compiled']:>8.1f}x"
            print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
