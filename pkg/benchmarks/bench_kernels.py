"""Compare the compiled and pure-Python kernel backends on representative inputs.

    python3 benchmarks/bench_kernels.py [--repeat 7]
"""

import argparse
import time

import numpy as np

from retake_move.kernels import backends
from retake_move.world import load_map


def _time(fn, repeat, number):
    best = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            fn()
        best.append((time.perf_counter() - t0) / number)
    return float(np.median(best))


def cases(geometry, rng):
    walls = np.ascontiguousarray(geometry.wall_array, dtype=np.float64)
    passable = np.zeros(len(walls), dtype=bool)
    x0, y0, x1, y1 = geometry.bounds
    xy = np.column_stack([rng.uniform(x0, x1, 10), rng.uniform(y0, y1, 10)])
    pts = np.column_stack([rng.uniform(x0, x1, 200), rng.uniform(y0, y1, 200)])
    a = rng.random(60)
    b = rng.random(60)
    a /= a.sum()
    b /= b.sum()
    ia = rng.integers(0, 24, (60, 2)).astype(np.float64)
    ib = rng.integers(0, 24, (60, 2)).astype(np.float64)
    cost = np.sqrt(((ia[:, None] - ib[None]) ** 2).sum(-1))
    return {
        "visibility_matrix (10 players)": (lambda k: k.visibility_matrix(xy, walls), 200),
        "points_visible (10 x 200)": (lambda k: k.points_visible(xy, pts, walls), 5),
        "sweep_move": (lambda k: k.sweep_move(800.0, 800.0, 1.9, -1.2, walls, passable, x0, y0, x1, y1), 2000),
        "ray_wall_distance": (lambda k: k.ray_wall_distance(800.0, 800.0, 0.6, 0.8, walls, 4000.0), 2000),
        "transport (60 x 60)": (lambda k: k.transport(a, b, cost), 5),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=7)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    impls = backends()
    if "cython" not in impls:
        print("compiled backend not built; only the pure-Python timings are shown")
    geometry = load_map()
    table = cases(geometry, np.random.default_rng(args.seed))
    print(f"{'kernel':32s} " + " ".join(f"{name:>14s}" for name in impls) + "   speedup")
    for label, (fn, number) in table.items():
        times = {name: _time(lambda k=k: fn(k), args.repeat, number) for name, k in impls.items()}
        cells = " ".join(f"{times[n] * 1e6:12.1f}us" for n in impls)
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{label:32s} {cells}   {speed:6.1f}x")


if __name__ == "__main__":
    main()
