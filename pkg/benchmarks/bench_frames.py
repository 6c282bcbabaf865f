"""Time the frame-alignment sweep: compiled kernel vs numpy fallback.

    python3 benchmarks/bench_frames.py --sizes 65 129 257 --repeat 5
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from worldsheet import _frames_py, instantiate
from worldsheet.geometry import induced_metric, seed_frames
from worldsheet.grid import partial_derivatives
from worldsheet.background import metric_at

try:
    from worldsheet import _frames
except ImportError:  # pragma: no cover
    _frames = None


def setup(n: int):
    g = instantiate("cylinder", {"twist": 0.3}, (n, n))
    e = partial_derivatives(g, 1)
    G = np.ascontiguousarray(metric_at(g.bg, g.core))
    im = induced_metric(g, e, G)
    N = np.ascontiguousarray(seed_frames(e, G, im.inverse))
    return N, G


def sweep(mod, N, G):
    M = N.copy()
    mod.align_column(M, G)
    mod.align_rows(M, G)
    return M


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[65, 129, 257])
    p.add_argument("--repeat", type=int, default=5)
    a = p.parse_args(argv)
    print(f"{'n':>5} {'python [ms]':>12} {'cython [ms]':>12} {'speedup':>8} {'max diff':>10}")
    for n in a.sizes:
        N, G = setup(n)
        tp = min(timeit.repeat(lambda: sweep(_frames_py, N, G), number=1, repeat=a.repeat))
        if _frames is None:
            print(f"{n:5d} {tp * 1e3:12.2f} {'n/a':>12}")
            continue
        tc = min(timeit.repeat(lambda: sweep(_frames, N, G), number=1, repeat=a.repeat))
        diff = np.max(np.abs(sweep(_frames_py, N, G) - sweep(_frames, N, G)))
        print(f"{n:5d} {tp * 1e3:12.2f} {tc * 1e3:12.2f} {tp / tc:8.1f} {diff:10.1e}")


if __name__ == "__main__":
    main()
