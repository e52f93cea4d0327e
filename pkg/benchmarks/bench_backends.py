"""Time the numba and numpy forms of each hot kernel on the same inputs.

    python3 benchmarks/bench_backends.py [--repeat N]

The first numba call (compilation, or loading the on-disk cache) is a
warm-up and is not timed.  Results are checked for agreement before timing.
"""

import argparse
import time

import numpy as np

from kinres import _accel, _kernels
from kinres.quadrature import gauss_legendre
from kinres.velocity import VelocityGrid, sample_triangle_pairs


def cases():
    grid = VelocityGrid.product()
    nodes = grid.nodes
    speeds = np.unique(grid.radii())
    xi, xs = sample_triangle_pairs(200_000, seed=0)
    rx, rw = gauss_legendre(64)
    tx, tw = gauss_legendre(64)
    nuv = np.sqrt(1.0 + np.sum(nodes**2, axis=1))
    return {
        "triangle_ratios": (_kernels._triangle_ratios_numba, _kernels._triangle_ratios_numpy, (xi, xs)),
        "sigma_values": (_kernels._sigma_values_numba, _kernels._sigma_values_numpy, (1e-3, nodes, 1.0)),
        "l1_quad": (_kernels._l1_quad_numba, _kernels._l1_quad_numpy,
                    (np.abs(nodes[:, 0]), nuv, 1e-12, 40.0)),
        "k_radial": (_kernels._k_radial_numba, _kernels._k_radial_numpy,
                     (speeds, 3.0, 1.0, 1.0, 6.0, rx, rw, tx, tw)),
    }


def best_of(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ns = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        print("numba is not installed; only the numpy backend is available")
        return 1
    print(f"{'kernel':<16} {'numba [s]':>11} {'numpy [s]':>11} {'speedup':>9}")
    for name, (fast, slow, args) in cases().items():
        a, b = fast(*args), slow(*args)
        if isinstance(a, tuple):
            a, b = a[0], b[0]
        if not np.allclose(a, b, rtol=1e-10, atol=1e-14):
            raise SystemExit(f"{name}: backends disagree")
        tf = best_of(fast, args, ns.repeat)
        ts = best_of(slow, args, max(1, ns.repeat // 2))
        print(f"{name:<16} {tf:>11.4g} {ts:>11.4g} {ts / tf:>8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
