"""How much support does the optimal error allocation gain over the uniform one?

Draws random two-node discrete families, allocates a total error budget eps in
the directions +1 and -1, and prints the support achieved by the uniform, grid
and optimal strategies.

    python3 scripts/allocation_study.py --trials 20 --seed 7
"""
import argparse

import numpy as np

from subcalc import measure as ms
from subcalc.functions import Affine, PiecewiseLinearMax, Quadratic, directional_support
from subcalc.integral import Integrand


def random_member(rng):
    k = float(rng.uniform(0.2, 3))
    return [
        PiecewiseLinearMax([[k], [-k]], [0.0, 0.0]),
        Quadratic([[k]], [float(rng.uniform(-1, 1))]),
        PiecewiseLinearMax([[-k], [0.5], [2 * k]], [0.0, 0.3, -0.2]),
        Affine([k], 0.0),
    ][int(rng.integers(4))]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--eps", type=float, default=0.5)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'trial':>5} {'dir':>4} {'uniform':>12} {'grid':>12} {'optimal':>12} {'gain':>10}")
    gains = []
    for k in range(args.trials):
        members = [random_member(rng), random_member(rng)]
        mu = ms.finite_discrete([0, 1], list(rng.uniform(0.2, 2, 2)))
        F = Integrand("study", lambda t, m=members: m[int(t)], mu)
        x = [float(rng.uniform(-0.5, 0.5))]
        uni = ms.uniform_allocation(args.eps, mu)
        for v in (1.0, -1.0):
            u = sum(w * directional_support(f, x, [v], e) for f, w, e in zip(F.members, mu.weights, uni.values))
            g = ms.grid_allocation(args.eps, x, [v], F).achieved_support
            o = ms.optimal_allocation(args.eps, x, [v], F).achieved_support
            gains.append(o - u)
            print(f"{k:5d} {v:+4.0f} {u:12.6f} {g:12.6f} {o:12.6f} {o - u:10.2e}")
    print(f"\nmean gain {np.mean(gains):.4g}, max gain {np.max(gains):.4g}, min gain {np.min(gains):.3g}")


if __name__ == "__main__":
    main()
