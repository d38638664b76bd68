"""Plot the node eps-subdifferentials of the affine-plus-box family at x = 0.

Each node f_t(x) = (b/t) x + b + indicator[-t, t], b = 1/sqrt(t) + 1, has the
interval [(1 - eps)/t + t^-1.5, (1 + eps)/t + t^-1.5] as eps-subdifferential; the
left ends blow up like t^-1.5, which is why no integrable selection exists.

    python3 scripts/plot_affine_box_family.py --eps 0.5 --out affine_box_family.svg
"""
import argparse
import math

from subcalc.functions import AffinePlusBoxIndicator, eps_subdifferential
from subcalc.geometry import interval
from subcalc.scenarios import emit_plot


def node(t: float):
    b = 1 / math.sqrt(t) + 1
    return AffinePlusBoxIndicator([b / t], b, interval(-t, t))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, default=0.5)
    ap.add_argument("--out", default="affine_box_family.svg")
    args = ap.parse_args()
    sets = []
    for t in (1.0, 0.5, 0.25, 0.1):
        S = eps_subdifferential(node(t), [0.0], args.eps).set
        lo, hi = float(S.vertices.min()), float(S.vertices.max())
        print(f"t = {t:5.2f}: [{lo:.6f}, {hi:.6f}]")
        sets.append((f"t = {t:g}", S))
    print("wrote", emit_plot(sets, args.out))


if __name__ == "__main__":
    main()
