"""Hilbert commutation residual against grid spacing.

For kernels such as the box, H f of an odd f jumps at the origin, and the
spectral Hilbert transform of the sampled jump converges like sqrt(h).  Kernels
with continuous output drop below 1e-3, down to a floor set by the window L.
"""

import argparse
import math

from hausdorff_lab import battery as B
from hausdorff_lab.gridfn import GridSpec
from hausdorff_lab.kernel import make_named_kernel, truncate_inner
from hausdorff_lab.verify import check_hilbert_commutation


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--L", type=float, default=128.0)
    ap.add_argument("--exponents", type=int, nargs="+", default=[12, 13, 14, 15, 16])
    args = ap.parse_args()
    kernels = {"box": make_named_kernel("box"),
               "box_delta0.25": truncate_inner(make_named_kernel("box"), 0.25),
               "power_box(1)": make_named_kernel("power_box", (1.0,))}
    f = B.odd_rational()
    print("N,h," + ",".join(kernels) + ",0.85*sqrt(h)")
    for e in args.exponents:
        spec = GridSpec.uniform(1, args.L, 2 ** e)
        h = spec.h[0]
        res = [check_hilbert_commutation(k, f, 0, spec).residual for k in kernels.values()]
        print(f"{2 ** e},{h:.4g}," + ",".join(f"{r:.3e}" for r in res) + f",{0.85 * math.sqrt(h):.3e}")


if __name__ == "__main__":
    main()
