"""Time the compiled and NumPy Viterbi kernels on the same inputs.

    python benchmarks/bench_kernels.py [--steps 500] [--repeat 5]
"""
import argparse
import math
import timeit

import numpy as np

from tcnoma import _kernels_py
from tcnoma.product import PowerPair, tensor_product
from tcnoma.trellis import build_ungerboeck_4state, psk8

try:
    from tcnoma import _kernels_cy
except ImportError:
    _kernels_cy = None


def _inputs(trellis, labels, steps, rng):
    y = rng.normal(size=steps + 2) + 1j * rng.normal(size=steps + 2)
    return (np.ascontiguousarray(y.real), np.ascontiguousarray(y.imag),
            np.ascontiguousarray(trellis.next_state),
            np.ascontiguousarray(labels.real), np.ascontiguousarray(labels.imag),
            steps, np.ascontiguousarray(trellis.tail_table(2)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=500)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    t = build_ungerboeck_4state()
    pt = tensor_product(t, t, PowerPair(0.3, 1.0), psk8(math.pi / 8), psk8())
    cases = {
        "4-state": _inputs(t, psk8().array[t.label_index], args.steps, rng),
        "16-state product": _inputs(pt, pt.labels, args.steps, rng),
    }
    backends = {"numpy": _kernels_py}
    if _kernels_cy is not None:
        backends["cython"] = _kernels_cy
    else:
        print("compiled extension not built; timing the NumPy kernel only")

    print(f"{'trellis':<18}{'backend':<9}{'ms/frame':>10}{'speedup':>9}")
    for name, a in cases.items():
        base = None
        for bname, mod in backends.items():
            t_best = min(timeit.repeat(lambda: mod.viterbi(*a), number=3, repeat=args.repeat)) / 3
            base = base or t_best
            print(f"{name:<18}{bname:<9}{1e3 * t_best:>10.3f}{base / t_best:>9.1f}x")
        if len(backends) == 2:
            r_py, r_cy = _kernels_py.viterbi(*a), _kernels_cy.viterbi(*a)
            same = r_py[0] == r_cy[0] and all(np.array_equal(u, v) for u, v in zip(r_py[1:], r_cy[1:]))
            print(f"{'':<18}outputs identical: {same}")


if __name__ == "__main__":
    main()
