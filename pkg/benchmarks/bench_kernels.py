"""Time the compiled kernels against the pure-Python reference.

    python3 benchmarks/bench_kernels.py --n 100 --x 4 --repeat 3
"""

import argparse
import time

import numpy as np

from kgshield import _pykernels
from kgshield.generators import assign_weights, scale_free
from kgshield.reasoner import RuleProgram
from kgshield.subiso import GraphIndex, signature_groups, vertex_keys

try:
    from kgshield import _kernels as compiled
except ImportError:  # extension not built
    compiled = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def bench(impl, idx, x, program, repeat):
    rows = {}
    t, pos = best_of(lambda: impl.connected_subsets(idx.und_indptr, idx.und_indices, x), repeat)
    rows["connected_subsets"] = t
    pos = np.sort(np.asarray(pos), axis=1)
    args = (pos, idx.out_indptr, idx.out_indices, idx.out_mult, idx.out_wsum, idx.out_pos, program.code)
    t, codes = best_of(lambda: impl.local_layers(*args), repeat)
    rows["local_layers"] = t
    codes = np.ascontiguousarray(codes, dtype=np.int32)
    vk = vertex_keys(codes)
    order, ptr = signature_groups(vk)
    t, _ = best_of(lambda: impl.bucketize(codes, vk, order, ptr), repeat)
    rows["bucketize"] = t
    return rows, len(pos)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--alpha", type=float, default=3.0)
    ap.add_argument("--x", type=int, default=4)
    ap.add_argument("--rules", default="control", choices=("none", "reach", "control", "ultimate"))
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    g = assign_weights(scale_free(args.n, args.alpha, args.seed), "economic", args.seed)
    idx = GraphIndex(g)
    program = RuleProgram.parse(args.rules)
    py, count = bench(_pykernels, idx, args.x, program, args.repeat)
    print(f"graph: n={g.num_vertices} m={g.num_edges}, {count} connected {args.x}-subsets, rules={program.value}")
    if compiled is None:
        print("compiled extension not available; pure-Python timings only")
        for name, t in py.items():
            print(f"{name:18s} python {t * 1e3:9.2f} ms")
        return 0
    cy, _ = bench(compiled, idx, args.x, program, args.repeat)
    print(f"{'kernel':18s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name in py:
        print(f"{name:18s} {py[name] * 1e3:10.2f} {cy[name] * 1e3:10.2f} {py[name] / max(cy[name], 1e-9):7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
