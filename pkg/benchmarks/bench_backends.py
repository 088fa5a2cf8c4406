"""Time the compiled kernel against the pure-numpy fallback.

Both backends must consume the identical draw buffer and return
bit-identical event times; this script asserts that on every workload
before timing, so a speedup never comes from a semantic drift.

Run:  python benchmarks/bench_backends.py
"""

import time

import numpy as np

import bgpconv as bc
import bgpconv.graphs as gg
from bgpconv._kernels import HAS_NUMBA
from bgpconv.model import ModelParams, TieredCore


def bench(label, graph, announcer, runs):
    rows = {}
    for backend in ("numba", "numpy"):
        if backend == "numba" and not HAS_NUMBA:
            continue
        # warm once so JIT compilation never lands inside the timer
        bc.run_dissemination(graph, announcer, 1.0, 0, backend=backend,
                             policy="reachable-only")
        t0 = time.perf_counter()
        for r in range(runs):
            times, _ = bc.run_dissemination(graph, announcer, 1.0, r, backend=backend,
                                            policy="reachable-only")
        rows[backend] = (time.perf_counter() - t0, times)
    if len(rows) == 2:
        np.testing.assert_array_equal(rows["numba"][1], rows["numpy"][1])
    per = {k: v[0] / runs * 1e3 for k, v in rows.items()}
    line = f"{label:<28}" + "".join(f"  {k}: {ms:8.3f} ms/run" for k, ms in per.items())
    if len(per) == 2:
        line += f"  speedup: {per['numpy'] / per['numba']:5.1f}x"
    print(line)


def main():
    print(f"compiled backend available: {HAS_NUMBA}")
    mesh = gg.gen_full_mesh(ModelParams(300, 3, 1.0), 1)
    bench("full mesh n=300", mesh, 0, 200)

    sparse = gg.gen_poisson(ModelParams(300, 3, 1.0), 1 / 60, 1)
    bench("sparse poisson n=300", sparse, int(np.argmax(sparse.degrees)), 200)

    big = gg.gen_poisson(ModelParams(3000, 30, 1.0), 0.004, 1)
    ann = int(np.argmax(big.degrees))
    bench("sparse poisson n=3000", big, ann, 50)

    tiered = gg.gen_tiered_core(TieredCore(20, 100, 1, 0.5, 0.25, 0.2, 1.0), 1)
    bench("tiered core 20+100", tiered, 25, 500)


if __name__ == "__main__":
    main()
