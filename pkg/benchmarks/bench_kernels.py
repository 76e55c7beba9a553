"""Compare the numba and numpy kernel backends on a synthetic scale graph.

    python3 benchmarks/bench_kernels.py --nodes 40000 --edges 1000000 --focal 10000

Both backends must produce the same scores digest; the script exits 1 otherwise.
"""
import argparse
import json
import sys

from citedisrupt.kernels import available_backends
from citedisrupt.testkit import scale_run


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--nodes", type=int, default=40_000)
    p.add_argument("--edges", type=int, default=1_000_000)
    p.add_argument("--focal", type=int, default=10_000)
    p.add_argument("--workers", type=lambda s: tuple(int(x) for x in s.split(",")), default=(1, 8))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="print raw results as JSON")
    args = p.parse_args(argv)

    results = {}
    for backend in available_backends():
        # the first call pays numba's JIT cost; time the second
        if backend == "numba":
            scale_run(2000, 20_000, 200, (1,), seed=args.seed, backend=backend)
        results[backend] = scale_run(args.nodes, args.edges, args.focal, args.workers,
                                     seed=args.seed, backend=backend)

    if args.json:
        print(json.dumps(results, indent=2))
    else:
        first = next(iter(results.values()))
        print(f"graph: {first['nodes']} nodes, {first['edges']} edges, {first['focal']} focal papers")
        print(f"{'backend':<8}{'workers':>8}{'seconds':>10}{'papers/s':>12}  sha256")
        for backend, r in results.items():
            for w, run in r["runs"].items():
                rate = r["focal"] / run["seconds"] if run["seconds"] > 0 else float("inf")
                print(f"{backend:<8}{w:>8}{run['seconds']:>10.3f}{rate:>12.0f}  {run['sha256'][:16]}")
        if "numba" in results and "numpy" in results:
            best = {b: min(x["seconds"] for x in r["runs"].values()) for b, r in results.items()}
            print(f"numba speed-up over numpy: {best['numpy'] / best['numba']:.1f}x")

    digests = {run["sha256"] for r in results.values() for run in r["runs"].values()}
    if len(digests) != 1:
        print("backends disagree", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
