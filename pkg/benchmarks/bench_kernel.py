"""Compare the compiled market kernel against the pure-Python reference.

Run with: python3 benchmarks/bench_kernel.py [--ticks N] [--agents N]
"""

import argparse
import time

from ubi.sim import _kernel_py, market


def build(args):
    strategies = tuple(
        "buy-and-hold" if a % 2 else "buy-low-sell-high"
        for a in range(args.agents))
    return market.MarketConfig(
        seed=args.seed, strategy=strategies, stocks=args.stocks,
        vol_bp=200, window=16, delta=40)


def run(kernel, cfg, ticks):
    m = market.Market(cfg, kernel=kernel)
    start = time.perf_counter()
    events = m.run(ticks)
    elapsed = time.perf_counter() - start
    return elapsed, len(events), m


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--ticks", type=int, default=200_000)
    parser.add_argument("--agents", type=int, default=8)
    parser.add_argument("--stocks", type=int, default=4)
    parser.add_argument("--seed", type=int, default=2003)
    args = parser.parse_args()

    cfg = build(args)
    kernels = [("python", _kernel_py)]
    try:
        from ubi.sim import _kernel
        kernels.insert(0, ("c", _kernel))
    except ImportError:
        print("compiled kernel unavailable; timing the reference only")

    results = {}
    for name, kernel in kernels:
        elapsed, n_events, m = run(kernel, cfg, args.ticks)
        results[name] = (elapsed, m)
        rate = args.ticks / elapsed
        print(f"{name:>7}: {elapsed:8.3f}s  {rate:12,.0f} ticks/s  "
              f"{n_events} events")

    if len(results) == 2:
        fast, slow = results["c"], results["python"]
        same = (fast[1].events == slow[1].events
                and fast[1].prices == slow[1].prices)
        print(f"speedup: {slow[0] / fast[0]:.1f}x  "
              f"traces {'identical' if same else 'DIVERGED'}")
        if not same:
            raise SystemExit(1)


if __name__ == "__main__":
    main()
