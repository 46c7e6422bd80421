#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Times the three hot paths — intermittent-map orbit ensembles, renewal-chain
replicas and the batch codec — on both implementations and prints a table
with speedups.  Also cross-checks that both produce identical integer
results on the benchmark workloads.

    python benchmarks/bench_kernels.py [--quick] [--json out.json]
"""

import argparse
import json
import time

import numpy as np

from weakchaos import mp_branch_point
from weakchaos._kernels import available_implementations, get_kernels


def _time(fn, repeats=3):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_orbits(kern, orbits, steps):
    x0 = np.random.default_rng(1).random(orbits)
    grid = np.array([steps], dtype=np.int64)
    breaks = np.array([mp_branch_point(3.0)], dtype=np.float64)
    thr = float(np.finfo(np.float64).eps ** 0.5)

    def run():
        return kern.mp_ensemble_stats(x0, 3.0, 1.0, breaks[0], grid, breaks,
                                      0, "extended", thr, 50)

    dt, res = _time(run)
    return dt, int(res["passages"].sum())


def bench_chain(kern, replicas, n):
    grid = np.array([n], dtype=np.int64)

    def run():
        total = 0
        for rep in range(replicas):
            rng = np.random.Generator(np.random.PCG64(
                np.random.SeedSequence([42, rep])))
            counts = np.zeros(1, np.int64)
            bits = np.zeros(1, np.int64)
            empty = np.zeros(0, np.int64)
            kern.chain_run_geometric(rng, 0.5, n - 1, grid, counts, bits,
                                     empty, empty, n + 3)
            total += int(counts[0])
        return total

    return _time(run)


def bench_codec(kern, count, length):
    rng = np.random.default_rng(3)
    offsets = np.arange(count + 1, dtype=np.int64) * length
    concat = rng.integers(0, 2, count * length).astype(np.int16)
    alphabets = np.full(count, 2, dtype=np.int16)

    def enc():
        return kern.encode_batch(concat, offsets, alphabets)

    dt_enc, (bits, boffs, _runs) = _time(enc)

    def dec():
        return kern.decode_batch(bits, boffs, np.diff(offsets), alphabets)

    dt_dec, (sym, _soffs) = _time(dec)
    assert np.array_equal(sym, concat)
    return dt_enc, dt_dec, int(bits.shape[0])


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true",
                        help="smaller workloads (CI-sized)")
    parser.add_argument("--json", default=None)
    args = parser.parse_args()

    if args.quick:
        orbits, steps = 128, 1 << 14
        replicas, horizon = 64, 1 << 14
        cnt, length = 200, 1024
    else:
        orbits, steps = 512, 1 << 17
        replicas, horizon = 256, 1 << 17
        cnt, length = 2000, 4096

    impls = available_implementations()
    print(f"implementations: {', '.join(impls)}")
    rows = []
    checks = {}
    for name in impls:
        kern = get_kernels(name)
        t_orbit, orbit_sum = bench_orbits(kern, orbits, steps)
        t_chain, chain_sum = bench_chain(kern, replicas, horizon)
        t_enc, t_dec, nbits = bench_codec(kern, cnt, length)
        rows.append({
            "implementation": name,
            "orbit_ensemble_s": t_orbit,
            "chain_replicas_s": t_chain,
            "codec_encode_s": t_enc,
            "codec_decode_s": t_dec,
        })
        checks.setdefault("orbit_sum", set()).add(orbit_sum)
        checks.setdefault("chain_sum", set()).add(chain_sum)
        checks.setdefault("codec_bits", set()).add(nbits)

    for key, values in checks.items():
        if len(values) != 1:
            raise SystemExit(f"implementations disagree on {key}: {values}")

    header = (f"{'kernel':<10}{'orbits':>12}{'chain':>12}"
              f"{'encode':>12}{'decode':>12}")
    print(header)
    print("-" * len(header))
    for row in rows:
        print(f"{row['implementation']:<10}"
              f"{row['orbit_ensemble_s']:>11.3f}s"
              f"{row['chain_replicas_s']:>11.3f}s"
              f"{row['codec_encode_s']:>11.3f}s"
              f"{row['codec_decode_s']:>11.3f}s")
    if len(rows) == 2:
        fast = {r["implementation"]: r for r in rows}["cython"]
        slow = {r["implementation"]: r for r in rows}["python"]
        print("-" * len(header))
        print(f"{'speedup':<10}"
              f"{slow['orbit_ensemble_s'] / fast['orbit_ensemble_s']:>11.1f}x"
              f"{slow['chain_replicas_s'] / fast['chain_replicas_s']:>11.1f}x"
              f"{slow['codec_encode_s'] / fast['codec_encode_s']:>11.1f}x"
              f"{slow['codec_decode_s'] / fast['codec_decode_s']:>11.1f}x")
    print(f"workloads: {orbits} orbits x {steps} steps | {replicas} replicas "
          f"x {horizon} steps | {cnt} strings x {length} symbols "
          "(identical results verified)")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump({"rows": rows}, fh, indent=2, sort_keys=True)
        print(f"wrote {args.json}")


if __name__ == "__main__":
    main()
