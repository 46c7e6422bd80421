"""Acceptance gate: one test per release criterion, at full scale.

Each test prints a PASS line (bypassing capture) once its assertions hold,
so a `pytest -v tests/test_acceptance.py` run shows one line per criterion.
The heavy Monte Carlo criteria take a few minutes in total; the compiled
kernels make them considerably faster but the suite passes on the numpy
fallback as well.
"""

import math
import time

import numpy as np
import pytest

import weakchaos as wc
from weakchaos.symbolic import SymbolString

from conftest import REFERENCE_DIGITS, REFERENCE_TEXT


@pytest.fixture
def report(capfd):
    """Print one criterion PASS line through pytest's capture."""

    def _report(number, message):
        with capfd.disabled():
            print(f"ACCEPTANCE {number}: PASS — {message}", flush=True)

    return _report


def test_criterion_1_codec_exactness(report):
    rng = np.random.default_rng(20260801)
    t0 = time.perf_counter()
    strings = []
    for _ in range(10_000):
        n = int(rng.integers(0, 4097))
        alphabet = int(rng.integers(2, 9))
        strings.append(SymbolString(
            rng.integers(0, alphabet, n).astype(np.int16), alphabet,
            validate=False))
    streams = wc.encode_many(strings)
    back = wc.decode_many(streams)
    for original, decoded in zip(strings, back):
        assert decoded == original
    # prefix-freeness, exhaustively for codewords of v <= 2**16
    words = sorted(wc.prefix_encode_nat(v).tobytes()
                   for v in range(2 ** 16 + 1))
    for a, b in zip(words, words[1:]):
        assert not b.startswith(a)
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0, f"codec criterion took {elapsed:.1f}s"
    report(1, f"10^4 round trips + exhaustive prefix check in {elapsed:.1f}s")


def test_criterion_2_worked_example(report):
    omega = SymbolString.from_text(REFERENCE_TEXT)
    digits = wc.run_length(omega)
    assert digits.digits() == REFERENCE_DIGITS
    table = {0: "0", 1: "100", 2: "101", 3: "11000", 8: "1110001",
             9: "1110010"}
    for value, bits in table.items():
        assert "".join(map(str, wc.prefix_encode_nat(value))) == bits
    stream = wc.encode(omega)
    body = "".join(map(str, stream.bits[stream.header_bits:]))
    # run digit 0 between consecutive passages still costs one bit, so the
    # body carries seven groups
    assert body == "11000" "1110001" "0" "101" "1110010" "0" "100"
    assert wc.information_length(omega) == 27
    report(2, "reference string codes to the documented 27-bit body")


def test_criterion_3_information_bounds(report):
    rng = np.random.default_rng(20260803)
    t0 = time.perf_counter()
    lengths = rng.integers(0, 1025, 100_000)
    pool = rng.integers(0, 2, int(lengths.sum())).astype(np.int16)
    offsets = np.zeros(lengths.shape[0] + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    for i in range(lengths.shape[0]):
        omega = SymbolString(pool[offsets[i]:offsets[i + 1]], 2,
                             validate=False)
        assert wc.verify_bounds(omega).ok
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0, f"bounds criterion took {elapsed:.1f}s"
    report(3, f"10^5 random strings inside the sandwich in {elapsed:.1f}s")


def test_criterion_4_pl_linear_regime(report):
    ens = wc.sample_chain_ensemble(
        wc.EpsilonSequence.geometric(2), [10 ** 6], 10_000, seed=20260804,
        threads=2)
    ratio = float(ens.passages[:, 0].mean()) / 10 ** 6
    assert abs(ratio - 0.5) < 0.01
    report(4, f"geometric chain mean N_n/n = {ratio:.5f} (target 0.5)")


def test_criterion_5_pl_power_regime(report):
    grid = [2 ** k for k in range(10, 21)]
    ens = wc.sample_chain_ensemble(
        wc.EpsilonSequence.power(0.5), grid, 10_000, seed=20260805, threads=2)
    table = wc.ScalingTable.from_matrices(
        np.asarray(grid, dtype=np.int64), ens.passages,
        ens.information_bits, {"partition": "0.5"})
    est = wc.fit_power(table, "N", min_n=1000, bootstrap=100, seed=0)
    target = 2 / math.pi
    assert abs(est.q_hat - 0.5) <= 0.05
    assert abs(est.prefactor - target) <= 0.1 * target
    report(5, f"power-tail chain: exponent {est.q_hat:.3f} (0.5 +/- 0.05), "
             f"prefactor {est.prefactor:.4f} (2/pi +/- 10%)")


def test_criterion_6_invariant_measure(report):
    replicas, n = 400, 1 << 17
    ens = wc.sample_chain_ensemble(
        wc.EpsilonSequence.geometric(2), [n], replicas, seed=20260806,
        k_max_occupation=10, threads=2)
    freqs = ens.occupation / float(n)
    for k in range(1, 11):
        sample = freqs[:, k - 1]
        mean = float(sample.mean())
        stderr = float(sample.std(ddof=1) / math.sqrt(replicas))
        assert abs(mean - 2.0 ** -k) <= 3 * stderr, (
            f"state {k}: {mean} vs {2.0 ** -k} (se {stderr})")
    report(6, "occupation frequencies match 2^-k within 3 standard errors "
             "for k <= 10")


def test_criterion_7_chain_map_equivalence(report):
    spec = wc.parse_map_spec("pl:geom,a=2")
    rng = np.random.default_rng(20260807)
    starts = rng.random(100_000)
    taus = np.array([wc.first_passage_time(float(x), spec) for x in starts
                     if x > 0.0], dtype=np.int64)
    k_max = int(taus.max())
    emp = np.bincount(taus, minlength=k_max + 1)[1:] / taus.shape[0]
    expected = spec.eps.ell_array(np.arange(1, k_max + 1))
    # total variation, including the unobserved tail mass
    tv = 0.5 * (float(np.abs(emp - expected).sum())
                + float(spec.eps.eps(k_max - 1)))
    assert tv < 0.01
    report(7, f"first-passage law of the map vs chain: TV = {tv:.5f}")


def _sandwich_rows(table):
    mn, mi = table.mean_passages, table.mean_information
    for j, n in enumerate(table.ns):
        n = int(n)
        slack = 2 * math.floor(math.log2(n + 1)) + 4
        upper = mn[j] * math.log2(n) + slack
        assert mn[j] <= mi[j] <= upper, (
            f"information sandwich broken at n={n}: "
            f"N={mn[j]}, I={mi[j]}, upper={upper}")


def test_criterion_8_mp_scaling(report):
    grid = [2 ** k for k in range(10, 21)]
    results = {}
    for z in (3.0, 4.0):
        spec = wc.parse_map_spec(f"mp:z={z:g}")
        assert spec.precision.mode == "extended"
        table = wc.run_ensemble(spec, None, grid, 1000, seed=20260808,
                                threads=2)
        est = wc.fit_power(table, "N", min_n=1000, bootstrap=50, seed=0)
        assert abs(est.q_hat - 1.0 / (z - 1.0)) <= 0.10, (
            f"z={z}: fitted exponent {est.q_hat}")
        _sandwich_rows(table)
        results[z] = est.q_hat
    report(8, f"mean-passage exponents q(z=3) = {results[3.0]:.3f}, "
             f"q(z=4) = {results[4.0]:.3f} with the information sandwich "
             "holding on every row")


def test_criterion_9_induced_structure(report):
    spec3 = wc.parse_map_spec("mp:z=3")
    tail = wc.passage_tail_fit(spec3, samples=400, seed=20260809, n=1 << 17)
    assert abs(tail.exponent - 1.5) <= 0.15
    ent = wc.birkhoff_induced_entropy(spec3, passages=1500, samples=48,
                                      seed=20260810, step_cap=3_000_000)
    assert ent.value > 0
    assert ent.stderr < 0.05 * ent.value
    geom = wc.parse_map_spec("pl:geom,a=2")
    ent_pl = wc.birkhoff_induced_entropy(geom, passages=2000, samples=64,
                                         seed=20260811)
    exact = 2 * math.log(2)
    assert abs(ent_pl.value - exact) <= 2 * ent_pl.stderr
    report(9, f"passage-tail exponent {tail.exponent:.3f} (1.5 +/- 0.15); "
             f"induced entropy {ent.value:.3f} +/- {ent.stderr:.3f} > 0; "
             f"geometric family matches 2 ln 2 within 2 se")


def test_criterion_10_property_suites(report):
    # truncation never increases the coded length and is monotone in k
    rng = np.random.default_rng(20260812)
    for _ in range(200):
        n = int(rng.integers(0, 600))
        omega = SymbolString(rng.integers(0, 2, n).astype(np.int16), 2,
                             validate=False)
        info = wc.information_length(omega)
        prev = 0
        for k in (1, 2, 4, 16, 64, 1024):
            value = wc.truncated_complexity(omega, k)
            assert prev <= value <= info
            prev = value

    # merging two half ensembles reproduces the full one exactly
    spec = wc.parse_map_spec("mp:z=3")
    grid = [256, 1024, 4096]
    full = wc.run_ensemble(spec, None, grid, 40, seed=20260813)
    first = wc.run_ensemble(spec, None, grid, 17, seed=20260813)
    second = wc.run_ensemble(spec, None, grid, 23, seed=20260813,
                             replica_start=17)
    merged = first.merged_with(second)
    assert merged.sums_n == full.sums_n
    assert merged.sums_n2 == full.sums_n2
    assert merged.sums_i == full.sums_i
    assert merged.sums_i2 == full.sums_i2

    # identical seed and config give byte-identical CSV, whatever the threads
    csv_a = wc.run_ensemble(spec, None, grid, 40, seed=20260813,
                            threads=1).to_csv()
    csv_b = wc.run_ensemble(spec, None, grid, 40, seed=20260813,
                            threads=2).to_csv()
    assert csv_a.encode() == csv_b.encode()
    geom = wc.parse_map_spec("pl:geom,a=2")
    csv_c = wc.run_ensemble(geom, None, grid, 64, seed=3).to_csv()
    csv_d = wc.run_ensemble(geom, None, grid, 64, seed=3, threads=2).to_csv()
    assert csv_c.encode() == csv_d.encode()

    # exponent fitting is exact on a synthetic power law
    ns = np.array([2 ** k for k in range(10, 18)], dtype=np.int64)
    means = 7.0 * ns.astype(np.float64) ** 0.5
    table = wc.ScalingTable(ns, 1, list(means), list(means ** 2),
                            list(means), list(means ** 2), {})
    est = wc.fit_power(table, "N", bootstrap=0)
    assert est.raw_slope == pytest.approx(0.5, abs=1e-12)
    assert est.r_squared == pytest.approx(1.0, abs=1e-12)
    assert est.prefactor == pytest.approx(7.0, rel=1e-10)
    report(10, "truncation monotone, merges exact, CSV byte-stable, "
              "synthetic fit exact")
