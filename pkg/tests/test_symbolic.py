import numpy as np
import pytest

from weakchaos import maps, symbolic
from weakchaos.coding import run_length
from weakchaos.errors import DomainError, ParseError
from weakchaos.renewal import EpsilonSequence
from weakchaos.symbolic import Partition, SymbolString


@pytest.fixture
def mp2():
    return maps.parse_map_spec("mp:z=2")


@pytest.fixture
def dyadic():
    return maps.MapSpec("pl", eps=EpsilonSequence.geometric(2))


class TestPartition:
    def test_two_cell(self):
        part = Partition((0.618,))
        assert part.alphabet_size == 2 and part.is_binary
        assert part.symbol_of(0.2) == 0
        assert part.symbol_of(0.618) == 0  # breakpoints belong to the lower cell
        assert part.symbol_of(0.7) == 1

    def test_three_cell(self):
        part = Partition.from_text("0.3,0.618")
        assert part.alphabet_size == 3
        assert [part.symbol_of(x) for x in (0.1, 0.3, 0.5, 0.9)] == [0, 0, 1, 2]

    def test_literal_with_prefix(self):
        assert Partition.from_text("Z=0.5").breakpoints == (0.5,)

    @pytest.mark.parametrize("bad", [(), (0.0,), (1.0,), (0.5, 0.5),
                                     (0.7, 0.3)])
    def test_invalid(self, bad):
        with pytest.raises(DomainError):
            Partition(bad)

    def test_bad_literal(self):
        with pytest.raises(ParseError):
            Partition.from_text("a,b")

    def test_default_partition(self, mp2, dyadic):
        assert symbolic.default_partition(mp2).breakpoints[0] == \
            pytest.approx(0.6180339887, abs=1e-9)
        assert symbolic.default_partition(dyadic).breakpoints == (0.5,)
        assert symbolic.default_partition(mp2).alphabet_size == 2


class TestSymbolString:
    def test_text_round_trip(self):
        s = SymbolString.from_text("0120")
        assert s.alphabet_size == 3 and len(s) == 4
        assert s.to_text() == "0120"

    def test_validation(self):
        with pytest.raises(DomainError):
            SymbolString(np.array([0, 3], np.int16), 3)
        with pytest.raises(DomainError):
            SymbolString(np.array([0, 1], np.int16), 1)

    def test_equality(self):
        a = SymbolString.from_text("0101")
        assert a == SymbolString.from_text("0101")
        assert a != SymbolString(np.array([0, 1, 0, 1], np.int16), 3)


class TestSymbolize:
    def test_fixed_point(self, mp2):
        omega = symbolic.symbolize(0.0, 20, mp2)
        assert np.all(omega.symbols == 0)

    def test_two_steps(self, mp2):
        # 0.8 -> symbol 1, T(0.8) = 0.44 < c -> symbol 0
        omega = symbolic.symbolize(0.8, 2, mp2)
        assert list(omega.symbols) == [1, 0]

    def test_pl_starts_in_expanding_branch(self, dyadic):
        # x0 = 0.9: L(0.9) = 0.8 stays in (1/2, 1] -> the string opens (1, 1)
        omega = symbolic.symbolize(0.9, 2, dyadic)
        assert list(omega.symbols) == [1, 1]

    def test_matches_manual_orbit(self, mp2, dyadic):
        rng = np.random.default_rng(0)
        part3 = Partition((0.25, 0.7))
        for spec in (mp2, dyadic):
            for partition in (None, part3):
                for x0 in rng.random(20):
                    x0 = float(x0)
                    omega = symbolic.symbolize(x0, 50, spec, partition)
                    part = partition or symbolic.default_partition(spec)
                    y = x0
                    expected = []
                    for _ in range(50):
                        expected.append(part.symbol_of(y))
                        y = maps.apply_map(y, spec)
                    assert list(omega.symbols) == expected

    def test_boundary_hit_diagnostic(self, dyadic):
        omega = symbolic.symbolize(0.5, 3, dyadic)
        assert omega.boundary_hits >= 1
        assert omega.symbols[0] == 0  # 0.5 belongs to the laminar cell

    def test_deep_laminar_extended(self):
        # a start below the threshold emits zeros for the whole budget
        spec = maps.parse_map_spec("mp:z=3")
        omega = symbolic.symbolize(1e-9, 100, spec)
        assert np.all(omega.symbols == 0)

    def test_breakpoint_below_threshold_rejected(self):
        spec = maps.parse_map_spec("mp:z=3")
        with pytest.raises(DomainError):
            symbolic.symbolize(0.5, 10, spec, Partition((1e-12,)))


class TestCountPassages:
    def test_reference(self, reference_string):
        assert symbolic.count_passages(reference_string) == 7
        assert symbolic.count_passages(reference_string, 4) == 1

    def test_all_zero_and_all_one(self):
        zero = SymbolString(np.zeros(10, np.int16), 2)
        one = SymbolString(np.ones(10, np.int16), 2)
        assert symbolic.count_passages(zero) == 0
        assert symbolic.count_passages(one) == 10
        assert symbolic.count_passages(one, 6) == 6

    def test_monotone_and_bounded(self, mp2):
        omega = symbolic.symbolize(0.37, 300, mp2)
        counts = [symbolic.count_passages(omega, n) for n in range(301)]
        assert all(a <= b for a, b in zip(counts, counts[1:]))
        assert all(c <= n for n, c in enumerate(counts))

    def test_prefix_out_of_range(self, reference_string):
        with pytest.raises(DomainError):
            symbolic.count_passages(reference_string, 31)


class TestCoderConsistency:
    def test_passages_equal_run_digit_count(self, mp2, dyadic):
        # one run digit per nonzero symbol; strings ending in 1 additionally
        # carry no trailing zeros
        rng = np.random.default_rng(1)
        enders = 0
        for spec in (mp2, dyadic):
            for x0 in rng.random(40):
                omega = symbolic.symbolize(float(x0), 200, spec)
                rs = run_length(omega)
                assert rs.passages == symbolic.count_passages(omega)
                if omega.symbols[-1] == 1:
                    assert rs.trailing_zeros == 0
                    enders += 1
        assert enders > 5

    def test_run_digits_are_passage_times_minus_one(self, dyadic):
        # successive zero-run digits equal tau - 1 of the induced passages
        rng = np.random.default_rng(2)
        for x0 in rng.random(30):
            x0 = float(x0)
            if x0 == 0.0:
                continue
            omega = symbolic.symbolize(x0, 400, dyadic)
            rs = run_length(omega)
            y = x0
            for digit in rs.digits():
                y_next, tau = maps.induced_apply(y, dyadic)
                assert digit == tau - 1
                y = y_next


class TestRefinement:
    def test_coarse_string_recoverable_from_fine(self, mp2):
        # a refining partition merges back onto the coarse one by cell lookup
        coarse = symbolic.default_partition(mp2)
        c = coarse.breakpoints[0]
        fine = Partition((0.2, c, 0.8))
        # fine cells 0,1 lie in coarse cell 0; fine cells 2,3 in coarse cell 1
        merge = np.array([0, 0, 1, 1], dtype=np.int16)
        rng = np.random.default_rng(3)
        for x0 in rng.random(100):
            x0 = float(x0)
            fine_sym = symbolic.symbolize(x0, 64, mp2, fine)
            coarse_sym = symbolic.symbolize(x0, 64, mp2, coarse)
            assert np.array_equal(merge[fine_sym.symbols], coarse_sym.symbols)
