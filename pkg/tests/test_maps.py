import math

import numpy as np
import pytest

from weakchaos import maps
from weakchaos._kernels import laminar
from weakchaos.errors import DomainError, ParseError, PassageBudgetError
from weakchaos.maps import MapSpec, PrecisionPolicy
from weakchaos.renewal import EpsilonSequence

GOLDEN = (math.sqrt(5) - 1) / 2  # branch point of z=2, r=1


@pytest.fixture
def mp2():
    return maps.parse_map_spec("mp:z=2")


@pytest.fixture
def mp3():
    return maps.parse_map_spec("mp:z=3")


@pytest.fixture
def dyadic():
    return MapSpec("pl", eps=EpsilonSequence.geometric(2))


class TestBranchPoint:
    def test_z2_closed_form(self):
        assert maps.mp_branch_point(2.0, 1.0) == pytest.approx(GOLDEN, abs=1e-14)

    def test_z3_bisection_oracle(self):
        c = maps.mp_branch_point(3.0, 1.0)
        assert c == pytest.approx(0.6823278038280193, abs=1e-13)

    @pytest.mark.parametrize("z,r", [(1.5, 1.0), (2.0, 0.5), (4.0, 1.0),
                                     (2.7, 0.25)])
    def test_defining_identity(self, z, r):
        c = maps.mp_branch_point(z, r)
        assert 0.0 < c < 1.0
        assert abs(c + r * c ** z - 1.0) < 1e-14


class TestMpApply:
    def test_fixed_point(self, mp2):
        assert maps.mp_apply(0.0, mp2) == 0.0

    def test_right_branch(self, mp2):
        assert maps.mp_apply(0.8, mp2) == pytest.approx(0.44, abs=1e-15)

    def test_left_branch(self, mp2):
        assert maps.mp_apply(0.1, mp2) == pytest.approx(0.11, abs=1e-16)

    @pytest.mark.parametrize("bad", [-0.1, 1.5, math.nan, math.inf])
    def test_domain(self, mp2, bad):
        with pytest.raises(DomainError):
            maps.mp_apply(bad, mp2)

    def test_monotone_escape(self, mp3):
        # the left branch pushes points up, by less and less near 0
        xs = np.geomspace(1e-6, maps.mp_branch_point(3.0) * 0.99, 200)
        gains = [maps.mp_apply(float(x), mp3) - float(x) for x in xs]
        assert all(g > 0 for g in gains)
        assert all(a <= b for a, b in zip(gains, gains[1:]))

    def test_stays_in_interval(self, mp2):
        rng = np.random.default_rng(0)
        for x in rng.random(200):
            assert 0.0 <= maps.mp_apply(float(x), mp2) <= 1.0


class TestPlApply:
    def test_examples(self, dyadic):
        assert maps.pl_apply(0.375, dyadic) == pytest.approx(0.75, abs=1e-15)
        assert maps.pl_apply(0.75, dyadic) == pytest.approx(0.5, abs=1e-15)
        assert maps.pl_apply(0.0, dyadic) == 0.0

    def test_slope_identity(self, dyadic):
        # each cell maps affinely onto the next cell outward, ends matching
        eps = dyadic.eps
        for k in range(2, 20):
            lo, hi = eps.eps(k - 1), eps.eps(k - 2)
            img_hi = maps.pl_apply(hi, dyadic)
            assert abs(img_hi - eps.eps(k - 3)) < 1e-15
            mid = 0.5 * (lo + hi)
            img_mid = maps.pl_apply(mid, dyadic)
            assert eps.eps(k - 2) < img_mid <= eps.eps(k - 3)

    def test_slope_identity_power(self):
        spec = MapSpec("pl", eps=EpsilonSequence.power(0.5))
        eps = spec.eps
        for k in range(2, 30):
            hi = eps.eps(k - 2)
            assert abs(maps.pl_apply(hi, spec) - eps.eps(k - 3)) < 1e-15

    def test_deep_cells(self, dyadic):
        y = maps.pl_apply(2.0 ** -40 * 1.5, dyadic)
        assert y == pytest.approx(2.0 ** -39 * 1.5, rel=1e-12)

    def test_domain(self, dyadic):
        with pytest.raises(DomainError):
            maps.pl_apply(1.2, dyadic)


class TestFirstPassage:
    def test_already_in_expanding_branch(self, mp2, dyadic):
        assert maps.first_passage_time(0.8, mp2) == 1
        assert maps.first_passage_time(0.8, dyadic) == 1

    def test_pl_exact(self, dyadic):
        assert maps.first_passage_time(0.375, dyadic) == 2
        assert maps.first_passage_time(0.2, dyadic) == 3

    def test_mp_oracle_value(self, mp2):
        # iterating 0.2 -> 0.24 -> 0.2976 -> 0.3862 -> 0.5353 -> 0.8218
        # first lands in (c, 1] after 5 applications
        assert maps.first_passage_time(0.2, mp2) == 6

    def test_matches_manual_iteration(self, mp3):
        c = mp3.branch_point
        rng = np.random.default_rng(1)
        for x in rng.random(200):
            x = float(x)
            if x == 0.0:
                continue
            y, n = x, 0
            while y <= c:
                y = maps.mp_apply(y, mp3)
                n += 1
            assert maps.first_passage_time(x, mp3) == n + 1

    def test_budget_error(self, mp3):
        with pytest.raises(PassageBudgetError):
            maps.first_passage_time(1e-9, mp3, cap=1000)

    def test_zero_rejected(self, mp2):
        with pytest.raises(DomainError):
            maps.first_passage_time(0.0, mp2)


class TestLevelSets:
    def test_pl_exact(self, dyadic):
        table = maps.level_sets(dyadic, 4)
        assert np.allclose(table.boundaries, [1.0, 0.5, 0.25, 0.125, 0.0625])
        assert table.boundaries[1] == dyadic.eps.eps(0)

    def test_mp_preimages(self, mp2):
        table = maps.level_sets(mp2, 8)
        b = table.boundaries
        assert b[1] == pytest.approx(GOLDEN, abs=1e-13)
        for n in range(2, 9):
            image = b[n] + b[n] ** 2
            assert abs(image - b[n - 1]) < 1e-12
        assert np.all(np.diff(b) < 0)

    def test_consistency_with_passage_times(self, mp2):
        table = maps.level_sets(mp2, 40)
        rng = np.random.default_rng(2)
        checked = 0
        for x in rng.random(1000):
            x = float(x)
            if x <= table.boundaries[-1]:
                continue
            # skip points within root-finding tolerance of a boundary
            if np.min(np.abs(table.boundaries - x)) < 1e-12:
                continue
            assert table.index_of(x) == maps.first_passage_time(x, mp2)
            checked += 1
        assert checked > 900

    def test_consistency_pl(self, dyadic):
        table = maps.level_sets(dyadic, 30)
        rng = np.random.default_rng(3)
        for x in rng.random(1000):
            x = float(x)
            assert table.index_of(x) == maps.first_passage_time(x, dyadic)

    def test_index_of_boundaries(self, dyadic):
        table = maps.level_sets(dyadic, 6)
        assert table.index_of(1.0) == 1
        assert table.index_of(0.5) == 2   # boundaries belong to the lower cell
        assert table.index_of(0.500001) == 1


class TestInduced:
    def test_trivial_on_expanding_branch(self, mp2):
        y, tau = maps.induced_apply(0.8, mp2)
        assert tau == 1
        assert y == maps.mp_apply(0.8, mp2)

    def test_pl_example(self, dyadic):
        y, tau = maps.induced_apply(0.375, dyadic)
        assert tau == 2
        assert y == pytest.approx(0.5, abs=1e-15)

    def test_bit_identical_to_iteration(self, mp3, dyadic):
        rng = np.random.default_rng(4)
        for spec in (mp3, dyadic):
            for x in rng.random(100):
                x = float(x)
                if x == 0.0:
                    continue
                y, tau = maps.induced_apply(x, spec)
                z = x
                for _ in range(tau):
                    z = maps.apply_map(z, spec)
                assert y == z  # bit-identical

    def test_image_covers_unit_interval(self, dyadic):
        # G maps each level set onto (0, 1]: check the dyadic family exactly
        eps = dyadic.eps
        for k in (1, 2, 5):
            hi = eps.eps(k - 2)
            y, tau = maps.induced_apply(hi, dyadic)
            assert tau == k
            assert y == pytest.approx(1.0, abs=1e-12)


class TestInducedLogDerivative:
    def test_single_step(self, mp2):
        x = 0.8
        assert maps.induced_log_derivative(x, mp2) == pytest.approx(
            math.log(1 + 2 * x), abs=1e-14)

    def test_pl_closed_form(self, dyadic):
        # on the outermost cell the only slope is 1/(1 - eps_0)
        val = maps.induced_log_derivative(0.8, dyadic)
        assert val == pytest.approx(math.log(1 / (1 - 0.5)), abs=1e-14)
        # deeper cells: the slope product telescopes to 1/ell(k)
        val = maps.induced_log_derivative(0.3, dyadic)
        assert val == pytest.approx(-math.log(dyadic.eps.ell(2)), abs=1e-14)

    def test_matches_chain_rule(self, mp3):
        rng = np.random.default_rng(5)
        for x in rng.random(50):
            x = float(x)
            if x == 0.0:
                continue
            tau = maps.first_passage_time(x, mp3)
            acc, y = 0.0, x
            for _ in range(tau):
                acc += math.log(1 + 3 * y * y)
                y = maps.mp_apply(y, mp3)
            assert maps.induced_log_derivative(x, mp3) == pytest.approx(
                acc, rel=1e-12)

    def test_positive(self, mp3, dyadic):
        rng = np.random.default_rng(6)
        for x in rng.random(50):
            x = float(x)
            if x == 0.0:
                continue
            assert maps.induced_log_derivative(x, mp3) > 0
            assert maps.induced_log_derivative(x, dyadic) > 0

    def test_branch_endpoint_rejected(self, dyadic):
        with pytest.raises(DomainError):
            maps.induced_log_derivative(0.5, dyadic)


class TestPrecisionPolicy:
    def test_threshold_default(self):
        spec = maps.parse_map_spec("mp:z=3")
        eps_mach = np.finfo(np.float64).eps
        assert spec.effective_threshold() == pytest.approx(
            eps_mach ** 0.5, rel=1e-12)

    def test_plain_mode_stalls(self):
        spec = maps.parse_map_spec(
            "mp:z=3", precision=PrecisionPolicy(mode="plain"))
        with pytest.raises(PassageBudgetError):
            maps.first_passage_time(1e-12, spec, cap=10**6)

    def test_extended_resolves_segment(self):
        # from just below the threshold the orbit needs an astronomical time,
        # certified by the rigorous lower bound without iterating
        spec = maps.parse_map_spec("mp:z=3")
        thr = spec.effective_threshold()
        with pytest.raises(PassageBudgetError):
            maps.first_passage_time(thr * 0.5, spec, cap=10**6)

    def test_extended_iterates_when_escape_is_close(self):
        # a fat threshold forces the software-float path to do real work
        spec = maps.parse_map_spec(
            "mp:z=3", precision=PrecisionPolicy(mode="extended",
                                                threshold=1e-2))
        tau = maps.first_passage_time(0.009, spec)
        plain = maps.parse_map_spec(
            "mp:z=3", precision=PrecisionPolicy(mode="plain"))
        assert tau == maps.first_passage_time(0.009, plain)

    def test_ode_mode_estimate(self):
        spec = maps.parse_map_spec(
            "mp:z=3", precision=PrecisionPolicy(mode="ode-approx",
                                                threshold=1e-2))
        tau_ode = maps.first_passage_time(0.009, spec)
        plain = maps.parse_map_spec("mp:z=3")
        tau_exact = maps.first_passage_time(0.009, plain)
        assert tau_ode == pytest.approx(tau_exact, rel=0.2)

    def test_bad_mode(self):
        with pytest.raises(DomainError):
            PrecisionPolicy(mode="fast")


class TestLaminarHelper:
    def test_lower_bound_is_a_lower_bound(self):
        z, r, thr = 3.0, 1.0, 1e-3
        for x in (1e-4, 3e-4, 9e-4):
            bound = laminar.escape_steps_lower_bound(x, thr, z, r)
            y, steps = x, 0
            while y < thr:
                y += r * y ** z
                steps += 1
            assert steps >= bound

    def test_provable_zeros_shortcut(self):
        steps, x_after, _ = laminar.resolve_extended(
            1e-9, 10**6, 3.0, 1.0, 1.49e-8, 50)
        assert steps == 10**6 and x_after is None

    def test_iterated_segment_matches_double(self):
        # above ~1e-4 double precision is exact enough to compare step counts
        steps, x_after, _ = laminar.resolve_extended(
            2e-4, 10**9, 3.0, 1.0, 2.5e-4, 50)
        y, n = 2e-4, 0
        while y < 2.5e-4:
            y += y ** 3
            n += 1
        assert steps == n
        assert x_after == pytest.approx(y, rel=1e-9)


class TestSpecParsing:
    def test_mp(self):
        spec = maps.parse_map_spec("mp:z=3,r=0.5")
        assert (spec.kind, spec.z, spec.r) == ("mp", 3.0, 0.5)

    def test_pl_families(self):
        assert maps.parse_map_spec("pl:geom,a=2").eps.kind == "geometric"
        assert maps.parse_map_spec("pl:pow,alpha=0.5").eps.kind == "power"
        assert maps.parse_map_spec("pl:log").eps.kind == "logarithmic"

    def test_pl_file(self, tmp_path):
        path = tmp_path / "cells.txt"
        path.write_text("tail: pow alpha=2 A=0.25\n0.5\n0.3\n0.2\n")
        spec = maps.parse_map_spec(f"pl:file,path={path}")
        assert spec.eps.kind == "table"
        assert spec.eps.tail == ("pow", 2.0, 0.25)

    def test_describe_round_trip(self):
        for text in ("mp:z=3,r=1", "pl:geom,a=2", "pl:pow,alpha=0.5", "pl:log"):
            spec = maps.parse_map_spec(text)
            again = maps.parse_map_spec(spec.describe())
            assert again.describe() == spec.describe()

    @pytest.mark.parametrize("bad", [
        "mp", "mp:z=0.5", "mp:r=1", "xp:z=3", "pl:geom", "pl:wat,a=2",
        "mp:z=abc", "pl:file", "mp:z=3,bogus",
    ])
    def test_rejects(self, bad):
        with pytest.raises((ParseError, DomainError)):
            maps.parse_map_spec(bad)

    def test_r_above_one_rejected(self):
        with pytest.raises(DomainError):
            MapSpec("mp", z=2.0, r=1.5)
