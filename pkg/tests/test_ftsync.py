"""Protocol round arithmetic: offsets, medians, fault-tolerant midpoint, and
the local/global round bodies."""

import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clocksync import ftsync
from clocksync.ftsync import (
    ConfigurationError,
    GlobalRoundOutcome,
    SyncParams,
    ft_midpoint,
    global_sync_round,
    global_sync_round_analysis_variant,
    local_sync_round,
    median_offset,
    ntp_offset,
    path_aware_offset,
)
from clocksync.intmath import halve_round_half_away

PARAMS = SyncParams(
    n=10, f=3, i_ns=3_600 * 10**9, j_ns=3_600 * 10**9, g_ns=1_000_000,
    x=Fraction(5, 4), y=Fraction(5, 2),
)
MAX_CORR_LOCAL = 1406  # floor(1.25 * 1125)
MAX_CORR_GLOBAL = 2812  # floor(2.5 * 1125)


def midpoint_oracle(values, f):
    """Independent statement: drop the f smallest and f largest, then average
    the min and max of what remains (half away from zero)."""
    remainder = sorted(values)[f: len(values) - f]
    return halve_round_half_away(min(remainder) + max(remainder))


class TestNtpOffset:
    def test_symmetric_zero(self):
        assert ntp_offset(0, 50, 60, 110) == 0

    def test_small_asymmetry(self):
        assert ntp_offset(0, 10, 11, 13) == 4

    def test_rejects_time_reversal(self):
        with pytest.raises(ValueError):
            ntp_offset(10, 50, 60, 9)

    def test_half_asymmetry_identity_grid(self):
        # measured = true offset + (fwd - bwd)/2 for every small integer case
        for theta, fwd, bwd in itertools.product(range(-3, 4), range(5), range(5)):
            t0 = 1000
            t1 = t0 + fwd + theta
            t2 = t1
            t3 = t0 + fwd + bwd
            expected = halve_round_half_away(2 * theta + fwd - bwd)
            assert ntp_offset(t0, t1, t2, t3) == expected


class TestMedianOffset:
    def test_empty_is_zero(self):
        assert median_offset([]) == 0

    def test_odd(self):
        assert median_offset([-7, 3, 100]) == 3

    def test_even_rounds_half_away(self):
        assert median_offset([-4, 10]) == 3
        assert median_offset([-10, 4]) == -3

    def test_unsorted_input_accepted(self):
        assert median_offset([100, -7, 3]) == 3


class TestFtMidpoint:
    def test_example(self):
        assert ft_midpoint([-5, -1, 0, 2, 9], 1) == 1  # (-1+2)/2 away from zero

    def test_all_equal(self):
        assert ft_midpoint([0, 0, 0, 0], 1) == 0

    def test_too_few_values(self):
        with pytest.raises(ConfigurationError):
            ft_midpoint([1, 2, 3], 1)

    def test_unsorted_is_fatal(self):
        with pytest.raises(ValueError):
            ft_midpoint([3, 1, 2, 4], 1)

    @pytest.mark.parametrize("f", [1, 2, 3])
    def test_outliers_never_escape_honest_value(self, f):
        # All honest entries equal c; f arbitrary entries at +-1e9 in any
        # placement cannot move the midpoint off c.
        n = 3 * f + 1
        c = 37
        for positions in itertools.combinations(range(n), f):
            for signs in itertools.product((-1, 1), repeat=f):
                values = [c] * n
                for pos, sign in zip(positions, signs):
                    values[pos] = sign * 10**9
                assert ft_midpoint(sorted(values), f) == c

    def test_matches_oracle_exhaustive_small(self):
        values_range = range(-3, 4)
        for n in range(4, 8):
            f = (n - 1) // 3
            for vec in itertools.combinations_with_replacement(values_range, n):
                assert ft_midpoint(list(vec), f) == midpoint_oracle(vec, f)

    @given(
        vec=st.lists(st.integers(-10**6, 10**6), min_size=4, max_size=13),
        data=st.data(),
    )
    @settings(max_examples=300)
    def test_matches_oracle_random(self, vec, data):
        f = data.draw(st.integers(0, (len(vec) - 1) // 3))
        ordered = sorted(vec)
        assert ft_midpoint(ordered, f) == midpoint_oracle(ordered, f)

    @given(
        vec=st.lists(st.integers(-10**6, 10**6), min_size=4, max_size=13),
        shift=st.integers(-10**6, 10**6),
        data=st.data(),
    )
    @settings(max_examples=200)
    def test_translation_equivariant_and_permutation_invariant(self, vec, shift, data):
        # Half-away-from-zero rounding keeps translation equivariance exact
        # except when an odd midpoint sum changes sign under the shift (a
        # 1 ns effect, e.g. median([0,1])=1 but median([-1,0])=-1).
        f = data.draw(st.integers(0, (len(vec) - 1) // 3))
        ordered = sorted(vec)
        shifted = ft_midpoint(sorted(v + shift for v in vec), f)
        base = ft_midpoint(ordered, f)
        assert abs(shifted - (base + shift)) <= 1
        tie_sum = ordered[f] + ordered[len(vec) - 1 - f]
        if tie_sum % 2 == 0 or (tie_sum > 0) == (tie_sum + 2 * shift > 0):
            assert shifted == base + shift
        perm = data.draw(st.permutations(vec))
        assert ft_midpoint(sorted(perm), f) == base
        assert abs(median_offset([v + shift for v in vec]) - (median_offset(vec) + shift)) <= 1
        assert median_offset(list(perm)) == median_offset(vec)

    @given(
        honest=st.lists(st.integers(-1000, 1000), min_size=3, max_size=9),
        data=st.data(),
    )
    @settings(max_examples=300)
    def test_containment_with_arbitrary_faults(self, honest, data):
        # <= f arbitrary entries, rest in [a, b]: output in [a, b + 1].
        f = data.draw(st.integers(0, min(3, (len(honest) - 1) // 2)))
        n = len(honest) + f
        if n < 3 * f + 1:
            return
        faulty = data.draw(
            st.lists(st.integers(-10**9, 10**9), min_size=f, max_size=f)
        )
        result = ft_midpoint(sorted(honest + faulty), f)
        assert min(honest) <= result <= max(honest) + 1


class TestSyncParams:
    def test_valid(self):
        PARAMS  # construction already validated

    def test_fault_bound(self):
        with pytest.raises(ConfigurationError):
            SyncParams(n=9, f=3, i_ns=1, j_ns=1, g_ns=0, x=Fraction(2), y=Fraction(4))

    def test_interval_order(self):
        with pytest.raises(ConfigurationError):
            SyncParams(n=4, f=1, i_ns=10, j_ns=5, g_ns=0, x=Fraction(2), y=Fraction(4))

    def test_impact_factors(self):
        with pytest.raises(ConfigurationError):
            SyncParams(n=4, f=1, i_ns=1, j_ns=1, g_ns=0, x=Fraction(1), y=Fraction(4))
        with pytest.raises(ConfigurationError):
            SyncParams(n=4, f=1, i_ns=1, j_ns=1, g_ns=0, x=Fraction(2), y=Fraction(3))


class TestLocalRound:
    def test_zero_offset_is_noop(self):
        assert local_sync_round(1000, 1000, MAX_CORR_LOCAL) is None

    def test_unavailable_reference_is_noop(self):
        assert local_sync_round(None, 12345, MAX_CORR_LOCAL) is None

    def test_below_cap(self):
        assert local_sync_round(1500, 1000, MAX_CORR_LOCAL) == 500

    def test_cap_binds_with_sign(self):
        assert local_sync_round(-10_000_000, 0, MAX_CORR_LOCAL) == -MAX_CORR_LOCAL
        assert local_sync_round(10_000_000, 0, MAX_CORR_LOCAL) == MAX_CORR_LOCAL


class TestGlobalRound:
    def _vector(self, goff):
        # 10 measurements engineered so the midpoint lands exactly on goff.
        return sorted([goff] * 9 + [0])

    def test_inside_cutoff_no_correction(self):
        outcome = global_sync_round(self._vector(400_000), PARAMS, MAX_CORR_GLOBAL)
        assert outcome == GlobalRoundOutcome(goff=400_000, applied_corr=0, capped=False)

    def test_beyond_cutoff_cap_binds(self):
        outcome = global_sync_round(self._vector(5_000_000), PARAMS, MAX_CORR_GLOBAL)
        assert outcome.goff == 5_000_000
        assert outcome.applied_corr == MAX_CORR_GLOBAL
        assert outcome.capped

    def test_just_past_cutoff_negative(self):
        outcome = global_sync_round(self._vector(-1_000_500), PARAMS, MAX_CORR_GLOBAL)
        assert outcome.applied_corr == -MAX_CORR_GLOBAL

    def test_exactly_at_cutoff_is_dead(self):
        outcome = global_sync_round(self._vector(1_000_000), PARAMS, MAX_CORR_GLOBAL)
        assert outcome.applied_corr == 0


class TestAnalysisVariantRound:
    DELTA = 50_000
    PULL = Fraction(5, 2) * Fraction(27_000, 86_400 * 10**9) * (3_600 * 10**9)  # 2812.5

    def _outcome(self, goff):
        return global_sync_round_analysis_variant(
            sorted([goff] * 9 + [0]), PARAMS, self.DELTA, self.PULL, MAX_CORR_GLOBAL
        )

    def test_dead_zone(self):
        assert self._outcome(0).applied_corr == 0

    def test_positive_threshold(self):
        threshold = self.DELTA + 2 * self.PULL  # 55625.0 exactly
        assert self._outcome(55_625).applied_corr == MAX_CORR_GLOBAL
        assert self._outcome(55_624).applied_corr == 0

    def test_negative_threshold(self):
        assert self._outcome(-5625).applied_corr == -MAX_CORR_GLOBAL
        assert self._outcome(-5624).applied_corr == 0

    def test_requires_delta(self):
        with pytest.raises(ConfigurationError):
            global_sync_round_analysis_variant(
                sorted([0] * 10), PARAMS, 0, self.PULL, MAX_CORR_GLOBAL
            )


class TestPathAwareOffset:
    def _exchange(self, offset, ok=True):
        t0, fwd, bwd = 100, 50, 50
        return (t0, t0 + fwd + offset, t0 + fwd + offset, t0 + fwd + bwd, ok)

    def test_symmetric_paths_recover_true_offset(self):
        results = [self._exchange(777) for _ in range(5)]
        assert path_aware_offset(results) == 777

    def test_all_failed_yields_zero(self):
        results = [self._exchange(777, ok=False) for _ in range(5)]
        assert path_aware_offset(results) == 0

    def test_minority_shift_filtered_by_median(self):
        shift = 100_000_000  # +100 ms attacker shift on compromised paths
        for bad in itertools.combinations(range(5), 2):
            results = [
                self._exchange(777 + (shift if i in bad else 0)) for i in range(5)
            ]
            assert path_aware_offset(results) == 777

    def test_majority_shift_moves_median(self):
        shift = 100_000_000
        for bad in itertools.combinations(range(5), 3):
            results = [
                self._exchange(777 + (shift if i in bad else 0)) for i in range(5)
            ]
            assert path_aware_offset(results) == 777 + shift
