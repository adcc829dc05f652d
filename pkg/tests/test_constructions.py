"""Tests for the two staged constructions and the stagewise measures.

Expected breakpoint schedules and counts were derived by hand from the
floor recurrences (exact rational arithmetic worked out independently, then frozen
here), so regressions in the plan code cannot hide behind the plan code.
"""

from fractions import Fraction

import pytest

from dimlab.constructions import (
    AlternatingPlan,
    FrostmanStageReport,
    alternating_correlation_exponents,
    alternating_measure,
    alternating_plan,
    alternating_set,
    stagewise_frostman_measures,
    sweep_plan,
    sweep_set,
    verify_alternating_plan,
    verify_stage_balls,
    verify_sweep_plan,
    verify_sweep_set,
)
from dimlab.exact import (
    ConstructionError,
    UnavailableError,
    ValidationError,
    cmp_rpow,
    pow2,
)
from dimlab.measure import DyadicMeasureTree
from dimlab.settree import DyadicSetTree

T = Fraction(2, 5)
S = Fraction(7, 10)

# breakpoints n_0..n_17 for t=2/5, s=7/10, slack t/(k+2), budget 10^6
BREAKPOINTS = (0, 1, 4, 10, 24, 56, 122, 276, 580, 1290,
               2634, 5770, 11541, 25006, 49231, 105756, 205637, 438693)
# log2 cube count at each breakpoint
DOUBLED = (0, 1, 1, 7, 7, 39, 39, 193, 193, 903,
           903, 4039, 4039, 17504, 17504, 74029, 74029, 307085)

# sweep schedule for t=2/5, s=7/10, budget 10^5
SWEEP_N = (3, 16, 93, 540, 3150, 18373)
SWEEP_BIG_N = (1, 5, 28, 162, 945, 5512, 32152)


@pytest.fixture(scope="module")
def plan():
    return alternating_plan(T, S)


@pytest.fixture(scope="module")
def splan():
    return sweep_plan(T, S)


class TestAlternatingPlan:
    def test_frozen_schedule(self, plan):
        assert plan.breakpoints == BREAKPOINTS
        assert plan.doubled == DOUBLED
        assert plan.k_max == 8
        assert plan.last_level == 438693
        assert plan.slack == tuple(T / (k + 2) for k in range(1, 9))

    def test_exponents_between_breakpoints(self, plan):
        # doubling stretch (4, 10]: one new bit per level
        assert [plan.doubling_exponent(n) for n in range(4, 11)] == \
            [1, 2, 3, 4, 5, 6, 7]
        # slow stretch (10, 24]: frozen
        assert plan.doubling_exponent(17) == 7
        assert plan.doubling_exponent(24) == 7

    def test_counts(self, plan):
        assert plan.count(0) == 1
        assert plan.count(1) == 2
        assert plan.count(10) == 128
        assert plan.count(438693) == 1 << 307085

    def test_method_flags(self, plan):
        assert plan.method_is_doubling(1)
        assert not plan.method_is_doubling(4)
        assert plan.method_is_doubling(5)
        assert plan.method_is_doubling(10)
        assert not plan.method_is_doubling(11)

    def test_out_of_budget(self, plan):
        with pytest.raises(UnavailableError):
            plan.doubling_exponent(438694)
        with pytest.raises(UnavailableError):
            plan.method_is_doubling(10 ** 7)

    def test_segment_counts_match_exponents(self, plan):
        segs = plan.segment_counts()
        assert segs.covers(438693)
        for n in (0, 1, 2, 4, 5, 10, 24, 56, 123, 5770, 438693):
            assert segs.count(n) == 1 << plan.doubling_exponent(n)

    def test_verification_suite_passes(self, plan):
        res = verify_alternating_plan(plan)
        assert res["ok"]
        assert res["k_max"] == 8
        names = {c["name"] for c in res["checks"]}
        assert names == {"recurrence", "low_pinch", "high_pinch"}
        assert len(res["checks"]) == 3 * 8

    def test_explicit_slack_sequence(self):
        p = alternating_plan(T, S, slack=[Fraction(2, 15)], level_budget=100)
        assert p.breakpoints == (0, 1, 4, 10)
        assert p.doubled == (0, 1, 1, 7)
        assert p.k_max == 1

    def test_callable_slack(self):
        p = alternating_plan(T, S, slack=lambda k: T / (k + 2),
                             level_budget=100)
        assert p.breakpoints == (0, 1, 4, 10, 24, 56)

    def test_slack_validation(self):
        with pytest.raises(ValidationError):
            alternating_plan(T, S, slack=[Fraction(1, 2)])  # >= dim_low
        with pytest.raises(ValidationError):
            alternating_plan(T, S, slack=[Fraction(1, 10), Fraction(1, 10)])

    def test_parameter_validation(self):
        with pytest.raises(ValidationError):
            alternating_plan(S, T)
        with pytest.raises(ValidationError):
            alternating_plan(T, S, level_budget=0)

    def test_budget_too_small(self):
        with pytest.raises(ConstructionError):
            alternating_plan(T, S, level_budget=5)


class TestAlternatingSet:
    def test_materialized_keys_match_direct_construction(self, plan):
        # within depth 24 the doubling levels are {1}u(4,10]; every key is
        # a choice of bits at exactly those levels
        depth = 24
        free = [1, 5, 6, 7, 8, 9, 10]
        tree = alternating_set(plan, depth)
        expect = sorted(
            sum(((mask >> i) & 1) << (depth - m)
                for i, m in enumerate(free))
            for mask in range(1 << len(free)))
        assert tree.levels[depth] == expect
        tree.validate()

    def test_counts_and_symbolic_agree(self, plan):
        tree = alternating_set(plan, 20)
        for n in range(21):
            assert tree.box_count(n) == plan.count(n)
        assert tree.box_count(105756) == 1 << 74029

    def test_meta(self, plan):
        tree = alternating_set(plan, 12)
        assert tree.meta["kind"] == "alternating"
        assert tree.meta["dim_low"] == "2/5"
        assert tree.meta["breakpoints"][:4] == [0, 1, 4, 10]

    def test_depth_validation(self, plan):
        with pytest.raises(ValidationError):
            alternating_set(plan, plan.last_level + 1)

    def test_stage_measure_is_uniform(self, plan):
        mu = alternating_measure(plan, 1)
        assert mu.max_depth == 10
        masses = mu.level_masses(10)
        assert len(masses) == 128
        assert all(m == Fraction(1, 128) for _, m in masses)

    def test_stage_measure_validation(self, plan):
        with pytest.raises(ValidationError):
            alternating_measure(plan, 0)
        # stage 3 truncates at level 276, past the 62-bit key budget
        with pytest.raises(UnavailableError):
            alternating_measure(plan, 3)

    def test_correlation_exponents(self, plan):
        got = alternating_correlation_exponents(plan, [4, 10, 24, 5770])
        assert got == [(4, 1), (10, 7), (24, 7), (5770, 4039)]


class TestSweepPlan:
    def test_frozen_schedule(self, splan):
        assert splan.n_seq == SWEEP_N
        assert splan.big_n_seq == SWEEP_BIG_N
        assert splan.k_max == 6
        assert splan.last_level == 32152

    def test_breakpoints_interleave(self, splan):
        merged = []
        for nk, nbig in zip(splan.n_seq, splan.big_n_seq[1:]):
            merged.extend([nk, nbig])
        assert merged == sorted(merged)
        assert splan.big_n_seq[0] == 1 < splan.n_seq[0]

    def test_counts(self, splan):
        assert splan.counts_at_stage[0] == 2
        assert splan.counts_at_stage[1] == 5
        assert splan.counts_at_stage[2] == 5 - 1 + (1 << 11)
        # closed form: sum of (2^{n_m - N_{m-1}} - 1) + 2
        for k in range(1, 7):
            closed = sum(
                (1 << (SWEEP_N[m] - SWEEP_BIG_N[m])) - 1 for m in range(k)
            ) + 2
            assert splan.counts_at_stage[k] == closed

    def test_level_counts(self, splan):
        assert splan.count(0) == 1
        assert splan.count(1) == 2
        assert splan.count(2) == 3
        assert splan.count(3) == 5
        assert splan.count(4) == 5   # frozen through N_1
        assert splan.count(5) == 5
        assert splan.count(6) == 6   # designated subtree doubles again
        assert splan.count(16) == 4 + (1 << 11)
        assert splan.count(20) == splan.count(16)

    def test_stage_of_level(self, splan):
        assert splan.stage_of_level(1) == (0, "doubling")
        assert splan.stage_of_level(2) == (1, "doubling")
        assert splan.stage_of_level(3) == (1, "doubling")
        assert splan.stage_of_level(4) == (1, "frozen")
        assert splan.stage_of_level(5) == (1, "frozen")
        assert splan.stage_of_level(6) == (2, "doubling")
        assert splan.stage_of_level(28) == (2, "frozen")
        assert splan.stage_of_level(29) == (3, "doubling")
        with pytest.raises(UnavailableError):
            splan.stage_of_level(0)
        with pytest.raises(UnavailableError):
            splan.stage_of_level(32153)

    def test_verification_suite_passes(self, splan):
        res = verify_sweep_plan(splan)
        assert res["ok"]
        assert res["k_max"] == 6
        # recurrence/interleave/closed form at every stage; the pinches and
        # the count cap need the previous stage, so they start at k=2
        per_name = {}
        for c in res["checks"]:
            per_name.setdefault(c["name"], []).append(c["k"])
        assert per_name["recurrence"] == list(range(1, 7))
        assert per_name["interleave"] == list(range(1, 7))
        assert per_name["count_closed_form"] == list(range(1, 7))
        assert per_name["doubling_span_pinch"] == list(range(2, 7))
        assert per_name["stage_end_pinch"] == list(range(2, 7))
        assert per_name["count_cap"] == list(range(2, 7))

    def test_stage_one_overshoots_the_cap(self, splan):
        # the additive constant makes #C_{n_1} = 5 > 1 * 2^{n_1 s}, which is
        # why the cap check starts at stage 2
        assert cmp_rpow(Fraction(splan.counts_at_stage[1], 1),
                        Fraction(2), SWEEP_N[0] * S) > 0

    def test_parameter_validation(self):
        with pytest.raises(ValidationError):
            sweep_plan(S, T)
        with pytest.raises(ConstructionError):
            sweep_plan(T, S, level_budget=2)


class TestSweepSet:
    def test_hand_materialization_to_level_8(self, splan):
        tree = sweep_set(splan, 8)
        assert tree.levels[0] == [0]
        assert tree.levels[1] == [0, 1]
        assert tree.levels[2] == [0, 1, 2]
        assert tree.levels[3] == [0, 1, 2, 3, 4]
        assert tree.levels[4] == [0, 2, 4, 6, 8]
        assert tree.levels[5] == [0, 4, 8, 12, 16]
        # designation moved to (5, 16); its subtree doubles, others stay
        assert tree.levels[6] == [0, 8, 16, 24, 32, 33]
        assert tree.levels[7] == [0, 16, 32, 48, 64, 65, 66, 67]
        assert tree.levels[8] == [0, 32, 64, 96] + list(range(128, 136))
        tree.validate()

    def test_designation_history_with_wrap(self, splan):
        tree = sweep_set(splan, 30)
        dz = tree.meta["designated"]
        assert dz[0] == {"stage": 0, "level": 1, "key": 0}
        assert dz[1] == {"stage": 1, "level": 5, "key": 16, "wrapped": False}
        # at N_2 = 28 the old designated interval is rightmost, so the
        # designation wraps to the global leftmost cube
        assert dz[2]["level"] == 28
        assert dz[2]["key"] == 0
        assert dz[2]["wrapped"] is True

    def test_counts_match_plan(self, splan):
        tree = sweep_set(splan, 30)
        for n in range(31):
            assert len(tree.levels[n]) == splan.count(n)
        assert tree.box_count(32152) == splan.counts_at_stage[6]

    def test_verify_suite_passes(self, splan):
        res = verify_sweep_set(splan, sweep_set(splan, 24))
        assert res["ok"]
        names = {c["name"] for c in res["checks"]}
        assert "level_count" in names
        assert "designated_doubling" in names
        assert "designated_lower" in names

    def test_depth_validation(self, splan):
        with pytest.raises(ValidationError):
            sweep_set(splan, 63)
        with pytest.raises(ValidationError):
            sweep_set(splan, splan.last_level + 1)


class TestFrostmanStages:
    def radii(self, depth):
        return [pow2(-(k + 2)) for k in range(1, depth + 1)]

    def test_full_interval_stage_levels(self):
        tree = DyadicSetTree.full(1, 8)
        measures, report = stagewise_frostman_measures(
            tree, Fraction(1, 2), self.radii(8), stages=3)
        assert report.stage_levels == [4, 5, 6]
        assert report.ok
        assert not report.heuristic_oracle
        assert [r["cubes"] for r in report.rows] == [16, 32, 64]
        assert report.rows[-1]["max_mass"] == Fraction(1, 64)
        assert all(r["mass_bound_ok"] for r in report.rows)

    def test_full_interval_masses_are_uniform(self):
        tree = DyadicSetTree.full(1, 8)
        measures, report = stagewise_frostman_measures(
            tree, Fraction(1, 2), self.radii(8), stages=2)
        mu = measures[-1]
        mu.validate()
        assert mu.max_depth == 5
        assert mu.dyadic_correlation_sum(5) == Fraction(1, 32)

    def test_alternating_stage_levels(self, plan):
        tree = alternating_set(plan, 20)
        measures, report = stagewise_frostman_measures(
            tree, Fraction(1, 3), self.radii(20))
        assert report.stage_levels[:4] == [7, 8, 9, 10]
        assert report.ok

    def test_ball_check_full_interval(self):
        tree = DyadicSetTree.full(1, 8)
        measures, report = stagewise_frostman_measures(
            tree, Fraction(1, 2), self.radii(8), stages=3)
        res = verify_stage_balls(measures, report, samples=100)
        assert res["ok"]
        for row, r in zip(res["rows"], report.stage_radii):
            assert cmp_rpow(row["max_cover_mass"], r, Fraction(1, 2)) <= 0

    def test_oracle_rejects_everything(self):
        # s above the set's dimension: no cube is admissible
        tree = DyadicSetTree.from_digit_ifs(1, 2, [0, 3], 12)
        with pytest.raises(ConstructionError):
            stagewise_frostman_measures(tree, Fraction(3, 5), self.radii(12))

    def test_cantor_supports_s_below_half(self):
        tree = DyadicSetTree.from_digit_ifs(1, 2, [0, 3], 14)
        measures, report = stagewise_frostman_measures(
            tree, Fraction(1, 3), self.radii(14), stages=2)
        assert len(measures) == 2
        assert report.ok
        assert not report.heuristic_oracle

    def test_heuristic_oracle_flagged(self):
        # a tree with no construction metadata falls back to the slope
        # heuristic, and the report says so
        src = DyadicSetTree.from_digit_ifs(1, 2, [0, 3], 14)
        bare = DyadicSetTree(1, 14, src.levels, None, {})
        measures, report = stagewise_frostman_measures(
            bare, Fraction(1, 4), self.radii(14), stages=1)
        assert report.heuristic_oracle
        assert measures

    def test_radii_validation(self):
        tree = DyadicSetTree.full(1, 6)
        with pytest.raises(ValidationError):
            stagewise_frostman_measures(tree, Fraction(1, 2),
                                        [Fraction(1, 8), Fraction(1, 4)])
        with pytest.raises(ValidationError):
            stagewise_frostman_measures(tree, Fraction(1, 2), [])
        with pytest.raises(ValidationError):
            stagewise_frostman_measures(tree, 0, [Fraction(1, 8)])

    def test_report_dataclass_roundtrip(self):
        rep = FrostmanStageReport(Fraction(1, 2), [4], [Fraction(1, 8)],
                                  False)
        assert rep.ok and rep.rows == []
