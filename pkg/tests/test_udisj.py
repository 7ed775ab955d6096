import math
import random
from fractions import Fraction

import pytest

from efbound.errors import BudgetError, InputError
from efbound.udisj import (
    CorruptionParams,
    FunctionTable,
    PartitionT,
    ShiftSpec,
    UdisjParams,
    build_shift,
    cond_expect,
    corruption_rhs,
    entropy_gap,
    enum_classes,
    ksubsets,
    mu_class_probabilities,
    parse_function,
    partitions,
    razborov_identities,
    rectangle_corruption_scan,
    row_col_stats,
    shift_rank_lb,
)


def random_table(n, rng, allow_zero=True):
    lo = 0 if allow_zero else 1
    return FunctionTable(
        n, [Fraction(rng.randrange(lo, 5), rng.randrange(1, 4)) for _ in range(1 << n)])


class TestParams:
    @pytest.mark.parametrize("n", [2, 4, 5, 6, 8, 0, -1])
    def test_bad_n_rejected(self, n):
        with pytest.raises(InputError):
            UdisjParams(n)

    @pytest.mark.parametrize("n,ell", [(3, 1), (7, 2), (11, 3), (15, 4)])
    def test_ell(self, n, ell):
        assert UdisjParams(n).ell == ell


class TestFunctionTables:
    def test_json_round_trip(self):
        t = FunctionTable(2, ["1/2", 0, 3, "7/5"])
        again = FunctionTable.from_json(t.to_json())
        assert again.values == t.values and again.n == 2

    def test_wrong_length(self):
        with pytest.raises(InputError):
            FunctionTable(2, [1, 2, 3])

    def test_builtins(self):
        ones = FunctionTable.ones(2)
        assert all(v == 1 for v in ones.values)
        ind = FunctionTable.indicator_set(3, 0b101)
        assert ind(0b101) == 1 and sum(ind.values) == 1
        has2 = FunctionTable.indicator_contains(3, 2)
        assert has2(0b010) == 1 and has2(0b110) == 1 and has2(0b101) == 0
        no2 = FunctionTable.indicator_avoids(3, 2)
        assert all(has2(m) + no2(m) == 1 for m in range(8))

    def test_parse(self):
        assert parse_function("ones", 3).values == FunctionTable.ones(3).values
        assert parse_function("set:5", 3)(5) == 1
        assert parse_function("contains:1", 3)(0b001) == 1
        assert parse_function("avoids:3", 3)(0b100) == 0
        for bad in ("mystery", "set:99", "contains:0", "set:x"):
            with pytest.raises(InputError):
                parse_function(bad, 3)


class TestBuildShift:
    def test_n1_rho1(self):
        M = build_shift(ShiftSpec(1, 1))
        assert M.tolist() == [[1, 1], [1, 0]]

    def test_n1_rho2(self):
        M = build_shift(ShiftSpec(1, 2))
        assert M.tolist() == [[2, 2], [2, 1]]

    def test_n2_full_intersection_entry(self):
        # a = b = {1,2}: |a&b| = 2, default fill gives (1-2)^2 + 0 = 1
        M = build_shift(ShiftSpec(2, 1))
        assert M[3, 3] == 1

    @pytest.mark.parametrize("rho", [Fraction(1), Fraction(3, 2), Fraction(2)])
    def test_fill_rule_never_touches_the_classes(self, rho):
        hard = build_shift(ShiftSpec(3, rho))
        const = build_shift(ShiftSpec(3, rho, fill="constant", fill_value=Fraction(9)))
        for a in range(8):
            for b in range(8):
                inter = (a & b).bit_count()
                if inter == 0:
                    assert hard[a, b] == const[a, b] == rho
                elif inter == 1:
                    assert hard[a, b] == const[a, b] == rho - 1
                else:
                    assert const[a, b] == 9
                    assert hard[a, b] == (1 - inter) ** 2 + rho - 1

    def test_nonneg_for_rho_at_least_one(self):
        assert build_shift(ShiftSpec(3, 1)).is_nonneg()
        assert build_shift(ShiftSpec(3, Fraction(5, 4))).is_nonneg()

    def test_rho_below_one_rejected(self):
        with pytest.raises(InputError):
            ShiftSpec(2, Fraction(1, 2))

    def test_budget(self):
        with pytest.raises(BudgetError):
            build_shift(ShiftSpec(15, 1))
        # explicit limit override
        build_shift(ShiftSpec(2, 1), max_n=2)


class TestEnumClasses:
    def test_n3_sizes(self):
        A, B = enum_classes(UdisjParams(3))
        assert len(A) == 6 and len(B) == 3

    def test_n7_sizes(self):
        A, B = enum_classes(UdisjParams(7))
        assert len(A) == 210 and len(B) == 210

    def test_classes_disjoint_and_well_formed(self):
        p = UdisjParams(7)
        A, B = enum_classes(p)
        assert not set(A) & set(B)
        for a, b in A:
            assert a.bit_count() == p.ell and b.bit_count() == p.ell
            assert (a & b).bit_count() == 0
        for a, b in B:
            assert (a & b).bit_count() == 1


class TestMu:
    @pytest.mark.parametrize("n", [3, 7])
    def test_class_masses(self, n):
        # internal asserts also check support = A u B and equiprobability
        assert mu_class_probabilities(UdisjParams(n)) == (Fraction(3, 4), Fraction(1, 4))


class TestCondExpect:
    def test_constant_one(self):
        p = UdisjParams(3)
        ones = FunctionTable.ones(3)
        assert cond_expect(ones, ones, p) == (Fraction(1), Fraction(1))

    def test_point_indicator(self):
        # f = g = indicator of the single set {1}: disjoint pairs never hit
        # it twice, the B pair ({1},{1}) is one of three
        p = UdisjParams(3)
        ind = FunctionTable.indicator_set(3, 0b001)
        assert cond_expect(ind, ind, p) == (Fraction(0), Fraction(1, 3))

    def test_negative_rejected(self):
        p = UdisjParams(3)
        bad = FunctionTable(3, [1] * 7 + [-1])
        with pytest.raises(InputError):
            cond_expect(bad, FunctionTable.ones(3), p)

    def test_size_mismatch(self):
        with pytest.raises(InputError):
            cond_expect(FunctionTable.ones(7), FunctionTable.ones(3), UdisjParams(3))


class TestRowColStats:
    def test_point_indicator_partition(self):
        # T1 = {2}, T2 = {3}, i = 1, f = g = indicator of {1}:
        # the only a containing i is {1} itself
        p = UdisjParams(3)
        ind = FunctionTable.indicator_set(3, 0b001)
        st = row_col_stats(ind, ind, PartitionT(t1=0b010, t2=0b100, i=1), p)
        assert st.row1 == 1 and st.row0 == 0
        assert st.col1 == 1 and st.col0 == 0

    @pytest.mark.parametrize("n,seed", [(3, 0), (3, 1), (7, 2)])
    def test_row_average_is_unconditional_expectation(self, n, seed):
        # (row0 + row1)/2 = E[f(a) | T] since i lands in a with chance 1/2
        p = UdisjParams(n)
        rng = random.Random(seed)
        f = random_table(n, rng)
        g = FunctionTable.ones(n)
        for T in partitions(p):
            st = row_col_stats(f, g, T, p)
            pool = list(ksubsets(T.t1 | (1 << (T.i - 1)), p.ell))
            expect = sum((f(m) for m in pool), Fraction(0)) / len(pool)
            assert (st.row0 + st.row1) / 2 == expect

    def test_partition_validation(self):
        p = UdisjParams(3)
        ones = FunctionTable.ones(3)
        with pytest.raises(InputError):  # overlap
            row_col_stats(ones, ones, PartitionT(t1=0b011, t2=0b100, i=1), p)
        with pytest.raises(InputError):  # i inside T1
            row_col_stats(ones, ones, PartitionT(t1=0b001, t2=0b100, i=1), p)
        with pytest.raises(InputError):  # wrong sizes
            row_col_stats(ones, ones, PartitionT(t1=0b110, t2=0b000, i=1), p)
        with pytest.raises(InputError):  # i out of range
            row_col_stats(ones, ones, PartitionT(t1=0b010, t2=0b100, i=5), p)


class TestRazborovIdentities:
    def test_point_indicator_exact_sides(self):
        p = UdisjParams(3)
        ind = FunctionTable.indicator_set(3, 0b001)
        rep = razborov_identities(ind, ind, p)
        assert rep.ok
        assert rep.expectation_a == (Fraction(0), Fraction(0))
        assert rep.expectation_b == (Fraction(1, 3), Fraction(1, 3))

    @pytest.mark.parametrize("n,seed", [(3, 0), (3, 1), (3, 2), (3, 3), (7, 0), (7, 1)])
    def test_random_functions(self, n, seed):
        # the two computation paths (conditioning on the class versus
        # averaging row/col statistics over partitions) must agree exactly
        rng = random.Random(seed)
        p = UdisjParams(n)
        rep = razborov_identities(random_table(n, rng), random_table(n, rng), p)
        assert rep.ok
        assert rep.expectation_a[0] == rep.expectation_a[1]
        assert rep.expectation_b[0] == rep.expectation_b[1]
        assert len(rep.marginals) == math.comb(n, 2 * p.ell - 1)
        for _, left, right in rep.marginals:
            assert left == right

    def test_report_json(self):
        p = UdisjParams(3)
        d = razborov_identities(FunctionTable.ones(3), FunctionTable.ones(3), p).to_json()
        assert d["ok"] is True
        assert d["expectation_a"] == ["1", "1"]
        assert len(d["marginals"]) == 3

    def test_budget(self):
        p = UdisjParams(15)
        ones = FunctionTable.ones(15)
        with pytest.raises(BudgetError):
            razborov_identities(ones, ones, p)


class TestEntropyGap:
    def test_quarter_point(self):
        # 1 - H(1/4) = 0.18872..., Taylor term (1/2)^2/(2 ln 2) = 0.18033...
        gap = entropy_gap(0.25)
        direct = (1 - (-(0.25 * math.log2(0.25) + 0.75 * math.log2(0.75)))) \
            - 0.25 / (2 * math.log(2))
        assert gap == pytest.approx(direct, abs=1e-15)
        assert gap > 0.008

    def test_zero_at_half(self):
        assert abs(entropy_gap(0.5)) < 1e-15

    def test_symmetry(self):
        for x in (0.1, 0.23, 0.42, 0.31):
            assert entropy_gap(x) == pytest.approx(entropy_gap(1 - x), abs=1e-12)

    def test_grid_nonnegative(self):
        for k in range(1, 1000):
            x = k / 1000
            assert entropy_gap(x) >= -1e-12

    @pytest.mark.parametrize("x", [0, 1, -0.5, 2, 1.0000001])
    def test_domain(self, x):
        with pytest.raises(InputError):
            entropy_gap(x)

    def test_fraction_accepted(self):
        assert entropy_gap(Fraction(1, 4)) == entropy_gap(0.25)


class TestCorruptionRhs:
    def test_unit_epsilon_sixteen(self):
        # exponent -16/(16 ln 2) = -1/ln 2, and 2^(1/ln 2) = e
        v = corruption_rhs(CorruptionParams(1), 16)
        assert v == pytest.approx(math.exp(-1), abs=1e-12)

    def test_small_epsilon_near_one(self):
        assert corruption_rhs(CorruptionParams(Fraction(1, 10 ** 6)), 4) == \
            pytest.approx(1.0, abs=1e-9)

    def test_doubling_ell_squares(self):
        p = CorruptionParams(Fraction(1, 2))
        for ell in (4, 16, 64):
            assert corruption_rhs(p, 2 * ell) == \
                pytest.approx(corruption_rhs(p, ell) ** 2, rel=1e-12)

    def test_strictly_decreasing_in_ell(self):
        p = CorruptionParams(Fraction(1, 3))
        vals = [corruption_rhs(p, ell) for ell in range(1, 40)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_log_term(self):
        base = corruption_rhs(CorruptionParams(Fraction(1, 2)), 8)
        with_c = corruption_rhs(CorruptionParams(Fraction(1, 2), C=2), 8)
        assert with_c == pytest.approx(base * 64, rel=1e-12)

    def test_validation(self):
        with pytest.raises(InputError):
            corruption_rhs(CorruptionParams(1), 0)
        with pytest.raises(InputError):
            CorruptionParams(0)
        with pytest.raises(InputError):
            CorruptionParams(Fraction(3, 2))
        with pytest.raises(InputError):
            CorruptionParams(Fraction(1, 2), C=-1)


class TestShiftRankLb:
    def test_small_n_clamps_to_one(self):
        # raw value (1/2) * 2^(4/(64 ln 2)) ~ 0.532, below the clamp
        assert shift_rank_lb(15, 1, CorruptionParams(Fraction(1, 2))) == 1.0

    def test_large_n_exponential(self):
        v = shift_rank_lb(4443, 1, CorruptionParams(Fraction(1, 2)))
        assert math.log2(v) == pytest.approx(1111 / (64 * math.log(2)) - 1, abs=1e-9)
        assert math.log2(v) == pytest.approx(24.044, abs=1e-2)

    def test_auto_epsilon(self):
        assert shift_rank_lb(4443, 1) == \
            shift_rank_lb(4443, 1, CorruptionParams(Fraction(1, 2)))

    def test_vacuous_epsilon_rejected(self):
        with pytest.raises(InputError):
            shift_rank_lb(15, 2, CorruptionParams(Fraction(1, 2)))
        with pytest.raises(InputError):
            shift_rank_lb(15, 1, CorruptionParams(1))

    def test_nonincreasing_in_rho(self):
        eps = CorruptionParams(Fraction(1, 8))
        vals = [shift_rank_lb(4443, rho, eps)
                for rho in (1, Fraction(3, 2), 2, 3, 4, 6)]
        assert all(a >= b for a, b in zip(vals, vals[1:]))

    def test_bad_inputs(self):
        with pytest.raises(InputError):
            shift_rank_lb(14, 1)
        with pytest.raises(InputError):
            shift_rank_lb(15, Fraction(1, 2))


class TestRectangleScan:
    def test_exhaustive_n3(self):
        p = UdisjParams(3)
        rep = rectangle_corruption_scan(p, Fraction(1, 2), mode="exhaustive")
        assert rep.scanned == 65536
        assert rep.best_value == Fraction(1, 6)
        assert rep.zero_b_max == Fraction(1, 3)

    def test_named_rectangle_and_full_rectangle(self):
        p = UdisjParams(3)
        eps = Fraction(1, 3)
        rep = rectangle_corruption_scan(p, eps, mode="exhaustive", keep_records=True)
        by_id = {rid: (pa, pb, val) for rid, pa, pb, val in rep.records}
        # rows {{1}}: subset mask 1; cols {{2},{3}}: subset masks 2 and 4
        rid = f"r{1 << 1:x}.c{(1 << 2) | (1 << 4):x}"
        pa, pb, val = by_id[rid]
        assert (pa, pb) == (Fraction(1, 3), Fraction(0))
        assert val == (1 - eps) / 3
        # full rectangle has both probabilities 1, value -eps
        full = f"r{255:x}.c{255:x}"
        assert by_id[full] == (Fraction(1), Fraction(1), -eps)

    def test_best_rect_achieves_reported_value(self):
        p = UdisjParams(3)
        eps = Fraction(1, 4)
        rep = rectangle_corruption_scan(p, eps, mode="exhaustive")
        A, B = enum_classes(p)
        rs, cs = rep.best_rect
        pa = Fraction(sum(1 for a, b in A if (rs >> a) & 1 and (cs >> b) & 1), len(A))
        pb = Fraction(sum(1 for a, b in B if (rs >> a) & 1 and (cs >> b) & 1), len(B))
        assert (1 - eps) * pa - pb == rep.best_value
        # and the zero-B witness really has P(R|B) = 0
        zs, zc = rep.zero_b_rect
        assert sum(1 for a, b in B if (zs >> a) & 1 and (zc >> b) & 1) == 0

    def test_sampled_mode_deterministic(self):
        p = UdisjParams(7)
        r1 = rectangle_corruption_scan(p, Fraction(1, 2), mode="sample", seed=11, count=40)
        r2 = rectangle_corruption_scan(p, Fraction(1, 2), mode="sample", seed=11, count=40)
        assert r1.scanned == r2.scanned == 40
        assert r1.best_value == r2.best_value and r1.best_rect == r2.best_rect
        assert r1.zero_b_max is None

    def test_exhaustive_budget(self):
        with pytest.raises(BudgetError):
            rectangle_corruption_scan(UdisjParams(7), Fraction(1, 2), mode="exhaustive")

    def test_bad_mode_and_eps(self):
        p = UdisjParams(3)
        with pytest.raises(InputError):
            rectangle_corruption_scan(p, Fraction(1, 2), mode="walk")
        with pytest.raises(InputError):
            rectangle_corruption_scan(p, Fraction(3, 2))

    def test_csv_rows(self):
        p = UdisjParams(3)
        rep = rectangle_corruption_scan(p, Fraction(1, 2), mode="sample",
                                        seed=0, count=5, keep_records=True)
        rows = list(rep.csv_rows())
        assert rows[0] == ("rectangle-id", "p_a", "p_b", "value")
        assert len(rows) == 6
