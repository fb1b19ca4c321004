from __future__ import annotations

import math

import pytest

from miniastree.alarms import AlarmKind
from miniastree.numeric import floats as fl
from miniastree.numeric.intervals import (
    FloatInterval,
    IntInterval,
    Machine,
    ThresholdSet,
    arith,
    compare,
    guard_cmp,
)


class TestThresholds:
    """しきい値集合の上下の探索。"""

    def test_geometric_set(self):
        t = ThresholdSet.geometric(1.0, 2.0, 3)
        assert t.above(3.0) == 4.0
        assert t.below(3.0) == 2.0
        assert t.below(-3.0) == -4.0
        assert t.above(9.0) == math.inf
        assert t.below(-9.0) == -math.inf

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            ThresholdSet.geometric(1.0, 1.0, 3)


class TestDirectedRounding:
    """丸めは外向き。表現可能な結果は広げない。"""

    def test_inexact_sum_is_bracketed(self):
        lo, hi = fl.add_down(0.1, 0.2), fl.add_up(0.1, 0.2)
        assert lo < hi
        assert lo <= 0.1 + 0.2 <= hi

    def test_exact_sum_stays_exact(self):
        assert fl.add_down(1.0, 2.0) == 3.0 == fl.add_up(1.0, 2.0)

    def test_float_interval_addition(self):
        r, flags = arith("+", FloatInterval.const(0.1), FloatInterval.const(0.2))
        assert not flags
        assert r.contains(0.1 + 0.2)
        assert not r.is_singleton


class TestIntArithmetic:
    """整数区間の演算とエラーフラグ。"""

    def test_overflow_is_flagged_and_excluded(self):
        m = Machine()
        r, flags = arith("+", IntInterval(0, m.int_max), IntInterval.const(1))
        assert AlarmKind.OVERFLOW in flags
        assert r == IntInterval(1, m.int_max)

    def test_division_by_interval_containing_zero(self):
        r, flags = arith("/", IntInterval.const(10), IntInterval(-1, 2))
        assert flags == frozenset({AlarmKind.DIV_ZERO})
        assert r == IntInterval(-10, 10)

    def test_division_without_zero(self):
        r, flags = arith("/", IntInterval(7, 9), IntInterval(2, 3))
        assert not flags
        assert r == IntInterval(2, 4)

    def test_c_remainder_sign(self):
        r, _ = arith("%", IntInterval.const(-7), IntInterval.const(3))
        assert r == IntInterval.const(-1)

    def test_shift_out_of_range(self):
        _, flags = arith("<<", IntInterval.const(1), IntInterval(0, 40))
        assert AlarmKind.SHIFT in flags

    def test_small_machine(self):
        m = Machine(int_bits=8)
        _, flags = arith("*", IntInterval.const(16), IntInterval.const(8), m)
        assert AlarmKind.OVERFLOW in flags

    def test_float_to_int_truncates(self):
        r, flags = arith("cast_int", FloatInterval(-1.5, 2.7))
        assert not flags
        assert r == IntInterval(-1, 2)


class TestFloatArithmetic:
    def test_overflow_flag(self):
        _, flags = arith("*", FloatInterval.const(1e308), FloatInterval.const(10.0))
        assert AlarmKind.OVERFLOW in flags

    def test_division_by_zero_flag(self):
        r, flags = arith("/", FloatInterval.const(1.0), FloatInterval(0.0, 2.0))
        assert AlarmKind.DIV_ZERO in flags
        assert r.lo >= 0.5 - 1e-12

    def test_nan_operand_is_flagged_and_excluded(self):
        r, flags = arith("+", FloatInterval(0.0, 1.0, True), FloatInterval.const(1.0))
        assert AlarmKind.NAN in flags
        assert r == FloatInterval(1.0, 2.0)
        assert not r.maybe_nan


class TestLattice:
    """結合・拡大・縮小。"""

    def test_join_and_leq(self):
        a, b = IntInterval(0, 3), IntInterval(5, 8)
        j = a.join(b)
        assert j == IntInterval(0, 8)
        assert a.leq(j) and b.leq(j)
        assert not j.leq(a)

    def test_widening_jumps_to_threshold(self):
        t = ThresholdSet.geometric(1.0, 2.0, 10)
        w = IntInterval(0, 1).widen(IntInterval(0, 5), t)
        assert w == IntInterval(0, 8)

    def test_widening_keeps_stable_bounds(self):
        t = ThresholdSet.geometric(1.0, 2.0, 10)
        w = FloatInterval(-1.0, 1.0).widen(FloatInterval(-1.0, 1.5), t)
        assert w.lo == -1.0
        assert w.hi == 2.0

    def test_narrowing_replaces_threshold_bound(self):
        t = ThresholdSet.geometric(1.0, 2.0, 10)
        n = IntInterval(0, 128).narrow(IntInterval(0, 100), t)
        assert n == IntInterval(0, 100)

    def test_narrowing_keeps_ordinary_bound(self):
        t = ThresholdSet.geometric(1.0, 2.0, 10)
        n = IntInterval(0, 100).narrow(IntInterval(0, 50), t)
        assert n == IntInterval(0, 100)

    def test_perturbation_widens_relatively(self):
        p = FloatInterval(1.0, 2.0).perturb(1e-10)
        assert p.lo < 1.0 and p.hi > 2.0
        assert p.hi - 2.0 < 1e-9


class TestGuards:
    def test_less_than_constant(self):
        r = guard_cmp("<", IntInterval(0, 10), IntInterval.const(5))
        assert r == (IntInterval(0, 4), IntInterval.const(5))

    def test_unsatisfiable(self):
        assert guard_cmp(">", IntInterval(0, 3), IntInterval.const(7)) is None

    def test_not_equal_trims_endpoint(self):
        r = guard_cmp("!=", IntInterval(0, 10), IntInterval.const(0))
        assert r is not None
        assert r[0] == IntInterval(1, 10)

    def test_ordered_comparison_excludes_nan(self):
        """NaN との順序比較は偽なので、真の側には NaN が残らない。"""
        x = FloatInterval(0.0, 10.0, True)
        taken = guard_cmp("<", x, FloatInterval.const(5.0))
        assert taken is not None and not taken[0].maybe_nan
        assert x.meet(taken[0]) == FloatInterval(0.0, fl.next_down(5.0))
        untaken = guard_cmp("<", x, FloatInterval.const(5.0), negated=True)
        assert untaken is not None and untaken[0].maybe_nan

    def test_compare_results(self):
        assert compare("==", IntInterval.const(0), IntInterval.const(1)) == IntInterval.const(0)
        assert compare("<", IntInterval(0, 2), IntInterval.const(5)) == IntInterval.const(1)
        assert compare("<", IntInterval(0, 9), IntInterval.const(5)) == IntInterval(0, 1)


class TestWideningChain:
    """しきい値付き拡大は |T| に比例する回数で止まる。"""

    def test_increasing_chain_stabilizes(self):
        t = ThresholdSet.geometric(1.0, 2.0, 60)
        x = IntInterval.const(0)
        steps = 0
        while True:
            hi = x.hi * 3 + 1 if math.isfinite(x.hi) else x.hi
            y = x.widen(IntInterval(0, hi), t)
            steps += 1
            if y == x:
                break
            x = y
        assert steps <= 2 * len(t)
        assert x.hi == math.inf
