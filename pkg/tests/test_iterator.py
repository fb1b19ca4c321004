from __future__ import annotations

import pytest

from miniastree.errors import DivergenceError
from miniastree.frontend.ast import BOOL, FLOAT, Binary, Const, VarRef
from miniastree.memory import transfer
from miniastree.numeric.intervals import FloatInterval, IntInterval

DELAYED = {"domains": (), "epsilon": 0.0, "max_iterations": 1000}


class TestNarrowing:
    """拡大で 128 まで飛んだ上界を縮小で 100 に戻す。"""

    def test_loop_head(self, analyze_source, corpus):
        a = analyze_source(corpus["narrowing"])
        (head,) = a.loop_heads()
        assert a.interval("x", at=head) == IntInterval(0, 100)
        assert a.ctx.stats.narrowings >= 1

    def test_after_the_loop(self, analyze_source, corpus):
        a = analyze_source(corpus["narrowing"])
        assert a.interval("x") == IntInterval.const(100)
        assert a.alarms == []

    def test_guarded_increment(self, analyze_source):
        """条件の外側で値が止まる分岐でも、比較の定数まで上界を詰める。"""
        a = analyze_source("int x;\nvoid main() {\n  x = 0;\n  while (true) {\n    if (x < 100) {\n      x = x + 1;\n    }\n  }\n}\n")
        (head,) = a.loop_heads()
        assert a.interval("x", at=head) == IntInterval(0, 100)
        assert a.alarms == []

    def test_without_narrowing(self, analyze_source, corpus):
        a = analyze_source(corpus["narrowing"], narrowing_steps=0)
        (head,) = a.loop_heads()
        assert a.interval("x", at=head) == IntInterval(0, 128)


class TestDelayedWidening:
    """安定したばかりのセルがあるとき、拡大を 1 回見送る。"""

    def test_bounded_with_delay(self, analyze_source, corpus):
        a = analyze_source(corpus["delayed"], delay=2, delay_on_stable=True, **DELAYED)
        (head,) = a.loop_heads()
        # 最小不動点は X = 4, Y = 3。閾値で止まるので少し上に残る
        assert 3.9 <= a.interval("X", at=head).hi <= 8.0
        assert 2.9 <= a.interval("Y", at=head).hi <= 5.0

    def test_unbounded_without_delay(self, analyze_source, corpus):
        a = analyze_source(corpus["delayed"], delay=0, delay_on_stable=False, **DELAYED)
        (head,) = a.loop_heads()
        assert a.interval("X", at=head).hi > 1e15


class TestUnrolling:
    def test_unrolled_iterations_are_counted(self, analyze_source, corpus):
        a = analyze_source(corpus["narrowing"], unroll=3)
        assert a.ctx.stats.loops >= 1
        assert a.ctx.stats.unrolled == 3
        assert a.interval("x") == IntInterval.const(100)

    def test_no_unrolling(self, analyze_source, corpus):
        a = analyze_source(corpus["narrowing"], unroll=0)
        assert a.ctx.stats.unrolled == 0
        assert a.interval("x") == IntInterval.const(100)


class TestDivergence:
    def test_iteration_budget(self, analyze_source, corpus):
        with pytest.raises(DivergenceError) as info:
            analyze_source(corpus["narrowing"], max_iterations=1)
        assert info.value.exit_code == 4


class TestPartitioning:
    """符号で分かれたトレースを別々に扱うと |x| の下界 0 が得られる。"""

    def test_partitioned_function(self, analyze_source, corpus):
        a = analyze_source(corpus["partition"], partition=("absolute",))
        assert a.interval("Y") == IntInterval(0, 5)
        assert a.ctx.stats.max_partitions >= 2

    def test_merged_function(self, analyze_source, corpus):
        a = analyze_source(corpus["partition"])
        assert a.interval("Y") == IntInterval(-5, 5)

    def test_partition_cap(self, analyze_source, corpus):
        a = analyze_source(corpus["partition"], partition=("absolute",), partition_cap=1)
        assert a.ctx.stats.max_partitions <= 1
        assert a.interval("Y").leq(IntInterval(-5, 5))


class TestCalls:
    """inout 引数、静的変数、列挙型。"""

    def test_features(self, analyze_source, corpus):
        a = analyze_source(corpus["features"])
        level = a.interval("level")
        assert level.lo == 1.0 and level.hi == 2.0
        assert a.interval("calls") == IntInterval.const(2)
        assert a.interval("mode") == IntInterval(0, 2)
        assert a.alarms == []

    def test_every_statement_has_an_invariant(self, analyze_source, corpus):
        a = analyze_source(corpus["clean"])
        posts = {uid for uid, where in a.invariants if where == "post"}
        assert posts
        assert a.alarms == []


class TestGuardsOnFloats:
    """NaN を含みうる値も、順序比較の真の側では NaN を含まない。"""

    def test_guard_clears_nan(self, analyze_source):
        a = analyze_source("float x;\nvoid main() {\n  x = 1.0;\n}\n")
        cell = a.cell("x")
        env = a.final.set_interval(cell, FloatInterval(0.0, 10.0, True))
        cond = Binary("<", VarRef("x", "x", FLOAT), Const(5.0, FLOAT), BOOL)
        taken = transfer.guard(a.ctx, env, cond, True)
        assert not taken.interval(cell).maybe_nan
        assert taken.interval(cell).hi < 5.0
        assert transfer.guard(a.ctx, env, cond, False).interval(cell).maybe_nan
