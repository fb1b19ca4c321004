from __future__ import annotations

import numpy as np
import pytest

from miniastree.alarms import AlarmKind
from miniastree.concrete import run
from miniastree.domains.decision_tree.domain import Tree
from miniastree.domains.ellipsoid.filter import FilterParams
from miniastree.domains.octagon import dbm
from miniastree.errors import InvalidFilterParams
from miniastree.frontend.ast import FLOAT, Binary, Const, VarRef
from miniastree.numeric.floats import FloatModel
from miniastree.numeric.intervals import FloatInterval, IntInterval
from miniastree.numeric.linear import eval_form, linearize


def _difference_octagon() -> dbm.Octagon:
    # x0 - x1 <= 3, 0 <= x1 <= 1
    m = np.array(dbm.Octagon.top(2).m)
    dbm.constrain(m, 1, 0, -1, 1, 3.0)
    dbm.set_bounds(m, 1, FloatInterval(0.0, 1.0))
    return dbm.close(m)


class TestDBM:
    """差分束縛行列の閉包と包含判定。"""

    def test_closure_derives_unary_bound(self):
        o = _difference_octagon()
        assert o.bounds(0).hi == 4.0
        assert o.bounds(1) == FloatInterval(0.0, 1.0)

    def test_contains_is_exact(self):
        o = _difference_octagon()
        assert dbm.contains(o, [4.0, 1.0])
        assert not dbm.contains(o, [4.5, 1.0])

    def test_negative_cycle_is_bottom(self):
        m = np.array(dbm.Octagon.top(1).m)
        dbm.set_bounds(m, 0, FloatInterval(0.0, 1.0))
        dbm.constrain(m, 1, 0, 1, 0, -1.0)
        assert dbm.close(m).is_bottom

    def test_join_is_upper_bound(self):
        a = _difference_octagon()
        m = np.array(dbm.Octagon.top(2).m)
        dbm.set_bounds(m, 0, FloatInterval(10.0, 10.0))
        dbm.set_bounds(m, 1, FloatInterval(0.0, 0.0))
        b = dbm.close(m)
        j = dbm.join(a, b)
        assert dbm.leq(a, j) and dbm.leq(b, j)
        assert j.bounds(0).hi == 10.0


class TestOctagonAnalysis:
    """L = Z + V が R = X - Z > V の下で X を超えないこと。"""

    def test_relational_bound(self, analyze_source, corpus):
        a = analyze_source(corpus["octagon"])
        assert a.interval("L").hi <= 100.0 + 1e-9
        assert a.useful_octagons()

    def test_intervals_alone_lose_the_bound(self, analyze_source, corpus):
        a = analyze_source(corpus["octagon"], domains=("ellipsoid", "decision_tree"))
        assert a.interval("L").hi >= 199.0


class TestFilterParams:
    def test_valid_coefficients(self):
        p = FilterParams(1.5, 0.7)
        k = p.prop1_threshold(1.0)
        assert 37.0 < k < 38.0
        assert p.delta(100.0, 1.0, 2.0**-53) <= 100.0

    def test_rounding_raises_the_threshold(self):
        p = FilterParams(1.5, 0.7)
        exact = p.prop1_threshold(1.0)
        rounded = p.prop1_threshold(1.0, FloatModel().f)
        assert exact < rounded < exact * (1.0 + 1e-12)
        assert p.delta(rounded, 1.0, FloatModel().f) <= rounded * (1.0 + 1e-12)

    @pytest.mark.parametrize("a, b", [(2.5, 0.7), (1.0, 1.2), (0.5, 0.0)])
    def test_invalid_coefficients(self, a, b):
        with pytest.raises(InvalidFilterParams):
            FilterParams(a, b)

    def test_interval_bound_from_ellipse(self):
        bx, by = FilterParams(1.5, 0.7).interval_bound(55.0)
        assert bx == pytest.approx(2.0 * (0.7 * 55.0 / 0.55) ** 0.5, rel=1e-9)
        assert by == pytest.approx(2.0 * (55.0 / 0.55) ** 0.5, rel=1e-9)


class TestEllipsoidAnalysis:
    """2 次フィルタの出力が有界と証明できること。"""

    def test_filter_output_is_bounded(self, analyze_source, corpus):
        a = analyze_source(corpus["filter"])
        head = a.loop_heads()[0]
        x = a.interval("X", at=head)
        assert max(abs(x.lo), abs(x.hi)) < 30.0
        assert not a.alarms

    def test_bound_covers_simulation(self, analyze_source, corpus):
        a = analyze_source(corpus["filter"])
        head = a.loop_heads()[0]
        x = a.interval("X", at=head)
        seen = []

        def observer(key, state):
            seen.append(state.memory[("X", None)])

        for seed in range(3):
            result = run(a.program, a.layout, seed=seed, max_ticks=3000, observer=observer)
            assert result.fault is None
        assert seen
        assert all(x.lo <= v <= x.hi for v in seen)

    def test_without_ellipsoid_the_filter_diverges(self, analyze_source, corpus):
        a = analyze_source(corpus["filter"], domains=("octagon", "decision_tree"))
        head = a.loop_heads()[0]
        x = a.interval("X", at=head)
        assert max(abs(x.lo), abs(x.hi)) > 1e300


TREE_COLLAPSE_SOURCE = """\
volatile int IX range [0, 10];

int X;
int Y;
bool B;

void main() {
  X = IX;
  B = (X == 0);
  if (!B) {
    Y = 1 / X;
  }
  X = 5;
  Y = 0;
}
"""


class TestReducedTree:
    """決定木は簡約され、同じ部分木は共有される。"""

    def test_equal_children_are_removed(self):
        a = (IntInterval(0, 0),)
        b = (IntInterval(1, 1),)
        t = Tree.from_table([a, b, a, b], 2)
        assert t.node_count() == 1
        assert t.leaf_count() == 2
        assert t.leaf_at(3) == b

    def test_subtrees_are_shared(self):
        a = (IntInterval(0, 0),)
        b = (IntInterval(1, 1),)
        t1 = Tree.from_table([a, b, None, b], 2)
        t2 = Tree.from_table([a, b, None, b], 2)
        assert t1.root is t2.root
        assert t1 == t2

    def test_bottom_collapses(self):
        assert Tree.from_table([None] * 8, 3).is_bottom

    def test_assignment_reduces_the_tree(self, analyze_source):
        a = analyze_source(TREE_COLLAPSE_SOURCE)
        assert a.alarms == []
        (pack,) = [p for p in a.packing.tree_packs if a.layout.scalar_cell("B") in p.bools]
        store = a.final.store(pack.id)
        assert store.leaf_count() < 1 << store.nbools
        assert store.node_count() == 0


class TestDecisionTreeAnalysis:
    """B = (X == 0) と !B から X != 0 を導くこと。"""

    def test_no_division_alarm(self, analyze_source, corpus):
        assert analyze_source(corpus["decision_tree"]).alarms == []

    def test_alarm_without_trees(self, analyze_source, corpus):
        a = analyze_source(corpus["decision_tree"], domains=("octagon", "ellipsoid"))
        assert [al.kind for al in a.alarms] == [AlarmKind.DIV_ZERO]


class TestLinearization:
    """X - 0.2 * X を 0.8 * X として評価すること。"""

    def test_linearized(self, analyze_source, corpus):
        x = analyze_source(corpus["linearization"]).interval("X")
        assert x.hi <= 0.8 + 1e-15
        assert x.lo >= -1e-300

    def test_product_error_widens_the_coefficient(self):
        x = VarRef("X", "X", FLOAT)
        e = Binary("-", x, Binary("*", Const(0.2, FLOAT), x, FLOAT), FLOAT)
        lf = linearize(e, lambda _: FloatInterval(-1.0, 1.0), lambda r: r.var)
        c = lf.coeff("X")
        assert c.lo < c.hi
        assert abs(c.lo - 0.8) < 1e-15 and abs(c.hi - 0.8) < 1e-15
        assert eval_form(lf, lambda _: FloatInterval(0.0, 1.0), include_last=False).lo >= -1e-300

    def test_plain_intervals(self, analyze_source, corpus):
        x = analyze_source(corpus["linearization"], linearize=False).interval("X")
        assert x.lo == pytest.approx(-0.2, abs=1e-12)
        assert x.hi >= 1.0


class TestClocked:
    """1 tick に高々 1 回増えるカウンタはオーバーフローしない。"""

    def test_counter_is_bounded_by_the_clock(self, analyze_source, corpus):
        a = analyze_source(corpus["counter"])
        assert a.alarms == []
        x = a.interval("x", at=a.loop_heads()[0])
        assert x.hi <= 1_000_000

    def test_overflow_without_clock(self, analyze_source, corpus):
        a = analyze_source(corpus["counter"], clocked=False)
        assert [al.kind for al in a.alarms] == [AlarmKind.OVERFLOW]

    def test_clock_bound_follows_max_ticks(self, analyze_source, corpus):
        a = analyze_source(corpus["counter"], max_ticks=1000)
        assert a.interval("x", at=a.loop_heads()[0]).hi <= 1000


class TestContraction:
    """しきい値以上の k では 1 ステップ後の束縛 δ(k) が k を超えない。"""

    @pytest.mark.parametrize("f", [0.0, FloatModel().f, FloatModel.conservative().f])
    def test_sweep(self, rng, f):
        violations = []
        for _ in range(20):
            b = rng.uniform(0.05, 0.95)
            a = rng.uniform(-0.95, 0.95) * 2.0 * b**0.5
            t_max = rng.uniform(0.1, 10.0)
            p = FilterParams(a, b)
            k0 = p.prop1_threshold(t_max, f) * (1.0 + 1e-6)
            for k in np.logspace(np.log10(k0), np.log10(k0) + 6.0, 1000):
                if p.delta(float(k), t_max, f) > k:
                    violations.append((a, b, t_max, float(k)))
        assert violations == []
