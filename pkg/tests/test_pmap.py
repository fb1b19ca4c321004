from __future__ import annotations

from miniastree.memory.pmap import MISSING, PMap, VisitCounter


def _pick(key, v1, v2):
    if v1 is MISSING:
        return v2
    if v2 is MISSING:
        return v1
    return max(v1, v2)


class TestPMap:
    """永続マップの基本操作。"""

    def test_set_is_persistent(self):
        a = PMap.from_items((i, i) for i in range(10))
        b = a.set(3, 30)
        assert a[3] == 3
        assert b[3] == 30
        assert len(a) == len(b) == 10

    def test_delete_and_balance(self):
        a = PMap.from_items((i, str(i)) for i in range(200))
        for i in range(0, 200, 3):
            a = a.delete(i)
        assert a.is_balanced()
        assert 3 not in a and 4 in a
        assert list(a.keys()) == [i for i in range(200) if i % 3]

    def test_merge_takes_both_sides(self):
        a = PMap.from_items([(1, 1), (2, 5)])
        b = PMap.from_items([(2, 7), (3, 3)])
        assert dict(a.merge(b, _pick).items()) == {1: 1, 2: 7, 3: 3}

    def test_diff_lists_changed_keys(self):
        a = PMap.from_items((i, i) for i in range(100))
        b = a.set(10, -1).set(90, -2)
        assert [k for k, _, _ in a.diff(b)] == [10, 90]
        assert a != b
        assert a == PMap.from_items((i, i) for i in range(100))


class TestSharing:
    """合併の手間は変更したキーの数で決まる。"""

    def test_merge_visits_only_the_difference(self):
        base = PMap.from_items((i, i) for i in range(10_000))
        changed = base
        for k in range(0, 10_000, 1000):
            changed = changed.set(k, k + 1)

        shared = VisitCounter()
        merged = base.merge(changed, _pick, shared)
        assert shared.visits <= 500

        full = VisitCounter()
        merged_full = base.merge(changed, _pick, full, share=False)
        assert full.visits >= 10_000
        assert merged == merged_full
        assert merged[1000] == 1001
