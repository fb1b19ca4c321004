"""
決定木ドメイン：パックの真理値変数（3 つまで）の値ごとに、数値変数の区間を持つ。

値は真理値変数を pack.bools の順に並べた簡約済みの順序付き決定木。
- 両方の子が同じ節点は作らない
- 同じ (変数, 子) の節点は一意表で共有する（節点の等しさは `is` で判定できる）
葉は数値変数の区間の組、または None（その真理値の組み合わせは起こらない）。
葉の添字 i は、i のビット j を j 番目の真理値変数の値と読む。
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass
from functools import reduce
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

from ...frontend.ast import VarRef
from ...memory import transfer
from ...memory.cells import CellId
from ...memory.env import AbstractEnv
from ...memory.pmap import PMap
from ...numeric.intervals import Interval, IntInterval

Leaf = Optional[Tuple[Interval, ...]]


@dataclass(frozen=True, eq=False)
class Node:
    """決定木の節点（var が偽なら low、真なら high）。"""

    var: int
    low: "TreeNode"
    high: "TreeNode"


TreeNode = Union[Node, Leaf]

_UNIQUE: "weakref.WeakValueDictionary[Tuple[Any, ...], Node]" = weakref.WeakValueDictionary()


def _key(t: TreeNode) -> Tuple[Any, ...]:
    return ("n", id(t)) if isinstance(t, Node) else ("l", t)


def _same(a: TreeNode, b: TreeNode) -> bool:
    if isinstance(a, Node) or isinstance(b, Node):
        return a is b
    return a == b


def mk(var: int, low: TreeNode, high: TreeNode) -> TreeNode:
    if _same(low, high):
        return low
    key = (var, _key(low), _key(high))
    node = _UNIQUE.get(key)
    if node is None:
        node = Node(var, low, high)
        _UNIQUE[key] = node
    return node


def _cofactors(t: TreeNode, var: int) -> Tuple[TreeNode, TreeNode]:
    if isinstance(t, Node) and t.var == var:
        return t.low, t.high
    return t, t


def _top(*ts: TreeNode) -> int:
    return min(t.var for t in ts if isinstance(t, Node))


@dataclass(frozen=True)
class Tree:
    root: TreeNode
    nbools: int

    @property
    def is_bottom(self) -> bool:
        return self.root is None

    @classmethod
    def from_table(cls, leaves: Sequence[Leaf], nbools: int) -> "Tree":
        def build(var: int, index: int) -> TreeNode:
            if var == nbools:
                return leaves[index]
            return mk(var, build(var + 1, index), build(var + 1, index | (1 << var)))

        return cls(build(0, 0), nbools)

    def leaf_at(self, index: int) -> Leaf:
        t = self.root
        while isinstance(t, Node):
            t = t.high if _bit(index, t.var) else t.low
        return t

    def table(self) -> List[Leaf]:
        return [self.leaf_at(i) for i in range(1 << self.nbools)]

    def live(self) -> List[Tuple[int, Tuple[Interval, ...]]]:
        return [(i, leaf) for i, leaf in enumerate(self.table()) if leaf is not None]

    def map(self, fn: Callable[[int, Leaf], Leaf]) -> "Tree":
        """各真理値の組み合わせの葉を fn(添字, 葉) で置き換えて簡約する。"""

        def walk(t: TreeNode, var: int, index: int) -> TreeNode:
            if var == self.nbools:
                return fn(index, t)
            low, high = _cofactors(t, var)
            return mk(var, walk(low, var + 1, index), walk(high, var + 1, index | (1 << var)))

        root = walk(self.root, 0, 0)
        return self if _same(root, self.root) else Tree(root, self.nbools)

    def node_count(self) -> int:
        seen: Dict[int, None] = {}

        def visit(t: TreeNode) -> None:
            if isinstance(t, Node) and id(t) not in seen:
                seen[id(t)] = None
                visit(t.low)
                visit(t.high)

        visit(self.root)
        return len(seen)

    def leaf_count(self) -> int:
        def count(t: TreeNode) -> int:
            return count(t.low) + count(t.high) if isinstance(t, Node) else 1

        return count(self.root)


def _apply(a: TreeNode, b: TreeNode, op: Callable[[Leaf, Leaf], Leaf]) -> TreeNode:
    # 同じ部分木どうしはそのまま返す（op はどれも冪等）
    memo: Dict[Tuple[Any, ...], TreeNode] = {}

    def go(x: TreeNode, y: TreeNode) -> TreeNode:
        if _same(x, y):
            return x
        if not isinstance(x, Node) and not isinstance(y, Node):
            return op(x, y)
        k = (_key(x), _key(y))
        if k not in memo:
            var = _top(x, y)
            x0, x1 = _cofactors(x, var)
            y0, y1 = _cofactors(y, var)
            memo[k] = mk(var, go(x0, y0), go(x1, y1))
        return memo[k]

    return go(a, b)


def _join_leaf(a: Leaf, b: Leaf) -> Leaf:
    if a is None:
        return b
    if b is None or a is b:
        return a
    return tuple(x.join(y) for x, y in zip(a, b))


def _bit(index: int, j: int) -> int:
    return (index >> j) & 1


class DecisionTreeDomain:
    name = "decision_tree"
    kind = "tree"

    def packs(self, packing) -> List[Any]:
        return list(packing.tree_packs)

    # --- 葉の環境 ---

    def _leaf_env(self, ictx, env: AbstractEnv, pack, index: int, leaf: Leaf) -> AbstractEnv:
        """真理値変数を葉の値に固定し、数値変数を葉の区間で絞った環境（関係ドメインの値は持たない）。"""
        if env.is_bottom or leaf is None:
            return AbstractEnv.bottom()
        e = AbstractEnv(env.cells, PMap())
        for j, b in enumerate(pack.bools):
            v = _bit(index, j)
            e = e.meet_interval(ictx, b, IntInterval(v, v))
        for cell, itv in zip(pack.cells, leaf):
            e = e.meet_interval(ictx, cell, itv)
        return e

    def _leaf_of(self, env: AbstractEnv, pack) -> Leaf:
        if env.is_bottom:
            return None
        return tuple(env.interval(c) for c in pack.cells)

    def _consistent(self, env: AbstractEnv, pack, index: int) -> bool:
        return all(env.interval(b).contains(_bit(index, j)) for j, b in enumerate(pack.bools))

    def init_store(self, ctx, pack, env) -> Tree:
        leaf = self._leaf_of(env, pack)
        n = len(pack.bools)
        return Tree.from_table([leaf if self._consistent(env, pack, i) else None for i in range(1 << n)], n)

    # --- 代入・ガード ---

    def assign(self, ctx, before, after, store: Tree, pack, cell, rhs, lf) -> Tree:
        ictx = ctx.interval_only()
        if cell in pack.bools:
            j = pack.bools.index(cell)
            leaves: List[Leaf] = [None] * (1 << store.nbools)
            for index, leaf in store.live():
                e = self._leaf_env(ictx, before, pack, index, leaf)
                # 式の真偽ごとに、対応する葉へ振り分ける
                for v in (0, 1):
                    g = transfer.guard(ictx, e, rhs, bool(v))
                    target = (index & ~(1 << j)) | (v << j)
                    leaves[target] = _join_leaf(leaves[target], self._leaf_of(g, pack))
            return Tree.from_table(leaves, store.nbools)

        info = ctx.layout.info(cell)
        target_ref = VarRef(cell.var, cell.var, info.ty)

        def assign_leaf(index: int, leaf: Leaf) -> Leaf:
            if leaf is None:
                return None
            e = self._leaf_env(ictx, before, pack, index, leaf)
            return self._leaf_of(transfer.assign(ictx, e, target_ref, rhs), pack)

        return store.map(assign_leaf)

    def guard(self, ctx, env, store: Tree, pack, atom, polarity: bool) -> Optional[Tree]:
        ictx = ctx.interval_only()

        def guard_leaf(index: int, leaf: Leaf) -> Leaf:
            if leaf is None:
                return None
            e = self._leaf_env(ictx, env, pack, index, leaf)
            return self._leaf_of(transfer.guard(ictx, e, atom, polarity), pack)

        tree = store.map(guard_leaf)
        return None if tree.is_bottom else tree

    # --- 束演算 ---

    def _leafwise(self, s1: Tree, s2: Tree, op) -> Tree:
        def leaf_op(a: Leaf, b: Leaf) -> Leaf:
            if a is None or b is None:
                return b if a is None else a
            return tuple(op(x, y) for x, y in zip(a, b))

        return Tree(_apply(s1.root, s2.root, leaf_op), s1.nbools)

    def join(self, ctx, s1: Tree, e1, s2: Tree, e2) -> Tree:
        if s1 is s2:
            return s1
        return self._leafwise(s1, s2, lambda x, y: x.join(y))

    def widen(self, ctx, s1: Tree, e1, s2: Tree, e2) -> Tree:
        if s1 is s2:
            return s1
        return self._leafwise(s1, s2, lambda x, y: x.widen(y, ctx.thresholds))

    def narrow(self, ctx, s1: Tree, e1, s2: Tree, e2) -> Tree:
        def leaf_op(a: Leaf, b: Leaf) -> Leaf:
            if a is None or b is None:
                return None
            return tuple(x.narrow(y, ctx.thresholds) for x, y in zip(a, b))

        return Tree(_apply(s1.root, s2.root, leaf_op), s1.nbools)

    def leq(self, s1: Tree, s2: Tree) -> bool:
        memo: Dict[Tuple[Any, ...], bool] = {}

        def go(x: TreeNode, y: TreeNode) -> bool:
            if _same(x, y) or x is None:
                return True
            if not isinstance(x, Node) and not isinstance(y, Node):
                return y is not None and all(a.leq(b) for a, b in zip(x, y))
            k = (_key(x), _key(y))
            if k not in memo:
                var = _top(x, y)
                x0, x1 = _cofactors(x, var)
                y0, y1 = _cofactors(y, var)
                memo[k] = go(x0, y0) and go(x1, y1)
            return memo[k]

        return go(s1.root, s2.root)

    def refine(self, ctx, env, store: Tree, pack):
        def meet_leaf(index: int, leaf: Leaf) -> Leaf:
            if leaf is None or not self._consistent(env, pack, index):
                return None
            met = tuple(x.meet(env.interval(c)) for x, c in zip(leaf, pack.cells))
            if any(x.is_bottom for x in met):
                return None
            return leaf if met == leaf else met

        tree = store.map(meet_leaf)
        live = tree.live()
        if not live:
            return None
        bounds: Dict[CellId, Interval] = {}
        for j, b in enumerate(pack.bools):
            bits = {_bit(i, j) for i, _ in live}
            bounds[b] = IntInterval(min(bits), max(bits))
        joined = reduce(_join_leaf, (leaf for _, leaf in live))
        for cell, itv in zip(pack.cells, joined):
            bounds[cell] = itv
        return tree, bounds

    # --- 比較・表示 ---

    def contains(self, store: Tree, pack, values: Mapping[CellId, Sequence[Any]]) -> bool:
        if any(b not in values for b in pack.bools):
            return not store.is_bottom
        index = sum(int(bool(values[b][0])) << j for j, b in enumerate(pack.bools))
        leaf = store.leaf_at(index)
        if leaf is None:
            return False
        return all(itv.contains(values[c][0]) for c, itv in zip(pack.cells, leaf) if c in values)

    def dump(self, store: Tree, pack) -> List[str]:
        names = [str(b) for b in pack.bools]
        cells = [str(c) for c in pack.cells]

        def show(node: TreeNode) -> str:
            if isinstance(node, Node):
                return f"{names[node.var]} ? ({show(node.high)}) : ({show(node.low)})"
            if node is None:
                return "bottom"
            return ", ".join(f"{c} in {itv}" for c, itv in zip(cells, node)) or "true"

        return [show(store.root)]


DOMAIN_CLASS = DecisionTreeDomain
