"""
共有可能な平衡二分木による永続マップ（セル → 抽象値）。

重み平衡（log-balanced）木。更新は経路上のノードだけを作り直し、残りの
部分木は古い版と物理的に共有される。二つの版の合併・比較は、同一の
部分木（`is` で等しいもの）を辿らずにそのまま返すので、差分の大きさに
比例する手間で済む。
"""
from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass
from typing import Any, Callable, Iterator, List, Optional, Tuple

Node = namedtuple("Node", "key value weight left right")

NODE_NULL = Node(None, None, 0, None, None)

MISSING: Any = object()


@dataclass
class VisitCounter:
    # 合併・比較で触れたノード数（計測用）
    visits: int = 0


def _weight(node: Node) -> int:
    return 0 if node is None else node.weight


def _is_less(a: int, b: int) -> bool:
    # 最上位ビットの位置で比較する
    return a.bit_length() < b.bit_length()


def _is_too_big(a: int, b: int) -> bool:
    return _is_less(a, b >> 1)


def _join(key, value, left: Node, right: Node) -> Node:
    return Node(key, value, _weight(left) + _weight(right) + 1, left, right)


def _rot_single_left(key, value, left, right) -> Node:
    return _join(right.key, right.value, _join(key, value, left, right.left), right.right)


def _rot_double_left(key, value, left, right) -> Node:
    return _join(
        right.left.key,
        right.left.value,
        _join(key, value, left, right.left.left),
        _join(right.key, right.value, right.left.right, right.right),
    )


def _rot_single_right(key, value, left, right) -> Node:
    return _join(left.key, left.value, left.left, _join(key, value, left.right, right))


def _rot_double_right(key, value, left, right) -> Node:
    return _join(
        left.right.key,
        left.right.value,
        _join(left.key, left.value, left.left, left.right.left),
        _join(key, value, left.right.right, right),
    )


def _rebalance(key, value, left: Node, right: Node) -> Node:
    if _is_too_big(_weight(left), _weight(right)):
        if not _is_less(_weight(right.right), _weight(right.left)):
            return _rot_single_left(key, value, left, right)
        return _rot_double_left(key, value, left, right)
    if _is_too_big(_weight(right), _weight(left)):
        if not _is_less(_weight(left.left), _weight(left.right)):
            return _rot_single_right(key, value, left, right)
        return _rot_double_right(key, value, left, right)
    return _join(key, value, left, right)


def _set(node: Node, key, value) -> Node:
    if node is NODE_NULL:
        return Node(key, value, 1, NODE_NULL, NODE_NULL)
    if key < node.key:
        return _rebalance(node.key, node.value, _set(node.left, key, value), node.right)
    if node.key < key:
        return _rebalance(node.key, node.value, node.left, _set(node.right, key, value))
    if node.value is value:
        return node
    return Node(key, value, node.weight, node.left, node.right)


def _get(node: Node, key, default):
    while node is not NODE_NULL:
        if key < node.key:
            node = node.left
        elif node.key < key:
            node = node.right
        else:
            return node.value
    return default


def _link(key, value, left: Node, right: Node) -> Node:
    # 任意の大きさの二つの木を中央のキーでつなぐ（left < key < right）
    if left is NODE_NULL:
        return _set(right, key, value)
    if right is NODE_NULL:
        return _set(left, key, value)
    if _is_too_big(_weight(left), _weight(right)):
        return _rebalance(right.key, right.value, _link(key, value, left, right.left), right.right)
    if _is_too_big(_weight(right), _weight(left)):
        return _rebalance(left.key, left.value, left.left, _link(key, value, left.right, right))
    return _join(key, value, left, right)


def _pop_min(node: Node) -> Tuple[Any, Any, Node]:
    if node.left is NODE_NULL:
        return node.key, node.value, node.right
    k, v, rest = _pop_min(node.left)
    return k, v, _rebalance(node.key, node.value, rest, node.right)


def _concat(left: Node, right: Node) -> Node:
    if left is NODE_NULL:
        return right
    if right is NODE_NULL:
        return left
    k, v, rest = _pop_min(right)
    return _link(k, v, left, rest)


def _delete(node: Node, key) -> Node:
    if node is NODE_NULL:
        return node
    if key < node.key:
        left = _delete(node.left, key)
        return node if left is node.left else _rebalance(node.key, node.value, left, node.right)
    if node.key < key:
        right = _delete(node.right, key)
        return node if right is node.right else _rebalance(node.key, node.value, node.left, right)
    return _concat(node.left, node.right)


def _split(node: Node, key, counter: Optional[VisitCounter]) -> Tuple[Node, Any, Node]:
    # (key 未満の木, key の値または MISSING, key より大きい木)
    if node is NODE_NULL:
        return NODE_NULL, MISSING, NODE_NULL
    if key < node.key:
        if counter is not None:
            counter.visits += 1
        lo, found, hi = _split(node.left, key, counter)
        return lo, found, _link(node.key, node.value, hi, node.right)
    if node.key < key:
        if counter is not None:
            counter.visits += 1
        lo, found, hi = _split(node.right, key, counter)
        return _link(node.key, node.value, node.left, lo), found, hi
    return node.left, node.value, node.right


MergeFn = Callable[[Any, Any, Any], Any]


def _only(node: Node, side: int, fn: MergeFn, counter: Optional[VisitCounter]) -> Node:
    # 片方にしかないキーにも fn を適用する（MISSING が返れば削除）
    if node is NODE_NULL:
        return node
    if counter is not None:
        counter.visits += 1
    left = _only(node.left, side, fn, counter)
    right = _only(node.right, side, fn, counter)
    value = fn(node.key, node.value, MISSING) if side == 0 else fn(node.key, MISSING, node.value)
    if value is MISSING:
        return _concat(left, right)
    if left is node.left and right is node.right and value is node.value:
        return node
    return _link(node.key, value, left, right)


def _merge(n1: Node, n2: Node, fn: MergeFn, counter: Optional[VisitCounter], share: bool) -> Node:
    if counter is not None:
        counter.visits += 1
    if share and n1 is n2:
        return n1
    if n2 is NODE_NULL:
        return _only(n1, 0, fn, counter)
    if n1 is NODE_NULL:
        return _only(n2, 1, fn, counter)
    l1, v1, r1 = _split(n1, n2.key, counter)
    left = _merge(l1, n2.left, fn, counter, share)
    right = _merge(r1, n2.right, fn, counter, share)
    if share and v1 is n2.value:
        value = v1
    else:
        value = fn(n2.key, v1, n2.value)
    if value is MISSING:
        return _concat(left, right)
    if share and n1.key == n2.key and value is v1 and left is n1.left and right is n1.right:
        return n1
    if share and value is n2.value and left is n2.left and right is n2.right:
        return n2
    return _link(n2.key, value, left, right)


def _diff(n1: Node, n2: Node, out: List[Tuple[Any, Any, Any]], counter: Optional[VisitCounter]) -> None:
    if counter is not None:
        counter.visits += 1
    if n1 is n2:
        return
    if n2 is NODE_NULL:
        for k, v in _iter(n1):
            out.append((k, v, MISSING))
        return
    l1, v1, r1 = _split(n1, n2.key, counter)
    _diff(l1, n2.left, out, counter)
    if v1 is not n2.value:
        out.append((n2.key, v1, n2.value))
    _diff(r1, n2.right, out, counter)


def _iter(node: Node) -> Iterator[Tuple[Any, Any]]:
    stack: List[Node] = []
    while stack or node is not NODE_NULL:
        while node is not NODE_NULL:
            stack.append(node)
            node = node.left
        node = stack.pop()
        yield node.key, node.value
        node = node.right


def _is_balanced(node: Node) -> bool:
    if node is NODE_NULL:
        return True
    return (
        not _is_too_big(_weight(node.left), _weight(node.right))
        and not _is_too_big(_weight(node.right), _weight(node.left))
        and _is_balanced(node.left)
        and _is_balanced(node.right)
    )


class PMap:
    """キーの順序で並んだ永続マップ。すべての更新は新しい PMap を返す。"""

    __slots__ = ("_root",)

    def __init__(self, root: Node = NODE_NULL) -> None:
        self._root = root

    @classmethod
    def from_items(cls, items) -> "PMap":
        root = NODE_NULL
        for k, v in items:
            root = _set(root, k, v)
        return cls(root)

    @property
    def root(self) -> Node:
        return self._root

    def __len__(self) -> int:
        return self._root.weight

    def __contains__(self, key) -> bool:
        return _get(self._root, key, MISSING) is not MISSING

    def __getitem__(self, key):
        v = _get(self._root, key, MISSING)
        if v is MISSING:
            raise KeyError(key)
        return v

    def get(self, key, default=None):
        return _get(self._root, key, default)

    def set(self, key, value) -> "PMap":
        root = _set(self._root, key, value)
        return self if root is self._root else PMap(root)

    def delete(self, key) -> "PMap":
        root = _delete(self._root, key)
        return self if root is self._root else PMap(root)

    def items(self) -> Iterator[Tuple[Any, Any]]:
        return _iter(self._root)

    def keys(self) -> Iterator[Any]:
        return (k for k, _ in _iter(self._root))

    def values(self) -> Iterator[Any]:
        return (v for _, v in _iter(self._root))

    __iter__ = keys

    def merge(self, other: "PMap", fn: MergeFn, counter: Optional[VisitCounter] = None, share: bool = True) -> "PMap":
        """キーごとに fn(key, v1, v2) で合併する。片側にないキーは MISSING で渡る。

        同一の部分木と同一の値は fn を呼ばずにそのまま残す（fn は冪等であること）。
        share=False は比較用の全走査。
        """
        if share and self._root is other._root:
            if counter is not None:
                counter.visits += 1
            return self
        root = _merge(self._root, other._root, fn, counter, share)
        if root is self._root:
            return self
        if root is other._root:
            return other
        return PMap(root)

    def diff(self, other: "PMap", counter: Optional[VisitCounter] = None) -> List[Tuple[Any, Any, Any]]:
        """物理的に異なる値を持つキーの (key, v1, v2) の一覧。"""
        out: List[Tuple[Any, Any, Any]] = []
        _diff(self._root, other._root, out, counter)
        return out

    def is_balanced(self) -> bool:
        return _is_balanced(self._root)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PMap):
            return NotImplemented
        if self._root is other._root:
            return True
        if len(self) != len(other):
            return False
        return all(v1 == v2 for _, v1, v2 in self.diff(other))

    def __hash__(self) -> int:
        return hash(tuple(self.items()))

    def __repr__(self) -> str:
        inner = ", ".join(f"{k!r}: {v!r}" for k, v in self.items())
        return f"PMap({{{inner}}})"
