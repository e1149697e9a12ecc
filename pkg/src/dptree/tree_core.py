"""Rooted trees, leaf counts and exact subtree sums.

Nodes are stored in breadth-first order, so every depth level is a contiguous
block of indices and a parent always precedes its children.  All arrays are
read-only; the objects are safe to share between concurrent trials.
"""

from collections import deque
from functools import lru_cache
from typing import Mapping, Optional

import numpy as np

from .errors import (
    CycleError,
    InputError,
    MultipleRootsError,
    NoRootError,
    ResourceError,
    UnknownNodeError,
)

MAX_NODES = 1 << 24
_INT64_MAX = np.iinfo(np.int64).max


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


class TreeShape:
    """Immutable rooted tree of arbitrary arity.

    Parameters
    ----------
    parents : mapping
        ``node_id -> parent_id``; the root maps to ``None``.  Children keep
        the insertion order of the mapping.
    """

    def __init__(self, parents: Mapping[str, Optional[str]]):
        if not parents:
            raise NoRootError("tree has no nodes")
        roots = [u for u, p in parents.items() if p is None]
        if len(roots) > 1:
            raise MultipleRootsError(f"multiple roots: {sorted(roots)[:5]}")
        children = {}
        for u, p in parents.items():
            if p is None:
                continue
            if p not in parents:
                raise UnknownNodeError(f"node {u!r} has unknown parent {p!r}")
            children.setdefault(p, []).append(u)
        if not roots:
            raise CycleError("no root: every node has a parent, so the parent links contain a cycle")

        ids = []
        parent_idx = []
        queue = deque([(roots[0], -1)])
        while queue:
            u, p = queue.popleft()
            k = len(ids)
            ids.append(u)
            parent_idx.append(p)
            for c in children.get(u, ()):
                queue.append((c, k))
        if len(ids) != len(parents):
            seen = set(ids)
            unreached = next(u for u in parents if u not in seen)
            raise CycleError(f"node {unreached!r} does not reach the root (cycle in parent links)")
        self._build(ids, np.asarray(parent_idx, dtype=np.int64))

    @classmethod
    def _from_bfs(cls, ids, parent, depth=None):
        """Build from ids already in breadth-first order (no validation)."""
        tree = cls.__new__(cls)
        tree._build(list(ids), np.asarray(parent, dtype=np.int64), depth)
        return tree

    def _build(self, ids, parent, depth=None):
        n = len(ids)
        if n > MAX_NODES:
            raise ResourceError(f"tree has {n} nodes, cap is {MAX_NODES}")
        if depth is None:
            depth = np.empty(n, dtype=np.int64)
            depth[0] = 1
            # BFS order: parents precede children
            for k in range(1, n):
                depth[k] = depth[parent[k]] + 1
        depth = np.asarray(depth, dtype=np.int64)
        n_children = np.bincount(parent[1:], minlength=n) if n > 1 else np.zeros(1, np.int64)
        self.ids = tuple(ids)
        self.index = {u: k for k, u in enumerate(ids)}
        if len(self.index) != n:
            raise InputError("duplicate node ids")
        self.parent = _frozen(parent)
        self.depth = _frozen(depth)
        self.n_children = _frozen(n_children)
        self.d = int(depth.max())
        bounds = np.searchsorted(depth, np.arange(1, self.d + 2))
        self.levels = tuple(
            _frozen(np.arange(bounds[i], bounds[i + 1])) for i in range(self.d)
        )
        leaves = np.flatnonzero(n_children == 0)
        self.leaves = _frozen(leaves)
        self.leaf_ids = tuple(ids[k] for k in leaves)
        leaf_pos = np.full(n, -1, dtype=np.int64)
        leaf_pos[leaves] = np.arange(len(leaves))
        self.leaf_pos = _frozen(leaf_pos)

    @property
    def n_nodes(self) -> int:
        return len(self.ids)

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    @property
    def root(self) -> str:
        return self.ids[0]

    @property
    def nodes(self) -> frozenset:
        return frozenset(self.ids)

    def node_index(self, node_id) -> int:
        try:
            return self.index[node_id]
        except KeyError:
            raise UnknownNodeError(f"unknown node {node_id!r}") from None

    def parent_of(self, node_id) -> Optional[str]:
        p = self.parent[self.node_index(node_id)]
        return None if p < 0 else self.ids[p]

    def depth_of(self, node_id) -> int:
        return int(self.depth[self.node_index(node_id)])

    def is_leaf(self, node_id) -> bool:
        return self.leaf_pos[self.node_index(node_id)] >= 0

    def ancestors(self, k: int):
        """Indices of node ``k`` and all its ancestors, deepest first."""
        out = []
        while k >= 0:
            out.append(k)
            k = int(self.parent[k])
        return out

    def __repr__(self):
        return f"TreeShape(n_nodes={self.n_nodes}, n_leaves={self.n_leaves}, d={self.d})"


class LeafCounts:
    """Non-negative integer value per leaf; absent leaves read as 0."""

    def __init__(self, tree: TreeShape, values: Optional[Mapping[str, int]] = None):
        arr = np.zeros(tree.n_leaves, dtype=np.int64)
        for leaf, v in (values or {}).items():
            k = tree.index.get(leaf)
            if k is None or tree.leaf_pos[k] < 0:
                raise UnknownNodeError(f"{leaf!r} is not a leaf of the tree")
            if isinstance(v, (bool, np.bool_)) or int(v) != v:
                raise InputError(f"count for {leaf!r} is not an integer: {v!r}")
            if v < 0:
                raise InputError(f"count for {leaf!r} is negative: {v}")
            if v > _INT64_MAX:
                raise InputError(f"count for {leaf!r} overflows int64")
            arr[tree.leaf_pos[k]] = int(v)
        self.tree = tree
        self.values = _frozen(arr)

    @classmethod
    def from_array(cls, tree: TreeShape, values) -> "LeafCounts":
        """Counts given as an array aligned with ``tree.leaf_ids``."""
        a = np.asarray(values)
        if a.shape != (tree.n_leaves,):
            raise InputError(f"expected {tree.n_leaves} leaf values, got shape {a.shape}")
        if a.dtype.kind == "f":
            if not np.all(np.isfinite(a)) or np.any(a != np.round(a)):
                raise InputError("leaf counts must be integers")
        elif a.dtype.kind not in "iu":
            raise InputError(f"leaf counts must be integers, got dtype {a.dtype}")
        if np.any(a < 0):
            raise InputError("leaf counts must be non-negative")
        obj = cls.__new__(cls)
        obj.tree = tree
        obj.values = _frozen(a.astype(np.int64))
        return obj

    def __getitem__(self, leaf):
        k = self.tree.node_index(leaf)
        pos = self.tree.leaf_pos[k]
        if pos < 0:
            raise UnknownNodeError(f"{leaf!r} is not a leaf")
        return int(self.values[pos])

    def as_dict(self):
        return {u: int(v) for u, v in zip(self.tree.leaf_ids, self.values)}

    def total(self) -> int:
        return sum(int(v) for v in self.values)

    def __eq__(self, other):
        return (
            isinstance(other, LeafCounts)
            and other.tree is self.tree
            and np.array_equal(other.values, self.values)
        )

    def __repr__(self):
        return f"LeafCounts(n_leaves={len(self.values)}, total={self.total()})"


class NodeValues:
    """A real (estimates) or integer (exact weights) value per node."""

    def __init__(self, tree: TreeShape, values):
        a = np.asarray(values)
        if a.shape != (tree.n_nodes,):
            raise InputError(f"expected {tree.n_nodes} node values, got shape {a.shape}")
        if a.dtype.kind == "f" and not np.all(np.isfinite(a)):
            raise InputError("node values must be finite")
        self.tree = tree
        self.values = _frozen(a.copy() if a.flags.writeable else a)

    def __getitem__(self, node_id):
        return self.values[self.tree.node_index(node_id)].item()

    def as_dict(self):
        return {u: v.item() for u, v in zip(self.tree.ids, self.values)}

    def __repr__(self):
        return f"NodeValues(n_nodes={len(self.values)}, dtype={self.values.dtype})"


NodeWeights = NodeValues
NodeEstimates = NodeValues


def subtree_sums(tree: TreeShape, leaf_values: np.ndarray) -> np.ndarray:
    """Bottom-up sums of ``leaf_values`` (aligned with ``tree.leaves``)."""
    w = np.zeros(tree.n_nodes, dtype=leaf_values.dtype)
    w[tree.leaves] = leaf_values
    for lvl in reversed(tree.levels[1:]):
        np.add.at(w, tree.parent[lvl], w[lvl])
    return w


def aggregate_exact(tree: TreeShape, counts) -> NodeValues:
    """Exact weight of every node: the sum of the leaf values below it.

    ``counts`` may be a :class:`LeafCounts` or a ``leaf_id -> int`` mapping.
    Raises :class:`ResourceError` if the root sum would overflow int64.
    """
    if not isinstance(counts, LeafCounts):
        counts = LeafCounts(tree, counts)
    elif counts.tree is not tree:
        raise InputError("counts belong to a different tree")
    v = counts.values
    if len(v) and int(v.max()) > _INT64_MAX // max(len(v), 1):
        if counts.total() > _INT64_MAX:
            raise ResourceError("aggregate weight overflows int64")
    return NodeValues(tree, subtree_sums(tree, v))


def neighbor(counts: LeafCounts, leaf, delta: int) -> LeafCounts:
    """Copy of ``counts`` with ``leaf`` changed by ``delta`` (+1 or -1)."""
    if delta not in (1, -1):
        raise InputError(f"delta must be +1 or -1, got {delta!r}")
    tree = counts.tree
    k = tree.node_index(leaf)
    pos = tree.leaf_pos[k]
    if pos < 0:
        raise UnknownNodeError(f"{leaf!r} is not a leaf")
    new = counts.values.copy()
    if new[pos] + delta < 0:
        raise InputError(f"count of {leaf!r} would become negative")
    new[pos] += delta
    return LeafCounts.from_array(tree, new)


def nodes_at_depth(tree: TreeShape, i: int) -> frozenset:
    if not 1 <= i <= tree.d:
        raise InputError(f"depth {i} outside [1, {tree.d}]")
    return frozenset(tree.ids[k] for k in tree.levels[i - 1])


@lru_cache(maxsize=32)
def complete_binary(d: int, max_nodes: int = MAX_NODES) -> TreeShape:
    """Complete binary tree of depth ``d`` with heap-numbered ids ``"1"``.. ``"2^d-1"``.

    Leaves are numbered left to right, so leaf ``i`` (1-based) has id
    ``str(2**(d-1) + i - 1)``.
    """
    if int(d) != d or d < 1:
        raise InputError(f"depth must be a positive integer, got {d!r}")
    d = int(d)
    if d >= 63 or (1 << d) - 1 > max_nodes:
        raise ResourceError(f"complete binary tree of depth {d} exceeds the node cap {max_nodes}")
    n = (1 << d) - 1
    heap = np.arange(1, n + 1)
    parent = heap // 2 - 1
    depth = np.repeat(np.arange(1, d + 1), 1 << np.arange(d))
    return TreeShape._from_bfs([str(k) for k in heap], parent, depth)


def path_tree(n: int) -> TreeShape:
    """A path of ``n`` nodes (depth ``n``, one leaf)."""
    if n < 1:
        raise InputError("path needs at least one node")
    return TreeShape._from_bfs([f"p{k}" for k in range(n)], np.arange(-1, n - 1))
