"""Interpolation search tree storage, in-node search and scalar lookup.

A tree lives in an :class:`Arena`: one ``int64`` row per node plus four
flat pools (keys, exists flags, child ids, index slots). A node's ``rep``
and ``exists`` arrays are the slices ``[rep_off, rep_off + rep_len)`` of the
key and exists pools. Inner nodes own ``rep_len + 1`` consecutive entries in
the child pool, with ``-1`` marking an empty subtree. Only inner nodes carry
an interpolation index. Node ids are indices into the node table.

:class:`Node` is a read-mostly view over one row. Views are invalidated when
the arena is compacted, which happens at the end of a mutating batch.
"""

import math
from collections import namedtuple
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numba import njit

__all__ = [
    "Config",
    "DEFAULT_CONFIG",
    "IdIndex",
    "Arena",
    "Node",
    "Tree",
    "Violation",
    "slot_count",
    "grid_point",
    "interpolation_slot",
    "interpolation_search",
    "contains_scalar",
    "validate",
    "compact",
]

# Columns of the node table.
REP_OFF, REP_LEN, CHILD_OFF, ID_OFF, ID_M, BOUND_A, BOUND_B, SIZE, INIT, MOD = range(10)
NODE_FIELDS = 10

NIL = -1

ROUTE_INTERPOLATION = 0
ROUTE_RANK = 1

_U32 = np.uint64(32)
_MASK32 = np.uint64(0xFFFFFFFF)


@dataclass(frozen=True)
class Config:
    """Tuning constants.

    leaf_threshold: largest key count stored in a leaf by a rebuild (H).
    rebuild_factor: a subtree is rebuilt once its modifications would exceed
        ``rebuild_factor * init_subtree_size`` (C).
    index_exponent: an inner node over ``n`` keys gets ``ceil(n ** eps)``
        index slots.
    seq_cutoff: block size below which parallel loops run sequentially.
    routing: ``"interpolation"`` or ``"rank"`` (binary search) for inner nodes.
    """

    leaf_threshold: int = 10
    rebuild_factor: int = 2
    index_exponent: float = 0.75
    seq_cutoff: int = 2048
    routing: str = "interpolation"

    def __post_init__(self):
        if int(self.leaf_threshold) != self.leaf_threshold or self.leaf_threshold < 4:
            raise ValueError("leaf_threshold must be an integer >= 4")
        if int(self.rebuild_factor) != self.rebuild_factor or self.rebuild_factor < 1:
            raise ValueError("rebuild_factor must be an integer >= 1")
        eps = self.index_exponent
        if isinstance(eps, Fraction):
            object.__setattr__(self, "index_exponent", float(eps))
        if not 0.5 <= self.index_exponent < 1:
            raise ValueError("index_exponent must lie in [1/2, 1)")
        if self.seq_cutoff < 1:
            raise ValueError("seq_cutoff must be >= 1")
        if self.routing not in ("interpolation", "rank"):
            raise ValueError("routing must be 'interpolation' or 'rank'")

    @property
    def route_code(self):
        return ROUTE_INTERPOLATION if self.routing == "interpolation" else ROUTE_RANK


DEFAULT_CONFIG = Config()


# -- 64-bit safe interpolation arithmetic ------------------------------------

@njit(cache=True, nogil=True, inline="always")
def _mul64(x, y):
    # full 128-bit product of two uint64 values as (hi, lo)
    x0 = x & _MASK32
    x1 = x >> _U32
    y0 = y & _MASK32
    y1 = y >> _U32
    p00 = x0 * y0
    p01 = x0 * y1
    p10 = x1 * y0
    p11 = x1 * y1
    mid = (p00 >> _U32) + (p01 & _MASK32) + (p10 & _MASK32)
    lo = (p00 & _MASK32) | (mid << _U32)
    hi = p11 + (p01 >> _U32) + (p10 >> _U32) + (mid >> _U32)
    return hi, lo


@njit(cache=True, nogil=True, inline="always")
def _le128(ahi, alo, bhi, blo):
    return ahi < bhi or (ahi == bhi and alo <= blo)


@njit(cache=True, nogil=True)
def _slot_count(n, eps):
    if n <= 1:
        return 1
    m = np.int64(math.ceil(float(n) ** eps))
    return max(np.int64(1), m)


@njit(cache=True, nogil=True)
def _grid_point(a, b, m, i):
    # a + floor(i * (b - a) / m), exact for the full int64 range
    d = np.uint64(b) - np.uint64(a)
    mu = np.uint64(m)
    iu = np.uint64(i)
    q = d // mu
    r = d % mu
    off = iu * q + (iu * r) // mu
    return np.int64(np.uint64(a) + off)


@njit(cache=True, nogil=True)
def _interp_slot(a, b, m, x):
    # floor((x - a) * m / (b - a)) clamped into [0, m]
    if x <= a:
        return np.int64(0)
    if x >= b:
        return m
    d = np.uint64(b) - np.uint64(a)
    dx = np.uint64(x) - np.uint64(a)
    mu = np.uint64(m)
    s = np.int64(float(dx) / float(d) * float(m))
    if s < 0:
        s = np.int64(0)
    if s > m:
        s = m
    # fix float rounding: want s * d <= dx * m < (s + 1) * d
    thi, tlo = _mul64(dx, mu)
    while s > 0:
        hi, lo = _mul64(np.uint64(s), d)
        if _le128(hi, lo, thi, tlo):
            break
        s -= 1
    while s < m:
        hi, lo = _mul64(np.uint64(s + 1), d)
        if not _le128(hi, lo, thi, tlo):
            break
        s += 1
    return s


@njit(cache=True, nogil=True)
def _search(nodes, keys, slots, v, x, route):
    """elem_rank(rep(v), x): interpolation hint plus linear scan, or binary search."""
    off = nodes[v, REP_OFF]
    n = nodes[v, REP_LEN]
    m = nodes[v, ID_M]
    a = nodes[v, BOUND_A]
    b = nodes[v, BOUND_B]
    if route == ROUTE_RANK or m == 0 or a >= b:
        return np.int64(np.searchsorted(keys[off:off + n], x, side="right"))
    h = slots[nodes[v, ID_OFF] + _interp_slot(a, b, m, x)]
    while h < n and keys[off + h] <= x:
        h += 1
    while h > 0 and keys[off + h - 1] > x:
        h -= 1
    return h


@njit(cache=True, nogil=True)
def _contains_one(nodes, keys, exists, children, slots, root, x, route):
    v = root
    while v != NIL:
        off = nodes[v, REP_OFF]
        k = nodes[v, REP_LEN]
        coff = nodes[v, CHILD_OFF]
        if k == 0:
            return False
        if x < keys[off]:
            j = 0
        elif x > keys[off + k - 1]:
            j = k
        else:
            j = _search(nodes, keys, slots, v, x, route)
            if j > 0 and keys[off + j - 1] == x:
                return exists[off + j - 1]
        if coff == NIL:
            return False
        v = children[coff + j]
    return False


@njit(cache=True, nogil=True)
def _contains_many(nodes, keys, exists, children, slots, root, xs, out, route):
    for i in range(len(xs)):
        out[i] = _contains_one(nodes, keys, exists, children, slots, root, xs[i], route)


def slot_count(n, eps):
    """Index slot count for an inner node over ``n`` keys: ``max(1, ceil(n**eps))``."""
    return int(_slot_count(np.int64(n), float(eps)))


def grid_point(a, b, m, i):
    """The ``i``-th of ``m + 1`` grid points spanning ``[a, b]``."""
    return int(_grid_point(np.int64(a), np.int64(b), np.int64(m), np.int64(i)))


def interpolation_slot(a, b, m, x):
    """Index slot probed for key ``x``, clamped to ``[0, m]``."""
    return int(_interp_slot(np.int64(a), np.int64(b), np.int64(m), np.int64(x)))


# -- storage -------------------------------------------------------------------

@dataclass(frozen=True)
class IdIndex:
    slots: np.ndarray
    lower_bound: int
    upper_bound: int
    slot_count: int


class Arena:
    """Growable node table and key/exists/child/slot pools."""

    def __init__(self, nodes=16, keys=64, children=16, slots=16):
        self.nodes = np.zeros((max(nodes, 1), NODE_FIELDS), dtype=np.int64)
        self.keys = np.zeros(max(keys, 1), dtype=np.int64)
        self.exists = np.zeros(max(keys, 1), dtype=np.bool_)
        self.children = np.full(max(children, 1), NIL, dtype=np.int64)
        self.slots = np.zeros(max(slots, 1), dtype=np.int64)
        self.n_nodes = 0
        self.n_keys = 0
        self.n_children = 0
        self.n_slots = 0
        # unreachable entries left behind by leaf merges and rebuilds
        self.dead_nodes = 0
        self.dead_keys = 0
        self.dead_children = 0
        self.dead_slots = 0

    @staticmethod
    def _grown(arr, need, fill=None):
        cap = len(arr)
        if need <= cap:
            return arr
        new_cap = max(need, 2 * cap)
        shape = (new_cap,) + arr.shape[1:]
        out = np.empty(shape, dtype=arr.dtype) if fill is None else np.full(shape, fill, dtype=arr.dtype)
        out[:cap] = arr
        return out

    def reserve(self, nodes=0, keys=0, children=0, slots=0):
        """Make room for that many more entries of each kind."""
        self.nodes = self._grown(self.nodes, self.n_nodes + nodes)
        self.keys = self._grown(self.keys, self.n_keys + keys)
        self.exists = self._grown(self.exists, self.n_keys + keys)
        self.children = self._grown(self.children, self.n_children + children, NIL)
        self.slots = self._grown(self.slots, self.n_slots + slots)

    def alloc(self, nodes=0, keys=0, children=0, slots=0):
        """Reserve and bump-allocate; returns the four base offsets."""
        self.reserve(nodes, keys, children, slots)
        base = (self.n_nodes, self.n_keys, self.n_children, self.n_slots)
        self.n_nodes += nodes
        self.n_keys += keys
        self.n_children += children
        self.n_slots += slots
        return base

    @property
    def dead_fraction(self):
        used = self.n_keys + self.n_children + self.n_slots
        dead = self.dead_keys + self.dead_children + self.dead_slots
        return dead / used if used else 0.0

    def copy(self):
        other = Arena.__new__(Arena)
        other.__dict__.update(self.__dict__)
        for name in ("nodes", "keys", "exists", "children", "slots"):
            setattr(other, name, getattr(self, name).copy())
        return other

    def add_node(self, rep, exists=None, children=None, *, size=None,
                 init_subtree_size=None, mod_cnt=0, index=None):
        """Append a hand-built node and return its id.

        ``children`` holds node ids or ``None``/``-1``; passing it makes an
        inner node. ``index`` is ``(a, b, m)`` for inner nodes; by default the
        bounds are ``rep[0]`` and ``rep[-1]`` widened to the children's
        extreme keys, with ``m = max(1, ceil(size ** 0.75))``. ``size``
        defaults to the logically present keys below this node.
        """
        rep = np.ascontiguousarray(rep, dtype=np.int64)
        k = len(rep)
        ex = np.ones(k, dtype=np.bool_) if exists is None else np.asarray(exists, dtype=np.bool_)
        if len(ex) != k:
            raise ValueError("exists must match rep in length")
        kids = None
        if children is not None:
            kids = np.array([NIL if c is None else int(c) for c in children], dtype=np.int64)
            if len(kids) != k + 1:
                raise ValueError("an inner node needs len(rep) + 1 children")
        if size is None:
            size = int(ex.sum())
            if kids is not None:
                size += sum(int(self.nodes[c, SIZE]) for c in kids if c != NIL)
        if init_subtree_size is None:
            init_subtree_size = size

        v, koff, _, _ = self.alloc(nodes=1, keys=k)
        self.keys[koff:koff + k] = rep
        self.exists[koff:koff + k] = ex
        row = self.nodes[v]
        row[:] = 0
        row[REP_OFF] = koff
        row[REP_LEN] = k
        row[CHILD_OFF] = NIL
        row[SIZE] = size
        row[INIT] = init_subtree_size
        row[MOD] = mod_cnt
        if kids is not None:
            _, _, coff, _ = self.alloc(children=k + 1)
            self.children[coff:coff + k + 1] = kids
            row = self.nodes[v]
            row[CHILD_OFF] = coff
            if index is None:
                lo_key = rep[0] if k else 0
                hi_key = rep[-1] if k else 0
                for c in kids:
                    if c != NIL:
                        lo_key = min(lo_key, _subtree_min(self, int(c)))
                        hi_key = max(hi_key, _subtree_max(self, int(c)))
                index = (lo_key, hi_key, slot_count(max(size, 1), DEFAULT_CONFIG.index_exponent))
            a, b, m = (int(t) for t in index)
            if k:
                _attach_index(self, v, a, b, m)
        return v


def _subtree_min(arena, v):
    while True:
        coff = arena.nodes[v, CHILD_OFF]
        if coff != NIL and arena.children[coff] != NIL:
            v = int(arena.children[coff])
            continue
        return int(arena.keys[arena.nodes[v, REP_OFF]])


def _subtree_max(arena, v):
    while True:
        coff = arena.nodes[v, CHILD_OFF]
        k = arena.nodes[v, REP_LEN]
        if coff != NIL and arena.children[coff + k] != NIL:
            v = int(arena.children[coff + k])
            continue
        return int(arena.keys[arena.nodes[v, REP_OFF] + k - 1])


@njit(cache=True, nogil=True)
def _fill_index(keys, slots, rep_off, k, a, b, m, slot_off):
    # slots[i] = elem_rank(rep, grid(i)) by a merge-style sweep
    j = 0
    for i in range(m + 1):
        g = _grid_point(a, b, m, i)
        while j < k and keys[rep_off + j] <= g:
            j += 1
        slots[slot_off + i] = j


def _attach_index(arena, v, a, b, m):
    _, _, _, soff = arena.alloc(slots=m + 1)
    row = arena.nodes[v]
    row[ID_OFF] = soff
    row[ID_M] = m
    row[BOUND_A] = a
    row[BOUND_B] = b
    _fill_index(arena.keys, arena.slots, row[REP_OFF], row[REP_LEN], a, b, m, soff)


class Node:
    """View of one node of an arena."""

    __slots__ = ("arena", "id")

    def __init__(self, arena, node_id):
        self.arena = arena
        self.id = int(node_id)

    def __repr__(self):
        return f"Node(id={self.id}, kind={self.kind}, rep_len={len(self)}, size={self.size})"

    def __eq__(self, other):
        return isinstance(other, Node) and other.arena is self.arena and other.id == self.id

    def __hash__(self):
        return hash((id(self.arena), self.id))

    def __len__(self):
        return int(self.arena.nodes[self.id, REP_LEN])

    @property
    def _row(self):
        return self.arena.nodes[self.id]

    @property
    def is_leaf(self):
        return self._row[CHILD_OFF] == NIL

    @property
    def kind(self):
        return "leaf" if self.is_leaf else "inner"

    @property
    def rep(self):
        off, k = self._row[REP_OFF], self._row[REP_LEN]
        return self.arena.keys[off:off + k]

    @property
    def exists(self):
        off, k = self._row[REP_OFF], self._row[REP_LEN]
        return self.arena.exists[off:off + k]

    @property
    def child_ids(self):
        coff = self._row[CHILD_OFF]
        if coff == NIL:
            return np.empty(0, dtype=np.int64)
        return self.arena.children[coff:coff + len(self) + 1]

    @property
    def children(self):
        """Child views; ``None`` marks an empty subtree. Empty for leaves."""
        return [None if c == NIL else Node(self.arena, c) for c in self.child_ids]

    @property
    def id_index(self):
        row = self._row
        if row[ID_M] == 0:
            return None
        soff, m = row[ID_OFF], row[ID_M]
        return IdIndex(self.arena.slots[soff:soff + m + 1], int(row[BOUND_A]),
                       int(row[BOUND_B]), int(m))

    @property
    def size(self):
        return int(self._row[SIZE])

    @size.setter
    def size(self, value):
        self.arena.nodes[self.id, SIZE] = value

    @property
    def init_subtree_size(self):
        return int(self._row[INIT])

    @property
    def mod_cnt(self):
        return int(self._row[MOD])

    @mod_cnt.setter
    def mod_cnt(self, value):
        self.arena.nodes[self.id, MOD] = value


class Tree:
    """A set of int64 keys stored as an interpolation search tree."""

    def __init__(self, config=DEFAULT_CONFIG, arena=None, root=NIL):
        self.config = config
        self.arena = Arena() if arena is None else arena
        self.root_id = int(root)

    @classmethod
    def from_sorted(cls, keys, config=DEFAULT_CONFIG):
        """Ideally balanced tree over strictly increasing ``keys``."""
        from .rebuild import build_ideal

        tree = cls(config)
        root = build_ideal(keys, config=config, arena=tree.arena)
        tree.root_id = NIL if root is None else root.id
        return tree

    @property
    def root(self):
        return None if self.root_id == NIL else Node(self.arena, self.root_id)

    def __len__(self):
        return 0 if self.root_id == NIL else int(self.arena.nodes[self.root_id, SIZE])

    def __contains__(self, key):
        return contains_scalar(self, key)

    def to_array(self):
        """All logically present keys in ascending order."""
        from .rebuild import flatten

        out = np.empty(len(self), dtype=np.int64)
        if self.root_id != NIL:
            flatten(self.root, out, 0, len(out), self.config)
        return out

    def copy(self):
        return Tree(self.config, self.arena.copy(), self.root_id)


def interpolation_search(node, key, routing="interpolation"):
    """Rank of ``key`` in ``node.rep`` (count of entries ``<= key``).

    Inner nodes start from the index hint and scan linearly; leaves and
    ``routing="rank"`` use binary search.
    """
    if len(node) == 0:
        raise ValueError("interpolation_search needs a non-empty rep")
    route = ROUTE_INTERPOLATION if routing == "interpolation" else ROUTE_RANK
    a = node.arena
    return int(_search(a.nodes, a.keys, a.slots, node.id, np.int64(key), route))


def contains_scalar(tree, key):
    """Sequential root-to-leaf lookup of one key."""
    a = tree.arena
    return bool(_contains_one(a.nodes, a.keys, a.exists, a.children, a.slots,
                              tree.root_id, np.int64(key), tree.config.route_code))


def contains_scalar_many(tree, keys):
    """:func:`contains_scalar` applied to every key, in one compiled loop."""
    keys = np.ascontiguousarray(keys, dtype=np.int64)
    out = np.zeros(len(keys), dtype=np.bool_)
    a = tree.arena
    _contains_many(a.nodes, a.keys, a.exists, a.children, a.slots, tree.root_id,
                   keys, out, tree.config.route_code)
    return out


# -- validation ----------------------------------------------------------------

Violation = namedtuple("Violation", "node kind detail")

_V_EMPTY_REP = 1
_V_UNSORTED = 2
_V_KEY_RANGE = 3
_V_SIZE = 4
_V_INDEX_BOUNDS = 5
_V_INDEX_SLOT = 6
_V_MOD_CNT = 7
_V_CHILD_ID = 8

_V_NAMES = {
    _V_EMPTY_REP: ("empty-rep", "node has an empty rep array"),
    _V_UNSORTED: ("unsorted-rep", "rep not strictly increasing at position {}"),
    _V_KEY_RANGE: ("key-range", "rep[{}] lies outside the separators of its parent"),
    _V_SIZE: ("size", "size field differs from recount by {}"),
    _V_INDEX_BOUNDS: ("index-bounds", "index bounds a > b"),
    _V_INDEX_SLOT: ("index-slot", "index slot {} disagrees with the rank of its grid point"),
    _V_MOD_CNT: ("mod-cnt", "mod_cnt exceeds the rebuild threshold by {}"),
    _V_CHILD_ID: ("child-id", "child reference {} is out of range"),
}


@njit(cache=True, nogil=True)
def _validate(nodes, keys, exists, children, slots, n_nodes, root, factor, out):
    # out rows: (node, code, detail); returns number of violations found
    nv = 0
    cap = out.shape[0]
    stack = np.empty((64, 5), dtype=np.int64)
    sizes = np.zeros(n_nodes, dtype=np.int64)
    order = np.empty(n_nodes, dtype=np.int64)
    n_order = 0
    # columns: node, lo bound, has lo, hi bound, has hi
    stack[0, 0] = root
    stack[0, 1] = 0
    stack[0, 2] = 0
    stack[0, 3] = 0
    stack[0, 4] = 0
    top = 1
    while top > 0:
        top -= 1
        v = stack[top, 0]
        lo = stack[top, 1]
        has_lo = stack[top, 2]
        hi = stack[top, 3]
        has_hi = stack[top, 4]
        if n_order < n_nodes:
            order[n_order] = v
            n_order += 1
        off = nodes[v, REP_OFF]
        k = nodes[v, REP_LEN]
        coff = nodes[v, CHILD_OFF]
        if k == 0 and nv < cap:
            out[nv, 0] = v
            out[nv, 1] = _V_EMPTY_REP
            out[nv, 2] = 0
            nv += 1
        for i in range(k):
            x = keys[off + i]
            if i > 0 and keys[off + i - 1] >= x and nv < cap:
                out[nv, 0] = v
                out[nv, 1] = _V_UNSORTED
                out[nv, 2] = i
                nv += 1
            if ((has_lo == 1 and x <= lo) or (has_hi == 1 and x >= hi)) and nv < cap:
                out[nv, 0] = v
                out[nv, 1] = _V_KEY_RANGE
                out[nv, 2] = i
                nv += 1
        if nodes[v, ID_M] > 0:
            a = nodes[v, BOUND_A]
            b = nodes[v, BOUND_B]
            m = nodes[v, ID_M]
            soff = nodes[v, ID_OFF]
            if a > b:
                if nv < cap:
                    out[nv, 0] = v
                    out[nv, 1] = _V_INDEX_BOUNDS
                    out[nv, 2] = 0
                    nv += 1
            else:
                for i in range(m + 1):
                    g = _grid_point(a, b, m, i)
                    r = np.int64(np.searchsorted(keys[off:off + k], g, side="right"))
                    if slots[soff + i] != r and nv < cap:
                        out[nv, 0] = v
                        out[nv, 1] = _V_INDEX_SLOT
                        out[nv, 2] = i
                        nv += 1
        limit = factor * max(nodes[v, INIT], np.int64(1))
        if factor > 0 and nodes[v, MOD] > limit and nv < cap:
            out[nv, 0] = v
            out[nv, 1] = _V_MOD_CNT
            out[nv, 2] = nodes[v, MOD] - limit
            nv += 1
        if coff != NIL:
            for j in range(k + 1):
                c = children[coff + j]
                if c == NIL:
                    continue
                if c < 0 or c >= n_nodes:
                    if nv < cap:
                        out[nv, 0] = v
                        out[nv, 1] = _V_CHILD_ID
                        out[nv, 2] = c
                        nv += 1
                    continue
                if top == stack.shape[0]:
                    bigger = np.empty((2 * top, 5), dtype=np.int64)
                    bigger[:top] = stack
                    stack = bigger
                stack[top, 0] = c
                if j > 0:
                    stack[top, 1] = keys[off + j - 1]
                    stack[top, 2] = 1
                else:
                    stack[top, 1] = lo
                    stack[top, 2] = has_lo
                if j < k:
                    stack[top, 3] = keys[off + j]
                    stack[top, 4] = 1
                else:
                    stack[top, 3] = hi
                    stack[top, 4] = has_hi
                top += 1
    # size accounting bottom-up against recounted child sizes, so one bad
    # field is reported once; children appear after parents in `order`
    for t in range(n_order - 1, -1, -1):
        v = order[t]
        off = nodes[v, REP_OFF]
        k = nodes[v, REP_LEN]
        s = np.int64(0)
        for i in range(k):
            if exists[off + i]:
                s += 1
        coff = nodes[v, CHILD_OFF]
        if coff != NIL:
            for j in range(k + 1):
                c = children[coff + j]
                if c >= 0 and c < n_nodes:
                    s += sizes[c]
        sizes[v] = s
        if s != nodes[v, SIZE] and nv < cap:
            out[nv, 0] = v
            out[nv, 1] = _V_SIZE
            out[nv, 2] = nodes[v, SIZE] - s
            nv += 1
    return nv


def validate(node, config=None, limit=1000):
    """Check every structural invariant below ``node``.

    Returns a list of :class:`Violation` (empty when the subtree is valid).
    The ``mod-cnt`` check needs the rebuild factor and runs only when a
    ``config`` is given.
    """
    if node is None:
        return []
    a = node.arena
    out = np.zeros((limit, 3), dtype=np.int64)
    factor = 0 if config is None else int(config.rebuild_factor)
    nv = _validate(a.nodes, a.keys, a.exists, a.children, a.slots, a.n_nodes,
                   node.id, factor, out)
    found = []
    for v, code, detail in out[:nv]:
        kind, msg = _V_NAMES[int(code)]
        found.append(Violation(int(v), kind, msg.format(int(detail))))
    return found


# -- compaction ------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _compact(nodes, keys, exists, children, slots, root,
             new_nodes, new_keys, new_exists, new_children, new_slots):
    # preorder copy of everything reachable from root; returns the new root id
    stack = np.empty((64, 2), dtype=np.int64)
    stack[0, 0] = root
    stack[0, 1] = NIL
    top = 1
    nn = 0
    nk = 0
    nc = 0
    ns = 0
    new_root = NIL
    while top > 0:
        top -= 1
        v = stack[top, 0]
        parent_slot = stack[top, 1]
        w = nn
        nn += 1
        if parent_slot == NIL:
            new_root = w
        else:
            new_children[parent_slot] = w
        for f in range(NODE_FIELDS):
            new_nodes[w, f] = nodes[v, f]
        off = nodes[v, REP_OFF]
        k = nodes[v, REP_LEN]
        new_nodes[w, REP_OFF] = nk
        for i in range(k):
            new_keys[nk + i] = keys[off + i]
            new_exists[nk + i] = exists[off + i]
        nk += k
        m = nodes[v, ID_M]
        if m > 0:
            soff = nodes[v, ID_OFF]
            new_nodes[w, ID_OFF] = ns
            for i in range(m + 1):
                new_slots[ns + i] = slots[soff + i]
            ns += m + 1
        coff = nodes[v, CHILD_OFF]
        if coff == NIL:
            continue
        new_nodes[w, CHILD_OFF] = nc
        if top + k + 1 > stack.shape[0]:
            bigger = np.empty((2 * (top + k + 1), 2), dtype=np.int64)
            bigger[:top] = stack[:top]
            stack = bigger
        # push in reverse so children are copied left to right
        for j in range(k, -1, -1):
            c = children[coff + j]
            new_children[nc + j] = NIL
            if c != NIL:
                stack[top, 0] = c
                stack[top, 1] = nc + j
                top += 1
        nc += k + 1
    return new_root


def compact(tree):
    """Copy the reachable part of ``tree``'s arena into a fresh arena.

    Node views taken before the call refer to the old arena.
    """
    from .rebuild import subtree_footprint

    if tree.root_id == NIL:
        tree.arena = Arena()
        return
    _, n_nodes, n_keys, n_children, n_slots = subtree_footprint(tree.root)
    old = tree.arena
    new = Arena(nodes=n_nodes, keys=n_keys, children=n_children, slots=n_slots)
    tree.root_id = int(_compact(old.nodes, old.keys, old.exists, old.children, old.slots,
                                tree.root_id, new.nodes, new.keys, new.exists,
                                new.children, new.slots))
    new.n_nodes, new.n_keys, new.n_children, new.n_slots = n_nodes, n_keys, n_children, n_slots
    tree.arena = new
