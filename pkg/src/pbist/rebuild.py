"""Subtree rebuilding: trigger arithmetic, flatten, ideal construction.

Both flatten and build run level by level. Each level is a list of
independent tasks; a planning kernel sizes every task's output, exclusive
scans turn the sizes into disjoint offsets, and a fill kernel writes all
tasks of the level in parallel blocks. The arena layout this produces does
not depend on the worker count.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import primitives as prim
from .core import (
    BOUND_A, BOUND_B, CHILD_OFF, DEFAULT_CONFIG, ID_M, ID_OFF, INIT, MOD, NIL,
    REP_LEN, REP_OFF, SIZE, IdIndex, Node, _fill_index, _grid_point, _slot_count,
)

__all__ = [
    "KeySourceLayout",
    "rebuild_threshold",
    "needs_rebuild",
    "key_source_layout",
    "flatten",
    "build_ideal",
    "build_id_index",
    "rebuild_with_batch",
    "is_ideally_balanced",
    "height",
    "subtree_footprint",
]

INSERT = "insert"
REMOVE = "remove"


def rebuild_threshold(init_size, config=DEFAULT_CONFIG):
    """Largest modification count a subtree absorbs before it is rebuilt."""
    return config.rebuild_factor * max(int(init_size), 1)


def needs_rebuild(node, k, config=DEFAULT_CONFIG):
    """Whether applying ``k`` more modifications under ``node`` forces a rebuild."""
    return node.mod_cnt + k > rebuild_threshold(node.init_subtree_size, config)


@njit(cache=True, nogil=True)
def _isqrt(n):
    r = np.int64(math.sqrt(float(n)))
    while r * r > n:
        r -= 1
    while (r + 1) * (r + 1) <= n:
        r += 1
    return r


# -- flatten -------------------------------------------------------------------

@dataclass(frozen=True)
class KeySourceLayout:
    """Key counts of a node's ``2k + 1`` sources and their output offsets.

    Source ``2i`` is child ``i``; source ``2i + 1`` is ``rep[i]``.
    """

    sizes: np.ndarray
    positions: np.ndarray


def key_source_layout(node):
    k = len(node)
    sizes = np.zeros(2 * k + 1, dtype=np.int64)
    sizes[1::2] = node.exists
    if not node.is_leaf:
        for i, c in enumerate(node.children):
            if c is not None:
                sizes[2 * i] = c.size
    return KeySourceLayout(sizes, prim.scan_exclusive(sizes))


@njit(cache=True, nogil=True)
def _flatten_count(nodes, children, task_node, cnt, t0, t1):
    for t in range(t0, t1):
        v = task_node[t]
        coff = nodes[v, CHILD_OFF]
        c_total = 0
        if coff != NIL:
            for j in range(nodes[v, REP_LEN] + 1):
                c = children[coff + j]
                if c != NIL and nodes[c, SIZE] > 0:
                    c_total += 1
        cnt[t] = c_total


@njit(cache=True, nogil=True)
def _flatten_fill(nodes, keys, exists, children, task_node, task_out, next_pos,
                  next_node, next_out, out, t0, t1):
    for t in range(t0, t1):
        v = task_node[t]
        off = nodes[v, REP_OFF]
        k = nodes[v, REP_LEN]
        coff = nodes[v, CHILD_OFF]
        pos = task_out[t]
        q = next_pos[t]
        for j in range(k + 1):
            if coff != NIL:
                c = children[coff + j]
                if c != NIL and nodes[c, SIZE] > 0:
                    next_node[q] = c
                    next_out[q] = pos
                    q += 1
                    pos += nodes[c, SIZE]
            if j < k and exists[off + j]:
                out[pos] = keys[off + j]
                pos += 1


def flatten(node, out, lo, hi, config=DEFAULT_CONFIG):
    """Write the logically present keys below ``node`` into ``out[lo:hi]``."""
    if node is None:
        if hi != lo:
            raise ValueError("an empty subtree flattens to an empty range")
        return
    if hi - lo != node.size:
        raise ValueError(f"range length {hi - lo} != subtree size {node.size}")
    arena = node.arena
    grain = config.seq_cutoff
    task_node = np.array([node.id], dtype=np.int64)
    task_out = np.array([lo], dtype=np.int64)
    while len(task_node):
        nt = len(task_node)
        cnt = np.empty(nt, dtype=np.int64)
        prim.parallel_blocks(
            0, nt, lambda a, b: _flatten_count(arena.nodes, arena.children, task_node, cnt, a, b),
            grain)
        next_pos = prim.scan_exclusive(cnt, grain)
        total = int(next_pos[-1] + cnt[-1])
        next_node = np.empty(total, dtype=np.int64)
        next_out = np.empty(total, dtype=np.int64)
        prim.parallel_blocks(
            0, nt,
            lambda a, b: _flatten_fill(arena.nodes, arena.keys, arena.exists, arena.children,
                                       task_node, task_out, next_pos, next_node, next_out,
                                       out, a, b),
            grain)
        task_node, task_out = next_node, next_out


def _flatten_new(node, config):
    out = np.empty(0 if node is None else node.size, dtype=np.int64)
    flatten(node, out, 0, len(out), config)
    return out


# -- ideal construction ----------------------------------------------------------

@njit(cache=True, nogil=True)
def _plan_build(t_lo, t_hi, leaf_max, eps, node_cnt, rep_cnt, child_cnt, slot_cnt, t0, t1):
    for t in range(t0, t1):
        n = t_hi[t] - t_lo[t]
        if n == 0:
            node_cnt[t] = 0
            rep_cnt[t] = 0
            child_cnt[t] = 0
            slot_cnt[t] = 0
        elif n <= leaf_max:
            node_cnt[t] = 1
            rep_cnt[t] = n
            child_cnt[t] = 0
            slot_cnt[t] = 0
        else:
            k = _isqrt(n) - 1
            node_cnt[t] = 1
            rep_cnt[t] = k
            child_cnt[t] = k + 1
            slot_cnt[t] = _slot_count(n, eps) + 1


@njit(cache=True, nogil=True)
def _fill_build(src, t_lo, t_hi, t_slot, node_pos, rep_pos, child_pos, slot_pos,
                node_base, key_base, child_base, slot_base,
                nodes, keys, exists, children, slots,
                next_lo, next_hi, next_slot, leaf_max, eps, root_out, t0, t1):
    for t in range(t0, t1):
        lo = t_lo[t]
        hi = t_hi[t]
        n = hi - lo
        if n == 0:
            if t_slot[t] >= 0:
                children[t_slot[t]] = NIL
            continue
        v = node_base + node_pos[t]
        if t_slot[t] >= 0:
            children[t_slot[t]] = v
        else:
            root_out[0] = v
        koff = key_base + rep_pos[t]
        nodes[v, REP_OFF] = koff
        nodes[v, SIZE] = n
        nodes[v, INIT] = n
        nodes[v, MOD] = 0
        if n <= leaf_max:
            for i in range(n):
                keys[koff + i] = src[lo + i]
                exists[koff + i] = True
            nodes[v, REP_LEN] = n
            nodes[v, CHILD_OFF] = NIL
            nodes[v, ID_OFF] = 0
            nodes[v, ID_M] = 0
            nodes[v, BOUND_A] = 0
            nodes[v, BOUND_B] = 0
            continue
        k = _isqrt(n) - 1
        for i in range(k):
            keys[koff + i] = src[lo + (i + 1) * k]
            exists[koff + i] = True
        nodes[v, REP_LEN] = k
        coff = child_base + child_pos[t]
        nodes[v, CHILD_OFF] = coff
        # child j takes the gap left of rep[j]; the last one everything past rep[k-1]
        q = child_pos[t]
        for j in range(k + 1):
            if j == 0:
                c_lo = lo
            else:
                c_lo = lo + j * k + 1
            if j < k:
                c_hi = lo + (j + 1) * k
            else:
                c_hi = hi
            next_lo[q + j] = c_lo
            next_hi[q + j] = c_hi
            next_slot[q + j] = coff + j
            children[coff + j] = NIL
        m = _slot_count(n, eps)
        soff = slot_base + slot_pos[t]
        a = src[lo]
        b = src[hi - 1]
        nodes[v, ID_OFF] = soff
        nodes[v, ID_M] = m
        nodes[v, BOUND_A] = a
        nodes[v, BOUND_B] = b
        _fill_index(keys, slots, koff, k, a, b, m, soff)


def _build_into(arena, src, lo, hi, config):
    grain = config.seq_cutoff
    leaf_max = int(config.leaf_threshold)
    eps = float(config.index_exponent)
    root_out = np.full(1, NIL, dtype=np.int64)
    t_lo = np.array([lo], dtype=np.int64)
    t_hi = np.array([hi], dtype=np.int64)
    t_slot = np.array([NIL], dtype=np.int64)
    while len(t_lo):
        nt = len(t_lo)
        node_cnt = np.empty(nt, dtype=np.int64)
        rep_cnt = np.empty(nt, dtype=np.int64)
        child_cnt = np.empty(nt, dtype=np.int64)
        slot_cnt = np.empty(nt, dtype=np.int64)
        prim.parallel_blocks(
            0, nt, lambda a, b: _plan_build(t_lo, t_hi, leaf_max, eps, node_cnt, rep_cnt,
                                            child_cnt, slot_cnt, a, b),
            grain)
        offsets = [prim.scan_exclusive(c, grain) for c in (node_cnt, rep_cnt, child_cnt, slot_cnt)]
        totals = [int(o[-1] + c[-1]) for o, c in zip(offsets, (node_cnt, rep_cnt, child_cnt, slot_cnt))]
        bases = arena.alloc(*totals)
        next_lo = np.empty(totals[2], dtype=np.int64)
        next_hi = np.empty(totals[2], dtype=np.int64)
        next_slot = np.empty(totals[2], dtype=np.int64)
        prim.parallel_blocks(
            0, nt,
            lambda a, b: _fill_build(src, t_lo, t_hi, t_slot, *offsets, *bases,
                                     arena.nodes, arena.keys, arena.exists, arena.children,
                                     arena.slots, next_lo, next_hi, next_slot, leaf_max, eps,
                                     root_out, a, b),
            grain)
        t_lo, t_hi, t_slot = next_lo, next_hi, next_slot
    return int(root_out[0])


def build_ideal(keys, lo=0, hi=None, config=DEFAULT_CONFIG, arena=None):
    """Ideally balanced tree over the strictly increasing ``keys[lo:hi]``.

    Returns the root :class:`Node`, or ``None`` for an empty range. A fresh
    arena is created unless one is given.
    """
    from .core import Arena

    src = np.ascontiguousarray(keys, dtype=np.int64)
    hi = len(src) if hi is None else hi
    if not 0 <= lo <= hi <= len(src):
        raise ValueError("invalid key range")
    if arena is None:
        n = hi - lo
        arena = Arena(nodes=n // 4 + 1, keys=n + 1, children=n // 3 + 1, slots=n // 2 + 1)
    root = _build_into(arena, src, lo, hi, config)
    return None if root == NIL else Node(arena, root)


@njit(cache=True, nogil=True)
def _grid(a, b, m):
    out = np.empty(m + 1, dtype=np.int64)
    for i in range(m + 1):
        out[i] = _grid_point(a, b, m, i)
    return out


def build_id_index(rep, a, b, m, grain=None):
    """Index whose slot ``i`` holds the rank in ``rep`` of the ``i``-th grid point."""
    rep = np.ascontiguousarray(rep, dtype=np.int64)
    if len(rep) == 0 or m < 1 or a > rep[0] or b < rep[-1]:
        raise ValueError("need non-empty rep inside [a, b] and m >= 1")
    bounds = _grid(np.int64(a), np.int64(b), np.int64(m))
    return IdIndex(prim.rank(rep, bounds, grain), int(a), int(b), int(m))


# -- footprint, height, balance --------------------------------------------------

@njit(cache=True, nogil=True)
def _footprint(nodes, children, root, out):
    # out: levels, nodes, physical keys, child entries, slot entries
    for i in range(5):
        out[i] = 0
    if root == NIL:
        return
    stack = np.empty((64, 2), dtype=np.int64)
    stack[0, 0] = root
    stack[0, 1] = 1
    top = 1
    while top > 0:
        top -= 1
        v = stack[top, 0]
        d = stack[top, 1]
        k = nodes[v, REP_LEN]
        if d > out[0]:
            out[0] = d
        out[1] += 1
        out[2] += k
        if nodes[v, ID_M] > 0:
            out[4] += nodes[v, ID_M] + 1
        coff = nodes[v, CHILD_OFF]
        if coff == NIL:
            continue
        out[3] += k + 1
        for j in range(k + 1):
            c = children[coff + j]
            if c == NIL:
                continue
            if top == stack.shape[0]:
                bigger = np.empty((2 * top, 2), dtype=np.int64)
                bigger[:top] = stack
                stack = bigger
            stack[top, 0] = c
            stack[top, 1] = d + 1
            top += 1


def subtree_footprint(node):
    """``(levels, nodes, rep entries, child entries, slot entries)`` below ``node``."""
    out = np.zeros(5, dtype=np.int64)
    if node is not None:
        _footprint(node.arena.nodes, node.arena.children, node.id, out)
    return tuple(int(x) for x in out)


def height(node):
    """Edges on the longest root-to-leaf path: 0 for a lone leaf, -1 if empty."""
    return subtree_footprint(node)[0] - 1


@njit(cache=True, nogil=True)
def _check_ideal(nodes, keys, exists, children, root, flat, leaf_max):
    stack = np.empty((64, 3), dtype=np.int64)
    stack[0, 0] = root
    stack[0, 1] = 0
    stack[0, 2] = len(flat)
    top = 1
    while top > 0:
        top -= 1
        v = stack[top, 0]
        lo = stack[top, 1]
        hi = stack[top, 2]
        n = hi - lo
        if v == NIL:
            if n != 0:
                return False
            continue
        if n == 0 or nodes[v, SIZE] != n:
            return False
        off = nodes[v, REP_OFF]
        k = nodes[v, REP_LEN]
        coff = nodes[v, CHILD_OFF]
        for i in range(k):
            if not exists[off + i]:
                return False
        if n <= leaf_max:
            if coff != NIL or k != n:
                return False
            for i in range(n):
                if keys[off + i] != flat[lo + i]:
                    return False
            continue
        step = _isqrt(n) - 1
        if coff == NIL or k != step:
            return False
        for i in range(k):
            if keys[off + i] != flat[lo + (i + 1) * step]:
                return False
        if top + k + 1 > stack.shape[0]:
            bigger = np.empty((2 * (top + k + 1), 3), dtype=np.int64)
            bigger[:top] = stack[:top]
            stack = bigger
        for j in range(k + 1):
            stack[top, 0] = children[coff + j]
            stack[top, 1] = lo if j == 0 else lo + j * step + 1
            stack[top, 2] = lo + (j + 1) * step if j < k else hi
            top += 1
    return True


def is_ideally_balanced(node, config=DEFAULT_CONFIG):
    """Whether ``node`` has exactly the shape ``build_ideal`` gives its keys.

    Leaves hold at most ``leaf_threshold`` keys; an inner node over ``n``
    keys holds ``k = isqrt(n) - 1`` separators taken at in-order positions
    ``(i + 1) * k``; tombstones are not allowed.
    """
    if node is None:
        return True
    flat = _flatten_new(node, config)
    a = node.arena
    return bool(_check_ideal(a.nodes, a.keys, a.exists, a.children, node.id, flat,
                             int(config.leaf_threshold)))


# -- rebuild ---------------------------------------------------------------------

def rebuild_with_batch(node, keys, lo, hi, op, config=DEFAULT_CONFIG, arena=None):
    """Rebuild the subtree of ``node`` with ``keys[lo:hi]`` inserted or removed.

    ``node`` may be ``None`` (an empty subtree); pass ``arena`` then. Returns
    the root of the new ideal subtree, or ``None`` if it is empty. The caller
    splices the result in place of ``node``.
    """
    if op not in (INSERT, REMOVE):
        raise ValueError(f"unknown op {op!r}")
    if node is not None:
        arena = node.arena
    if arena is None:
        raise ValueError("an arena is required to rebuild an empty subtree")
    batch = np.ascontiguousarray(keys[lo:hi], dtype=np.int64)
    current = _flatten_new(node, config)
    if op == INSERT:
        merged = prim.merge(current, batch, config.seq_cutoff)
    else:
        merged = prim.difference(current, batch, config.seq_cutoff)
    if node is not None:
        _, n_nodes, n_keys, n_children, n_slots = subtree_footprint(node)
        arena.dead_nodes += n_nodes
        arena.dead_keys += n_keys
        arena.dead_children += n_children
        arena.dead_slots += n_slots
    root = _build_into(arena, merged, 0, len(merged), config)
    return None if root == NIL else Node(arena, root)
