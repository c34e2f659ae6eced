"""Batched contains / insert / remove.

A batch is a strictly increasing ``int64`` array. The traversal runs one
tree level at a time: ``node_of[i]`` names the node that key ``i`` is being
routed through, and keys sharing a node form that node's segment (a
contiguous run, because batches are sorted). Per level, every active key is
located in its node's ``rep`` with one interpolation search; keys equal to a
rep entry are answered there, the rest move to the child between the
neighbouring separators. Children that receive no keys are never visited.

Updates pre-filter the batch with :func:`contains_batched`, so every routed
key changes the set and a segment's length is exactly the number of
modifications it brings to its node. Counters are updated top-down before
descending; a node whose counter would pass the rebuild threshold takes its
whole segment into :func:`~pbist.rebuild.rebuild_with_batch` instead.
"""

from collections import namedtuple

import numpy as np
from numba import njit

from . import primitives as prim
from .core import CHILD_OFF, INIT, MOD, NIL, REP_LEN, REP_OFF, SIZE, Node, _search, compact
from .rebuild import INSERT, REMOVE, _build_into, rebuild_with_batch

__all__ = [
    "RouteSegment",
    "normalize_batch",
    "check_batch",
    "contains_batched",
    "batched_traverse",
    "route_segments",
    "insert_batched",
    "remove_batched",
]

RouteSegment = namedtuple("RouteSegment", "child_index lo hi")

# node_of values below zero
DONE = -1
PENDING_NIL = -2

# per-key outcome at the level where a key stops
_MERGE = 1

# arena garbage ratio that triggers compaction after an update
COMPACT_AT = 0.5


def normalize_batch(raw):
    """Sorted, de-duplicated ``int64`` copy of ``raw``."""
    return np.unique(np.asarray(raw, dtype=np.int64))


def check_batch(batch):
    batch = np.ascontiguousarray(batch, dtype=np.int64)
    if batch.ndim != 1:
        raise ValueError("a batch must be one-dimensional")
    if len(batch) > 1 and not np.all(batch[1:] > batch[:-1]):
        raise ValueError("batch must be strictly increasing; see normalize_batch")
    return batch


@njit(cache=True, nogil=True)
def _contains_level(nodes, keys, exists, children, slots, bkeys, node_of, result,
                    route, i0, i1):
    active = 0
    for i in range(i0, i1):
        v = node_of[i]
        if v < 0:
            continue
        x = bkeys[i]
        off = nodes[v, REP_OFF]
        r = _search(nodes, keys, slots, v, x, route)
        if r > 0 and keys[off + r - 1] == x:
            result[i] = exists[off + r - 1]
            node_of[i] = DONE
            continue
        coff = nodes[v, CHILD_OFF]
        c = NIL if coff == NIL else children[coff + r]
        if c == NIL:
            result[i] = False
            node_of[i] = DONE
        else:
            node_of[i] = c
            active += 1
    return active


def batched_traverse(node, keys, lo, hi, result, config):
    """Set ``result[i]`` to the membership of ``keys[i]`` below ``node`` for ``lo <= i < hi``."""
    if node is None:
        result[lo:hi] = False
        return
    arena = node.arena
    node_of = np.full(len(keys), DONE, dtype=np.int64)
    node_of[lo:hi] = node.id
    route = config.route_code
    grain = config.seq_cutoff
    active = hi - lo
    while active:
        active = sum(prim.parallel_blocks(
            lo, hi,
            lambda a, b: _contains_level(arena.nodes, arena.keys, arena.exists, arena.children,
                                         arena.slots, keys, node_of, result, route, a, b),
            grain))


def contains_batched(tree, batch):
    """Membership flags for every key of a strictly increasing batch."""
    batch = check_batch(batch)
    result = np.zeros(len(batch), dtype=np.bool_)
    batched_traverse(tree.root, batch, 0, len(batch), result, tree.config)
    return result


@njit(cache=True, nogil=True)
def _ranks_in(nodes, keys, slots, v, bkeys, lo, hi, route, ranks, matched):
    off = nodes[v, REP_OFF]
    for i in range(lo, hi):
        r = _search(nodes, keys, slots, v, bkeys[i], route)
        ranks[i - lo] = r
        matched[i - lo] = r > 0 and keys[off + r - 1] == bkeys[i]


def route_segments(node, keys, lo, hi, config):
    """How an inner node splits ``keys[lo:hi]`` among its children.

    Keys equal to a rep entry are resolved at the node and excluded; the
    rest form one :class:`RouteSegment` per child that receives keys.
    """
    keys = check_batch(keys)
    n = hi - lo
    ranks = np.empty(n, dtype=np.int64)
    matched = np.empty(n, dtype=np.bool_)
    a = node.arena
    _ranks_in(a.nodes, a.keys, a.slots, node.id, keys, lo, hi, config.route_code, ranks, matched)
    segments = []
    for i in np.flatnonzero(~matched).tolist():
        child = int(ranks[i])
        if segments and segments[-1].child_index == child and segments[-1].hi == lo + i:
            segments[-1] = segments[-1]._replace(hi=lo + i + 1)
        else:
            segments.append(RouteSegment(child, lo + i, lo + i + 1))
    return segments


# -- updates ---------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _run_flags(node_of, slot_of, target, starts, ends, i0, i1):
    # runs of equal node (target == 0: node_of >= 0) or of equal slot among
    # PENDING_NIL keys (target == PENDING_NIL)
    n = len(node_of)
    for i in range(i0, i1):
        v = node_of[i]
        if target == 0:
            on = v >= 0
        else:
            on = v == target
        if not on:
            starts[i] = False
            ends[i] = False
            continue
        if target == 0:
            starts[i] = i == 0 or node_of[i - 1] != v
            ends[i] = i == n - 1 or node_of[i + 1] != v
        else:
            starts[i] = i == 0 or node_of[i - 1] != v or slot_of[i - 1] != slot_of[i]
            ends[i] = i == n - 1 or node_of[i + 1] != v or slot_of[i + 1] != slot_of[i]


def _runs(node_of, slot_of, target, grain):
    n = len(node_of)
    starts = np.empty(n, dtype=np.bool_)
    ends = np.empty(n, dtype=np.bool_)
    prim.parallel_blocks(0, n, lambda a, b: _run_flags(node_of, slot_of, target, starts, ends, a, b),
                         grain)
    idx = np.arange(n, dtype=np.int64)
    return prim.pack(idx, starts, grain), prim.pack(idx, ends, grain) + 1


@njit(cache=True, nogil=True)
def _segment_counters(nodes, node_of, seg_lo, seg_hi, seg_node, rebuild, factor, sign, s0, s1):
    for s in range(s0, s1):
        lo = seg_lo[s]
        hi = seg_hi[s]
        v = node_of[lo]
        seg_node[s] = v
        k = hi - lo
        if nodes[v, MOD] + k > factor * max(nodes[v, INIT], np.int64(1)):
            rebuild[s] = True
            for i in range(lo, hi):
                node_of[i] = DONE
        else:
            rebuild[s] = False
            nodes[v, MOD] += k
            nodes[v, SIZE] += sign * k


@njit(cache=True, nogil=True)
def _update_level(nodes, keys, exists, children, slots, bkeys, node_of, slot_of, state,
                  inserting, route, i0, i1):
    # returns the number of keys that contradict the pre-filter
    bad = 0
    for i in range(i0, i1):
        v = node_of[i]
        if v < 0:
            continue
        x = bkeys[i]
        off = nodes[v, REP_OFF]
        r = _search(nodes, keys, slots, v, x, route)
        if r > 0 and keys[off + r - 1] == x:
            if exists[off + r - 1] == inserting:
                bad += 1
            exists[off + r - 1] = inserting
            node_of[i] = DONE
            continue
        coff = nodes[v, CHILD_OFF]
        if coff == NIL:
            if inserting:
                state[i] = _MERGE
            else:
                bad += 1
            node_of[i] = DONE
            continue
        c = children[coff + r]
        slot_of[i] = coff + r
        if c != NIL:
            node_of[i] = c
        elif inserting:
            node_of[i] = PENDING_NIL
        else:
            bad += 1
            node_of[i] = DONE
    return bad


@njit(cache=True, nogil=True)
def _merge_counts(nodes, seg_lo, seg_hi, seg_node, rebuild, state, new_len, s0, s1):
    for s in range(s0, s1):
        new_len[s] = 0
        v = seg_node[s]
        if rebuild[s] or nodes[v, CHILD_OFF] != NIL:
            continue
        c = 0
        for i in range(seg_lo[s], seg_hi[s]):
            if state[i] == _MERGE:
                c += 1
        if c:
            new_len[s] = nodes[v, REP_LEN] + c


@njit(cache=True, nogil=True)
def _leaf_merge(nodes, keys, exists, bkeys, state, seg_lo, seg_hi, seg_node, new_len,
                new_pos, key_base, s0, s1):
    for s in range(s0, s1):
        if new_len[s] == 0:
            continue
        v = seg_node[s]
        off = nodes[v, REP_OFF]
        k = nodes[v, REP_LEN]
        o = key_base + new_pos[s]
        nodes[v, REP_OFF] = o
        nodes[v, REP_LEN] = new_len[s]
        j = 0
        i = seg_lo[s]
        hi = seg_hi[s]
        while i < hi and state[i] != _MERGE:
            i += 1
        while j < k or i < hi:
            if i >= hi or (j < k and keys[off + j] < bkeys[i]):
                keys[o] = keys[off + j]
                exists[o] = exists[off + j]
                j += 1
            else:
                keys[o] = bkeys[i]
                exists[o] = True
                i += 1
                while i < hi and state[i] != _MERGE:
                    i += 1
            o += 1


def _splice(tree, slot, node):
    new_id = NIL if node is None else node.id
    if slot == NIL:
        tree.root_id = new_id
    else:
        tree.arena.children[slot] = new_id


def _apply(tree, keys, op):
    config = tree.config
    arena = tree.arena
    grain = config.seq_cutoff
    inserting = op == INSERT
    n = len(keys)
    if tree.root_id == NIL:
        if inserting:
            tree.root_id = _build_into(arena, keys, 0, n, config)
        return
    node_of = np.full(n, tree.root_id, dtype=np.int64)
    slot_of = np.full(n, NIL, dtype=np.int64)
    state = np.zeros(n, dtype=np.int8)
    factor = int(config.rebuild_factor)
    sign = 1 if inserting else -1
    route = config.route_code
    while True:
        seg_lo, seg_hi = _runs(node_of, slot_of, 0, grain)
        ns = len(seg_lo)
        if ns == 0:
            break
        seg_node = np.empty(ns, dtype=np.int64)
        rebuild = np.empty(ns, dtype=np.bool_)
        seg_slot = slot_of[seg_lo]
        prim.parallel_blocks(
            0, ns, lambda a, b: _segment_counters(arena.nodes, node_of, seg_lo, seg_hi, seg_node,
                                                  rebuild, factor, sign, a, b),
            grain)
        bad = sum(prim.parallel_blocks(
            0, n, lambda a, b: _update_level(arena.nodes, arena.keys, arena.exists,
                                             arena.children, arena.slots, keys, node_of,
                                             slot_of, state, inserting, route, a, b),
            grain))
        if bad:
            raise RuntimeError(f"{bad} keys contradict the pre-filter; tree is corrupt")

        if inserting:
            new_len = np.empty(ns, dtype=np.int64)
            prim.parallel_blocks(
                0, ns, lambda a, b: _merge_counts(arena.nodes, seg_lo, seg_hi, seg_node, rebuild,
                                                  state, new_len, a, b),
                grain)
            new_pos = prim.scan_exclusive(new_len, grain)
            total = int(new_pos[-1] + new_len[-1])
            if total:
                arena.dead_keys += int(arena.nodes[seg_node[new_len > 0], REP_LEN].sum())
                _, key_base, _, _ = arena.alloc(keys=total)
                prim.parallel_blocks(
                    0, ns, lambda a, b: _leaf_merge(arena.nodes, arena.keys, arena.exists, keys,
                                                    state, seg_lo, seg_hi, seg_node, new_len,
                                                    new_pos, key_base, a, b),
                    grain)
            nil_lo, nil_hi = _runs(node_of, slot_of, PENDING_NIL, grain)
            for lo, hi in zip(nil_lo.tolist(), nil_hi.tolist()):
                arena.children[slot_of[lo]] = _build_into(arena, keys, lo, hi, config)
                node_of[lo:hi] = DONE

        for s in np.flatnonzero(rebuild).tolist():
            lo, hi = int(seg_lo[s]), int(seg_hi[s])
            new_root = rebuild_with_batch(Node(arena, seg_node[s]), keys, lo, hi, op, config)
            _splice(tree, int(seg_slot[s]), new_root)

    if arena.dead_fraction > COMPACT_AT:
        compact(tree)


def _update(tree, batch, op):
    batch = check_batch(batch)
    present = contains_batched(tree, batch)
    keep = ~present if op == INSERT else present
    todo = prim.pack(batch, keep, tree.config.seq_cutoff)
    if len(todo):
        _apply(tree, todo, op)
    return len(todo)


def insert_batched(tree, batch):
    """Add every key of the batch; returns how many were not already present."""
    return _update(tree, batch, INSERT)


def remove_batched(tree, batch):
    """Remove every key of the batch; returns how many were present."""
    return _update(tree, batch, REMOVE)
