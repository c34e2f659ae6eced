from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pbist import Config, Tree, compact, contains_scalar, interpolation_search, validate
from pbist.batched import insert_batched, remove_batched
from pbist.core import Arena, Node, contains_scalar_many, grid_point, interpolation_slot, slot_count

I64 = st.integers(-2**63, 2**63 - 1)


def inner(arena, rep, **kw):
    """Hand-built inner node whose children are all empty."""
    return Node(arena, arena.add_node(rep, children=[None] * (len(rep) + 1), **kw))


@pytest.mark.parametrize("kw", [
    {"leaf_threshold": 3},
    {"rebuild_factor": 0},
    {"index_exponent": 0.4},
    {"index_exponent": 1.0},
    {"seq_cutoff": 0},
    {"routing": "exponential"},
])
def test_config_rejects(kw):
    with pytest.raises(ValueError):
        Config(**kw)


def test_config_accepts_fraction():
    assert Config(index_exponent=Fraction(1, 2)).index_exponent == 0.5


def test_slot_count():
    assert slot_count(1, 0.75) == 1
    assert slot_count(16, 0.75) == 8
    assert slot_count(17, 0.5) == 5


@settings(max_examples=300, deadline=None)
@given(I64, I64, st.integers(1, 10**6), st.data())
def test_grid_point_exact(x, y, m, data):
    a, b = min(x, y), max(x, y)
    i = data.draw(st.integers(0, m))
    assert grid_point(a, b, m, i) == a + (i * (b - a)) // m


@settings(max_examples=300, deadline=None)
@given(I64, I64, st.integers(1, 10**6), I64)
def test_interpolation_slot_exact(x, y, m, key):
    a, b = min(x, y), max(x, y)
    if a == b:
        return
    want = min(max((key - a) * m // (b - a), 0), m)
    assert interpolation_slot(a, b, m, key) == want


def test_interpolation_search_examples():
    arena = Arena()
    leaf = Node(arena, arena.add_node([10, 20, 30, 40]))
    node = inner(arena, [10, 20, 30, 40])
    for n in (leaf, node):
        assert interpolation_search(n, 5) == 0
        assert interpolation_search(n, 30) == 3
        assert interpolation_search(n, 41) == 4
        assert interpolation_search(n, 30, routing="rank") == 3


def test_interpolation_search_empty_rep():
    arena = Arena()
    with pytest.raises(ValueError):
        interpolation_search(Node(arena, arena.add_node([])), 1)


def test_interpolation_search_random_pairs():
    rng = np.random.default_rng(5)
    arena = Arena()
    for _ in range(10**4 // 50):
        k = int(rng.integers(1, 200))
        span = int(rng.choice([10**3, 10**9, 2**62]))
        rep = np.unique(rng.integers(-span, span, k))
        node = inner(arena, rep)
        probes = np.concatenate([rng.integers(-span - 5, span + 5, 50), rep[:3], rep[-3:]])
        for x in probes.tolist():
            assert interpolation_search(node, x) == np.searchsorted(rep, x, side="right")


def test_interpolation_search_skewed_keys():
    # exponential key spacing defeats the hint, the scan must still be exact
    rep = np.unique((2 ** np.linspace(0, 62, 400)).astype(np.int64))
    node = inner(Arena(), rep)
    for x in np.concatenate([rep - 1, rep, rep + 1]).tolist():
        assert interpolation_search(node, x) == np.searchsorted(rep, x, side="right")


def test_index_slots_match_grid_ranks():
    rng = np.random.default_rng(8)
    tree = Tree.from_sorted(np.unique(rng.integers(-10**12, 10**12, 20000)))
    stack = [tree.root]
    checked = 0
    while stack:
        node = stack.pop()
        if node.is_leaf:
            continue
        idx = node.id_index
        rep = node.rep
        assert idx.lower_bound <= idx.upper_bound
        assert len(idx.slots) == idx.slot_count + 1
        assert np.all(np.diff(idx.slots) >= 0)
        grid = [grid_point(idx.lower_bound, idx.upper_bound, idx.slot_count, i)
                for i in range(idx.slot_count + 1)]
        assert idx.slots.tolist() == np.searchsorted(rep, grid, side="right").tolist()
        checked += 1
        stack.extend(c for c in node.children if c is not None)
    assert checked > 10


def test_contains_scalar_examples():
    assert not contains_scalar(Tree(), 4)
    tree = Tree.from_sorted(np.array([1, 3, 5, 7, 9]))
    assert contains_scalar(tree, 5)
    assert not contains_scalar(tree, 2)
    remove_batched(tree, np.array([3]))
    assert not contains_scalar(tree, 3)
    assert 5 in tree and 3 not in tree


def test_contains_scalar_many_matches_oracle():
    rng = np.random.default_rng(1)
    keys = np.unique(rng.integers(0, 10**6, 50000))
    tree = Tree.from_sorted(keys)
    probes = rng.integers(-10, 10**6 + 10, 20000)
    assert np.array_equal(contains_scalar_many(tree, probes), np.isin(probes, keys))


def test_node_views():
    tree = Tree.from_sorted(np.arange(50))
    root = tree.root
    assert not root.is_leaf and root.kind == "inner"
    assert root.size == 50 and root.init_subtree_size == 50 and root.mod_cnt == 0
    assert len(root.children) == len(root) + 1
    assert root == Node(tree.arena, tree.root_id)
    leaf = next(c for c in root.children if c is not None and c.is_leaf)
    assert leaf.id_index is None and leaf.children == []


def test_validate_clean_tree():
    tree = Tree.from_sorted(np.arange(10**4) * 7)
    assert validate(tree.root, tree.config) == []
    assert validate(None) == []


def test_validate_size_off_by_one():
    tree = Tree.from_sorted(np.arange(1000))
    node = tree.root.children[3]
    node.size = node.size + 1
    found = validate(tree.root)
    assert len(found) == 1
    assert found[0].kind == "size" and found[0].node == node.id


def test_validate_unsorted_and_range():
    arena = Arena()
    bad = Node(arena, arena.add_node([5, 3]))
    assert [v.kind for v in validate(bad)] == ["unsorted-rep"]
    child = arena.add_node([50])
    parent = Node(arena, arena.add_node([10, 20], children=[None, child, None],
                                        index=(10, 50, 2)))
    assert "key-range" in [v.kind for v in validate(parent)]


def test_validate_mod_cnt_needs_config():
    arena = Arena()
    node = Node(arena, arena.add_node([1, 2], init_subtree_size=2, mod_cnt=9))
    assert validate(node) == []
    assert [v.kind for v in validate(node, Config())] == ["mod-cnt"]


def test_compact_keeps_contents():
    rng = np.random.default_rng(2)
    tree = Tree.from_sorted(np.unique(rng.integers(0, 10**5, 20000)))
    for _ in range(10):
        insert_batched(tree, np.unique(rng.integers(0, 10**5, 3000)))
        remove_batched(tree, np.unique(rng.integers(0, 10**5, 3000)))
    before = tree.to_array()
    compact(tree)
    assert tree.arena.dead_fraction == 0
    assert np.array_equal(tree.to_array(), before)
    assert validate(tree.root, tree.config) == []
    assert np.array_equal(contains_scalar_many(tree, before), np.ones(len(before), bool))


def test_copy_is_independent():
    tree = Tree.from_sorted(np.arange(100))
    other = tree.copy()
    remove_batched(other, np.arange(50))
    assert len(tree) == 100 and len(other) == 50
    assert tree.to_array().tolist() == list(range(100))
