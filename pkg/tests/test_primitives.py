import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pbist import primitives as prim


def sorted_keys(max_size=300, lo=-10**6, hi=10**6):
    return st.lists(st.integers(lo, hi), max_size=max_size, unique=True).map(
        lambda xs: np.array(sorted(xs), dtype=np.int64))


def seq_merge(a, b):
    out, i, j = [], 0, 0
    while i < len(a) and j < len(b):
        if a[i] <= b[j]:
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            j += 1
    return out + list(a[i:]) + list(b[j:])


@pytest.fixture(params=[1, 4])
def workers(request):
    with prim.num_workers(request.param):
        yield request.param


def test_parallel_for_empty_range():
    calls = []
    prim.parallel_for(0, 0, calls.append)
    assert calls == []


def test_parallel_for_identity_fill(workers):
    out = np.full(4, -1)
    prim.parallel_for(0, 4, lambda i: out.__setitem__(i, i))
    assert out.tolist() == [0, 1, 2, 3]


def test_parallel_for_each_index_once(workers):
    cells = np.zeros(10**6, dtype=np.int64)

    def body(lo, hi):
        cells[lo:hi] += 1

    prim.parallel_blocks(0, len(cells), body, grain=1000)
    assert np.all(cells == 1)


def test_parallel_for_small_grain_hits_every_index(workers):
    seen = np.zeros(5000, dtype=np.int64)

    def body(i):
        seen[i] += 1

    prim.parallel_for(0, 5000, body, grain=7)
    assert np.all(seen == 1)


def test_nested_blocks_do_not_deadlock():
    with prim.num_workers(2):
        res = prim.parallel_blocks(
            0, 8, lambda lo, hi: sum(prim.parallel_blocks(0, 100, lambda a, b: b - a, 3)), 1)
    assert res == [100] * 8


def test_set_num_workers_rejects_zero():
    with pytest.raises(ValueError):
        prim.set_num_workers(0)


def test_scan_examples():
    assert prim.scan_exclusive([]).tolist() == []
    assert prim.scan_exclusive([1, 2, 3]).tolist() == [0, 1, 3]


def test_scan_random(workers):
    rng = np.random.default_rng(3)
    arr = rng.integers(0, 50, 10**5)
    got = prim.scan_exclusive(arr, grain=333)
    assert np.array_equal(got[1:], np.cumsum(arr)[:-1])
    assert got[0] == 0
    assert np.array_equal(np.diff(got), arr[:-1])


def test_filter_even():
    assert prim.filter([1, 3, 8, 6, 7, 2], lambda x: x % 2 == 0).tolist() == [8, 6, 2]
    assert prim.filter([], lambda x: x > 0).tolist() == []


def test_pack_length_mismatch():
    with pytest.raises(ValueError):
        prim.pack([1, 2], [True])


def test_merge_examples():
    assert prim.merge([1, 5], [2, 4, 8]).tolist() == [1, 2, 4, 5, 8]
    assert prim.merge([], [3, 4]).tolist() == [3, 4]
    assert prim.merge([3, 4], []).tolist() == [3, 4]


def test_difference_examples():
    assert prim.difference([2, 4, 5, 7, 9], [2, 5, 9]).tolist() == [4, 7]
    assert prim.difference([1, 2], []).tolist() == [1, 2]
    assert prim.difference([], [1]).tolist() == []


def test_elem_rank_examples():
    a = np.array([1, 3, 5, 7])
    assert prim.elem_rank(a, 2) == 1
    assert prim.elem_rank(a, 5) == 3
    assert prim.elem_rank(a, -1) == 0


def test_rank_examples():
    assert prim.rank([1, 3, 5, 7], []).tolist() == []
    assert prim.rank([1, 3, 5, 7], [0, 3, 9]).tolist() == [0, 2, 4]


@settings(max_examples=200, deadline=None)
@given(sorted_keys(), sorted_keys(), st.integers(1, 40))
def test_merge_matches_two_pointer(a, b, grain):
    b = np.setdiff1d(b, a)
    assert prim.merge(a, b, grain).tolist() == seq_merge(a.tolist(), b.tolist())


@settings(max_examples=200, deadline=None)
@given(sorted_keys(lo=-50, hi=50), sorted_keys(lo=-60, hi=60), st.integers(1, 40))
def test_difference_matches_set(a, b, grain):
    want = [x for x in a.tolist() if x not in set(b.tolist())]
    assert prim.difference(a, b, grain).tolist() == want


@settings(max_examples=200, deadline=None)
@given(sorted_keys(lo=-100, hi=100), sorted_keys(lo=-120, hi=120), st.integers(1, 40))
def test_rank_matches_elem_rank(a, b, grain):
    got = prim.rank(a, b, grain)
    assert got.tolist() == [prim.elem_rank(a, x) for x in b.tolist()]
    assert np.all(np.diff(got) >= 0)
    assert np.all(got <= len(a))


def test_large_merge_and_rank_deterministic():
    rng = np.random.default_rng(11)
    pool = rng.permutation(4 * 10**5)[:2 * 10**5].astype(np.int64)
    a, b = np.sort(pool[:10**5]), np.sort(pool[10**5:])
    outs = []
    for w in (1, 3, 8):
        with prim.num_workers(w):
            outs.append((prim.merge(a, b, 500), prim.rank(a, b, 500),
                         prim.difference(a, b[:5000], 500)))
    for m, r, d in outs[1:]:
        assert np.array_equal(m, outs[0][0])
        assert np.array_equal(r, outs[0][1])
        assert np.array_equal(d, outs[0][2])
    assert np.array_equal(outs[0][0], np.sort(pool))
    assert np.array_equal(outs[0][1], np.searchsorted(a, b, side="right"))
