import numpy as np

from pbist import OracleSet, oracle_contains_batched, oracle_insert_batched, oracle_remove_batched


def test_contains_examples():
    assert oracle_contains_batched(OracleSet(), [1, 2]).tolist() == [False, False]
    s = OracleSet([1, 3, 5, 7, 9])
    assert oracle_contains_batched(s, [2, 3, 6, 7, 9]).tolist() == [False, True, False, True, True]


def test_insert_examples():
    s = OracleSet([1, 3])
    assert oracle_insert_batched(s, [1, 2]) == 1
    assert s.keys.tolist() == [1, 2, 3]
    s = OracleSet()
    assert oracle_insert_batched(s, [5]) == 1 and s.keys.tolist() == [5]


def test_remove_examples():
    s = OracleSet([1, 2, 3])
    assert oracle_remove_batched(s, [2, 9]) == 1
    assert s.keys.tolist() == [1, 3]
    assert oracle_remove_batched(OracleSet(), [1]) == 0


def test_against_python_set():
    rng = np.random.default_rng(9)
    s, ref = OracleSet(), set()
    for _ in range(300):
        batch = np.unique(rng.integers(-200, 200, rng.integers(0, 60)))
        op = rng.integers(3)
        if op == 0:
            assert oracle_insert_batched(s, batch) == len(set(batch.tolist()) - ref)
            ref |= set(batch.tolist())
        elif op == 1:
            assert oracle_remove_batched(s, batch) == len(set(batch.tolist()) & ref)
            ref -= set(batch.tolist())
        else:
            assert oracle_contains_batched(s, batch).tolist() == [x in ref for x in batch.tolist()]
        assert s.keys.tolist() == sorted(ref)
        assert len(s) == len(ref)
    assert all(x in s for x in ref)
