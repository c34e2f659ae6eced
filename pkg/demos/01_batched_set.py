"""A sorted set of int64 keys, queried and updated a batch at a time."""

import numpy as np

from pbist import Tree, contains_batched, insert_batched, normalize_batch, remove_batched

tree = Tree.from_sorted(np.array([1, 3, 5, 7, 9]))  # keys must be strictly increasing
print(len(tree), tree.to_array())

# batches are strictly increasing too; normalize_batch sorts and drops duplicates
probe = normalize_batch([9, 2, 7, 3, 6, 3])
print(probe, contains_batched(tree, probe))

# insert returns how many keys were actually new (5 and 7 already exist)
print("inserted", insert_batched(tree, np.array([2, 4, 5, 7, 8])))
print(tree.to_array())

print("removed", remove_batched(tree, np.array([2, 3, 6, 7, 9])))  # 6 was never there
print(tree.to_array())

# the usual set algebra falls out of the three operations
a = np.arange(0, 30, 3)
b = np.arange(0, 30, 5)
t = Tree.from_sorted(a)
print("a & b", b[contains_batched(t, b)])
insert_batched(t, b)
print("a | b", t.to_array())
t = Tree.from_sorted(a)
remove_batched(t, b)
print("a - b", t.to_array())

# scalar membership works as well
print(4 in tree, 5 in tree)
