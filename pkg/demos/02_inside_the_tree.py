"""What a tree looks like inside, and how it keeps itself shallow."""

import numpy as np

from pbist import Config, Tree, height, insert_batched, is_ideally_balanced, remove_batched, validate

# 25 keys with leaves of at most 4: the root takes every 4th key as a separator
cfg = Config(leaf_threshold=4)
tree = Tree.from_sorted(np.arange(25) * 10, cfg)
root = tree.root
print(root.rep)                                   # [40 80 120 160]
print([c.rep.tolist() for c in root.children])    # last child is an inner node again

# the interpolation index: slot i holds the rank of the i-th grid point
idx = root.id_index
print(idx.lower_bound, idx.upper_bound, idx.slot_count, idx.slots)

# removal only clears a flag; the key stays in place as a separator
remove_batched(tree, np.array([80]))
print(root.rep, root.exists)
insert_batched(tree, np.array([80]))              # and insertion flips it back
print(root.exists, is_ideally_balanced(tree.root, cfg))

# a million random keys: a handful of levels
rng = np.random.default_rng(0)
big = Tree.from_sorted(np.unique(rng.integers(-2**62, 2**62, 10**6)))
print("height", height(big.root), "ideal", is_ideally_balanced(big.root))

# hammer one spot; subtrees that absorb more than C times their size get rebuilt
spot = Tree.from_sorted(np.arange(1, 1001) * 2**40)
for hi in range(2**40, 2**40 - 50000, -100):
    insert_batched(spot, np.arange(hi - 100, hi))
print("after 50k inserts into one gap: size", len(spot), "height", height(spot.root))
print("violations", validate(spot.root, spot.config))
