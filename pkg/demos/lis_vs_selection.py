"""
Longest increasing subsequence vs the selection rule
====================================================

The top-down selection rule (keep both children at a plus node, keep the
bigger child at a minus node) produces an increasing subsequence without
ever looking at the permutation.  At moderate sizes its length tracks the
true LIS closely; this measures the gap and dumps diagram data for one
draw.
"""

import csv

import numpy as np

from permutons.subsequence import is_increasing, lis_patience
from permutons.trees import (
    lis_tree,
    sample_tree,
    selection_rule_tree,
    to_permutation,
)

rng = np.random.default_rng(2024)

ratios = []
for _ in range(50):
    tree = sample_tree(1 << 12, 0.5, rng)
    sel = selection_rule_tree(tree)
    perm = to_permutation(tree)
    assert is_increasing(perm, [r - 1 for r in sel])
    ratios.append(len(sel) / lis_tree(tree))
print(f"selection length / LIS over 50 trees at n=4096: "
      f"mean {np.mean(ratios):.4f}, min {min(ratios):.4f}")

# diagram data for one draw: the point cloud with both witnesses marked
tree = sample_tree(1 << 10, 0.5, rng)
perm = to_permutation(tree)
n = len(perm)
_, witness = lis_patience(perm)
on_lis = np.zeros(n + 1, dtype=bool)
on_lis[[w + 1 for w in witness]] = True
on_sel = np.zeros(n + 1, dtype=bool)
on_sel[selection_rule_tree(tree)] = True

vals = perm.values
with open("diagram_n1024.csv", "w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(["x", "y", "lis", "selection"])
    for i in range(1, n + 1):
        w.writerow([i / n, int(vals[i - 1]) / n,
                    int(on_lis[i]), int(on_sel[i])])
print(f"wrote diagram_n1024.csv ({n} points, "
      f"{int(on_lis.sum())} on the LIS, {int(on_sel.sum())} selected)")
