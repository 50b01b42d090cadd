"""
Cographs from signed trees, and cross-checking the two samplers
===============================================================

The same signed tree that encodes a permutation also encodes a cograph:
leaves are vertices and two of them are adjacent exactly when the sign at
their lowest common ancestor is plus.  Cliques in that graph are increasing
subsequences in the permutation, so the two size statistics agree tree by
tree.  The second half runs the built-in cross-validation experiment that
compares small-pattern frequencies between the tree sampler and the
excursion sampler.
"""

import numpy as np

from permutons.experiments import ExperimentConfig, run_cross_validate
from permutons.trees import (
    clique_tree,
    cograph_edges,
    independent_tree,
    lds_tree,
    lis_tree,
    sample_tree,
)

rng = np.random.default_rng(5)

tree = sample_tree(8, 0.5, rng)
edges = cograph_edges(tree)
print(f"n=8 cograph: {len(edges)} edges of {8 * 7 // 2} possible")
print("edges:", sorted(edges))

# clique number == LIS and independence number == LDS, checked per tree
for _ in range(200):
    t = sample_tree(int(rng.integers(2, 200)), float(rng.random()), rng)
    assert clique_tree(t) == lis_tree(t)
    assert independent_tree(t) == lds_tree(t)
print("clique==LIS and independent==LDS on 200 random trees")

# pattern-frequency agreement between the two samplers at length 3
config = ExperimentConfig(
    kind="cross_validate",
    p=0.5,
    sizes=(3,),
    reps=20000,
    master_seed=5,
)
report = run_cross_validate(config)
block = report.extra["per_size"]["3"]
print()
print("pattern   tree route   excursion route")
for pat, a, b in zip(block["patterns"], block["tree_counts"],
                     block["excursion_counts"]):
    print(f"{pat:<9} {a:>10}   {b:>15}")
print(f"chi-square between routes: stat {block['chi2_between']:.2f}, "
      f"p-value {block['pvalue_between']:.3f}")
print(f"against the exact law: tree p-value "
      f"{block['pvalue_tree_vs_exact']:.3f}, excursion p-value "
      f"{block['pvalue_excursion_vs_exact']:.3f}")
