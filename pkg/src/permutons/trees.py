"""
trees.py
========
Signed plane binary trees: the exact finite-n combinatorial object behind
separable permutations and cographs.

A tree with n leaves and i.i.d. plus/minus signs on its n - 1 internal nodes
encodes a permutation (plus node: left block below right block; minus node:
left block above) and simultaneously a cograph (plus = join, minus = union,
leaves = vertices).  This module samples such trees uniformly over shapes,
reads off the permutation, and runs the exact dynamic programs for longest
increasing/decreasing subsequences, largest cliques/independent sets, and
the greedy keep-the-bigger-side selection rule with its discarding-rule
machinery.

Trees live in an index arena (parallel numpy arrays) and every traversal is
an explicit stack, so sizes like 2^18 leaves never touch the recursion
limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PLUS",
    "MINUS",
    "KEEP_LEFT_DISCARD_RIGHT",
    "KEEP_RIGHT_DISCARD_LEFT",
    "DIAMOND",
    "SignedBinaryTree",
    "Permutation",
    "DiscardingRule",
    "sample_tree",
    "validate_tree",
    "to_permutation",
    "lis_tree",
    "lds_tree",
    "clique_tree",
    "independent_tree",
    "cograph_edges",
    "selection_rule_tree",
    "discarding_rule_from_marked",
    "survivors",
    "tree_to_text",
    "tree_from_text",
]

PLUS = 1
MINUS = -1

# discarding-rule codes per minus node
KEEP_LEFT_DISCARD_RIGHT = 0
KEEP_RIGHT_DISCARD_LEFT = 1
DIAMOND = 2
_NO_ASSIGNMENT = -1


@dataclass
class SignedBinaryTree:
    """
    Plane binary tree with signed internal nodes, stored as an index arena.

    Attributes
    ----------
    left, right : int ndarray   Child ids; -1 at leaves.
    sign : int8 ndarray         PLUS or MINUS at internal nodes, 0 at leaves.
    leaf_count : int ndarray    Number of leaves under each node.
    leaf_rank : int ndarray     1..n at leaves in left-to-right order, 0 at
                                internal nodes.
    root : int                  Arena id of the root.
    n : int                     Leaf count; the arena holds 2n - 1 nodes.
    """

    left: np.ndarray
    right: np.ndarray
    sign: np.ndarray
    leaf_count: np.ndarray
    leaf_rank: np.ndarray
    root: int
    n: int

    def is_leaf(self, v):
        return self.left[v] < 0

    def postorder(self):
        """Arena ids with every internal node after both its children."""
        order = np.empty(2 * self.n - 1, dtype=np.int64)
        left, right = self.left, self.right
        stack = [(self.root, 0)]
        i = 0
        while stack:
            v, phase = stack.pop()
            if left[v] < 0 or phase == 1:
                order[i] = v
                i += 1
            else:
                stack.append((v, 1))
                stack.append((right[v], 0))
                stack.append((left[v], 0))
        return order


@dataclass
class Permutation:
    """One-line notation, 1-based: values[i] is the image of position i+1."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.int64)
        self.values = vals
        n = len(vals)
        if n and (vals.min() < 1 or vals.max() > n
                  or len(np.unique(vals)) != n):
            raise ValueError("not a bijection of 1..n")

    def __len__(self):
        return len(self.values)


@dataclass
class DiscardingRule:
    """
    Per-minus-node choice of which child subtree is discarded.

    assignment[v] is KEEP_LEFT_DISCARD_RIGHT, KEEP_RIGHT_DISCARD_LEFT, or
    DIAMOND at minus nodes (DIAMOND exactly when v sits strictly inside a
    subtree discarded higher up), and -1 everywhere else.
    """

    assignment: np.ndarray


# ====================================================================== #
# Sampling                                                               #
# ====================================================================== #

def sample_tree(n, p, rng):
    """
    Draw a uniformly-shaped signed plane binary tree with n leaves.

    The shape is grown by leaf insertion: step k picks one of the 2k - 1
    existing nodes and a side, and grafts a new leaf there, which makes all
    Catalan(n-1) shapes equally likely.  Signs are then i.i.d. PLUS with
    probability p on internal nodes.  Fully deterministic given (n, p) and
    the generator state.

    Parameters
    ----------
    n : int                  Leaf count, >= 1.
    p : float                PLUS probability, in [0, 1].
    rng : numpy Generator    Source of randomness.

    Returns
    -------
    SignedBinaryTree
    """
    if n < 1:
        raise ValueError("sample_tree: need n >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("sample_tree: p must lie in [0, 1]")

    size = 2 * n - 1
    left = [-1] * size
    right = [-1] * size
    parent = [-1] * size
    root = 0
    # one uniform per insertion encodes (node, side); float grid bias 2^-53
    picks = rng.random(n - 1) if n > 1 else np.empty(0)
    for k in range(1, n):
        m = 2 * k - 1
        r = int(picks[k - 1] * (2 * m))
        v, side = r >> 1, r & 1
        u = 2 * k - 1
        w = 2 * k
        pv = parent[v]
        if pv >= 0:
            if left[pv] == v:
                left[pv] = u
            else:
                right[pv] = u
        else:
            root = u
        parent[u] = pv
        if side == 0:
            left[u], right[u] = w, v
        else:
            left[u], right[u] = v, w
        parent[v] = u
        parent[w] = u

    left = np.asarray(left, dtype=np.int64)
    right = np.asarray(right, dtype=np.int64)

    leaf_count = np.zeros(size, dtype=np.int64)
    leaf_rank = np.zeros(size, dtype=np.int64)
    sign = np.zeros(size, dtype=np.int8)
    if n > 1:
        plus_draws = rng.random(n - 1) < p
        internal_ids = np.arange(1, size, 2)
        sign[internal_ids] = np.where(plus_draws, PLUS, MINUS)

    # single traversal: in-order leaf ranks, post-order leaf counts
    rank = 0
    stack = [(root, 0)]
    while stack:
        v, phase = stack.pop()
        if left[v] < 0:
            rank += 1
            leaf_rank[v] = rank
            leaf_count[v] = 1
        elif phase == 0:
            stack.append((v, 1))
            stack.append((right[v], 0))
            stack.append((left[v], 0))
        else:
            leaf_count[v] = leaf_count[left[v]] + leaf_count[right[v]]

    return SignedBinaryTree(left=left, right=right, sign=sign,
                            leaf_count=leaf_count, leaf_rank=leaf_rank,
                            root=root, n=n)


def validate_tree(tree):
    """Check every structural invariant; raises ValueError on violation."""
    n = tree.n
    size = 2 * n - 1
    for arr in (tree.left, tree.right, tree.sign, tree.leaf_count,
                tree.leaf_rank):
        if len(arr) != size:
            raise ValueError("arena size mismatch")
    leaf_mask = tree.left < 0
    if leaf_mask.sum() != n:
        raise ValueError("wrong number of leaves")
    if ((tree.right < 0) != leaf_mask).any():
        raise ValueError("half-leaf node")
    if np.any(tree.sign[leaf_mask] != 0):
        raise ValueError("sign on a leaf")
    if np.any((tree.sign[~leaf_mask] != PLUS)
              & (tree.sign[~leaf_mask] != MINUS)):
        raise ValueError("unsigned internal node")

    seen = np.zeros(size, dtype=bool)
    rank = 0
    count = np.zeros(size, dtype=np.int64)
    stack = [(tree.root, 0)]
    visits = 0
    while stack:
        v, phase = stack.pop()
        if phase == 0 and seen[v]:
            raise ValueError("node reached twice")
        if leaf_mask[v]:
            visits += 1
            seen[v] = True
            rank += 1
            if tree.leaf_rank[v] != rank:
                raise ValueError("leaf ranks out of order")
            count[v] = 1
        elif phase == 0:
            seen[v] = True
            visits += 1
            stack.append((v, 1))
            stack.append((tree.right[v], 0))
            stack.append((tree.left[v], 0))
        else:
            count[v] = count[tree.left[v]] + count[tree.right[v]]
    if visits != size:
        raise ValueError("arena contains unreachable nodes")
    if np.any(count != tree.leaf_count):
        raise ValueError("cached leaf counts wrong")
    if tree.leaf_count[tree.root] != n:
        raise ValueError("root leaf count wrong")


# ====================================================================== #
# Permutation and dynamic programs                                       #
# ====================================================================== #

def to_permutation(tree):
    """
    Permutation encoded by the signed tree.

    Each subtree owns a contiguous block of values.  A PLUS node hands its
    left child the low half of its block, so left-subtree values sit below
    right-subtree values; a MINUS node hands the left child the high half.
    """
    values = np.empty(tree.n, dtype=np.int64)
    left, right, sign, lc = tree.left, tree.right, tree.sign, tree.leaf_count
    stack = [(tree.root, 1)]
    while stack:
        v, lo = stack.pop()
        if left[v] < 0:
            values[tree.leaf_rank[v] - 1] = lo
        elif sign[v] == PLUS:
            stack.append((left[v], lo))
            stack.append((right[v], lo + lc[left[v]]))
        else:
            stack.append((left[v], lo + lc[right[v]]))
            stack.append((right[v], lo))
    return Permutation(values=values)


def lis_tree(tree):
    """
    Longest increasing subsequence of to_permutation(tree), by tree DP.

    Increasing runs concatenate across a PLUS node but cannot cross a MINUS
    node, so: leaf 1, PLUS sum, MINUS max.
    """
    dp = np.empty(2 * tree.n - 1, dtype=np.int64)
    left, right, sign = tree.left, tree.right, tree.sign
    for v in tree.postorder():
        if left[v] < 0:
            dp[v] = 1
        elif sign[v] == PLUS:
            dp[v] = dp[left[v]] + dp[right[v]]
        else:
            dp[v] = max(dp[left[v]], dp[right[v]])
    return int(dp[tree.root])


def lds_tree(tree):
    """Longest decreasing subsequence: the sign-swapped dual DP."""
    dp = np.empty(2 * tree.n - 1, dtype=np.int64)
    left, right, sign = tree.left, tree.right, tree.sign
    for v in tree.postorder():
        if left[v] < 0:
            dp[v] = 1
        elif sign[v] == MINUS:
            dp[v] = dp[left[v]] + dp[right[v]]
        else:
            dp[v] = max(dp[left[v]], dp[right[v]])
    return int(dp[tree.root])


def clique_tree(tree):
    """
    Largest clique of the cograph encoded by the tree.

    Vertices i, j are adjacent iff the sign at their leaves' lowest common
    ancestor is PLUS, so a PLUS node is a graph join (cliques merge) and a
    MINUS node a disjoint union (take the better side).
    """
    omega = np.empty(2 * tree.n - 1, dtype=np.int64)
    left, right, sign = tree.left, tree.right, tree.sign
    for v in tree.postorder():
        if left[v] < 0:
            omega[v] = 1
        elif sign[v] == PLUS:
            omega[v] = omega[left[v]] + omega[right[v]]
        else:
            omega[v] = max(omega[left[v]], omega[right[v]])
    return int(omega[tree.root])


def independent_tree(tree):
    """Largest independent set of the encoded cograph (dual of clique)."""
    alpha = np.empty(2 * tree.n - 1, dtype=np.int64)
    left, right, sign = tree.left, tree.right, tree.sign
    for v in tree.postorder():
        if left[v] < 0:
            alpha[v] = 1
        elif sign[v] == MINUS:
            alpha[v] = alpha[left[v]] + alpha[right[v]]
        else:
            alpha[v] = max(alpha[left[v]], alpha[right[v]])
    return int(alpha[tree.root])


def cograph_edges(tree, cap=4096):
    """
    Edge list of the encoded cograph: (i, j) with i < j iff the LCA of
    leaves i and j carries PLUS.  One bottom-up pass over leaf-rank lists
    (output is size Theta(n^2), hence the cap).
    """
    if tree.n > cap:
        raise ValueError(f"cograph_edges: n={tree.n} exceeds cap {cap}")
    edges = []
    leaves = {}
    left, right, sign = tree.left, tree.right, tree.sign
    for v in tree.postorder():
        if left[v] < 0:
            leaves[v] = [int(tree.leaf_rank[v])]
        else:
            ls = leaves.pop(left[v])
            rs = leaves.pop(right[v])
            if sign[v] == PLUS:
                # in-order ranks make every left leaf smaller
                for i in ls:
                    for j in rs:
                        edges.append((i, j))
            ls.extend(rs)
            leaves[v] = ls
    return edges


# ====================================================================== #
# Selection and discarding rules                                         #
# ====================================================================== #

def selection_rule_tree(tree):
    """
    Leaf ranks kept by the keep-the-bigger-side rule.

    Top down: PLUS nodes keep both children; a MINUS node keeps only the
    child with more leaves (left on a tie) and discards the other subtree
    entirely.  The survivors' values are increasing and there are at most
    lis_tree(tree) of them.
    """
    left, right, sign, lc = tree.left, tree.right, tree.sign, tree.leaf_count
    out = []
    stack = [tree.root]
    while stack:
        v = stack.pop()
        if left[v] < 0:
            out.append(int(tree.leaf_rank[v]))
        elif sign[v] == PLUS:
            stack.append(right[v])
            stack.append(left[v])
        elif lc[left[v]] >= lc[right[v]]:
            stack.append(left[v])
        else:
            stack.append(right[v])
    return out


def discarding_rule_from_marked(tree, marked):
    """
    Discarding rule under which every marked leaf survives.

    At each minus node outside discarded territory: discard the unmarked
    side (left, arbitrarily, when neither side is marked).  Minus nodes
    strictly inside a discarded subtree get DIAMOND.  The marked ranks must
    induce an increasing subsequence, i.e. no minus node may see marks on
    both sides.
    """
    size = 2 * tree.n - 1
    left, right, sign = tree.left, tree.right, tree.sign
    marked_set = set(int(r) for r in marked)

    has_mark = np.zeros(size, dtype=bool)
    for v in tree.postorder():
        if left[v] < 0:
            has_mark[v] = int(tree.leaf_rank[v]) in marked_set
        else:
            has_mark[v] = has_mark[left[v]] or has_mark[right[v]]
            if sign[v] == MINUS and has_mark[left[v]] and has_mark[right[v]]:
                raise ValueError(
                    "marked leaves straddle a minus node: not increasing"
                )

    assignment = np.full(size, _NO_ASSIGNMENT, dtype=np.int8)
    stack = [(tree.root, False)]
    while stack:
        v, discarded = stack.pop()
        if left[v] < 0:
            continue
        if sign[v] == MINUS:
            if discarded:
                assignment[v] = DIAMOND
                stack.append((left[v], True))
                stack.append((right[v], True))
                continue
            if has_mark[left[v]]:
                assignment[v] = KEEP_LEFT_DISCARD_RIGHT
                stack.append((left[v], False))
                stack.append((right[v], True))
            else:
                # marked on the right, or nowhere: discard left either way
                assignment[v] = KEEP_RIGHT_DISCARD_LEFT
                stack.append((left[v], True))
                stack.append((right[v], False))
        else:
            stack.append((left[v], discarded))
            stack.append((right[v], discarded))
    return DiscardingRule(assignment=assignment)


def survivors(tree, rule):
    """
    Leaf ranks not contained in any subtree the rule discards.

    The rule must assign exactly the tree's minus nodes; DIAMOND nodes are
    unreachable from the root through kept edges, so meeting one means the
    rule does not belong to this tree.
    """
    assignment = rule.assignment
    if len(assignment) != 2 * tree.n - 1:
        raise ValueError("rule arena size does not match tree")
    minus_nodes = (tree.sign == MINUS)
    if np.any((assignment != _NO_ASSIGNMENT) != minus_nodes):
        raise ValueError("rule assigns nodes that are not minus nodes")

    left, right, sign = tree.left, tree.right, tree.sign
    out = []
    stack = [tree.root]
    while stack:
        v = stack.pop()
        if left[v] < 0:
            out.append(int(tree.leaf_rank[v]))
        elif sign[v] == PLUS:
            stack.append(right[v])
            stack.append(left[v])
        else:
            code = assignment[v]
            if code == KEEP_LEFT_DISCARD_RIGHT:
                stack.append(left[v])
            elif code == KEEP_RIGHT_DISCARD_LEFT:
                stack.append(right[v])
            else:
                raise ValueError("reached a DIAMOND node from the root")
    return out


# ====================================================================== #
# Debug serialization                                                    #
# ====================================================================== #

def tree_to_text(tree):
    """Nested form like ``((1,2)-,3)+``; leaves print their ranks."""
    left, right, sign = tree.left, tree.right, tree.sign
    out = []
    # phase 0: descend left; 1: comma + right; 2: close + sign
    stack = [(tree.root, 0)]
    while stack:
        v, phase = stack.pop()
        if left[v] < 0:
            out.append(str(int(tree.leaf_rank[v])))
        elif phase == 0:
            out.append("(")
            stack.append((v, 1))
            stack.append((left[v], 0))
        elif phase == 1:
            out.append(",")
            stack.append((v, 2))
            stack.append((right[v], 0))
        else:
            out.append(")")
            out.append("+" if sign[v] == PLUS else "-")
    return "".join(out)


def tree_from_text(text):
    """Parse the ``tree_to_text`` form; ranks must read 1..n left-to-right."""
    pos = 0

    def parse():
        nonlocal pos
        if text[pos] == "(":
            pos += 1
            l = parse()
            if text[pos] != ",":
                raise ValueError(f"expected ',' at {pos}")
            pos += 1
            r = parse()
            if text[pos] != ")":
                raise ValueError(f"expected ')' at {pos}")
            pos += 1
            if text[pos] not in "+-":
                raise ValueError(f"expected sign at {pos}")
            s = PLUS if text[pos] == "+" else MINUS
            pos += 1
            return ("node", l, r, s)
        start = pos
        while pos < len(text) and text[pos].isdigit():
            pos += 1
        if pos == start:
            raise ValueError(f"expected leaf rank at {pos}")
        return ("leaf", int(text[start:pos]))

    spec = parse()
    if pos != len(text):
        raise ValueError("trailing characters after tree")

    left, right, sign, leaf_rank = [], [], [], []

    def build(node):
        if node[0] == "leaf":
            left.append(-1)
            right.append(-1)
            sign.append(0)
            leaf_rank.append(node[1])
            return len(left) - 1
        l = build(node[1])
        r = build(node[2])
        left.append(l)
        right.append(r)
        sign.append(node[3])
        leaf_rank.append(0)
        return len(left) - 1

    root = build(spec)
    n = sum(1 for x in left if x < 0)
    tree = SignedBinaryTree(
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        sign=np.asarray(sign, dtype=np.int8),
        leaf_count=np.zeros(len(left), dtype=np.int64),
        leaf_rank=np.asarray(leaf_rank, dtype=np.int64),
        root=root,
        n=n,
    )
    for v in tree.postorder():
        tree.leaf_count[v] = 1 if tree.left[v] < 0 else (
            tree.leaf_count[tree.left[v]] + tree.leaf_count[tree.right[v]]
        )
    validate_tree(tree)
    return tree
