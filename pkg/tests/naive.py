"""Slow reference implementations used as oracles by the test suite.

Everything here is written from first principles on top of the plain
parent and child arrays, so the fast library code is checked against
independent logic rather than against itself.
"""

from itertools import combinations


def root_path(tree, v):
    """Nodes from v up to the root, inclusive."""
    path = [v]
    while tree.parent[v] >= 0:
        v = tree.parent[v]
        path.append(v)
    return path


def naive_lca(tree, u, v):
    on_path = set(root_path(tree, u))
    for node in root_path(tree, v):
        if node in on_path:
            return node
    raise AssertionError("nodes share no ancestor")


def naive_is_ancestor(tree, a, v):
    return a in root_path(tree, v)


def naive_leaves_below(tree, v):
    return sorted(u for u in range(tree.n_nodes)
                  if tree.left[u] < 0 and naive_is_ancestor(tree, v, u))


def path_nodes(tree, u, v):
    """All nodes on the path between two nodes, endpoints included."""
    a = naive_lca(tree, u, v)
    out = {a}
    for w in (u, v):
        while w != a:
            out.add(w)
            w = tree.parent[w]
    return out


def naive_cherry(pair, t, x, y, z):
    """The two leaves of the triple that meet strictly deepest."""
    tree = pair.tree(t)
    nodes = {i: pair.leaf_node(t, i) for i in (x, y, z)}
    best = None
    best_depth = -1
    for a, b in combinations((x, y, z), 2):
        d = tree.depth[naive_lca(tree, nodes[a], nodes[b])]
        if d > best_depth:
            best_depth = d
            best = frozenset((a, b))
    return best


def naive_triple_compatible(pair, a, b, c):
    return naive_cherry(pair, 1, a, b, c) == naive_cherry(pair, 2, a, b, c)


def naive_set_compatible(pair, leaves):
    leaves = sorted(set(leaves))
    return all(naive_triple_compatible(pair, a, b, c)
               for a, b, c in combinations(leaves, 3))


def naive_spanned(pair, t, leaves):
    """Union of all pairwise leaf paths, as tree node ids."""
    tree = pair.tree(t)
    nodes = [pair.leaf_node(t, i) for i in leaves]
    out = set(nodes)
    for u, v in combinations(nodes, 2):
        out |= path_nodes(tree, u, v)
    return out


def naive_feasible(pair, blocks):
    """Agreement forest test: compatibility plus pairwise disjoint spans."""
    blocks = [sorted(set(b)) for b in blocks]
    flat = sorted(x for b in blocks for x in b)
    assert flat == list(range(pair.n)), "blocks must partition the leaves"
    for b in blocks:
        if not naive_set_compatible(pair, b):
            return False
    spans = [(naive_spanned(pair, 1, b), naive_spanned(pair, 2, b))
             for b in blocks]
    for (s1a, s2a), (s1b, s2b) in combinations(spans, 2):
        if s1a & s1b or s2a & s2b:
            return False
    return True


def all_partitions(items):
    """Every set partition of the items, one at a time."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for smaller in all_partitions(rest):
        for i in range(len(smaller)):
            yield smaller[:i] + [[first] + smaller[i]] + smaller[i + 1:]
        yield [[first]] + smaller


def naive_exact_maf(pair):
    """Minimum cuts over every partition; exponential, for tiny n only."""
    best = pair.n - 1
    for blocks in all_partitions(range(pair.n)):
        if len(blocks) - 1 < best and naive_feasible(pair, blocks):
            best = len(blocks) - 1
    return best


def naive_compatible_sets(pair, min_size=1):
    """Every compatible leaf subset, as sorted tuples of leaf indices."""
    out = []
    for size in range(min_size, pair.n + 1):
        for subset in combinations(range(pair.n), size):
            if naive_set_compatible(pair, subset):
                out.append(subset)
    return out
