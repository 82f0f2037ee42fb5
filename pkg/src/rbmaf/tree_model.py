"""Rooted binary trees with constant-time lowest common ancestors.

A tree is stored as parallel arrays indexed by node id.  Ids follow a
left-to-right post-order walk, so every child id is smaller than its
parent id, the root is the largest id, and the subtree of node ``v`` is
exactly the contiguous id range ``[subtree_min[v], v]``.  Leaves carry
string labels; internal labels and branch lengths in Newick input are
parsed and discarded.

A :class:`TreePair` binds two trees over the same label set to a shared
dense leaf indexing (labels sorted lexicographically, indices 0..n-1)
and is the handle passed to every algorithm in this package.  The
compatibility and overlap predicates at the bottom of the module define
which leaf sets can survive together inside one agreement component:

* a leaf set is compatible when both trees induce the same shape on it,
  which for binary trees reduces to every leaf triple resolving to the
  same cherry pair in both trees;
* two leaf sets overlap when the node sets spanned by their pairwise
  leaf paths intersect in either tree.
"""

from __future__ import annotations

from bisect import bisect_left


RHO_LABEL = "rho"

_RESERVED = "(),;:"


class NewickError(ValueError):
    """Malformed or unsupported Newick input."""


class InvariantError(RuntimeError):
    """A structural invariant the algorithms guarantee was violated."""


class OracleCapError(ValueError):
    """An exponential-time oracle was asked to exceed its size cap."""


class RootedBinaryTree:
    """A rooted, strictly binary tree over labeled leaves.

    Attributes
    ----------
    n_nodes, n_leaves : int
    root : int
        Always ``n_nodes - 1`` (post-order ids).
    parent, left, right : list[int]
        Node arrays; ``-1`` marks "no parent" or "leaf".
    labels : list[str | None]
        Leaf labels, ``None`` on internal nodes.
    depth : list[int]
        Root has depth 0.
    subtree_min : list[int]
        Smallest id in each node's subtree; ancestry tests are two
        integer comparisons.
    leaf_ids : list[int]
        Leaf node ids in ascending order, which is also left-to-right
        order in the tree.
    """

    __slots__ = (
        "n_nodes", "n_leaves", "root", "parent", "left", "right",
        "labels", "depth", "subtree_min", "leaf_ids", "_min_label",
        "_euler", "_edepth", "_first", "_sparse", "_log",
    )

    def __init__(self, parent, left, right, labels):
        n = len(parent)
        if n == 0:
            raise NewickError("empty tree")
        self.n_nodes = n
        self.root = n - 1
        self.parent = parent
        self.left = left
        self.right = right
        self.labels = labels
        self.leaf_ids = [v for v in range(n) if left[v] < 0]
        self.n_leaves = len(self.leaf_ids)
        seen = set()
        for v in self.leaf_ids:
            lab = labels[v]
            if not lab:
                raise NewickError("leaf without a label")
            if lab in seen:
                raise NewickError("duplicate leaf label %r" % lab)
            seen.add(lab)

        depth = [0] * n
        for v in range(n - 2, -1, -1):
            depth[v] = depth[parent[v]] + 1
        self.depth = depth

        smin = list(range(n))
        for v in range(n):
            if left[v] >= 0:
                smin[v] = smin[left[v]]
        self.subtree_min = smin

        self._min_label = None
        self._build_lca()

    def _build_lca(self):
        # Euler tour plus a sparse table of depth-minimum positions.
        n = self.n_nodes
        left, right, depth = self.left, self.right, self.depth
        euler = []
        edepth = []
        first = [-1] * n
        stack = [(self.root, 0)]
        while stack:
            v, state = stack.pop()
            if first[v] < 0:
                first[v] = len(euler)
            euler.append(v)
            edepth.append(depth[v])
            if state == 0 and left[v] >= 0:
                stack.append((v, 1))
                stack.append((left[v], 0))
            elif state == 1:
                stack.append((v, 2))
                stack.append((right[v], 0))
        self._euler = euler
        self._edepth = edepth
        self._first = first

        m = len(euler)
        log = [0] * (m + 1)
        for i in range(2, m + 1):
            log[i] = log[i >> 1] + 1
        self._log = log
        sparse = [list(range(m))]
        j = 1
        while (1 << j) <= m:
            prev = sparse[-1]
            half = 1 << (j - 1)
            width = m - (1 << j) + 1
            cur = [0] * width
            for i in range(width):
                a = prev[i]
                b = prev[i + half]
                cur[i] = a if edepth[a] <= edepth[b] else b
            sparse.append(cur)
            j += 1
        self._sparse = sparse

    def is_leaf(self, v):
        return self.left[v] < 0

    def lca(self, u, v):
        """Lowest common ancestor of nodes u and v in O(1)."""
        if u == v:
            return u
        a = self._first[u]
        b = self._first[v]
        if a > b:
            a, b = b, a
        k = self._log[b - a + 1]
        x = self._sparse[k][a]
        y = self._sparse[k][b - (1 << k) + 1]
        return self._euler[x] if self._edepth[x] <= self._edepth[y] else self._euler[y]

    def is_ancestor(self, a, v):
        """True when a is v or an ancestor of v."""
        return self.subtree_min[a] <= v <= a

    def leaves_below(self, v):
        """Leaf node ids inside the subtree of v, left to right."""
        ids = self.leaf_ids
        lo = bisect_left(ids, self.subtree_min[v])
        hi = bisect_left(ids, v + 1)
        return ids[lo:hi]

    def min_labels(self):
        """Smallest leaf label in each node's subtree (cached)."""
        if self._min_label is None:
            ml = [None] * self.n_nodes
            left, right, labels = self.left, self.right, self.labels
            for v in range(self.n_nodes):
                if left[v] < 0:
                    ml[v] = labels[v]
                else:
                    a, b = ml[left[v]], ml[right[v]]
                    ml[v] = a if a <= b else b
            self._min_label = ml
        return self._min_label

    def to_newick(self, canonical=False):
        """Serialize; canonical mode orders children by smallest leaf label."""
        parts = [None] * self.n_nodes
        ml = self.min_labels() if canonical else None
        left, right, labels = self.left, self.right, self.labels
        for v in range(self.n_nodes):
            l = left[v]
            if l < 0:
                parts[v] = labels[v]
            else:
                r = right[v]
                if canonical and ml[r] < ml[l]:
                    l, r = r, l
                parts[v] = "(%s,%s)" % (parts[l], parts[r])
        return parts[self.root] + ";"

    def with_root_sibling(self, label):
        """New tree with a fresh root whose children are a new leaf and this tree."""
        if label in set(self.labels) - {None}:
            raise NewickError("label %r already present" % label)
        return parse_newick("(%s,%s);" % (label, self.to_newick()[:-1]))


def parse_newick(text):
    """Parse a Newick string into a :class:`RootedBinaryTree`.

    Every internal node must have exactly two children.  Leaf labels
    are any run of characters outside ``(),;:`` and whitespace.
    Internal labels and ``:length`` suffixes are accepted and ignored.
    """
    s = text.strip()
    if not s:
        raise NewickError("empty input")
    if s.endswith(";"):
        s = s[:-1].rstrip()
    end = len(s)

    def read_name(i):
        j = i
        while j < end and s[j] not in _RESERVED and not s[j].isspace():
            j += 1
        return s[i:j], j

    def skip_length(i):
        if i < end and s[i] == ":":
            i += 1
            j = i
            while j < end and (s[j].isdigit() or s[j] in ".+-eE"):
                j += 1
            try:
                float(s[i:j])
            except ValueError:
                raise NewickError("bad branch length at offset %d" % i) from None
            return j
        return i

    stack = [[]]
    i = 0
    while i < end:
        c = s[i]
        if c.isspace() or c == ",":
            i += 1
        elif c == "(":
            stack.append([])
            i += 1
        elif c == ")":
            kids = stack.pop()
            if not stack:
                raise NewickError("unbalanced ')'")
            if len(kids) != 2:
                raise NewickError(
                    "internal node with %d children, need exactly 2" % len(kids))
            i += 1
            _, i = read_name(i)
            i = skip_length(i)
            stack[-1].append((None, kids))
        elif c in ";:":
            raise NewickError("unexpected %r at offset %d" % (c, i))
        else:
            name, i = read_name(i)
            if not name:
                raise NewickError("expected a leaf label at offset %d" % i)
            i = skip_length(i)
            stack[-1].append((name, None))
    if len(stack) != 1:
        raise NewickError("unbalanced '('")
    if len(stack[0]) != 1:
        raise NewickError("expected a single root")

    # Iterative post-order id assignment over the nested (label, kids) pairs.
    parent, left, right, labels = [], [], [], []
    count = 0
    work = [[stack[0][0], []]]
    while work:
        node, got = work[-1]
        name, kids = node
        if kids is not None and len(got) < 2:
            work.append([kids[len(got)], []])
            continue
        nid = count
        count += 1
        parent.append(-1)
        if kids is None:
            left.append(-1)
            right.append(-1)
            labels.append(name)
        else:
            l, r = got
            left.append(l)
            right.append(r)
            labels.append(None)
            parent[l] = nid
            parent[r] = nid
        work.pop()
        if work:
            work[-1][1].append(nid)
    return RootedBinaryTree(parent, left, right, labels)


class TreePair:
    """Two rooted binary trees over one label set with shared leaf indices.

    Leaf index ``i`` refers to ``labels[i]`` where ``labels`` is the
    lexicographically sorted label list.  ``leaf_node1[i]`` and
    ``leaf_node2[i]`` give the node ids of that leaf in each tree, and
    ``leaf_index1`` / ``leaf_index2`` invert the maps (``-1`` on
    internal nodes).
    """

    __slots__ = ("t1", "t2", "labels", "n", "index_of",
                 "leaf_node1", "leaf_node2", "leaf_index1", "leaf_index2",
                 "has_rho")

    def __init__(self, t1, t2, has_rho=False):
        lab1 = {t1.labels[v] for v in t1.leaf_ids}
        lab2 = {t2.labels[v] for v in t2.leaf_ids}
        if lab1 != lab2:
            raise NewickError("trees carry different label sets")
        self.t1 = t1
        self.t2 = t2
        self.labels = sorted(lab1)
        self.n = len(self.labels)
        self.index_of = {lab: i for i, lab in enumerate(self.labels)}
        node_of_1 = {t1.labels[v]: v for v in t1.leaf_ids}
        node_of_2 = {t2.labels[v]: v for v in t2.leaf_ids}
        self.leaf_node1 = [node_of_1[lab] for lab in self.labels]
        self.leaf_node2 = [node_of_2[lab] for lab in self.labels]
        self.leaf_index1 = [-1] * t1.n_nodes
        self.leaf_index2 = [-1] * t2.n_nodes
        for i in range(self.n):
            self.leaf_index1[self.leaf_node1[i]] = i
            self.leaf_index2[self.leaf_node2[i]] = i
        self.has_rho = has_rho

    def tree(self, t):
        if t == 1:
            return self.t1
        if t == 2:
            return self.t2
        raise ValueError("tree index must be 1 or 2")

    def leaf_node(self, t, i):
        return self.leaf_node1[i] if t == 1 else self.leaf_node2[i]

    def leaf_nodes(self, t):
        return self.leaf_node1 if t == 1 else self.leaf_node2

    def lca(self, t, u, v):
        return self.tree(t).lca(u, v)

    def lca_of_leaves(self, t, leaves):
        """Fold lca over a nonempty collection of leaf indices."""
        tree = self.tree(t)
        nodes = self.leaf_nodes(t)
        it = iter(leaves)
        m = nodes[next(it)]
        for x in it:
            m = tree.lca(m, nodes[x])
        return m

    def labels_of(self, leaves):
        return tuple(sorted(self.labels[i] for i in leaves))


def make_pair(t1, t2, add_rho=False):
    """Validate and pair two trees; optionally graft a shared extra root leaf.

    With ``add_rho`` both trees get a new root whose children are a leaf
    labeled ``rho`` and the old root, which reduces distance-style inputs
    to plain agreement-forest inputs.
    """
    if add_rho:
        t1 = t1.with_root_sibling(RHO_LABEL)
        t2 = t2.with_root_sibling(RHO_LABEL)
        return TreePair(t1, t2, has_rho=True)
    return TreePair(t1, t2)


def pair_from_newick(s1, s2, add_rho=False):
    return make_pair(parse_newick(s1), parse_newick(s2), add_rho=add_rho)


def _cherry(tree, x, y, z):
    """Index (0, 1 or 2) of the triple member outside the cherry pair.

    In a strictly binary tree exactly one of the three pairwise lcas
    lies strictly below the other two, which are equal.
    """
    lxy = tree.lca(x, y)
    lxz = tree.lca(x, z)
    lyz = tree.lca(y, z)
    d = tree.depth
    dxy, dxz, dyz = d[lxy], d[lxz], d[lyz]
    if dxy > dxz and dxy > dyz:
        return 2
    if dxz > dxy and dxz > dyz:
        return 1
    if dyz > dxy and dyz > dxz:
        return 0
    raise InvariantError("triple without a unique cherry pair")


def triple_compatible(pair, a, b, c):
    """True when leaf indices a, b, c resolve to the same cherry in both trees."""
    x1, y1, z1 = pair.leaf_node1[a], pair.leaf_node1[b], pair.leaf_node1[c]
    x2, y2, z2 = pair.leaf_node2[a], pair.leaf_node2[b], pair.leaf_node2[c]
    return _cherry(pair.t1, x1, y1, z1) == _cherry(pair.t2, x2, y2, z2)


def _restricted_clusters(pair, t, xs):
    """Clusters (as leaf-index frozensets) of the tree restricted to xs.

    The internal nodes of the restricted tree are exactly the lcas of
    consecutive leaves in left-to-right order; each contributes the set
    of xs members below it.
    """
    tree = pair.tree(t)
    nodes = sorted(pair.leaf_node(t, x) for x in xs)
    inner = {tree.lca(nodes[i], nodes[i + 1]) for i in range(len(nodes) - 1)}
    out = set()
    for v in inner:
        lo, hi = tree.subtree_min[v], v
        out.add(frozenset(x for x in xs if lo <= pair.leaf_node(t, x) <= hi))
    return out


def set_compatible(pair, leaves):
    """True when both trees induce the same shape on the given leaf set.

    Equivalent to all leaf triples being compatible; sets of size at
    most two are always compatible.
    """
    xs = sorted(set(leaves))
    if len(xs) <= 2:
        return True
    return _restricted_clusters(pair, 1, xs) == _restricted_clusters(pair, 2, xs)


def spanned_nodes(pair, t, leaves):
    """Node ids lying on some leaf-to-leaf path of the set in tree t.

    A singleton spans just its own leaf node.  For larger sets this is
    the union of the paths from each member up to the set's lca.
    """
    tree = pair.tree(t)
    nodes = [pair.leaf_node(t, x) for x in set(leaves)]
    if not nodes:
        return set()
    if len(nodes) == 1:
        return {nodes[0]}
    m = nodes[0]
    for v in nodes[1:]:
        m = tree.lca(m, v)
    parent = tree.parent
    seen = {m}
    for v in nodes:
        while v not in seen:
            seen.add(v)
            v = parent[v]
    return seen


def sets_overlap(pair, a, b, restrict=None):
    """True when the spans of leaf sets a and b share a node in either tree.

    ``restrict``, when given, is a collection of ``(tree, node)`` pairs;
    only shared nodes inside it count.
    """
    inter = set()
    for t in (1, 2):
        common = spanned_nodes(pair, t, a) & spanned_nodes(pair, t, b)
        inter.update((t, v) for v in common)
    if restrict is not None:
        inter &= set(restrict)
    return bool(inter)
