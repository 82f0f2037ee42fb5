"""Linear-programming views of the agreement forest problem.

Three formulations are built as plain data models: the exponential
covering/packing program with one variable per compatible leaf set, a
polynomially sized arc-flow reformulation of it over a DAG of leaf
pairs, and a path-cutting integer program over the first tree's edges.
The module also generates the instance families with known fractional
solutions used to probe the formulations' integrality gaps, verifies
given points against a model, and serializes models as LP files.  No
solving happens here; models are meant for external solvers and for
point verification in tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .tree_model import (
    InvariantError,
    OracleCapError,
    pair_from_newick,
    spanned_nodes,
    triple_compatible,
)

ENUMERATION_CAP = 15


@dataclass
class LpVariable:
    name: str
    lower: float = 0.0
    upper: float | None = None
    integer: bool = False


@dataclass
class LpConstraint:
    name: str
    coefs: dict
    sense: str
    rhs: float


@dataclass
class LpModel:
    """Sparse linear program: variables, rows, and a linear objective."""

    name: str
    variables: list = field(default_factory=list)
    constraints: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    objective_constant: float = 0.0
    sense: str = "min"

    def __post_init__(self):
        self._var_index = {v.name: k for k, v in enumerate(self.variables)}
        self._row_names = {c.name for c in self.constraints}

    def add_variable(self, name, lower=0.0, upper=None, integer=False):
        if name in self._var_index:
            raise ValueError("duplicate variable %r" % name)
        self._var_index[name] = len(self.variables)
        self.variables.append(LpVariable(name, lower, upper, integer))

    def add_constraint(self, name, coefs, sense, rhs):
        if name in self._row_names:
            raise ValueError("duplicate constraint %r" % name)
        if sense not in ("<=", ">=", "="):
            raise ValueError("bad sense %r" % sense)
        for var in coefs:
            if var not in self._var_index:
                raise ValueError("constraint %r references unknown variable %r"
                                 % (name, var))
        self._row_names.add(name)
        self.constraints.append(LpConstraint(name, dict(coefs), sense, rhs))

    def has_variable(self, name):
        return name in self._var_index

    def objective_value(self, assignment):
        total = self.objective_constant
        for var, coef in self.objective.items():
            total += coef * assignment.get(var, 0.0)
        return total


def check_feasible_point(model, assignment, tolerance=1e-9):
    """Validate a point against bounds and rows of a model.

    Unknown variable names in the assignment raise ValueError; missing
    variables count as zero.  Returns (ok, violations) where each
    violation is a human-readable string naming the bound or row.
    """
    for var in assignment:
        if not model.has_variable(var):
            raise ValueError("unknown variable %r" % var)
    violations = []
    for v in model.variables:
        val = assignment.get(v.name, 0.0)
        if val < v.lower - tolerance:
            violations.append("%s = %r below lower bound %r"
                              % (v.name, val, v.lower))
        if v.upper is not None and val > v.upper + tolerance:
            violations.append("%s = %r above upper bound %r"
                              % (v.name, val, v.upper))
    for row in model.constraints:
        lhs = sum(coef * assignment.get(var, 0.0)
                  for var, coef in row.coefs.items())
        bad = ((row.sense == "<=" and lhs > row.rhs + tolerance)
               or (row.sense == ">=" and lhs < row.rhs - tolerance)
               or (row.sense == "=" and abs(lhs - row.rhs) > tolerance))
        if bad:
            violations.append("%s: %r %s %r violated"
                              % (row.name, lhs, row.sense, row.rhs))
    return (not violations, violations)


def _num(x):
    if x == int(x):
        return str(int(x))
    return repr(float(x))


def _terms(model, coefs):
    parts = []
    for v in model.variables:
        coef = coefs.get(v.name)
        if not coef:
            continue
        mag = abs(coef)
        body = v.name if mag == 1 else "%s %s" % (_num(mag), v.name)
        if not parts:
            parts.append(body if coef > 0 else "- " + body)
        else:
            parts.append(("+ " if coef > 0 else "- ") + body)
    return parts


def render_lp_text(model):
    """Deterministic LP-format text for a model."""
    lines = ["\\ Problem: %s" % model.name, "Minimize"]
    obj = _terms(model, model.objective)
    c = model.objective_constant
    if c or not obj:
        obj.append(("+ " if c >= 0 else "- ") + _num(abs(c))
                   if obj else _num(c))
    lines.append(" obj: " + " ".join(obj))
    lines.append("Subject To")
    for row in model.constraints:
        lines.append(" %s: %s %s %s" % (
            row.name, " ".join(_terms(model, row.coefs)),
            row.sense if row.sense != "=" else "=", _num(row.rhs)))
    lines.append("Bounds")
    for v in model.variables:
        if v.upper is None:
            lines.append(" %s <= %s" % (_num(v.lower), v.name))
        else:
            lines.append(" %s <= %s <= %s" % (_num(v.lower), v.name,
                                              _num(v.upper)))
    integers = [v.name for v in model.variables if v.integer]
    if integers:
        lines.append("General")
        for name in integers:
            lines.append(" " + name)
    lines.append("End")
    return "\n".join(lines) + "\n"


def write_lp_file(model, destination):
    with open(destination, "w", newline="\n") as out:
        out.write(render_lp_text(model))


def enumerate_compatible_sets(pair, min_size=1, cap=ENUMERATION_CAP):
    """All compatible leaf sets with at least ``min_size`` leaves.

    A leaf set induces the same shape in both trees exactly when every
    one of its triples does, so the search extends partial sets leaf by
    leaf and abandons a branch at the first incompatible triple.
    Returns sorted index tuples in lexicographic order.
    """
    n = pair.n
    if n > cap:
        raise OracleCapError(
            "compatible-set enumeration is capped at %d leaves (got %d)"
            % (cap, n))
    ok = [[[True] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                if not triple_compatible(pair, i, j, k):
                    for a, b, c in ((i, j, k), (i, k, j), (j, i, k),
                                    (j, k, i), (k, i, j), (k, j, i)):
                        ok[a][b][c] = False
    out = []
    chosen = []

    def extend(start):
        if len(chosen) >= min_size:
            out.append(tuple(chosen))
        for leaf in range(start, n):
            row = ok[leaf]
            good = True
            for a in range(len(chosen)):
                ra = row[chosen[a]]
                for b in range(a + 1, len(chosen)):
                    if not ra[chosen[b]]:
                        good = False
                        break
                if not good:
                    break
            if good:
                chosen.append(leaf)
                extend(leaf + 1)
                chosen.pop()

    extend(0)
    return out


def _set_var_name(pair, leaves):
    return "x_L_" + ".".join(pair.labels[i] for i in sorted(leaves))


def build_exponential_lp(pair, cap=ENUMERATION_CAP):
    """Covering/packing program with one variable per compatible set.

    Minimizes the number of chosen sets minus one, subject to each leaf
    lying in exactly one chosen set and each internal node of either
    tree being spanned by at most one.
    """
    sets = enumerate_compatible_sets(pair, 1, cap)
    model = LpModel("exponential_lp")
    model.objective_constant = -1.0
    leaf_rows = [dict() for _ in range(pair.n)]
    pack1 = {}
    pack2 = {}
    for leaves in sets:
        name = _set_var_name(pair, leaves)
        model.add_variable(name)
        model.objective[name] = 1.0
        for i in leaves:
            leaf_rows[i][name] = 1.0
        if len(leaves) < 2:
            continue
        for v in spanned_nodes(pair, 1, leaves):
            if pair.t1.left[v] >= 0:
                pack1.setdefault(v, {})[name] = 1.0
        for v in spanned_nodes(pair, 2, leaves):
            if pair.t2.left[v] >= 0:
                pack2.setdefault(v, {})[name] = 1.0
    for i in range(pair.n):
        model.add_constraint("leaf_%d" % (i + 1), leaf_rows[i], "=", 1.0)
    ordinal = 0
    for rows in (pack1, pack2):
        for v in sorted(rows):
            ordinal += 1
            model.add_constraint("pack_%d" % ordinal, rows[v], "<=", 1.0)
    return model


@dataclass
class CompactLpGraph:
    """DAG over leaf pairs whose arborescences encode compatible sets.

    Nodes are pairs (i1, i2) of 1-based leaf positions with i1 <= i2;
    the diagonal nodes stand for single leaves.  An arc points from a
    pair to a pair whose meeting node lies strictly lower in both
    trees; arcs keeping the first leaf form one class, arcs moving to
    the second leaf the other.
    """

    nodes: list
    u1: list
    u2: list
    z_leaves: list


def build_compact_graph(pair):
    n = pair.n
    t1, t2 = pair.t1, pair.t2
    node1 = pair.leaf_node1
    node2 = pair.leaf_node2
    lca1 = [[0] * n for _ in range(n)]
    lca2 = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            lca1[i][j] = t1.lca(node1[i], node1[j])
            lca2[i][j] = t2.lca(node2[i], node2[j])

    def strictly_below(tree, d, a):
        return d != a and tree.is_ancestor(a, d)

    nodes = [(i + 1, j + 1) for i in range(n) for j in range(i, n)]
    nodes.sort()
    u1 = []
    u2 = []
    for (i1, i2) in nodes:
        if i1 == i2:
            continue
        a1 = lca1[i1 - 1][i2 - 1]
        a2 = lca2[i1 - 1][i2 - 1]
        for head, arcs in ((i1, u1), (i2, u2)):
            for m in range(head, n + 1):
                if (strictly_below(t1, lca1[head - 1][m - 1], a1)
                        and strictly_below(t2, lca2[head - 1][m - 1], a2)):
                    arcs.append(((i1, i2), (head, m)))
    return CompactLpGraph(
        nodes=nodes, u1=u1, u2=u2,
        z_leaves=[(i + 1, i + 1) for i in range(n)])


def _arc_name(arc):
    (i1, i2), (j1, j2) = arc
    return "y_%d.%d__%d.%d" % (i1, i2, j1, j2)


def build_compact_lp(pair, graph=None):
    """Arc-flow reformulation of the exponential program.

    Variables are one flow per DAG arc plus one saturation variable per
    leaf; the flow rows force arc supports to decompose into the
    arborescences that encode compatible sets, and the packing rows cap
    the total flow rooted at any internal tree node.
    """
    if graph is None:
        graph = build_compact_graph(pair)
    n = pair.n
    model = LpModel("compact_lp")
    model.objective_constant = -1.0
    xnames = []
    for i in range(n):
        name = "x_L_" + pair.labels[i]
        xnames.append(name)
        model.add_variable(name)
        model.objective[name] = 1.0
    out1 = {}
    out2 = {}
    into = {}
    for arcs, out in ((graph.u1, out1), (graph.u2, out2)):
        for arc in arcs:
            name = _arc_name(arc)
            model.add_variable(name)
            out.setdefault(arc[0], []).append(name)
            into.setdefault(arc[1], []).append(name)

    diagonal = set(graph.z_leaves)
    for r in graph.nodes:
        if r in diagonal:
            continue
        for name in out1.get(r, ()):
            model.objective[name] = model.objective.get(name, 0.0) + 1.0
        for name in into.get(r, ()):
            model.objective[name] = model.objective.get(name, 0.0) - 1.0

    ordinal = 0
    for r in graph.nodes:
        if r in diagonal:
            continue
        coefs = {}
        for name in out1.get(r, ()):
            coefs[name] = coefs.get(name, 0.0) + 1.0
        for name in out2.get(r, ()):
            coefs[name] = coefs.get(name, 0.0) - 1.0
        if coefs:
            ordinal += 1
            model.add_constraint("floweq_%d" % ordinal, coefs, "=", 0.0)
    ordinal = 0
    for r in graph.nodes:
        if r in diagonal:
            continue
        coefs = {}
        for name in out1.get(r, ()):
            coefs[name] = coefs.get(name, 0.0) + 1.0
        for name in into.get(r, ()):
            coefs[name] = coefs.get(name, 0.0) - 1.0
        if coefs:
            ordinal += 1
            model.add_constraint("outin_%d" % ordinal, coefs, ">=", 0.0)
    for i in range(n):
        coefs = {xnames[i]: 1.0}
        for name in into.get((i + 1, i + 1), ()):
            coefs[name] = 1.0
        model.add_constraint("leafsat_%d" % (i + 1), coefs, "=", 1.0)

    by_lca1 = {}
    by_lca2 = {}
    for r in graph.nodes:
        if r in diagonal:
            continue
        names = out1.get(r, ())
        if not names:
            continue
        v1 = pair.lca_of_leaves(1, (r[0] - 1, r[1] - 1))
        v2 = pair.lca_of_leaves(2, (r[0] - 1, r[1] - 1))
        by_lca1.setdefault(v1, []).extend(names)
        by_lca2.setdefault(v2, []).extend(names)
    ordinal = 0
    for rows in (by_lca1, by_lca2):
        for v in sorted(rows):
            ordinal += 1
            model.add_constraint(
                "pack_%d" % ordinal, {name: 1.0 for name in rows[v]},
                "<=", 1.0)
    return model


def arborescence_for_set(pair, graph, leaves):
    """Arc set encoding one compatible leaf set, rooted at its label.

    Walks the first tree's shape restricted to the set; every internal
    node becomes the pair (smallest leaf under one child, smallest
    under the other) and sends one arc into each child's label.  Raises
    ValueError when the set is not compatible (the arcs then do not all
    exist in the graph).
    """
    leaves = sorted(leaves)
    if len(leaves) < 2:
        raise ValueError("arborescences encode sets of at least two leaves")
    u1set = set(graph.u1)
    u2set = set(graph.u2)
    t1 = pair.t1
    node1 = pair.leaf_node1
    arcs = []

    def rec(subset):
        if len(subset) == 1:
            i = subset[0] + 1
            return (i, i)
        u = pair.lca_of_leaves(1, subset)
        lchild = t1.left[u]
        lo = t1.subtree_min[lchild]
        left_part = [i for i in subset if lo <= node1[i] <= lchild]
        right_part = [i for i in subset if not lo <= node1[i] <= lchild]
        s_left = rec(left_part)
        s_right = rec(right_part)
        i1 = min(s_left[0], s_right[0])
        i2 = max(s_left[0], s_right[0])
        r = (i1, i2)
        first, second = ((s_left, s_right) if s_left[0] == i1
                         else (s_right, s_left))
        if (r, first) not in u1set or (r, second) not in u2set:
            raise ValueError("leaf set is not compatible")
        arcs.append((r, first))
        arcs.append((r, second))
        return r

    rec(leaves)
    return arcs


def encode_lpstar_point(pair, graph, weights):
    """Map weights on compatible sets to a point of the arc-flow model.

    Every set of two or more leaves contributes its weight along the
    arcs of its encoding arborescence; the per-leaf saturation values
    are then forced by the leaf rows, so singleton weights in the input
    are ignored.  Returns a variable assignment.
    """
    point = {}
    incoming = [0.0] * pair.n
    for leaves, weight in sorted(
            (tuple(sorted(s)), w) for s, w in weights.items()):
        if len(leaves) < 2 or not weight:
            continue
        for arc in arborescence_for_set(pair, graph, leaves):
            name = _arc_name(arc)
            point[name] = point.get(name, 0.0) + weight
            if arc[1][0] == arc[1][1]:
                incoming[arc[1][0] - 1] += weight
    for i in range(pair.n):
        point["x_L_" + pair.labels[i]] = 1.0 - incoming[i]
    return point


def arborescence_leafsets(graph, pair, max_n=6):
    """Leaf sets of every arborescence the DAG admits, with multiplicity.

    Exhaustively combines, for each non-diagonal node, one outgoing arc
    of each class with the enumerations below the two targets; the two
    sub-arborescences of distinct targets can never share a leaf, which
    is asserted.  Returns sorted index tuples, sorted.
    """
    if pair.n > max_n:
        raise OracleCapError(
            "arborescence enumeration is capped at %d leaves (got %d)"
            % (max_n, pair.n))
    out1 = {}
    out2 = {}
    for arcs, out in ((graph.u1, out1), (graph.u2, out2)):
        for r, s in arcs:
            out.setdefault(r, []).append(s)
    memo = {}

    def sets(r):
        if r[0] == r[1]:
            return [frozenset((r[0],))]
        if r in memo:
            return memo[r]
        found = []
        for s1 in out1.get(r, ()):
            for s2 in out2.get(r, ()):
                for a in sets(s1):
                    for b in sets(s2):
                        if a & b:
                            raise InvariantError(
                                "child arborescences share a leaf")
                        found.append(a | b)
        memo[r] = found
        return found

    result = []
    for r in graph.nodes:
        if r[0] == r[1]:
            continue
        for leafset in sets(r):
            result.append(tuple(sorted(i - 1 for i in leafset)))
    return sorted(result)


def _leaf_paths(pair):
    """Edge sets (as child-node ids) of leaf-to-leaf paths, per tree."""
    edges = {}
    for t in (1, 2):
        tree = pair.tree(t)
        nodes = pair.leaf_nodes(t)
        for i in range(pair.n):
            for j in range(i + 1, pair.n):
                a = tree.lca(nodes[i], nodes[j])
                path = set()
                for v in (nodes[i], nodes[j]):
                    while v != a:
                        path.add(v)
                        v = tree.parent[v]
                edges[(t, i, j)] = frozenset(path)
    return edges


def build_wu_ilp(pair):
    """Path-cutting integer program over the first tree's edges.

    One binary variable per edge (named by its child node).  Every
    incompatible triple forces a cut on the union of its three pairwise
    paths in the first tree; every pair of leaf pairs whose paths are
    disjoint in the first tree but cross in the second forces a cut on
    one of the two first-tree paths.
    """
    n = pair.n
    t1 = pair.t1
    model = LpModel("wu_ilp")
    for v in range(t1.n_nodes - 1):
        name = "xe_%d" % v
        model.add_variable(name, 0.0, 1.0, integer=True)
        model.objective[name] = 1.0
    paths = _leaf_paths(pair)
    ordinal = 0
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                if triple_compatible(pair, i, j, k):
                    continue
                union = (paths[(1, i, j)] | paths[(1, i, k)]
                         | paths[(1, j, k)])
                ordinal += 1
                model.add_constraint(
                    "triple_%d" % ordinal,
                    {"xe_%d" % v: 1.0 for v in union}, ">=", 1.0)
    duos = [(i, j) for i in range(n) for j in range(i + 1, n)]
    ordinal = 0
    for a in range(len(duos)):
        i, j = duos[a]
        for b in range(a + 1, len(duos)):
            k, l = duos[b]
            if paths[(1, i, j)] & paths[(1, k, l)]:
                continue
            if not paths[(2, i, j)] & paths[(2, k, l)]:
                continue
            union = paths[(1, i, j)] | paths[(1, k, l)]
            ordinal += 1
            model.add_constraint(
                "cross_%d" % ordinal,
                {"xe_%d" % v: 1.0 for v in union}, ">=", 1.0)
    return model


def _complete_tree_newick(k, reverse):
    def sub(path):
        if len(path) == k:
            return path[::-1] if reverse else path
        return "(%s,%s)" % (sub(path + "0"), sub(path + "1"))

    return sub("") + ";"


def wu_gap_instance(k):
    """Tree pair on 2^k leaves with a known weak fractional point.

    Both trees are complete binaries over all binary strings of length
    k; the first places leaves in string order, the second in order of
    the reversed strings.  Requires even k >= 2.
    """
    if k < 2 or k % 2:
        raise ValueError("k must be even and at least 2")
    return pair_from_newick(_complete_tree_newick(k, False),
                            _complete_tree_newick(k, True))


def wu_gap_fractional(k):
    """Fractional point for the path-cutting program on the gap pair.

    A quarter on every leaf edge and an eighth on every edge whose
    lower end has exactly two leaves below; the objective comes to
    five sixteenths of the leaf count.
    """
    pair = wu_gap_instance(k)
    t1 = pair.t1
    point = {}
    for v in range(t1.n_nodes - 1):
        if t1.left[v] < 0:
            point["xe_%d" % v] = 0.25
        elif v - t1.subtree_min[v] + 1 == 3:
            point["xe_%d" % v] = 0.125
    return point


@dataclass
class FigInstance:
    """Worked example pair with its known reference values."""

    name: str
    newick1: str
    newick2: str
    pair: object
    known_opt: int | None = None
    known_lp_opt: int | None = None
    fractional: dict | None = None


FIG1_NEWICK1 = "((((b1,b2),(r1,r2)),(w1,w2)),w3);"
FIG1_NEWICK2 = "((((b1,r1),(b2,w1)),(r2,w2)),w3);"
FIG9_NEWICK1 = "(((((((1,2),3),4),5),6),7),8);"
FIG9_NEWICK2 = "((((1,5),8),(2,7)),((3,6),4));"


def fig9_fractional_point():
    """Half weight on three crossing triples and on all singletons but
    the shared leaf; feasible for the exponential program at value 4."""
    point = {}
    for labels in (("1", "2", "3"), ("1", "5", "8"), ("4", "6", "7")):
        point["x_L_" + ".".join(labels)] = 0.5
    for leaf in "2345678":
        point["x_L_" + leaf] = 0.5
    return point


def fig_instances():
    """The two worked example instances keyed ``fig1`` and ``fig9``."""
    fig1 = FigInstance(
        name="fig1", newick1=FIG1_NEWICK1, newick2=FIG1_NEWICK2,
        pair=pair_from_newick(FIG1_NEWICK1, FIG1_NEWICK2))
    fig9 = FigInstance(
        name="fig9", newick1=FIG9_NEWICK1, newick2=FIG9_NEWICK2,
        pair=pair_from_newick(FIG9_NEWICK1, FIG9_NEWICK2),
        known_opt=5, known_lp_opt=4, fractional=fig9_fractional_point())
    return {"fig1": fig1, "fig9": fig9}
