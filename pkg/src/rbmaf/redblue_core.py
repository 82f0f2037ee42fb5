"""Iterative refinement solver with a certified approximation factor of 2.

Each iteration finds a lowest node of the first tree witnessing that
the current partition is not yet an agreement forest, colors the leaves
red and blue by that node's two child subtrees (white elsewhere), and
refines the partition by cutting the second tree until the colored part
of the partition can no longer be forced apart by later iterations.
Refinements that are not strictly necessary are remembered as undo
pairs and reversed after the loop; they exist to pay for the
certificate decrements.

The certificate invariant checked at the end of every iteration is that
twice the certificate objective covers the number of cuts the final
forest will have.  Structural bookkeeping identities relating the block
counts before and after each stage are asserted as well, so a violation
of the analysis anywhere raises InvariantError instead of silently
degrading the guarantee.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dual_certificate import DualState, check_balance
from .forest_partition import Partition
from .tree_model import InvariantError

RED, BLUE, WHITE = 0, 1, 2

_CASE_OF_CONDITION = {"a": 1, "b": 2, "c": 3}


@dataclass
class Coloring:
    """Leaf coloring induced by one internal node of the first tree.

    Red is the right child's leaf set, blue the left child's, white the
    rest.  ``color`` maps leaf index to RED, BLUE or WHITE.
    """

    node1: int
    left1: int
    right1: int
    color: list
    red: list
    blue: list
    white: list


@dataclass
class Pcs:
    """Lowest problematic node and the condition that fired there.

    Conditions: "a" means the block covering the node restricts to an
    incompatible set below it, "b" means two blocks overlap below it,
    "c" means the covering block restricted below it cannot absorb any
    of the block's outside leaves.
    """

    node: int
    condition: str


@dataclass
class IterationRecord:
    """Bookkeeping for one refinement iteration."""

    index: int
    pcs_node: int
    condition: str
    case: int
    p0: int
    p1: int
    p2: int
    p3: int
    chi: int
    t: int
    n_stars: int
    delta_dual: int
    delta_primal: int
    pair_added: bool
    n_pairs: int
    dual_objective: int


@dataclass
class RedBlueResult:
    """Final forest, certificate, undo pairs and per-iteration records."""

    pair: object
    value: int
    components: tuple
    partition: Partition
    dual: DualState
    dual_objective: int
    pairslist: list
    iterations: list
    trace: list

    @property
    def forest(self):
        """Alias for the final partition."""
        return self.partition

    @property
    def ratio_bound(self):
        """value / lower bound; None when the lower bound is zero."""
        if self.dual_objective == 0:
            return None
        return self.value / self.dual_objective


def make_coloring(partition, node1):
    """Color the leaf set by the two child subtrees of ``node1``."""
    pair = partition.pair
    t1 = pair.t1
    if t1.left[node1] < 0:
        raise InvariantError("coloring node must be internal")
    lchild, rchild = t1.left[node1], t1.right[node1]
    idx = pair.leaf_index1
    color = [WHITE] * pair.n
    red = sorted(idx[x] for x in t1.leaves_below(rchild))
    blue = sorted(idx[x] for x in t1.leaves_below(lchild))
    for i in red:
        color[i] = RED
    for i in blue:
        color[i] = BLUE
    white = [i for i in range(pair.n) if color[i] == WHITE]
    return Coloring(node1, lchild, rchild, color, red, blue, white)


def find_lowest_pcs(partition):
    """Lowest node of the first tree proving the partition infeasible.

    Single ascending pass keeping, per node, the block covering it, the
    size of that block's restriction below the node, and the meeting
    node of the restriction in the second tree.  Returns None exactly
    when the partition is an agreement forest.
    """
    if partition.dirty:
        partition.refresh_annotations()
    pair = partition.pair
    t1, t2 = pair.t1, pair.t2
    n1 = t1.n_nodes
    left, right = t1.left, t1.right
    leaf_index1 = pair.leaf_index1
    leaf_node2 = pair.leaf_node2
    leaf_comp = partition.leaf_comp
    live2 = partition.live
    sizes = {cid: c.size for cid, c in partition.comps.items()}
    lca2 = t2.lca

    comp = [-1] * n1
    csize = [0] * n1
    meet = [0] * n1

    for v in range(n1):
        lv = left[v]
        if lv < 0:
            i = leaf_index1[v]
            comp[v] = leaf_comp[i]
            csize[v] = 1
            meet[v] = leaf_node2[i]
            continue
        rv = right[v]
        cl = comp[lv]
        if cl >= 0 and csize[lv] >= sizes[cl]:
            cl = -1
        cr = comp[rv]
        if cr >= 0 and csize[rv] >= sizes[cr]:
            cr = -1
        if cl < 0 and cr < 0:
            continue
        if cl < 0 or cr < 0:
            src = rv if cl < 0 else lv
            comp[v] = comp[src]
            csize[v] = csize[src]
            meet[v] = meet[src]
            continue
        if cl != cr:
            return Pcs(v, "b")
        p = lca2(meet[lv], meet[rv])
        if meet[lv] == p or meet[rv] == p:
            return Pcs(v, "a")
        size = sizes[cl]
        sv = csize[lv] + csize[rv]
        if live2[p] == size and sv < size:
            return Pcs(v, "c")
        comp[v] = cl
        csize[v] = sv
        meet[v] = p
    return None


def _n_colors(comp):
    return (comp.n_red > 0) + (comp.n_blue > 0) + (comp.n_white > 0)


def classify_case(partition, coloring):
    """Case of the colored start-of-iteration partition: 1, 2 or 3.

    Case 1: one multicolored block, three colors, colored part not
    shaped alike in both trees, some white leaf outside the colored
    part's meeting node.  Case 2: exactly two multicolored blocks, one
    red+white and one blue+white.  Case 3: one multicolored block,
    three colors, colored part shaped alike, every leaf of the block
    below the colored part's meeting node.  Any other shape raises
    InvariantError.
    """
    if partition.dirty:
        partition.refresh_annotations()
    multi = [c for c in partition.comps.values() if _n_colors(c) >= 2]
    if len(multi) == 2:
        a, b = sorted(multi, key=lambda c: c.n_red, reverse=True)
        if not (a.n_red and a.n_white and not a.n_blue
                and b.n_blue and b.n_white and not b.n_red):
            raise InvariantError("two multicolored blocks must be red+white and blue+white")
        return 2
    if len(multi) != 1:
        raise InvariantError("expected one or two multicolored blocks")
    a0 = multi[0]
    if _n_colors(a0) != 3:
        raise InvariantError("a lone multicolored block must carry all three colors")
    col = coloring.color
    ua = partition.pair.lca_of_leaves(
        2, [i for i in a0.leaves if col[i] != WHITE])
    if partition.acomp[ua] != a0.id:
        raise InvariantError("colored meeting node is not covered by its block")
    rb_bad = _rb_violation(partition) is not None
    outside = partition.live[ua] < a0.size
    if rb_bad:
        if not outside:
            raise InvariantError("color-incompatible block needs a white leaf outside the meeting node")
        return 1
    if outside:
        raise InvariantError("color-compatible block must sit below the meeting node")
    return 3


def _rb_violation(partition):
    """Lowest second-tree node splitting off a color-incompatible piece.

    Fires at the lowest node whose covering block has both red and blue
    below it while at least one of those colors also occurs above it;
    such a node exists if and only if some block's colored part is not
    shaped alike in both trees.
    """
    if partition.dirty:
        partition.refresh_annotations()
    comps = partition.comps
    acomp = partition.acomp
    live_r, live_b = partition.live_r, partition.live_b
    left = partition.pair.t2.left
    for v in range(partition.pair.t2.n_nodes):
        if left[v] < 0:
            continue
        cid = acomp[v]
        if cid < 0:
            continue
        lr = live_r[v]
        lb = live_b[v]
        if lr and lb:
            c = comps[cid]
            if lr < c.n_red or lb < c.n_blue:
                return v
    return None


def _splittable_violation(partition):
    """Lowest second-tree node blocking a clean split by color.

    Fires at the lowest node whose covering block restricts below it to
    exactly two colors while every color the block carries also occurs
    above it.
    """
    if partition.dirty:
        partition.refresh_annotations()
    comps = partition.comps
    acomp = partition.acomp
    live_r, live_b, live_w = partition.live_r, partition.live_b, partition.live_w
    left = partition.pair.t2.left
    for v in range(partition.pair.t2.n_nodes):
        if left[v] < 0:
            continue
        cid = acomp[v]
        if cid < 0:
            continue
        lr = live_r[v]
        lb = live_b[v]
        lw = live_w[v]
        if (lr > 0) + (lb > 0) + (lw > 0) != 2:
            continue
        c = comps[cid]
        if c.n_red and lr >= c.n_red:
            continue
        if c.n_blue and lb >= c.n_blue:
            continue
        if c.n_white and lw >= c.n_white:
            continue
        return v
    return None


def make_rb_compatible(partition, dual):
    """Cut until every block's colored part is shaped alike in both trees."""
    nodes = []
    while True:
        v = _rb_violation(partition)
        if v is None:
            return nodes
        dual.star(2, v)
        partition.split_below(v)
        nodes.append(v)


def make_splittable(partition, dual):
    """Cut until every block's color classes are span-disjoint."""
    nodes = []
    while True:
        v = _splittable_violation(partition)
        if v is None:
            return nodes
        dual.star(2, v)
        partition.split_below(v)
        nodes.append(v)


def _top_components(partition):
    """Blocks created this iteration with a maximal meeting node.

    A created block is top when its meeting node in the second tree is
    not a strict descendant of another created block's meeting node.
    """
    k = partition.iteration
    created = [c for c in partition.comps.values() if c.created_iter == k]
    if not created:
        return []
    pair = partition.pair
    t2 = pair.t2
    parent = t2.parent
    n = t2.n_nodes
    marked = [False] * n
    anchors = {}
    for c in created:
        a = pair.lca_of_leaves(2, c.leaves)
        if marked[a]:
            raise InvariantError("two created blocks share a meeting node")
        marked[a] = True
        anchors[c.id] = a
    below = [False] * n
    for v in range(n - 2, -1, -1):
        p = parent[v]
        below[v] = below[p] or marked[p]
    return [c.id for c in created if not below[anchors[c.id]]]


_ANY_TOP = object()


def special_split(partition, dual, coloring, cid, pairslist):
    """Replace one tricolored block by the two-branch special rule.

    When none of the block's white leaves sit below the meeting node of
    its colored leaves, the block splits into its red part versus the
    rest and the undo pair (lowest red leaf, lowest blue leaf) is
    remembered.  Otherwise it splits four ways: the leaves outside the
    meeting node plus the three color classes below it, at the cost of
    one more certificate decrement at that node.  Returns
    (chi, pair_added, node, branch).
    """
    if partition.dirty:
        partition.refresh_annotations(coloring)
    pair = partition.pair
    col = coloring.color
    c = partition.comps[cid]
    if _n_colors(c) != 3:
        raise InvariantError("special split needs a tricolored block")
    ua = pair.lca_of_leaves(2, [i for i in c.leaves if col[i] != WHITE])
    if partition.acomp[ua] != cid:
        raise InvariantError("colored meeting node not covered by its block")
    leaves = c.leaves
    if partition.live_w[ua] == 0:
        reds = [i for i in leaves if col[i] == RED]
        rest = [i for i in leaves if col[i] != RED]
        partition.split_component(cid, [reds, rest])
        pairslist.append(
            (min(reds), min(i for i in rest if col[i] == BLUE)))
        return 0, True, ua, 1
    t2 = pair.t2
    nodes2 = pair.leaf_node2
    dual.star(2, ua)
    lo = t2.subtree_min[ua]
    inside = [i for i in leaves if lo <= nodes2[i] <= ua]
    outside = [i for i in leaves if not lo <= nodes2[i] <= ua]
    parts = [outside]
    parts.extend(
        [i for i in inside if col[i] == k] for k in (RED, BLUE, WHITE))
    if not all(parts):
        raise InvariantError("four-way special split needs four blocks")
    if any(col[i] != WHITE for i in outside):
        raise InvariantError("leaves outside the meeting node must be white")
    partition.split_component(cid, parts)
    return 1, False, ua, 2


def split(partition, dual, coloring, pairslist, top_cid=_ANY_TOP):
    """Split every multicolored block apart by color.

    A block carrying all three colors with a leaf outside the meeting
    node of its colored part goes through ``special_split`` instead of
    the plain three-way refinement.  When ``top_cid`` is given, a
    special split on any other block raises InvariantError; the solver
    passes the top block of the iteration here (or None when no special
    split is legal).  Returns (chi, pair_added, special) where chi
    flags the four-way split and special carries (block id, node,
    branch).
    """
    if partition.dirty:
        partition.refresh_annotations()
    pair = partition.pair
    col = coloring.color
    decisions = []
    for cid in sorted(partition.comps):
        c = partition.comps[cid]
        ncol = _n_colors(c)
        if ncol <= 1:
            continue
        if ncol == 3:
            ua = pair.lca_of_leaves(2, [i for i in c.leaves if col[i] != WHITE])
            if partition.acomp[ua] != cid:
                raise InvariantError("colored meeting node not covered by its block")
            if partition.live[ua] < c.size:
                decisions.append((cid, True))
                continue
        decisions.append((cid, False))

    chi = 0
    pair_added = False
    special = None
    for cid, needs_special in decisions:
        if not needs_special:
            leaves = partition.comps[cid].leaves
            parts = [[i for i in leaves if col[i] == k] for k in (RED, BLUE, WHITE)]
            partition.split_component(cid, [p for p in parts if p])
            continue
        if top_cid is not _ANY_TOP and cid != top_cid:
            raise InvariantError("special split outside the top block")
        added_chi, added_pair, ua, branch = special_split(
            partition, dual, coloring, cid, pairslist)
        chi += added_chi
        pair_added = pair_added or added_pair
        special = (cid, ua, branch)
    return chi, pair_added, special


def find_merge_pair(partition):
    """One undoable pair of colored leaves, or None.

    Considers single-color blocks created this iteration.  A block
    reaches a node of the second tree when it covers it, or when its
    meeting node is strictly below it and everything strictly between
    is covered by no block.  Two same-color blocks reaching a common
    node can be remerged.  Failing that, a red and a blue block from
    the same start-of-iteration block meeting at an uncovered node can
    be remerged, provided no node from there up to the root is covered
    by a colored block created this iteration.
    """
    if partition.dirty:
        partition.refresh_annotations()
    k = partition.iteration
    comps = partition.comps
    scope = {}
    for c in comps.values():
        if c.created_iter != k:
            continue
        if c.n_red == c.size:
            scope[c.id] = RED
        elif c.n_blue == c.size:
            scope[c.id] = BLUE
    if len(scope) < 2:
        return None

    pair = partition.pair
    t2 = pair.t2
    n = t2.n_nodes
    left, right = t2.left, t2.right
    acomp = partition.acomp
    bucket = {}
    for cid in scope:
        a = pair.lca_of_leaves(2, comps[cid].leaves)
        bucket.setdefault(a, []).append(cid)

    def emit(c1, c2):
        if c1 > c2:
            c1, c2 = c2, c1
        if comps[c1].origin0 != comps[c2].origin0:
            raise InvariantError("undo pair spans two start-of-iteration blocks")
        return (min(comps[c1].leaves), min(comps[c2].leaves))

    reach = [()] * n
    for v in range(n):
        entries = list(bucket.get(v, ()))
        if left[v] >= 0:
            for ch in (left[v], right[v]):
                if acomp[ch] < 0:
                    entries.extend(reach[ch])
                else:
                    entries.extend(bucket.get(ch, ()))
        rset = entries
        cov = acomp[v]
        if cov >= 0 and cov in scope and cov not in rset:
            rset = entries + [cov]
        if len(rset) >= 2:
            reds = sorted(c for c in rset if scope[c] == RED)
            blues = sorted(c for c in rset if scope[c] == BLUE)
            if len(reds) >= 2:
                return emit(reds[0], reds[1])
            if len(blues) >= 2:
                return emit(blues[0], blues[1])
        reach[v] = tuple(entries)

    stack = [n - 1]
    while stack:
        v = stack.pop()
        cov = acomp[v]
        if cov >= 0 and cov in scope:
            continue
        if cov < 0 and len(reach[v]) == 2:
            c1, c2 = reach[v]
            if scope[c1] == scope[c2]:
                raise InvariantError("same-color pair escaped the upward scan")
            if comps[c1].origin0 == comps[c2].origin0:
                if c1 > c2:
                    c1, c2 = c2, c1
                return (min(comps[c1].leaves), min(comps[c2].leaves))
        if left[v] >= 0:
            stack.append(right[v])
            stack.append(left[v])
    return None


def merge_components(partition, pairslist):
    """Undo the remembered splits, most recent first, and re-derive cuts."""
    for x1, x2 in reversed(pairslist):
        partition.merge_leaves(x1, x2)
    partition.canonicalize_cuts()


def run(pair, record_snapshots=False, on_iteration=None):
    """Solve one instance, returning the forest and its certificate.

    ``on_iteration(partition, dual, record)`` is called after each
    iteration's bookkeeping checks.  ``record_snapshots`` adds the full
    block families after each stage to the trace, which is otherwise a
    list of compact event dicts.
    """
    partition = Partition(pair)
    dual = DualState(pair)
    pairslist = []
    iterations = []
    trace = [{
        "event": "init",
        "n_leaves": pair.n,
        "labels": list(pair.labels),
    }]

    def snap(stage):
        if record_snapshots:
            trace.append({
                "event": "snapshot",
                "stage": stage,
                "components": [list(s) for s in partition.label_sets()],
            })

    k = 0
    while True:
        pcs = find_lowest_pcs(partition)
        if pcs is None:
            break
        k += 1
        partition.begin_iteration(k)
        coloring = make_coloring(partition, pcs.node)
        partition.refresh_annotations(coloring)
        case = classify_case(partition, coloring)
        if case != _CASE_OF_CONDITION[pcs.condition]:
            raise InvariantError("partition shape disagrees with the detected condition")

        p0 = len(partition)
        events0 = len(dual.events)
        trace.append({
            "event": "iteration_start",
            "iteration": k,
            "pcs_node": pcs.node,
            "condition": pcs.condition,
            "case": case,
            "n_components": p0,
            "red": [pair.labels[i] for i in coloring.red],
            "blue": [pair.labels[i] for i in coloring.blue],
        })
        dual.star(1, pcs.node)

        rb_nodes = make_rb_compatible(partition, dual)
        p1 = len(partition)
        trace.append({
            "event": "stage",
            "stage": "make_rb_compatible",
            "nodes": rb_nodes,
            "n_components": p1,
        })
        snap("p1")

        sp_nodes = make_splittable(partition, dual)
        p2 = len(partition)
        trace.append({
            "event": "stage",
            "stage": "make_splittable",
            "nodes": sp_nodes,
            "n_components": p2,
        })
        snap("p2")

        tops = _top_components(partition)
        if case == 1:
            if len(tops) != 1:
                raise InvariantError("case 1 expects a unique top block")
            top_cid = tops[0]
        else:
            top_cid = None
        tri = [c.id for c in partition.comps.values() if _n_colors(c) == 3]
        t = sum(1 for cid in tri if cid not in tops)

        chi, pair_added, special = split(
            partition, dual, coloring, pairslist, top_cid)
        p3 = len(partition)
        trace.append({
            "event": "stage",
            "stage": "split",
            "chi": chi,
            "t": t,
            "special": None if special is None else {
                "component": special[0], "node": special[1],
                "branch": special[2]},
            "n_components": p3,
        })
        snap("p3")

        if not pair_added:
            mp = find_merge_pair(partition)
            if mp is not None:
                pairslist.append(mp)
                pair_added = True
        if pair_added:
            x1, x2 = pairslist[-1]
            trace.append({
                "event": "merge_pair",
                "x1": pair.labels[x1],
                "x2": pair.labels[x2],
            })

        n_stars = len(dual.events) - events0
        delta_dual = (p3 - p0) - n_stars
        if case == 1:
            if p3 - p2 != (p2 - p0) + 1 + 2 * chi + t:
                raise InvariantError("block count identity failed in case 1")
            if delta_dual != p3 - p2 - 1 - chi:
                raise InvariantError("certificate identity failed in case 1")
            if t == 0 and not pair_added:
                raise InvariantError("case 1 with no stray three-color blocks must remember a pair")
        else:
            if p1 != p0:
                raise InvariantError("cases 2 and 3 must not cut before splittability")
            if chi != 0 or special is not None:
                raise InvariantError("special split outside case 1")
            if p3 - p2 != (p2 - p0) + 2:
                raise InvariantError("block count identity failed in case 2/3")
            if delta_dual != p3 - p2 - 1:
                raise InvariantError("certificate identity failed in case 2/3")
        delta_primal = (p3 - p0) - (1 if pair_added else 0)
        if 2 * delta_dual < delta_primal:
            raise InvariantError("iteration gained more cuts than the certificate can pay for")
        check_balance(dual, len(partition), len(pairslist))

        record = IterationRecord(
            index=k, pcs_node=pcs.node, condition=pcs.condition, case=case,
            p0=p0, p1=p1, p2=p2, p3=p3, chi=chi, t=t, n_stars=n_stars,
            delta_dual=delta_dual, delta_primal=delta_primal,
            pair_added=pair_added, n_pairs=len(pairslist),
            dual_objective=dual.objective(len(partition)))
        iterations.append(record)
        trace.append({
            "event": "iteration_end",
            "iteration": k,
            "sizes": [p0, p1, p2, p3],
            "stars": n_stars,
            "delta_dual": delta_dual,
            "delta_primal": delta_primal,
            "n_pairs": len(pairslist),
            "dual_objective": record.dual_objective,
        })
        if on_iteration is not None:
            on_iteration(partition, dual, record)

    d_hat = dual.objective(len(partition))
    p_loop_end = len(partition)
    merge_components(partition, pairslist)
    if find_lowest_pcs(partition) is not None:
        raise InvariantError("final partition is not an agreement forest")
    value = len(partition) - 1
    if value != p_loop_end - 1 - len(pairslist):
        raise InvariantError("merge phase lost or gained blocks")
    if 2 * d_hat < value:
        raise InvariantError("final certificate cannot pay for the forest")
    components = partition.label_sets()
    trace.append({
        "event": "merges",
        "pairs": [[pair.labels[x1], pair.labels[x2]] for x1, x2 in pairslist],
    })
    trace.append({
        "event": "final",
        "value": value,
        "dual_objective": d_hat,
        "n_components": len(partition),
        "components": [list(s) for s in components],
    })
    return RedBlueResult(
        pair=pair, value=value, components=components, partition=partition,
        dual=dual, dual_objective=d_hat, pairslist=pairslist,
        iterations=iterations, trace=trace)
