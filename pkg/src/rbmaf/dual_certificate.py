"""Lower-bound certificate carried alongside the refinement loop.

The certificate is a nonpositive potential on the internal nodes of
both trees together with the current partition: the objective is the
potential sum plus the number of blocks minus one.  Feasibility means
no compatible leaf set carries a load above one, where the load of a
leaf set is the potential mass on the internal nodes it spans plus the
number of blocks it intersects.  A feasible certificate's objective is
a lower bound on the optimum number of cuts, which is what makes the
solver's output a certified 2-approximation.
"""

from __future__ import annotations

from .forest_partition import Partition
from .tree_model import InvariantError, OracleCapError, spanned_nodes

VERIFY_CAP = 15


class DualState:
    """Potentials on internal nodes of both trees plus the decrement log.

    Every decrement is recorded as ``(tree, node)`` in application
    order, so the objective can be recomputed as ``len(events)`` worth
    of unit decrements against the block count.
    """

    __slots__ = ("pair", "y1", "y2", "events")

    def __init__(self, pair):
        self.pair = pair
        self.y1 = [0] * pair.t1.n_nodes
        self.y2 = [0] * pair.t2.n_nodes
        self.events = []

    def star(self, tree, node):
        """Decrement the potential of an internal node by one."""
        if self.pair.tree(tree).left[node] < 0:
            raise InvariantError("potential decrement on a leaf")
        if tree == 1:
            self.y1[node] -= 1
        else:
            self.y2[node] -= 1
        self.events.append((tree, node))

    def y_sum(self):
        return -len(self.events)

    def objective(self, n_components):
        return self.y_sum() + n_components - 1

    def as_dict(self):
        """Nonzero potentials keyed ``t1:<node>`` / ``t2:<node>``."""
        out = {}
        for v, y in enumerate(self.y1):
            if y:
                out["t1:%d" % v] = y
        for v, y in enumerate(self.y2):
            if y:
                out["t2:%d" % v] = y
        return out


def decrement_y(dual, tree, node):
    """Module-level spelling of :meth:`DualState.star`."""
    dual.star(tree, node)


def _as_blocks(components):
    if isinstance(components, Partition):
        return [frozenset(c.leaves) for c in components.comps.values()]
    return [frozenset(b) for b in components]


def dual_objective(dual, components):
    """Objective of the certificate against the given partition."""
    return dual.objective(len(_as_blocks(components)))


def load(pair, dual, components, leaves):
    """Certificate load on one leaf set.

    Potential mass on the internal nodes the set spans in either tree,
    plus the number of blocks it intersects.
    """
    total = 0
    for v in spanned_nodes(pair, 1, leaves):
        if pair.t1.left[v] >= 0:
            total += dual.y1[v]
    for v in spanned_nodes(pair, 2, leaves):
        if pair.t2.left[v] >= 0:
            total += dual.y2[v]
    lset = set(leaves)
    for b in _as_blocks(components):
        if b & lset:
            total += 1
    return total


def verify_dual_feasibility(pair, dual, components, size_cap=None,
                            cap=VERIFY_CAP, strict=True):
    """Check the certificate against every compatible leaf set.

    Enumerates all compatible sets (of size at most ``size_cap`` when
    given), so it is gated to ``cap`` leaves.  Returns True when every
    load is at most one; on a violation raises InvariantError naming
    the set, or returns False when ``strict`` is false.
    """
    if pair.n > cap:
        raise OracleCapError(
            "certificate verification enumerates compatible sets and is "
            "capped at %d leaves (got %d)" % (cap, pair.n))
    if any(y > 0 for y in dual.y1) or any(y > 0 for y in dual.y2):
        raise InvariantError("certificate has a positive potential")
    blocks = _as_blocks(components)
    from .lp_toolkit import enumerate_compatible_sets

    for leaves in enumerate_compatible_sets(pair):
        if size_cap is not None and len(leaves) > size_cap:
            continue
        total = 0
        for v in spanned_nodes(pair, 1, leaves):
            if pair.t1.left[v] >= 0:
                total += dual.y1[v]
        for v in spanned_nodes(pair, 2, leaves):
            if pair.t2.left[v] >= 0:
                total += dual.y2[v]
        lset = set(leaves)
        for b in blocks:
            if b & lset:
                total += 1
        if total > 1:
            if not strict:
                return False
            raise InvariantError(
                "load %d > 1 on compatible set %r"
                % (total, pair.labels_of(leaves)))
    return True


def check_balance(dual, n_components, n_pairs):
    """Twice the certificate objective must cover the final cut count."""
    d = dual.objective(n_components)
    if 2 * d < n_components - 1 - n_pairs:
        raise InvariantError(
            "certificate objective %d cannot certify %d cuts"
            % (d, n_components - 1 - n_pairs))
    return True
