"""Exact search oracle, random instance generators, and the command line.

The console entry point wires the solver, the certificate checker, the
LP emitters, and the instance generators behind one ``rbmaf`` command.
Exit codes: 0 on success, 1 when a solver invariant fails, 2 on bad
usage or unreadable input.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import time
import warnings
from dataclasses import dataclass, field

from .dual_certificate import verify_dual_feasibility
from .forest_partition import is_feasible_maf
from .lp_toolkit import (
    build_compact_lp,
    build_exponential_lp,
    build_wu_ilp,
    fig_instances,
    write_lp_file,
    wu_gap_instance,
)
from .redblue_core import run
from .tree_model import (
    InvariantError,
    NewickError,
    OracleCapError,
    pair_from_newick,
    parse_newick,
    triple_compatible,
)

EXACT_CAP = 10
EXACT_CAP_ENV = "MAF_ORACLE_CAP"
_SPR_ATTEMPTS = 64


# ----------------------------------------------------------------------
# exact optimum by exhaustive partition search


def _path_masks(pair, t):
    """masks[i][j]: bit set of the tree nodes on the leaf i to j path."""
    tree = pair.tree(t)
    n = pair.n
    nodes = [pair.leaf_node(t, i) for i in range(n)]
    masks = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            top = tree.lca(nodes[i], nodes[j])
            m = 1 << top
            for v in (nodes[i], nodes[j]):
                while v != top:
                    m |= 1 << v
                    v = tree.parent[v]
            masks[i][j] = masks[j][i] = m
    return masks


def _bad_triples(pair):
    n = pair.n
    bad = set()
    for a in range(n):
        for b in range(a + 1, n):
            for c in range(b + 1, n):
                if not triple_compatible(pair, a, b, c):
                    bad.add((a, b, c))
    return bad


def _resolve_cap(partition_cap):
    cap = partition_cap
    if cap is None:
        cap = int(os.environ.get(EXACT_CAP_ENV, EXACT_CAP))
    if cap > EXACT_CAP:
        warnings.warn(
            "exact search allowed up to %d leaves; the partition count "
            "grows like the Bell numbers" % cap,
            RuntimeWarning, stacklevel=3)
    return cap


def exact_maf(pair, partition_cap=None):
    """Minimum edge deletions over all agreement forests, by exhaustion.

    Walks the set partitions of the leaves in restricted growth order.
    A block may grow only while all its leaf triples stay compatible
    and its spanned nodes stay disjoint from every other block in both
    trees; branches already using at least the best known number of
    blocks are cut.  Refuses more than ``partition_cap`` leaves
    (default 10, overridable through the MAF_ORACLE_CAP variable).
    """
    cap = _resolve_cap(partition_cap)
    n = pair.n
    if n > cap:
        raise OracleCapError(
            "exact search capped at %d leaves, got %d" % (cap, n))
    if n <= 2:
        return 0
    bad = _bad_triples(pair)
    pm1 = _path_masks(pair, 1)
    pm2 = _path_masks(pair, 2)
    leaf_bit1 = [1 << pair.leaf_node(1, i) for i in range(n)]
    leaf_bit2 = [1 << pair.leaf_node(2, i) for i in range(n)]
    best = n - 1
    members = []
    span1 = []
    span2 = []

    def grow(i):
        nonlocal best
        nblocks = len(members)
        if nblocks - 1 >= best:
            return
        if i == n:
            best = nblocks - 1
            return
        for k in range(nblocks):
            ms = members[k]
            fits = True
            for x in range(len(ms)):
                for y in range(x + 1, len(ms)):
                    if (ms[x], ms[y], i) in bad:
                        fits = False
                        break
                if not fits:
                    break
            if not fits:
                continue
            ns1 = span1[k] | pm1[ms[0]][i]
            ns2 = span2[k] | pm2[ms[0]][i]
            for j in range(nblocks):
                if j != k and (ns1 & span1[j] or ns2 & span2[j]):
                    fits = False
                    break
            if not fits:
                continue
            old1, old2 = span1[k], span2[k]
            ms.append(i)
            span1[k], span2[k] = ns1, ns2
            grow(i + 1)
            ms.pop()
            span1[k], span2[k] = old1, old2
        members.append([i])
        span1.append(leaf_bit1[i])
        span2.append(leaf_bit2[i])
        grow(i + 1)
        members.pop()
        span1.pop()
        span2.pop()

    grow(0)
    return best


# ----------------------------------------------------------------------
# random instances


class _Bud:
    """Mutable node used only while building or editing random trees."""

    __slots__ = ("left", "right", "parent", "label")

    def __init__(self, label=None):
        self.left = None
        self.right = None
        self.parent = None
        self.label = label


def _bud_newick(root):
    out = []
    stack = [(root, 0)]
    while stack:
        node, state = stack.pop()
        if node.label is not None:
            out.append(node.label)
        elif state == 0:
            out.append("(")
            stack.append((node, 1))
            stack.append((node.left, 0))
        elif state == 1:
            out.append(",")
            stack.append((node, 2))
            stack.append((node.right, 0))
        else:
            out.append(")")
    return "".join(out) + ";"


def _splice_above(host, graft, root):
    """Insert a new joint above ``host`` adopting ``graft`` as sibling."""
    joint = _Bud()
    joint.left = host
    joint.right = graft
    joint.parent = host.parent
    if host.parent is None:
        root = joint
    elif host.parent.left is host:
        host.parent.left = joint
    else:
        host.parent.right = joint
    host.parent = joint
    graft.parent = joint
    return root


def _uniform_bud(labels, rng):
    """Uniform rooted binary topology via random sequential insertion.

    Each new leaf attaches at one of the 2i-1 slots of the current
    i-leaf tree (one per node, counting the slot above the root), which
    makes every shape equally likely.
    """
    nodes = [_Bud(labels[0])]
    root = nodes[0]
    for lab in labels[1:]:
        leaf = _Bud(lab)
        host = nodes[rng.randrange(len(nodes))]
        root = _splice_above(host, leaf, root)
        nodes.append(host.parent)
        nodes.append(leaf)
    return root


def _bud_from_tree(tree):
    built = [None] * tree.n_nodes
    for v in range(tree.n_nodes):
        if tree.left[v] < 0:
            built[v] = _Bud(tree.labels[v])
        else:
            node = _Bud()
            node.left = built[tree.left[v]]
            node.right = built[tree.right[v]]
            node.left.parent = node
            node.right.parent = node
            built[v] = node
    return built


def _subtree_buds(node):
    out = []
    stack = [node]
    while stack:
        u = stack.pop()
        out.append(u)
        if u.label is None:
            stack.append(u.left)
            stack.append(u.right)
    return out


def _spr_once(newick, rng):
    """One subtree prune and regraft on a tree given as Newick text."""
    nodes = _bud_from_tree(parse_newick(newick))
    root = nodes[-1]
    moving = nodes[rng.randrange(len(nodes) - 1)]
    gone = moving.parent
    sib = gone.left if gone.right is moving else gone.right
    sib.parent = gone.parent
    if gone.parent is None:
        root = sib
    elif gone.parent.left is gone:
        gone.parent.left = sib
    else:
        gone.parent.right = sib
    hosts = _subtree_buds(root)
    host = hosts[rng.randrange(len(hosts))]
    root = _splice_above(host, moving, root)
    return _bud_newick(root)


def _canonical(newick):
    return parse_newick(newick).to_newick(canonical=True)


def random_pair(n, seed=0, mode="uniform", k=None):
    """Random tree pair, deterministic in (n, seed, mode, k).

    ``uniform`` draws two independent topologies, each uniform over the
    rooted binary shapes on the labels (leaves join at a uniformly
    chosen slot, including the one above the root).  ``k_rspr`` copies
    the first tree and applies ``k`` prune and regraft moves, retrying
    any move that recreates the topology it started from, so the true
    distance is at most ``k``; when no shape-changing move exists (two
    leaves) the move is skipped.  Randomness comes from
    ``random.Random(seed)`` (Mersenne Twister).
    """
    if n < 2:
        raise ValueError("need at least 2 leaves, got %d" % n)
    width = len(str(n))
    labels = ["L%0*d" % (width, i + 1) for i in range(n)]
    rng = random.Random(seed)
    if mode == "uniform":
        s1 = _bud_newick(_uniform_bud(labels, rng))
        s2 = _bud_newick(_uniform_bud(labels, rng))
    elif mode == "k_rspr":
        if k is None or k < 0:
            raise ValueError("k_rspr mode needs k >= 0")
        if k >= n:
            raise ValueError("k must stay below the leaf count")
        s1 = _bud_newick(_uniform_bud(labels, rng))
        s2 = s1
        for _ in range(k):
            before = _canonical(s2)
            for _attempt in range(_SPR_ATTEMPTS):
                cand = _spr_once(s2, rng)
                if _canonical(cand) != before:
                    s2 = cand
                    break
    else:
        raise ValueError("unknown mode %r" % mode)
    return pair_from_newick(s1, s2)


# ----------------------------------------------------------------------
# reports


@dataclass
class RunReport:
    """One instance's outcome, its certificate, and the optional truth."""

    instance: str
    value: int
    dual: int
    exact: int | None = None
    ratio_exact: float | None = None
    ratio_half: float | None = None
    timings: dict = field(default_factory=dict)

    def validate(self):
        """Check the approximation and certificate inequalities."""
        if self.dual < 0:
            raise InvariantError(
                "%s: negative lower bound %d" % (self.instance, self.dual))
        if self.value > 2 * self.dual:
            raise InvariantError(
                "%s: value %d exceeds twice the lower bound %d"
                % (self.instance, self.value, self.dual))
        if self.exact is not None:
            if self.dual > self.exact:
                raise InvariantError(
                    "%s: lower bound %d above the optimum %d"
                    % (self.instance, self.dual, self.exact))
            if self.value < self.exact:
                raise InvariantError(
                    "%s: value %d below the optimum %d"
                    % (self.instance, self.value, self.exact))
            if self.value > 2 * self.exact:
                raise InvariantError(
                    "%s: value %d exceeds twice the optimum %d"
                    % (self.instance, self.value, self.exact))
        return True

    def as_dict(self):
        return {
            "instance": self.instance,
            "value": self.value,
            "dual": self.dual,
            "exact": self.exact,
            "ratio_exact": self.ratio_exact,
            "ratio_half": self.ratio_half,
            "timings": dict(self.timings),
        }


def make_report(pair, instance="instance", want_exact=False, exact_cap=None):
    """Solve one pair, optionally compare against the exact optimum."""
    t0 = time.perf_counter()
    result = run(pair)
    timings = {"solve": time.perf_counter() - t0}
    exact = None
    if want_exact:
        t0 = time.perf_counter()
        exact = exact_maf(pair, exact_cap)
        timings["exact"] = time.perf_counter() - t0
    report = RunReport(
        instance=instance,
        value=result.value,
        dual=result.dual_objective,
        exact=exact,
        ratio_exact=(result.value / exact) if exact else None,
        ratio_half=(result.value / (2 * result.dual_objective)
                    if result.dual_objective else None),
        timings=timings,
    )
    report.validate()
    return report, result


def certificate_dict(result):
    """Lower bound certificate in the documented JSON shape."""
    return {
        "y": result.dual.as_dict(),
        "D": result.dual_objective,
        "lower_bound": result.dual_objective,
        "ratio_bound": result.ratio_bound,
    }


# ----------------------------------------------------------------------
# commands


def _read_tree_text(argument):
    """File path, or a literal Newick string when it looks like one."""
    if os.path.exists(argument):
        with open(argument, "r", encoding="utf-8") as handle:
            return handle.read()
    stripped = argument.strip()
    if stripped.endswith(";") and "(" in stripped:
        return stripped
    raise NewickError("no such file and not a Newick literal: %r" % argument)


def _load_pair(args):
    return pair_from_newick(
        _read_tree_text(args.tree1),
        _read_tree_text(args.tree2),
        add_rho=getattr(args, "add_rho", False),
    )


def _cmd_solve(args):
    pair = _load_pair(args)
    result = run(pair, record_snapshots=bool(args.trace))
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as handle:
            for event in result.trace:
                handle.write(json.dumps(event, sort_keys=True) + "\n")
    if args.json:
        payload = result.partition.to_json_dict()
        payload.update({
            "value": result.value,
            "dual": result.dual_objective,
            "ratio_bound": result.ratio_bound,
            "pairs": [[result.pair.labels[a], result.pair.labels[b]]
                      for a, b in result.pairslist],
            "iterations": len(result.iterations),
            "certificate": certificate_dict(result),
        })
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print("value %d" % result.value)
        print("dual lower bound %d" % result.dual_objective)
        if result.ratio_bound is not None:
            print("ratio bound %.3f" % result.ratio_bound)
        for block in result.components:
            print("component " + " ".join(block))
    return 0


def _cmd_exact(args):
    pair = _load_pair(args)
    print("exact %d" % exact_maf(pair, args.cap))
    return 0


def _cmd_check_dual(args):
    pair = _load_pair(args)
    seen = {"iterations": 0}

    def inspect(partition, dual, record):
        verify_dual_feasibility(pair, dual, partition)
        seen["iterations"] += 1

    result = run(pair, on_iteration=inspect)
    verify_dual_feasibility(pair, result.dual, result.partition)
    print("dual certificate feasible after each of %d iterations"
          % seen["iterations"])
    print("value %d lower bound %d" % (result.value, result.dual_objective))
    return 0


_LP_BUILDERS = {
    "exp": build_exponential_lp,
    "compact": build_compact_lp,
    "wu": build_wu_ilp,
}


def _cmd_emit_lp(args):
    pair = _load_pair(args)
    model = _LP_BUILDERS[args.kind](pair)
    write_lp_file(model, args.output)
    print("wrote %s: %d variables, %d constraints"
          % (args.output, len(model.variables), len(model.constraints)))
    return 0


def _cmd_gen(args):
    kind = args.kind
    if kind == "random":
        if args.n is None:
            raise ValueError("gen random needs --n")
        pair = random_pair(args.n, args.seed)
    elif kind == "krspr":
        if args.n is None or args.k is None:
            raise ValueError("gen krspr needs --n and --k")
        pair = random_pair(args.n, args.seed, mode="k_rspr", k=args.k)
    elif kind == "wu":
        pair = wu_gap_instance(2 if args.k is None else args.k)
    else:
        pair = fig_instances()[kind].pair
    prefix = args.out or kind
    path1 = prefix + "_t1.nwk"
    path2 = prefix + "_t2.nwk"
    with open(path1, "w", encoding="utf-8") as handle:
        handle.write(pair.t1.to_newick() + "\n")
    with open(path2, "w", encoding="utf-8") as handle:
        handle.write(pair.t2.to_newick() + "\n")
    print("wrote %s and %s" % (path1, path2))
    return 0


def _cmd_fuzz(args):
    failures = []
    for i in range(args.iters):
        seed_i = args.seed + i
        use_spr = args.mode == "krspr" or (args.mode == "mixed" and i % 2)
        if use_spr:
            k = 1 + i % max(1, args.n - 2)
            name = "r%d-n%d-s%d" % (k, args.n, seed_i)
            pair = random_pair(args.n, seed_i, mode="k_rspr", k=k)
        else:
            name = "u-n%d-s%d" % (args.n, seed_i)
            pair = random_pair(args.n, seed_i)
        try:
            report, result = make_report(
                pair, instance=name,
                want_exact=args.n <= args.exact_cap,
                exact_cap=args.exact_cap)
            if not is_feasible_maf(pair, result.partition):
                raise InvariantError("final forest is not an agreement forest")
        except (InvariantError, AssertionError) as error:
            failures.append("%s: %s" % (name, error))
    if failures:
        for line in failures[:20]:
            print("FAIL " + line, file=sys.stderr)
        print("%d of %d instances failed" % (len(failures), args.iters),
              file=sys.stderr)
        return 1
    print("fuzz ok: %d instances, n=%d, seed=%d, mode=%s"
          % (args.iters, args.n, args.seed, args.mode))
    return 0


def _cmd_bench(args):
    sizes = [int(s) for s in args.sizes.split(",") if s]
    previous = None
    print("%8s %10s %8s %8s %8s" % ("n", "time_s", "value", "dual", "ratio"))
    for n in sizes:
        pair = random_pair(n, args.seed)
        t0 = time.perf_counter()
        result = run(pair)
        elapsed = time.perf_counter() - t0
        ratio = "" if not previous else "%.2f" % (elapsed / previous)
        print("%8d %10.3f %8d %8d %8s"
              % (n, elapsed, result.value, result.dual_objective, ratio))
        previous = elapsed
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rbmaf",
        description="2-approximate maximum agreement forests "
                    "with dual lower bound certificates")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_pair_arguments(p):
        p.add_argument("tree1", help="first tree: Newick file or literal")
        p.add_argument("tree2", help="second tree: Newick file or literal")

    p = sub.add_parser("solve", help="run the 2-approximation")
    add_pair_arguments(p)
    p.add_argument("--add-rho", action="store_true",
                   help="augment both trees with a shared root leaf")
    p.add_argument("--trace", metavar="PATH",
                   help="write a JSONL event trace")
    p.add_argument("--json", action="store_true",
                   help="machine readable output")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("exact", help="exhaustive optimum (small instances)")
    add_pair_arguments(p)
    p.add_argument("--cap", type=int, default=None,
                   help="leaf count cap for the search (default 10)")
    p.set_defaults(func=_cmd_exact)

    p = sub.add_parser("check-dual",
                       help="re-verify the certificate after every iteration")
    add_pair_arguments(p)
    p.set_defaults(func=_cmd_check_dual)

    p = sub.add_parser("emit-lp", help="write an LP or ILP file")
    p.add_argument("kind", choices=("exp", "compact", "wu"))
    add_pair_arguments(p)
    p.add_argument("-o", "--output", required=True,
                   help="destination .lp file")
    p.set_defaults(func=_cmd_emit_lp)

    p = sub.add_parser("gen", help="write instance fixtures as Newick files")
    p.add_argument("kind", choices=("random", "krspr", "wu", "fig1", "fig9"))
    p.add_argument("--n", type=int, default=None, help="leaf count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=None,
                   help="moves for krspr, order for wu (even, at least 2)")
    p.add_argument("-o", "--out", default=None, help="output path prefix")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("fuzz", help="randomized sandwich checks")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("uniform", "krspr", "mixed"),
                   default="mixed")
    p.add_argument("--exact-cap", type=int, default=EXACT_CAP)
    p.set_defaults(func=_cmd_fuzz)

    p = sub.add_parser("bench", help="runtime scaling table")
    p.add_argument("--sizes", default="1000,2000,4000")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_bench)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvariantError, AssertionError) as error:
        print("invariant violation: %s" % error, file=sys.stderr)
        return 1
    except (NewickError, OracleCapError, ValueError, OSError) as error:
        print("error: %s" % error, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
