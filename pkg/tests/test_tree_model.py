"""Tree structure, Newick parsing, and compatibility predicates."""

from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from rbmaf import (
    NewickError,
    RHO_LABEL,
    make_pair,
    pair_from_newick,
    parse_newick,
    random_pair,
    set_compatible,
    sets_overlap,
    spanned_nodes,
    triple_compatible,
)

import naive


def test_postorder_layout_by_hand():
    t = parse_newick("((a,b),c);")
    assert t.n_nodes == 5
    assert t.root == 4
    assert t.labels == ["a", "b", None, "c", None]
    assert t.parent == [2, 2, 4, 4, -1]
    assert t.left == [-1, -1, 0, -1, 2]
    assert t.right == [-1, -1, 1, -1, 3]
    assert t.depth == [2, 2, 1, 1, 0]
    assert t.subtree_min == [0, 1, 0, 3, 0]
    assert t.leaf_ids == [0, 1, 3]


def test_newick_roundtrip_preserves_shape():
    text = "((((b1,b2),(r1,r2)),(w1,w2)),w3);"
    assert parse_newick(text).to_newick() == text


def test_canonical_newick_is_order_insensitive():
    a = parse_newick("((b,a),c);").to_newick(canonical=True)
    b = parse_newick("(c,(a,b));").to_newick(canonical=True)
    assert a == b == "((a,b),c);"


@pytest.mark.parametrize("text", [
    "",
    ";",
    "(a,b,c);",
    "(a,(b));",
    "(a,a);",
    "(a,b);extra",
    "((a,b);",
    "(a,);",
])
def test_bad_newick_rejected(text):
    with pytest.raises(NewickError):
        parse_newick(text)


def test_missing_semicolon_tolerated():
    assert parse_newick("(a,b)").to_newick() == "(a,b);"


def test_lca_and_ancestor_against_naive(fig1, fig9):
    for pair in (fig1, fig9):
        for t in (1, 2):
            tree = pair.tree(t)
            nodes = range(tree.n_nodes)
            for u, v in combinations(nodes, 2):
                assert tree.lca(u, v) == naive.naive_lca(tree, u, v)
            for a in nodes:
                for v in nodes:
                    assert tree.is_ancestor(a, v) == naive.naive_is_ancestor(tree, a, v)


def test_leaves_below_against_naive(fig1):
    for t in (1, 2):
        tree = fig1.tree(t)
        for v in range(tree.n_nodes):
            assert sorted(tree.leaves_below(v)) == naive.naive_leaves_below(tree, v)


@settings(max_examples=40, deadline=None)
@given(st.integers(3, 10), st.integers(0, 10_000))
def test_random_tree_properties(n, seed):
    pair = random_pair(n, seed)
    for t in (1, 2):
        tree = pair.tree(t)
        assert tree.to_newick() == parse_newick(tree.to_newick()).to_newick()
        for u, v in combinations(range(tree.n_nodes), 2):
            assert tree.lca(u, v) == tree.lca(v, u) == naive.naive_lca(tree, u, v)


def test_pair_indexing(fig1):
    assert fig1.n == 7
    assert fig1.labels == sorted(fig1.labels)
    for i, lab in enumerate(fig1.labels):
        assert fig1.index_of[lab] == i
        for t in (1, 2):
            node = fig1.leaf_node(t, i)
            assert fig1.tree(t).labels[node] == lab


def test_rho_augmentation():
    pair = pair_from_newick("((a,b),c);", "(a,(b,c));", add_rho=True)
    assert pair.n == 4
    assert RHO_LABEL in pair.labels
    for t in (1, 2):
        tree = pair.tree(t)
        rho = pair.leaf_node(t, pair.index_of[RHO_LABEL])
        assert tree.parent[rho] == tree.root


def test_rho_label_collision_rejected():
    with pytest.raises(NewickError):
        pair_from_newick("(rho,b);", "(rho,b);", add_rho=True)


def test_mismatched_leaf_sets_rejected():
    with pytest.raises(NewickError):
        pair_from_newick("(a,b);", "(a,c);")


def test_triple_compatible_against_naive(fig1, fig9):
    for pair in (fig1, fig9):
        for a, b, c in combinations(range(pair.n), 3):
            assert triple_compatible(pair, a, b, c) == \
                naive.naive_triple_compatible(pair, a, b, c)


def test_known_incompatible_triple(fig1):
    bad = [fig1.index_of[x] for x in ("b2", "r2", "w2")]
    assert not triple_compatible(fig1, *bad)
    good = [fig1.index_of[x] for x in ("b2", "r2", "w3")]
    assert triple_compatible(fig1, *good)


def test_set_compatible_against_naive(fig1):
    for size in range(1, 6):
        for subset in combinations(range(fig1.n), size):
            assert set_compatible(fig1, subset) == \
                naive.naive_set_compatible(fig1, subset)


def test_set_compatible_trivial_cases(fig1):
    assert set_compatible(fig1, [0])
    assert set_compatible(fig1, [0, 3])
    pair = random_pair(6, 1)
    same = pair_from_newick(pair.t1.to_newick(), pair.t1.to_newick())
    assert set_compatible(same, range(6))


def test_spanned_nodes_against_naive(fig1, fig9):
    for pair in (fig1, fig9):
        for size in (1, 2, 3, 4):
            for subset in combinations(range(pair.n), size):
                for t in (1, 2):
                    assert spanned_nodes(pair, t, subset) == \
                        naive.naive_spanned(pair, t, subset)


def test_sets_overlap_matches_span_intersection(fig1):
    pool = list(combinations(range(fig1.n), 2))
    for a in pool[:12]:
        for b in pool[:12]:
            if set(a) & set(b):
                continue
            expect = any(
                bool(naive.naive_spanned(fig1, t, a) & naive.naive_spanned(fig1, t, b))
                for t in (1, 2))
            assert sets_overlap(fig1, a, b) == expect


def test_single_leaf_pair_supported():
    pair = pair_from_newick("a;", "a;")
    assert pair.n == 1
    assert make_pair(pair.t1, pair.t2).labels == ["a"]
