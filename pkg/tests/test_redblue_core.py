"""Solver loop: worked-instance goldens, op contracts, invariants."""

import pytest

from rbmaf import (
    DualState,
    InvariantError,
    Partition,
    classify_case,
    exact_maf,
    find_lowest_pcs,
    find_merge_pair,
    initial_partition,
    is_feasible_maf,
    is_K_feasible,
    make_coloring,
    make_rb_compatible,
    make_splittable,
    merge_components,
    pair_from_newick,
    run,
    special_split,
    split,
)

import naive
from conftest import corpus


def build_state(pair, parts_labels):
    """Partition from label blocks, stamped as iteration 1."""
    lab = pair.index_of
    part = Partition(pair)
    cid = next(iter(part.comps))
    part.split_component(cid, [[lab[x] for x in p] for p in parts_labels])
    part.begin_iteration(1)
    return part


# ----------------------------------------------------------------------
# worked instance goldens


def test_fig1_full_golden(fig1):
    res = run(fig1, record_snapshots=True)
    assert res.value == 4
    assert res.dual_objective == 2
    assert res.components == (("b1", "r1"), ("b2",), ("r2",),
                              ("w1", "w2"), ("w3",))
    assert res.pairslist == [(fig1.index_of["r1"], fig1.index_of["b1"])]
    assert res.dual.as_dict() == {"t1:6": -1, "t2:2": -1, "t2:10": -1}
    assert res.ratio_bound == 2.0
    assert res.forest is res.partition

    assert len(res.iterations) == 1
    rec = res.iterations[0]
    assert (rec.pcs_node, rec.condition, rec.case) == (6, "a", 1)
    assert (rec.p0, rec.p1, rec.p2, rec.p3) == (1, 2, 2, 6)
    assert (rec.chi, rec.t, rec.n_stars) == (1, 0, 3)
    assert (rec.delta_dual, rec.delta_primal) == (2, 4)
    assert rec.pair_added and rec.n_pairs == 1
    assert rec.dual_objective == 2


def test_fig1_trace_events(fig1):
    trace = run(fig1, record_snapshots=True).trace
    events = [e["event"] for e in trace]
    assert events == ["init", "iteration_start", "stage", "snapshot",
                      "stage", "snapshot", "stage", "snapshot",
                      "merge_pair", "iteration_end", "merges", "final"]
    start = trace[1]
    assert start["pcs_node"] == 6 and start["condition"] == "a"
    assert start["red"] == ["r1", "r2"] and start["blue"] == ["b1", "b2"]
    rb = trace[2]
    assert rb["stage"] == "make_rb_compatible" and rb["nodes"] == [2]
    assert trace[3]["components"] == [["b1", "r1"],
                                      ["b2", "r2", "w1", "w2", "w3"]]
    assert trace[4]["stage"] == "make_splittable" and trace[4]["nodes"] == []
    sp = trace[6]
    assert sp["stage"] == "split" and sp["chi"] == 1 and sp["t"] == 0
    assert sp["special"]["node"] == 10 and sp["special"]["branch"] == 2
    assert trace[7]["components"] == [["b1"], ["b2"], ["r1"], ["r2"],
                                      ["w1", "w2"], ["w3"]]
    assert trace[8] == {"event": "merge_pair", "x1": "r1", "x2": "b1"}
    end = trace[9]
    assert end["sizes"] == [1, 2, 2, 6] and end["stars"] == 3
    assert trace[10]["pairs"] == [["r1", "b1"]]
    assert trace[11]["value"] == 4 and trace[11]["n_components"] == 5


def test_fig9_golden(fig9):
    res = run(fig9)
    assert res.value == 5
    assert res.dual_objective == 3
    assert res.components == (("1",), ("2",), ("3",), ("4", "6", "7"),
                              ("5",), ("8",))
    assert res.dual.as_dict() == {"t1:4": -1, "t1:12": -1, "t2:2": -1}
    assert [(r.pcs_node, r.condition, r.case) for r in res.iterations] == \
        [(4, "c", 3), (12, "c", 3)]
    assert res.value <= 2 * exact_maf(fig9) <= 2 * res.value


def test_identical_trees_solve_trivially():
    pair = pair_from_newick("((a,(b,c)),d);", "((a,(b,c)),d);")
    res = run(pair)
    assert res.value == 0
    assert res.dual_objective == 0
    assert res.ratio_bound is None
    assert len(res.components) == 1
    assert res.iterations == []


# ----------------------------------------------------------------------
# single ops on hand-built states


def test_find_lowest_pcs_conditions(fig1, fig9):
    assert find_lowest_pcs(initial_partition(fig1)).node == 6
    assert find_lowest_pcs(initial_partition(fig1)).condition == "a"
    assert find_lowest_pcs(initial_partition(fig9)).node == 4
    assert find_lowest_pcs(initial_partition(fig9)).condition == "c"
    final = run(fig1).partition
    assert find_lowest_pcs(final) is None


def test_make_coloring_at_fig1_pcs(fig1):
    part = initial_partition(fig1)
    coloring = make_coloring(part, 6)
    reds = sorted(fig1.labels[i] for i in coloring.red)
    blues = sorted(fig1.labels[i] for i in coloring.blue)
    whites = sorted(fig1.labels[i] for i in coloring.white)
    assert reds == ["r1", "r2"]
    assert blues == ["b1", "b2"]
    assert whites == ["w1", "w2", "w3"]
    assert coloring.node1 == 6


def test_case3_state_walkthrough(fig1):
    part = build_state(fig1, [["r1"], ["b1", "b2", "w1", "r2", "w2"], ["w3"]])
    pcs = find_lowest_pcs(part)
    assert (pcs.node, pcs.condition) == (6, "c")
    coloring = make_coloring(part, pcs.node)
    part.refresh_annotations(coloring)
    assert classify_case(part, coloring) == 3
    dual = DualState(fig1)
    dual.star(1, pcs.node)
    assert make_rb_compatible(part, dual) == []
    assert make_splittable(part, dual) == [5]
    assert part.label_sets() == (("b1", "r2", "w2"), ("b2", "w1"),
                                 ("r1",), ("w3",))
    pairs = []
    chi, pair_added, special = split(part, dual, coloring, pairs)
    assert (chi, pair_added, special) == (0, False, None)
    assert part.label_sets() == tuple(
        (x,) for x in ["b1", "b2", "r1", "r2", "w1", "w2", "w3"])
    mp = find_merge_pair(part)
    assert mp == (fig1.index_of["b2"], fig1.index_of["b1"])
    assert dual.as_dict() == {"t1:6": -1, "t2:5": -1}
    merge_components(part, [mp])
    assert part.label_sets()[0] == ("b1", "b2")


def test_case2_state_walkthrough(fig1):
    part = build_state(fig1, [["b1"], ["b2", "w1"], ["r1", "r2", "w2", "w3"]])
    pcs = find_lowest_pcs(part)
    assert (pcs.node, pcs.condition) == (6, "b")
    coloring = make_coloring(part, pcs.node)
    part.refresh_annotations(coloring)
    assert classify_case(part, coloring) == 2
    dual = DualState(fig1)
    dual.star(1, pcs.node)
    assert make_rb_compatible(part, dual) == []
    assert make_splittable(part, dual) == [9]
    pairs = []
    split(part, dual, coloring, pairs)
    assert part.label_sets() == tuple(
        (x,) for x in ["b1", "b2", "r1", "r2", "w1", "w2", "w3"])
    mp = find_merge_pair(part)
    assert mp == (fig1.index_of["r2"], fig1.index_of["r1"])


def test_special_split_four_way_golden(fig1):
    """The worked four-way replacement of the tricolored block."""
    part = build_state(fig1, [["b1", "r1"],
                              ["b2", "w1", "r2", "w2", "w3"]])
    coloring = make_coloring(part, 6)
    part.refresh_annotations(coloring)
    big = next(c.id for c in part.comps.values() if c.size == 5)
    dual = DualState(fig1)
    pairs = []
    chi, pair_added, node, branch = special_split(
        part, dual, coloring, big, pairs)
    assert (chi, pair_added, node, branch) == (1, False, 10, 2)
    assert pairs == []
    assert part.label_sets() == (("b1", "r1"), ("b2",), ("r2",),
                                 ("w1", "w2"), ("w3",))
    assert dual.as_dict() == {"t2:10": -1}


def test_full_split_then_merge_reaches_same_family(fig1):
    """Splitting everything and undoing the remembered pair agrees with
    the special-split picture of the same state."""
    part = build_state(fig1, [["b1", "r1"],
                              ["b2", "w1", "r2", "w2", "w3"]])
    coloring = make_coloring(part, 6)
    part.refresh_annotations(coloring)
    dual = DualState(fig1)
    pairs = []
    chi, pair_added, special = split(part, dual, coloring, pairs)
    assert chi == 1 and special[1] == 10 and special[2] == 2
    assert len(part) == 6
    if not pair_added:
        mp = find_merge_pair(part)
        assert mp is not None
        pairs.append(mp)
    merge_components(part, pairs)
    assert part.label_sets() == (("b1", "r1"), ("b2",), ("r2",),
                                 ("w1", "w2"), ("w3",))


def test_special_split_rejects_non_tricolored(fig1):
    part = build_state(fig1, [["b1", "r1"],
                              ["b2", "w1", "r2", "w2", "w3"]])
    coloring = make_coloring(part, 6)
    part.refresh_annotations(coloring)
    small = next(c.id for c in part.comps.values() if c.size == 2)
    with pytest.raises(InvariantError):
        special_split(part, DualState(fig1), coloring, small, [])


def test_split_top_guard(fig1):
    part = build_state(fig1, [["b1", "r1"],
                              ["b2", "w1", "r2", "w2", "w3"]])
    coloring = make_coloring(part, 6)
    part.refresh_annotations(coloring)
    with pytest.raises(InvariantError):
        split(part, DualState(fig1), coloring, [], top_cid=None)


def test_merge_components_empty_list_is_noop(fig1):
    part = initial_partition(fig1)
    before = part.label_sets()
    merge_components(part, [])
    assert part.label_sets() == before


# ----------------------------------------------------------------------
# invariants over a seeded corpus


def test_records_satisfy_ledger_identities():
    for name, pair in corpus(8, 40, base_seed=900):
        res = run(pair)
        for rec in res.iterations:
            assert 2 * rec.delta_dual >= rec.delta_primal, name
            if rec.case == 1:
                assert rec.p3 - rec.p2 == (rec.p2 - rec.p0) + 1 + 2 * rec.chi + rec.t, name
            else:
                assert rec.p1 == rec.p0, name
                assert rec.chi == 0, name
                assert rec.p3 - rec.p2 == (rec.p2 - rec.p0) + 2, name


def test_case_matches_condition_everywhere():
    mapping = {"a": 1, "b": 2, "c": 3}
    seen = set()
    for name, pair in corpus(9, 60, base_seed=50):
        for rec in run(pair).iterations:
            assert rec.case == mapping[rec.condition], name
            seen.add(rec.case)
    assert seen == {1, 2, 3}


def test_k_feasible_after_every_iteration():
    for name, pair in corpus(8, 25, base_seed=321):
        t1 = pair.t1

        def check(partition, dual, record):
            colored = [pair.leaf_index1[v]
                       for v in t1.leaves_below(record.pcs_node)]
            assert is_K_feasible(pair, partition, colored), name

        run(pair, on_iteration=check)


def test_colored_leaves_stay_together():
    """Once two colored leaves share a block at an iteration end, they
    share a block in every later snapshot and in the final forest."""
    for name, pair in corpus(12, 20, base_seed=77):
        t1 = pair.t1
        stuck = []

        def check(partition, dual, record):
            colored = [pair.leaf_index1[v]
                       for v in t1.leaves_below(record.pcs_node)]
            for i, x in enumerate(colored):
                for y in colored[i + 1:]:
                    if partition.leaf_comp[x] == partition.leaf_comp[y]:
                        stuck.append((x, y))
            for x, y in stuck:
                assert partition.leaf_comp[x] == partition.leaf_comp[y], name

        res = run(pair, on_iteration=check)
        for x, y in stuck:
            assert res.partition.leaf_comp[x] == res.partition.leaf_comp[y], name


def test_final_forests_feasible_small_corpus():
    for name, pair in corpus(7, 30, base_seed=1234):
        res = run(pair)
        assert is_feasible_maf(pair, res.partition), name
        blocks = [list(c.leaves) for c in res.partition.comps.values()]
        assert naive.naive_feasible(pair, blocks), name
        assert res.value <= 2 * res.dual_objective, name
