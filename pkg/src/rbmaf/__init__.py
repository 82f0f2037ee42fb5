"""Maximum agreement forests of rooted binary trees.

Core pieces: a factor-2 approximation built on iterative two-color
refinement with a matching dual lower-bound certificate, an exact
oracle for small inputs, and builders for three linear-programming
views of the problem together with integrality-gap instance families.
"""

from .tree_model import (
    InvariantError,
    NewickError,
    OracleCapError,
    RHO_LABEL,
    RootedBinaryTree,
    TreePair,
    make_pair,
    pair_from_newick,
    parse_newick,
    set_compatible,
    sets_overlap,
    spanned_nodes,
    triple_compatible,
)
from .forest_partition import (
    Partition,
    initial_partition,
    is_feasible_maf,
    is_K_feasible,
)
from .redblue_core import (
    BLUE,
    RED,
    WHITE,
    Coloring,
    IterationRecord,
    Pcs,
    RedBlueResult,
    classify_case,
    find_lowest_pcs,
    find_merge_pair,
    make_coloring,
    make_rb_compatible,
    make_splittable,
    merge_components,
    run,
    special_split,
    split,
)
from .dual_certificate import (
    DualState,
    check_balance,
    decrement_y,
    dual_objective,
    load,
    verify_dual_feasibility,
)
from .lp_toolkit import (
    LpModel,
    arborescence_leafsets,
    build_compact_graph,
    build_compact_lp,
    build_exponential_lp,
    build_wu_ilp,
    check_feasible_point,
    encode_lpstar_point,
    enumerate_compatible_sets,
    fig_instances,
    write_lp_file,
    wu_gap_fractional,
    wu_gap_instance,
)
from .cli_runner import RunReport, exact_maf, make_report, random_pair

__version__ = "0.1.0"

__all__ = [
    "InvariantError",
    "NewickError",
    "OracleCapError",
    "RHO_LABEL",
    "RootedBinaryTree",
    "TreePair",
    "make_pair",
    "pair_from_newick",
    "parse_newick",
    "set_compatible",
    "sets_overlap",
    "spanned_nodes",
    "triple_compatible",
    "Partition",
    "initial_partition",
    "is_feasible_maf",
    "is_K_feasible",
    "BLUE",
    "RED",
    "WHITE",
    "Coloring",
    "IterationRecord",
    "Pcs",
    "RedBlueResult",
    "classify_case",
    "find_lowest_pcs",
    "find_merge_pair",
    "make_coloring",
    "make_rb_compatible",
    "make_splittable",
    "merge_components",
    "run",
    "special_split",
    "split",
    "DualState",
    "check_balance",
    "decrement_y",
    "dual_objective",
    "load",
    "verify_dual_feasibility",
    "LpModel",
    "arborescence_leafsets",
    "build_compact_graph",
    "build_compact_lp",
    "build_exponential_lp",
    "build_wu_ilp",
    "check_feasible_point",
    "encode_lpstar_point",
    "enumerate_compatible_sets",
    "fig_instances",
    "write_lp_file",
    "wu_gap_fractional",
    "wu_gap_instance",
    "RunReport",
    "exact_maf",
    "make_report",
    "random_pair",
    "__version__",
]
