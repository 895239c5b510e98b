"""List-decodable sparse mean estimation by difference-of-pairs filtering."""

from .core import (
    Dataset,
    DifferenceSet,
    EstimateList,
    MomentParams,
    PairGraph,
    ParameterError,
    SparseDirection,
    graph_moment,
    hk_truncate,
    two_k_norm,
)
from .dpfilter import difference_pairs, dp_filter, filter_potential, run_filter
from .estimator import estimate_list, ld_sparse_mean, min_list_error
from .graph import build_pair_graph, overlap_graph, prune, rounding
from .oracle import (
    AscentOracle,
    DirectionCertificate,
    ExactT2Oracle,
    certify_or_violate,
    sparse_moment_ascent,
    sparse_moment_max_exact_t2,
)

__version__ = "0.1.0"
