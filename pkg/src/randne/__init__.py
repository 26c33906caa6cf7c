"""Network embedding by iterative Gaussian random projection.

Builds low-dimensional node embeddings from high-order adjacency structure
with a seeded orthogonal random projection, supports incremental updates
under edge/node churn, column-parallel computation, and ships an evaluation
harness for reconstruction and link prediction.
"""

from .graph import (
    Graph,
    GraphDelta,
    apply_delta,
    generate_er,
    generate_sbm,
    load_delta_file,
    load_edge_list,
    spmm,
)
from .embed import (
    EmbeddingMatrix,
    ProjectionState,
    RngSpec,
    Weights,
    default_weight_grid,
    embed_static,
    gaussian_matrix,
    grid_search_weights,
    normalize_rows,
    orthogonalize,
    propagate,
    recombine,
)
from .dynamic import extend_for_new_nodes, update, update_and_recombine
from .parallel import ColumnPartition, embed_parallel, partition_columns
from .evaluate import (
    EdgeSplit,
    ScoredPairs,
    adamic_adar,
    auc,
    common_neighbors,
    enumerate_candidate_pairs,
    precision_at_k,
    score_pairs,
    split_edges,
)
from .errors import DataError, NumericError

__version__ = "0.1.0"
