"""Sparse versatile Graph-Informed layers with a dense reference oracle."""

from .dense_reference import (
    assemble_w_tilde,
    constrained_dense_equivalence,
    dense_memory_count,
    forward_dense,
    sparse_memory_count,
)
from .errors import (
    DivergenceError,
    DuplicateEntry,
    GIError,
    GraphFormatError,
    IntegrityError,
    InvalidValue,
    MalformedDict,
    SelfLoopWarning,
    ShapeError,
)
from .gi_layer import (
    GILayer,
    GILayerConfig,
    GILayerParams,
    activation_derivative,
    apply_activation,
    simple_form_forward,
)
from .ginn_model import (
    GinnModel,
    TrainConfig,
    load_checkpoint,
    model_forward,
    save_checkpoint,
    sgd_step,
    train_mse,
)
from .sparse_adjacency import (
    SparseAdjacency,
    add_scaled_selfloops,
    as_adjacency,
    from_dict,
    from_edge_list,
    sparse2dict,
    transpose_apply,
)

__version__ = "0.1.0"
