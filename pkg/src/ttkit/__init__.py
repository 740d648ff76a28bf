"""ttkit: tensor-train compression toolkit for matrices and conv kernels.

Reshapes weight matrices and 2D/3D convolution kernels into higher-order
tensors, decomposes them into tensor trains with capped ranks, and accounts
for the resulting parameter and FLOP savings.  All indices are 0-based and
all arrays are row-major float64.
"""

__version__ = "0.1.0"

from .analysis import (
    ArchitectureSpec,
    CompressionReport,
    LayerSpec,
    RatioReport,
    TTLayerConfig,
    compression_ratio,
    conv3d_tt_params,
    count_params,
    flops_conv3d,
    linear_tt_params,
    load_architecture,
    suggest_ranks_degenerate,
    suggest_ranks_modewise,
    suggest_uniform_rank,
)
from .conv import conv3d, tt_conv3d_forward
from .errors import TTKitError
from .tensor import (
    contract_n1,
    matrix_rank,
    mode_unfold,
    read_tten,
    reshape,
    t_modes_matricize,
    write_tten,
)
from .tensorize import (
    Conv3dSpec,
    Conv3dTTKernel,
    TensorizeMap,
    TTMatrix,
    balanced_factorization,
    build_matrix_bijection,
    conv3d_tt_kernel_from_dense,
    detensorize_conv3d_kernel,
    detensorize_matrix,
    factor_filter,
    map_3d_filter_index,
    read_ttk3,
    recover_conv3d_kernel,
    tensorize_conv3d_kernel,
    tensorize_matrix,
    tt_matrix_from_dense,
    tt_matvec,
    write_ttk3,
)
from .tt import (
    TTTensor,
    max_tt_ranks,
    random_tt,
    read_ttcr,
    tt_element,
    tt_param_count,
    tt_reconstruct,
    tt_svd,
    write_ttcr,
)

__all__ = [
    "__version__",
    "TTKitError",
    # dense tensor ops
    "reshape",
    "mode_unfold",
    "t_modes_matricize",
    "contract_n1",
    "matrix_rank",
    "read_tten",
    "write_tten",
    # tensor train
    "TTTensor",
    "tt_element",
    "tt_reconstruct",
    "tt_svd",
    "tt_param_count",
    "max_tt_ranks",
    "random_tt",
    "read_ttcr",
    "write_ttcr",
    # tensorizing
    "TensorizeMap",
    "build_matrix_bijection",
    "tensorize_matrix",
    "detensorize_matrix",
    "TTMatrix",
    "tt_matrix_from_dense",
    "tt_matvec",
    "factor_filter",
    "map_3d_filter_index",
    "Conv3dSpec",
    "Conv3dTTKernel",
    "tensorize_conv3d_kernel",
    "detensorize_conv3d_kernel",
    "conv3d_tt_kernel_from_dense",
    "recover_conv3d_kernel",
    "balanced_factorization",
    "read_ttk3",
    "write_ttk3",
    # convolution
    "conv3d",
    "tt_conv3d_forward",
    # analysis
    "RatioReport",
    "conv3d_tt_params",
    "linear_tt_params",
    "compression_ratio",
    "suggest_ranks_degenerate",
    "suggest_ranks_modewise",
    "suggest_uniform_rank",
    "flops_conv3d",
    "TTLayerConfig",
    "LayerSpec",
    "ArchitectureSpec",
    "CompressionReport",
    "count_params",
    "load_architecture",
]
