"""Lossless compression for web-scale graphs with per-list random access."""

from ._kernels import IMPL as kernel_backend
from .codec import (
    EncoderParams,
    Handle,
    compute_blocks,
    decode_graph,
    encode_graph,
    neighbors,
    open_handle,
    stats,
)
from .errors import (
    CorruptStreamError,
    FormatError,
    UnsupportedOperationError,
    ValidationError,
    ZklError,
)
from .graphstore import Graph, generate_copying_graph, load_edge_list
from .intcode import HybridConfig

__version__ = "0.1.0"

__all__ = [
    "EncoderParams",
    "Graph",
    "Handle",
    "HybridConfig",
    "CorruptStreamError",
    "FormatError",
    "UnsupportedOperationError",
    "ValidationError",
    "ZklError",
    "compute_blocks",
    "decode_graph",
    "encode_graph",
    "generate_copying_graph",
    "kernel_backend",
    "load_edge_list",
    "neighbors",
    "open_handle",
    "stats",
]
