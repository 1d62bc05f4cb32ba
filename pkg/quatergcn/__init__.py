"""
QuaterGCN - quaternionic Laplacians and quaternion graph convolutions

Spectral construction and verification of the quaternionic Laplacian for
weighted directed graphs, plus a quaternion GCN for node classification and
edge prediction.
"""

__version__ = "1.0.0"

from .core.config import Config, DsbmConfig, ExperimentSpec, ModelConfig
from .core.graph import Digraph, generate_dsbm, parse_edge_list
from .core.laplacian import build_quaternionic, propagation_matrix
from .core.quaternion import QMatrix, Quaternion, hermitian_eig
from .utils.logger import get_logger

__all__ = [
    "Config",
    "Digraph",
    "DsbmConfig",
    "ExperimentSpec",
    "ModelConfig",
    "QMatrix",
    "Quaternion",
    "build_quaternionic",
    "generate_dsbm",
    "get_logger",
    "hermitian_eig",
    "parse_edge_list",
    "propagation_matrix",
]
