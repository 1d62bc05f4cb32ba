"""Quaternionic, classical and sign-magnetic graph Laplacians.

``U`` keeps the entries with ``u <= v`` of its argument and ``L`` those with
``u >= v``; the diagonal is irrelevant after the Hadamard products because
stored graphs have no self-loops. Sign tests are exact comparisons on the
stored weights.
"""

from dataclasses import dataclass, replace
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from ..utils.formats import format_complex_matrix, format_qmatrix, format_real_matrix
from ..utils.logger import get_logger
from .errors import InvalidConfigError, IsolatedNodeError
from .graph import Digraph
from .quaternion import QMatrix

logger = get_logger("laplacian")

Matrices = Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]

MATRIX_KINDS = ("quaternionic", "quaternionic-norm", "propagation", "classical", "sign-magnetic")


def _upper(m: np.ndarray) -> np.ndarray:
    return np.triu(m)


def _lower(m: np.ndarray) -> np.ndarray:
    return np.tril(m)


def _topology(a: np.ndarray) -> Matrices:
    t = np.sign(np.abs(a))
    o = t * t.T
    n = np.sign(np.abs(a - a.T))
    r = np.sign(np.abs(a) - np.abs(a.T))
    return t, o, n, r


def _h_components(t: np.ndarray, o: np.ndarray, n: np.ndarray, r: np.ndarray) -> Matrices:
    ones = np.ones_like(t)
    h0 = ones - n
    h1 = r * (ones - o)
    h2 = o * n * (_upper(t) - _lower(t.T))
    return h0, h1, h2, -h2


def _symmetrized(a: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    as1 = (a + a.T) / 2
    as2 = (_upper(a) + _lower(a.T)) / 2
    as3 = (_lower(a) + _upper(a.T)) / 2
    return as1, as2, as3


def _assemble_hermitian(h: Matrices, sym: Tuple[np.ndarray, np.ndarray, np.ndarray]) -> Tuple[QMatrix, np.ndarray]:
    h0, h1, h2, h3 = h
    as1, as2, as3 = sym
    return QMatrix(as1 * h0, as1 * h1, as2 * h2, as3 * h3), np.abs(as1).sum(axis=1)


def _quaternionic_hermitian(a: np.ndarray) -> Tuple[QMatrix, np.ndarray]:
    """``H`` and the degree vector ``|A1s| e`` for a raw adjacency (self-loops allowed)."""
    return _assemble_hermitian(_h_components(*_topology(a)), _symmetrized(a))


def _inverse_sqrt_degrees(degrees: np.ndarray) -> np.ndarray:
    zero = np.flatnonzero(degrees <= 0)
    if zero.size:
        raise IsolatedNodeError(int(zero[0]))
    return 1.0 / np.sqrt(degrees)


def _self_looped(g: Digraph) -> np.ndarray:
    return g.adjacency + np.eye(g.n)


def topology_matrices(g: Digraph) -> Matrices:
    """``(T, O, N, R)``: edge pattern, digons, non-symmetric pairs, dominant direction."""
    return _topology(g.adjacency)


def h_components(g: Digraph, t: np.ndarray, o: np.ndarray, n: np.ndarray, r: np.ndarray) -> Matrices:
    """``(H0, H1, H2, H3)`` from the topology matrices of ``g``."""
    return _h_components(t, o, n, r)


def symmetrized_adjacencies(g: Digraph) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(A1s, A2s, A3s)``."""
    return _symmetrized(g.adjacency)


@dataclass(frozen=True, eq=False)
class LaplacianBundle:
    """Every intermediate of the quaternionic Laplacian for one graph."""

    T: np.ndarray
    O: np.ndarray  # noqa: E741
    N: np.ndarray
    R: np.ndarray
    H0: np.ndarray
    H1: np.ndarray
    H2: np.ndarray
    H3: np.ndarray
    As1: np.ndarray
    As2: np.ndarray
    As3: np.ndarray
    Dbar: np.ndarray
    Hq: QMatrix
    Lq: QMatrix
    Lq_norm: Optional[QMatrix] = None


def build_quaternionic(g: Digraph) -> LaplacianBundle:
    """Build ``Hq = A1s(H0 + i H1) + j A2s H2 + k A3s H3`` and ``Lq = Diag(Dbar) - Hq``.

    ``Lq_norm`` is filled in when every degree is positive.
    """
    topology = _topology(g.adjacency)
    h = _h_components(*topology)
    sym = _symmetrized(g.adjacency)
    hq, dbar = _assemble_hermitian(h, sym)
    lq = QMatrix.from_real(np.diag(dbar)) - hq

    bundle = LaplacianBundle(*topology, *h, *sym, dbar, hq, lq)
    if np.all(dbar > 0):
        bundle = replace(bundle, Lq_norm=normalize(bundle))
    else:
        logger.debug("normalized_laplacian_skipped", isolated=int(np.count_nonzero(dbar == 0)))
    return bundle


def normalize(bundle: LaplacianBundle) -> QMatrix:
    """``I - Dbar^{-1/2} Hq Dbar^{-1/2}``; unit diagonal by construction."""
    d = _inverse_sqrt_degrees(bundle.Dbar)
    return QMatrix.identity(len(d)) - bundle.Hq.scale(np.outer(d, d))


def propagation_matrix(g: Digraph) -> QMatrix:
    """Renormalized ``D~^{-1/2} H~ D~^{-1/2}`` built from ``A + I``."""
    hq, degrees = _quaternionic_hermitian(_self_looped(g))
    d = _inverse_sqrt_degrees(degrees)
    return hq.scale(np.outer(d, d))


def classical_laplacian(g: Digraph, normalized: bool = False) -> np.ndarray:
    """``D - As`` (or ``I - D^{-1/2} As D^{-1/2}``) on ``As = (A + A^T) / 2``."""
    a_s = (g.adjacency + g.adjacency.T) / 2
    degrees = np.abs(a_s).sum(axis=1)
    if not normalized:
        return np.diag(degrees) - a_s
    d = _inverse_sqrt_degrees(degrees)
    return np.eye(g.n) - a_s * np.outer(d, d)


def classical_propagation_matrix(g: Digraph) -> QMatrix:
    a = _self_looped(g)
    a_s = (a + a.T) / 2
    d = _inverse_sqrt_degrees(np.abs(a_s).sum(axis=1))
    return QMatrix.from_real(a_s * np.outer(d, d))


@dataclass(frozen=True, eq=False)
class SignMagneticBundle:
    Hsigma: np.ndarray
    Lsigma: np.ndarray
    Dbar: np.ndarray


def _sign_magnetic_hermitian(a: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    a_s = (a + a.T) / 2
    n = np.sign(np.abs(a - a.T))
    r = np.sign(np.abs(a) - np.abs(a.T))
    return a_s * (np.ones_like(a) - n + 1j * r), np.abs(a_s).sum(axis=1)


def sign_magnetic_laplacian(g: Digraph) -> SignMagneticBundle:
    """``Hs = As (ee^T - N + i R)`` and ``Ls = Diag(Dbar) - Hs``."""
    h_sigma, dbar = _sign_magnetic_hermitian(g.adjacency)
    return SignMagneticBundle(h_sigma, np.diag(dbar) - h_sigma, dbar)


def sign_magnetic_propagation_matrix(g: Digraph) -> QMatrix:
    h_sigma, degrees = _sign_magnetic_hermitian(_self_looped(g))
    d = _inverse_sqrt_degrees(degrees)
    return QMatrix.from_complex(h_sigma * np.outer(d, d))


def sign_magnetic_decomposition(g: Digraph) -> QMatrix:
    """``Hs (ee^T - O) + O Hm`` with ``Hm = A2s H2' + A3s H3'`` and ``H2' = N (U(T) - L(T^T))``.

    Equals ``Hq`` whenever the graph has no symmetric digons.
    """
    t, o, n, _ = _topology(g.adjacency)
    _, as2, as3 = _symmetrized(g.adjacency)
    h_sigma, _ = _sign_magnetic_hermitian(g.adjacency)
    h2_prime = n * (_upper(t) - _lower(t.T))
    outside = h_sigma * (np.ones_like(o) - o)
    return QMatrix(outside.real, outside.imag, o * as2 * h2_prime, o * as3 * -h2_prime)


PROPAGATION_BUILDERS: Dict[str, Callable[[Digraph], QMatrix]] = {
    "quaternionic": propagation_matrix,
    "classical": classical_propagation_matrix,
    "sign-magnetic": sign_magnetic_propagation_matrix,
}


def propagation_for(g: Digraph, laplacian: str) -> QMatrix:
    """Propagation matrix consumed by the engine for the named Laplacian."""
    try:
        builder = PROPAGATION_BUILDERS[laplacian]
    except KeyError:
        raise InvalidConfigError(f"unknown laplacian '{laplacian}' (choose from {', '.join(PROPAGATION_BUILDERS)})")
    return builder(g)


def matrix_text(g: Digraph, kind: str) -> str:
    """Text rendering of one of :data:`MATRIX_KINDS` for the ``laplacian`` command."""
    if kind == "quaternionic":
        return format_qmatrix(build_quaternionic(g).Lq)
    if kind == "quaternionic-norm":
        bundle = build_quaternionic(g)
        return format_qmatrix(bundle.Lq_norm if bundle.Lq_norm is not None else normalize(bundle))
    if kind == "propagation":
        return format_qmatrix(propagation_matrix(g))
    if kind == "classical":
        return format_real_matrix(classical_laplacian(g))
    if kind == "sign-magnetic":
        return format_complex_matrix(sign_magnetic_laplacian(g).Lsigma)
    raise InvalidConfigError(f"unknown matrix kind '{kind}' (choose from {', '.join(MATRIX_KINDS)})")
