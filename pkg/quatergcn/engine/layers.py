"""Quaternion graph convolution over four real channels.

A quaternion tensor is a real ``torch.Tensor`` of shape ``(4, rows, cols)``
holding the real, ``i``, ``j`` and ``k`` parts. Products go through the same
Hamilton table as :mod:`quatergcn.core.quaternion`, so autograd sees sixteen
real matrix products.
"""

import math
from typing import List, Optional

import numpy as np
import torch
from torch import nn

from ..core.errors import ShapeError
from ..core.quaternion import QMatrix, hamilton

DTYPE = torch.float64


def to_tensor(q: QMatrix) -> torch.Tensor:
    """``(4, rows, cols)`` float64 tensor of a quaternion matrix."""
    return torch.from_numpy(q.stacked()).to(DTYPE)


def to_qmatrix(t: torch.Tensor) -> QMatrix:
    return QMatrix(*t.detach().cpu().numpy())


def embed_features(x: np.ndarray) -> torch.Tensor:
    """Real features in the real channel, zeros in ``i``, ``j``, ``k``."""
    real = torch.as_tensor(np.asarray(x, dtype=np.float64), dtype=DTYPE)
    return torch.stack([real] + [torch.zeros_like(real)] * 3)


def quaternion_matmul(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    if a.shape[0] != 4 or b.shape[0] != 4 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"cannot multiply quaternion tensors of shapes {tuple(a.shape)} and {tuple(b.shape)}")
    return torch.stack(hamilton(a.unbind(0), b.unbind(0), torch.matmul))


def chebyshev_filter_response(theta0: float, l_norm: QMatrix, x: QMatrix) -> QMatrix:
    """First-order filter ``theta0 (2I - L_norm) x``; reference for the layer algebra."""
    if l_norm.rows != l_norm.cols or l_norm.cols != x.rows:
        raise ShapeError(f"cannot filter a {x.shape} signal with a {l_norm.shape} Laplacian")
    two_i = QMatrix.from_real(2.0 * np.eye(l_norm.rows))
    return ((two_i - l_norm) @ x).scale(theta0)


def split_activation(z: torch.Tensor) -> torch.Tensor:
    """ReLU on every channel independently."""
    return torch.relu(z)


def qconv(p: torch.Tensor, x: torch.Tensor, theta: torch.Tensor, activation: bool = True) -> torch.Tensor:
    """``phi(P X Theta)`` with quaternion products, ``X`` on the left of ``Theta``."""
    if p.shape[-1] != x.shape[-2]:
        raise ShapeError(f"propagation matrix {tuple(p.shape[1:])} does not match features {tuple(x.shape[1:])}")
    z = quaternion_matmul(quaternion_matmul(p, x), theta)
    return split_activation(z) if activation else z


def unwind(z: torch.Tensor) -> torch.Tensor:
    """``(4, n, f) -> (n, 4f)`` as ``[real | i | j | k]``."""
    return torch.cat(z.unbind(0), dim=1)


def fold(u: torch.Tensor) -> torch.Tensor:
    """Inverse of :func:`unwind`."""
    n, width = u.shape
    if width % 4:
        raise ShapeError(f"cannot fold width {width} into four channels")
    return u.reshape(n, 4, width // 4).permute(1, 0, 2)


def node_head(u: torch.Tensor, w: torch.Tensor) -> torch.Tensor:
    """Logits ``U W``; softmax lives in the loss."""
    if u.shape[1] != w.shape[0]:
        raise ShapeError(f"embedding width {u.shape[1]} does not match readout rows {w.shape[0]}")
    return u @ w


def pair_embeddings(u: torch.Tensor, pairs: torch.Tensor) -> torch.Tensor:
    """Rows ``[U_u | U_v]`` for every ordered pair."""
    if pairs.numel() and (pairs.min() < 0 or pairs.max() >= u.shape[0]):
        raise ShapeError(f"pair index out of range for {u.shape[0]} nodes")
    return torch.cat([u[pairs[:, 0]], u[pairs[:, 1]]], dim=1)


def edge_head(u: torch.Tensor, pairs: torch.Tensor, w: torch.Tensor) -> torch.Tensor:
    return node_head(pair_embeddings(u, pairs), w)


def _uniform(shape: tuple, bound: float, generator: Optional[torch.Generator]) -> torch.Tensor:
    return (torch.rand(shape, generator=generator, dtype=DTYPE) * 2.0 - 1.0) * bound


class QuaternionConv(nn.Module):
    """One quaternion convolution; ``theta`` is a ``(4, c, f)`` filter."""

    def __init__(self, in_features: int, out_features: int, generator: Optional[torch.Generator] = None):
        super().__init__()
        bound = 1.0 / math.sqrt(in_features * 4)
        self.theta = nn.Parameter(_uniform((4, in_features, out_features), bound, generator))

    @property
    def in_features(self) -> int:
        return self.theta.shape[1]

    @property
    def out_features(self) -> int:
        return self.theta.shape[2]

    def forward(self, p: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
        return qconv(p, x, self.theta)


class LinearHead(nn.Module):
    def __init__(self, in_features: int, num_classes: int, generator: Optional[torch.Generator] = None):
        super().__init__()
        self.weight = nn.Parameter(_uniform((in_features, num_classes), 1.0 / math.sqrt(in_features), generator))

    def forward(self, u: torch.Tensor, pairs: Optional[torch.Tensor] = None) -> torch.Tensor:
        if pairs is None:
            return node_head(u, self.weight)
        return edge_head(u, pairs, self.weight)


class Conv1dPairHead(nn.Module):
    """Endpoint embeddings as two channels of a width-1 convolution, averaged over the embedding axis."""

    def __init__(self, num_classes: int, generator: Optional[torch.Generator] = None):
        super().__init__()
        self.conv = nn.Conv1d(2, num_classes, kernel_size=1, dtype=DTYPE)
        bound = 1.0 / math.sqrt(2)
        with torch.no_grad():
            self.conv.weight.copy_(_uniform(tuple(self.conv.weight.shape), bound, generator))
            self.conv.bias.copy_(_uniform(tuple(self.conv.bias.shape), bound, generator))

    def forward(self, u: torch.Tensor, pairs: Optional[torch.Tensor] = None) -> torch.Tensor:
        if pairs is None:
            raise ShapeError("the conv1d-pair head needs node pairs")
        if pairs.numel() and (pairs.min() < 0 or pairs.max() >= u.shape[0]):
            raise ShapeError(f"pair index out of range for {u.shape[0]} nodes")
        stacked = torch.stack([u[pairs[:, 0]], u[pairs[:, 1]]], dim=1)
        return self.conv(stacked).mean(dim=2)


class QuaterGCN(nn.Module):
    """Quaternion convolutions, unwind, dropout and a node or edge head."""

    def __init__(
        self,
        in_features: int,
        widths: List[int],
        num_classes: int,
        kind: str = "node",
        head: str = "linear",
        dropout: float = 0.5,
        generator: Optional[torch.Generator] = None,
    ):
        super().__init__()
        if kind not in ("node", "edge"):
            raise ShapeError(f"unknown model kind '{kind}'")
        if kind == "node" and head != "linear":
            raise ShapeError("node classification uses the linear head")
        self.kind = kind
        self.head_kind = head
        self.dropout = dropout
        self.num_classes = num_classes

        sizes = [in_features] + list(widths)
        self.convs = nn.ModuleList(QuaternionConv(c, f, generator) for c, f in zip(sizes[:-1], sizes[1:]))
        embedding = 4 * sizes[-1]
        if head == "linear":
            self.head: nn.Module = LinearHead(embedding * (2 if kind == "edge" else 1), num_classes, generator)
        elif head == "conv1d-pair":
            self.head = Conv1dPairHead(num_classes, generator)
        else:
            raise ShapeError(f"unknown head '{head}'")

    @property
    def in_features(self) -> int:
        return self.convs[0].in_features

    @property
    def widths(self) -> List[int]:
        return [conv.out_features for conv in self.convs]

    def embed(self, p: torch.Tensor, x: torch.Tensor) -> torch.Tensor:
        """Unwound node embeddings after the convolution stack."""
        z = x
        for conv in self.convs:
            z = conv(p, z)
        return unwind(z)

    def forward(
        self,
        p: torch.Tensor,
        x: torch.Tensor,
        index: Optional[torch.Tensor] = None,
        generator: Optional[torch.Generator] = None,
    ) -> torch.Tensor:
        """Logits for the nodes (or node pairs, for edge models) in ``index``."""
        u = self.embed(p, x)
        if self.training and self.dropout > 0:
            keep = torch.rand(u.shape, generator=generator, dtype=u.dtype) >= self.dropout
            u = u * keep / (1.0 - self.dropout)
        if self.kind == "edge":
            if index is None:
                raise ShapeError("edge models need node pairs")
            return self.head(u, index)
        logits = self.head(u)
        return logits if index is None else logits[index]
