"""Full-batch training, evaluation and text checkpoints for QuaterGCN."""

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import torch
import torch.nn.functional as F

from ..core.config import ModelConfig
from ..core.errors import CheckpointError, DivergenceError, ShapeError
from ..core.graph import EdgeSplit, NodeSplit
from ..core.quaternion import QMatrix
from ..utils.formats import (
    LineReader,
    PathLike,
    atomic_write_text,
    csv_text,
    format_blocks,
    format_qmatrix,
)
from ..utils.logger import get_logger
from ..utils.rng import torch_generator
from .layers import Conv1dPairHead, LinearHead, QuaterGCN, embed_features, to_tensor

logger = get_logger("training")

CHECKPOINT_MAGIC = "quatergcn-checkpoint"
CHECKPOINT_VERSION = 1
PARTS = ("train", "val", "test")


@dataclass
class TaskData:
    """Everything a training run consumes; the propagation matrix is built once."""

    kind: str
    propagation: torch.Tensor
    features: torch.Tensor
    num_classes: int
    index: Dict[str, torch.Tensor]
    targets: Dict[str, torch.Tensor]

    @property
    def in_features(self) -> int:
        return self.features.shape[2]

    @classmethod
    def for_nodes(cls, p: QMatrix, x: np.ndarray, labels: np.ndarray, split: NodeSplit) -> "TaskData":
        y = torch.as_tensor(np.asarray(labels), dtype=torch.long)
        index = {part: torch.as_tensor(split.part(part), dtype=torch.long) for part in PARTS}
        return cls(
            kind="node",
            propagation=to_tensor(p),
            features=embed_features(x),
            num_classes=int(y.max()) + 1,
            index=index,
            targets={part: y[idx] for part, idx in index.items()},
        )

    @classmethod
    def for_edges(cls, p: QMatrix, x: np.ndarray, split: EdgeSplit) -> "TaskData":
        return cls(
            kind="edge",
            propagation=to_tensor(p),
            features=embed_features(x),
            num_classes=split.num_classes,
            index={part: torch.as_tensor(split.pairs[part], dtype=torch.long) for part in PARTS},
            targets={part: torch.as_tensor(split.labels[part], dtype=torch.long) for part in PARTS},
        )


@dataclass
class History:
    rows: List[Tuple[int, float, float, float]] = field(default_factory=list)

    def append(self, epoch: int, train_loss: float, train_acc: float, val_acc: float) -> None:
        self.rows.append((epoch, train_loss, train_acc, val_acc))

    @property
    def losses(self) -> List[float]:
        return [row[1] for row in self.rows]

    def to_csv(self) -> str:
        return csv_text(("epoch", "train_loss", "train_acc", "val_acc"), self.rows)

    def write(self, path: PathLike) -> Path:
        return atomic_write_text(path, self.to_csv())


@dataclass
class TrainResult:
    model: QuaterGCN
    history: History
    best_epoch: int
    best_val_acc: float
    stopped_early: bool


def build_model(config: ModelConfig, in_features: int, num_classes: int, kind: str) -> QuaterGCN:
    """A freshly initialized model; initialization is a function of ``config.seed``."""
    return QuaterGCN(
        in_features=in_features,
        widths=list(config.widths),
        num_classes=num_classes,
        kind=kind,
        head=config.head,
        dropout=config.dropout,
        generator=torch_generator(config.seed, "init"),
    )


def accuracy(predictions: torch.Tensor, targets: torch.Tensor) -> float:
    if targets.numel() == 0:
        raise ShapeError("cannot compute accuracy over an empty index set")
    return float((predictions == targets).double().mean())


def predict(model: QuaterGCN, data: TaskData, part: str) -> torch.Tensor:
    """Argmax predictions; ties go to the lowest class id."""
    model.eval()
    with torch.no_grad():
        logits = model(data.propagation, data.features, data.index[part])
    return torch.argmax(logits, dim=1)


def evaluate(model: QuaterGCN, data: TaskData, part: str = "test") -> float:
    """Fraction of correct predictions on one part of the split."""
    if data.targets[part].numel() == 0:
        raise ShapeError(f"the '{part}' index set is empty")
    return accuracy(predict(model, data, part), data.targets[part])


def train(config: ModelConfig, data: TaskData, model: Optional[QuaterGCN] = None) -> TrainResult:
    """Adam with early stopping on validation accuracy; the best parameters are restored.

    When the validation set is empty, training accuracy is monitored instead.
    """
    if model is None:
        model = build_model(config, data.in_features, data.num_classes, data.kind)
    optimizer = torch.optim.Adam(
        model.parameters(),
        lr=config.learning_rate,
        betas=(0.9, 0.999),
        eps=1e-8,
        weight_decay=config.weight_decay,
    )
    dropout_rng = torch_generator(config.seed, "dropout")
    monitor = "val" if data.targets["val"].numel() else "train"

    history = History()
    best_state = copy.deepcopy(model.state_dict())
    best_epoch, best_score, since_best = 0, -1.0, 0
    stopped_early = False
    logger.info("training_started", kind=data.kind, max_epochs=config.max_epochs, lr=config.learning_rate)

    for epoch in range(1, config.max_epochs + 1):
        model.train()
        optimizer.zero_grad()
        logits = model(data.propagation, data.features, data.index["train"], generator=dropout_rng)
        loss = F.cross_entropy(logits, data.targets["train"])
        loss_value = float(loss.detach())
        if not math.isfinite(loss_value):
            raise DivergenceError(epoch, loss_value)
        loss.backward()
        optimizer.step()

        train_acc = evaluate(model, data, "train")
        score = evaluate(model, data, monitor)
        val_acc = score if monitor == "val" else float("nan")
        history.append(epoch, loss_value, train_acc, val_acc)
        logger.debug("epoch", epoch=epoch, loss=loss_value, train_acc=train_acc, val_acc=val_acc)

        if score > best_score:
            best_score, best_epoch, since_best = score, epoch, 0
            best_state = copy.deepcopy(model.state_dict())
        else:
            since_best += 1
            if since_best >= config.patience:
                stopped_early = True
                logger.info("early_stop", epoch=epoch, best_epoch=best_epoch, best_score=best_score)
                break

    model.load_state_dict(best_state)
    model.eval()
    logger.info("training_finished", epochs=len(history.rows), best_epoch=best_epoch, best_score=best_score)
    return TrainResult(model, history, best_epoch, max(best_score, 0.0), stopped_early)


def _real_block(header: str, matrix: np.ndarray) -> str:
    return format_blocks([("R", matrix)], header=header)


def checkpoint_text(model: QuaterGCN, config: ModelConfig) -> str:
    """Versioned text checkpoint: config header, one quaternion block per layer, head blocks."""
    lines = [
        f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}",
        f"config {config.model_dump_json()}",
        f"model kind={model.kind} in_features={model.in_features} num_classes={model.num_classes}",
    ]
    text = "\n".join(lines) + "\n"
    for number, conv in enumerate(model.convs):
        text += f"layer {number}\n" + format_qmatrix(QMatrix(*conv.theta.detach().numpy()))
    text += f"head {model.head_kind}\n"
    if isinstance(model.head, LinearHead):
        text += _real_block("real", model.head.weight.detach().numpy())
    else:
        conv = model.head.conv
        text += _real_block("real", conv.weight.detach().numpy()[:, :, 0])
        text += _real_block("real", conv.bias.detach().numpy()[:, np.newaxis])
    return text


def save_checkpoint(path: PathLike, model: QuaterGCN, config: ModelConfig) -> Path:
    return atomic_write_text(path, checkpoint_text(model, config))


def _expect(reader: LineReader, keyword: str) -> List[str]:
    parts = reader.next_line().split()
    if not parts or parts[0] != keyword:
        raise CheckpointError(f"line {reader.line_number}: expected '{keyword}'")
    return parts[1:]


def _read_block(reader: LineReader, keyword: str, expected: Tuple[int, int], what: str) -> Dict[str, np.ndarray]:
    rows, cols = reader.read_header(keyword)
    if (rows, cols) != expected:
        raise ShapeError(f"{what}: checkpoint has shape {rows}x{cols}, model expects {expected[0]}x{expected[1]}")
    return reader.read_blocks(rows, cols)


def load_checkpoint(
    path: PathLike,
    in_features: Optional[int] = None,
    num_classes: Optional[int] = None,
    widths: Optional[List[int]] = None,
) -> Tuple[QuaterGCN, ModelConfig]:
    """Rebuild a model from a checkpoint, validating every block against the expected shapes."""
    reader = LineReader(Path(path).read_text(encoding="utf-8"))
    magic = reader.next_line().split()
    if len(magic) != 2 or magic[0] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path} is not a QuaterGCN checkpoint")
    if magic[1] != str(CHECKPOINT_VERSION):
        raise CheckpointError(f"unsupported checkpoint version {magic[1]}")

    config_line = reader.next_line()
    if not config_line.startswith("config "):
        raise CheckpointError(f"line {reader.line_number}: expected 'config'")
    try:
        config = ModelConfig.model_validate(json.loads(config_line[len("config "):]))
    except ValueError as exc:
        raise CheckpointError(f"invalid checkpoint config: {exc}") from exc
    meta = dict(item.split("=", 1) for item in _expect(reader, "model"))
    try:
        kind, stored_in, stored_classes = meta["kind"], int(meta["in_features"]), int(meta["num_classes"])
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"malformed model line in {path}") from exc

    if widths is not None and list(widths) != list(config.widths):
        for number, (want, have) in enumerate(zip(widths, config.widths)):
            if want != have:
                raise ShapeError(f"layer {number}: requested width {want}, checkpoint has {have}")
        raise ShapeError(f"requested {len(widths)} layers, checkpoint has {len(config.widths)}")
    if in_features is not None and in_features != stored_in:
        raise ShapeError(f"layer 0: data has {in_features} input features, checkpoint expects {stored_in}")
    if num_classes is not None and num_classes != stored_classes:
        raise ShapeError(f"head: data has {num_classes} classes, checkpoint expects {stored_classes}")

    model = QuaterGCN(stored_in, list(config.widths), stored_classes, kind, config.head, config.dropout)
    with torch.no_grad():
        for number, conv in enumerate(model.convs):
            if _expect(reader, "layer") != [str(number)]:
                raise CheckpointError(f"line {reader.line_number}: expected layer {number}")
            blocks = _read_block(reader, "qmatrix", tuple(conv.theta.shape[1:]), f"layer {number}")
            if set(blocks) != {"R", "I", "J", "K"}:
                raise CheckpointError(f"layer {number}: expected R, I, J and K blocks")
            conv.theta.copy_(torch.from_numpy(np.stack([blocks[c] for c in "RIJK"])))
        if _expect(reader, "head") != [config.head]:
            raise CheckpointError(f"line {reader.line_number}: expected head '{config.head}'")
        if isinstance(model.head, LinearHead):
            weight = _read_block(reader, "real", tuple(model.head.weight.shape), "head")["R"]
            model.head.weight.copy_(torch.from_numpy(weight))
        elif isinstance(model.head, Conv1dPairHead):
            conv = model.head.conv
            weight = _read_block(reader, "real", (conv.weight.shape[0], 2), "head")["R"]
            bias = _read_block(reader, "real", (conv.bias.shape[0], 1), "head bias")["R"]
            conv.weight.copy_(torch.from_numpy(weight[:, :, np.newaxis]))
            conv.bias.copy_(torch.from_numpy(bias[:, 0]))
    model.eval()
    return model, config
