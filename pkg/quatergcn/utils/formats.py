"""Text file formats shared by the CLI, the verifier and checkpoints.

Matrix files start with ``qmatrix <rows> <cols>`` followed by labelled blocks
(``R``, ``I``, ``J``, ``K``), each ``rows`` lines of ``cols`` values. Complex
matrices carry only ``R`` and ``I``, real matrices only ``R``; missing blocks
read back as zero.
"""

import csv
import io
import os
import tempfile
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.errors import GraphFormatError
from ..core.quaternion import QMatrix

BLOCK_LABELS = ("R", "I", "J", "K")
PathLike = Union[str, Path]


def format_float(value: float) -> str:
    """Shortest round-trip representation; negative zero prints as ``0.0``."""
    return repr(float(value) + 0.0)


def format_rows(matrix: np.ndarray) -> List[str]:
    return [" ".join(format_float(x) for x in row) for row in np.asarray(matrix, dtype=np.float64)]


def format_blocks(blocks: Sequence[Tuple[str, np.ndarray]], header: str = "qmatrix") -> str:
    rows, cols = np.asarray(blocks[0][1]).shape
    lines = [f"{header} {rows} {cols}"]
    for label, matrix in blocks:
        lines.append(label)
        lines.extend(format_rows(matrix))
    return "\n".join(lines) + "\n"


def format_qmatrix(q: QMatrix) -> str:
    return format_blocks(list(zip(BLOCK_LABELS, q.components)))


def format_complex_matrix(matrix: np.ndarray) -> str:
    matrix = np.asarray(matrix, dtype=np.complex128)
    return format_blocks([("R", matrix.real), ("I", matrix.imag)])


def format_real_matrix(matrix: np.ndarray) -> str:
    return format_blocks([("R", np.asarray(matrix, dtype=np.float64))])


class LineReader:
    """Cursor over the lines of a text file that keeps 1-based line numbers."""

    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.position = 0

    @property
    def line_number(self) -> int:
        return self.position

    def at_end(self) -> bool:
        return self.position >= len(self.lines)

    def peek(self) -> Optional[str]:
        return None if self.at_end() else self.lines[self.position].strip()

    def next_line(self) -> str:
        if self.at_end():
            raise GraphFormatError("unexpected end of file", line_number=self.position + 1)
        line = self.lines[self.position].strip()
        self.position += 1
        return line

    def read_header(self, keyword: str = "qmatrix") -> Tuple[int, int]:
        parts = self.next_line().split()
        if len(parts) != 3 or parts[0] != keyword:
            raise GraphFormatError(f"expected '{keyword} <rows> <cols>'", line_number=self.line_number)
        try:
            rows, cols = int(parts[1]), int(parts[2])
        except ValueError:
            raise GraphFormatError("matrix dimensions must be integers", line_number=self.line_number)
        if rows < 0 or cols < 0:
            raise GraphFormatError("matrix dimensions must be non-negative", line_number=self.line_number)
        return rows, cols

    def read_rows(self, rows: int, cols: int) -> np.ndarray:
        matrix = np.zeros((rows, cols))
        for r in range(rows):
            parts = self.next_line().split()
            if len(parts) != cols:
                raise GraphFormatError(f"expected {cols} values, got {len(parts)}", line_number=self.line_number)
            try:
                matrix[r] = [float(p) for p in parts]
            except ValueError:
                raise GraphFormatError("non-numeric matrix value", line_number=self.line_number)
        return matrix

    def read_blocks(self, rows: int, cols: int, labels: Iterable[str] = BLOCK_LABELS) -> Dict[str, np.ndarray]:
        """Read consecutive labelled blocks until a line that is not one of ``labels``."""
        allowed = list(labels)
        blocks: Dict[str, np.ndarray] = {}
        while self.peek() in allowed:
            label = self.next_line()
            if label in blocks:
                raise GraphFormatError(f"duplicate block '{label}'", line_number=self.line_number)
            blocks[label] = self.read_rows(rows, cols)
        if not blocks:
            raise GraphFormatError("matrix has no blocks", line_number=self.position + 1)
        return blocks


def parse_matrix_blocks(text: str) -> Tuple[int, int, Dict[str, np.ndarray]]:
    reader = LineReader(text)
    rows, cols = reader.read_header()
    blocks = reader.read_blocks(rows, cols)
    while not reader.at_end():
        if reader.next_line():
            raise GraphFormatError("trailing content after matrix", line_number=reader.line_number)
    return rows, cols, blocks


def parse_qmatrix(text: str) -> QMatrix:
    rows, cols, blocks = parse_matrix_blocks(text)
    zero = np.zeros((rows, cols))
    return QMatrix(*(blocks.get(label, zero) for label in BLOCK_LABELS))


def atomic_write_text(path: PathLike, text: str) -> Path:
    """Write ``text`` to a temporary sibling file, then rename it over ``path``."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return target


def csv_text(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(x) if isinstance(x, float) else x for x in row])
    return buffer.getvalue()
