"""Task recipes: data, split, Laplacian, training and evaluation per fold."""

import configparser
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml
from pydantic import ValidationError
from rich.table import Table

from ..engine.training import TaskData, evaluate, train
from ..utils.formats import PathLike, csv_text
from ..utils.logger import bind_run_context, clear_run_context, get_logger
from .config import SIGNED_TASKS, Config, DsbmConfig, ExperimentSpec, ModelConfig, get_config
from .errors import DataFileError, InvalidConfigError, QuaterGCNError
from .graph import (
    Digraph,
    EdgeSplit,
    degree_features,
    fold_node_split,
    generate_dsbm,
    parse_edge_list,
    read_labels,
    split_edges,
)
from .laplacian import propagation_for
from .quaternion import QMatrix

# train, val, test
TASK_FRACTIONS: Dict[str, Tuple[float, float, float]] = {
    "NC": (0.6, 0.2, 0.2),
    "3CEP": (0.8, 0.05, 0.15),
    "4CEP": (0.75, 0.05, 0.2),
    "5CEP": (0.75, 0.05, 0.2),
}


@dataclass
class FoldResult:
    fold: int
    accuracy: float
    runtime: float
    epochs: int
    best_epoch: int


@dataclass
class ResultTable:
    """Per-fold test accuracies with mean and sample standard deviation (n - 1)."""

    label: str
    folds: List[FoldResult] = field(default_factory=list)

    @property
    def accuracies(self) -> List[float]:
        return [f.accuracy for f in self.folds]

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies)) if self.folds else float("nan")

    @property
    def std(self) -> float:
        return float(np.std(self.accuracies, ddof=1)) if len(self.folds) > 1 else 0.0

    @property
    def runtime(self) -> float:
        return float(sum(f.runtime for f in self.folds))

    def to_csv(self, include_runtime: bool = False) -> str:
        header = ["fold", "accuracy", "epochs", "best_epoch"] + (["runtime_s"] if include_runtime else [])
        rows = [
            [f.fold, f.accuracy, f.epochs, f.best_epoch] + ([f.runtime] if include_runtime else [])
            for f in self.folds
        ]
        rows.append(["mean", self.mean, "", ""] + ([""] if include_runtime else []))
        rows.append(["std", self.std, "", ""] + ([""] if include_runtime else []))
        return csv_text(header, rows)

    def to_table(self) -> Table:
        table = Table(title=f"{self.label} (std uses n-1, {len(self.folds)} folds)")
        table.add_column("Fold", justify="right", style="cyan")
        table.add_column("Accuracy (%)", justify="right")
        table.add_column("Epochs", justify="right")
        table.add_column("Runtime (s)", justify="right")
        for f in self.folds:
            table.add_row(str(f.fold), f"{100 * f.accuracy:.2f}", str(f.epochs), f"{f.runtime:.1f}")
        table.add_row("mean", f"[bold]{100 * self.mean:.2f} ± {100 * self.std:.2f}[/bold]", "", f"{self.runtime:.1f}")
        return table


@dataclass
class ComparisonReport:
    tables: List[ResultTable]

    @property
    def deltas(self) -> List[float]:
        """Mean accuracy of every table minus that of the first."""
        base = self.tables[0].mean
        return [t.mean - base for t in self.tables]

    def to_table(self) -> Table:
        table = Table(title="Laplacian comparison")
        table.add_column("Fold", justify="right", style="cyan")
        for t in self.tables:
            table.add_column(t.label, justify="right")
        folds = max(len(t.folds) for t in self.tables)
        for i in range(folds):
            cells = [f"{100 * t.folds[i].accuracy:.2f}" if i < len(t.folds) else "" for t in self.tables]
            table.add_row(str(i), *cells)
        table.add_row("mean ± std", *[f"{100 * t.mean:.2f} ± {100 * t.std:.2f}" for t in self.tables])
        table.add_row("delta", *[f"{100 * d:+.2f}" for d in self.deltas])
        return table

    def to_csv(self) -> str:
        header = ["laplacian", "mean", "std", "delta"] + [f"fold_{i}" for i in range(len(self.tables[0].folds))]
        rows = [[t.label, t.mean, t.std, d] + t.accuracies for t, d in zip(self.tables, self.deltas)]
        return csv_text(header, rows)


def load_graph(spec: ExperimentSpec) -> Digraph:
    """The experiment's graph: generated, or read from the edge list (and labels) on disk."""
    if spec.generator is not None:
        return generate_dsbm(spec.generator)
    path = Path(spec.input_path)  # type: ignore[arg-type]
    if not path.exists():
        raise DataFileError("input", path)
    with path.open(encoding="utf-8") as handle:
        g = parse_edge_list(handle)
    if spec.labels_path is not None:
        if not Path(spec.labels_path).exists():
            raise DataFileError("labels", spec.labels_path)
        with Path(spec.labels_path).open(encoding="utf-8") as handle:
            g = Digraph(g.adjacency, read_labels(handle, g.n))
    if spec.task in SIGNED_TASKS and not g.is_signed:
        raise InvalidConfigError(f"{spec.task} needs a signed input graph")
    return g


def assert_no_leak(p: QMatrix, split: EdgeSplit) -> None:
    """Held-out edges must not appear in the propagation matrix used for training."""
    removed = np.argwhere(split.removed != 0)
    if removed.size == 0:
        return
    support = np.zeros(p.shape, dtype=bool)
    for c in p.components:
        support |= c != 0
    leaked = support[removed[:, 0], removed[:, 1]]
    if np.any(leaked):
        u, v = removed[np.argmax(leaked)]
        raise QuaterGCNError(f"held-out edge ({u}, {v}) leaks into the propagation matrix")


def fold_model_config(spec: ExperimentSpec, fold: int) -> ModelConfig:
    model = spec.resolved_model
    return model.model_copy(update={"seed": model.seed + fold})


def prepare_task_data(spec: ExperimentSpec, g: Digraph, fold: int) -> TaskData:
    """Split, propagation matrix and features for one fold.

    Node folds test on disjoint blocks cut with ``seed_base``; every other draw
    uses the split seed ``seed_base + fold``.
    """
    seed = spec.seed_base + fold
    fractions = TASK_FRACTIONS[spec.task]
    if spec.task == "NC":
        if g.labels is None:
            raise InvalidConfigError("node classification needs node labels")
        split = fold_node_split(g, fractions, fold, spec.seed_base)
        p = propagation_for(g, spec.laplacian)
        return TaskData.for_nodes(p, degree_features(g), g.labels, split)
    edge_split = split_edges(g, spec.task, fractions, seed)
    train_graph = edge_split.train_graph
    p = propagation_for(train_graph, spec.laplacian)
    assert_no_leak(p, edge_split)
    x = degree_features(train_graph, use_abs=spec.task in SIGNED_TASKS)
    return TaskData.for_edges(p, x, edge_split)


class ExperimentRunner:
    """Runs the folds of one or more experiment specs."""

    def __init__(self, config: Optional[Config] = None):
        self.config = config or get_config()
        self.logger = get_logger("experiment")

    def run_fold(self, spec: ExperimentSpec, fold: int, graph: Optional[Digraph] = None) -> FoldResult:
        g = graph if graph is not None else load_graph(spec)
        start = time.perf_counter()
        bind_run_context(task=spec.task, laplacian=spec.laplacian, fold=fold)
        try:
            data = prepare_task_data(spec, g, fold)
            result = train(fold_model_config(spec, fold), data)
            acc = evaluate(result.model, data, "test")
        except Exception as e:
            self.logger.error("fold_failed", error=str(e))
            raise
        finally:
            clear_run_context()
        runtime = time.perf_counter() - start
        self.logger.info("fold_finished", task=spec.task, laplacian=spec.laplacian, fold=fold, accuracy=acc)
        return FoldResult(fold, acc, runtime, len(result.history.rows), result.best_epoch)

    def run(self, spec: ExperimentSpec) -> ResultTable:
        """Every fold of ``spec``; folds run in a process pool when ``workers > 1``."""
        g = load_graph(spec)
        if spec.task == "NC" and g.labels is None:
            raise InvalidConfigError("node classification needs node labels")
        workers = self.config.workers
        self.logger.info("experiment_started", task=spec.task, laplacian=spec.laplacian, folds=spec.folds)
        if workers > 1 and spec.folds > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                folds = list(pool.map(_run_fold_job, [(spec, fold, g) for fold in range(spec.folds)]))
        else:
            folds = [self.run_fold(spec, fold, g) for fold in range(spec.folds)]
        table = ResultTable(label=spec.laplacian, folds=folds)
        self.logger.info("experiment_finished", task=spec.task, laplacian=spec.laplacian, mean=table.mean, std=table.std)
        return table

    def compare(self, specs: Sequence[ExperimentSpec]) -> ComparisonReport:
        if len(specs) < 2:
            raise InvalidConfigError("a comparison needs at least two specs")
        reference = specs[0].model_dump(exclude={"laplacian"})
        for spec in specs[1:]:
            if spec.model_dump(exclude={"laplacian"}) != reference:
                raise InvalidConfigError("specs in a comparison may differ only in their laplacian")
        return ComparisonReport([self.run(spec) for spec in specs])


def _run_fold_job(args: Tuple[ExperimentSpec, int, Digraph]) -> FoldResult:
    spec, fold, g = args
    return ExperimentRunner().run_fold(spec, fold, g)


def run_experiment(spec: ExperimentSpec, config: Optional[Config] = None) -> ResultTable:
    return ExperimentRunner(config).run(spec)


def compare_laplacians(specs: Sequence[ExperimentSpec], config: Optional[Config] = None) -> ComparisonReport:
    return ExperimentRunner(config).compare(specs)


def _split_list(value: Any) -> List[int]:
    if isinstance(value, str):
        return [int(v) for v in value.replace(" ", "").split(",") if v]
    return [int(v) for v in value]


def spec_from_sections(sections: Dict[str, Dict[str, Any]], base_dir: Optional[Path] = None) -> ExperimentSpec:
    """Build a spec from ``experiment``/``generator``/``model`` mappings."""
    unknown = set(sections) - {"experiment", "generator", "model"}
    if unknown:
        raise InvalidConfigError(f"unknown spec sections: {', '.join(sorted(unknown))}")
    experiment = dict(sections.get("experiment") or {})
    generator = dict(sections.get("generator") or {})
    model = dict(sections.get("model") or {})
    try:
        if generator:
            preset = generator.pop("preset", None)
            experiment["generator"] = DsbmConfig.preset(preset, **generator) if preset else DsbmConfig(**generator)
        for key in ("input_path", "labels_path"):
            if key in experiment and base_dir is not None:
                experiment[key] = base_dir / experiment[key]
        if model:
            if "widths" in model:
                model["widths"] = _split_list(model["widths"])
            experiment["model"] = ModelConfig.for_task(str(experiment.get("task", "NC")), **model)
        return ExperimentSpec(**experiment)
    except ValidationError as exc:
        raise InvalidConfigError(f"invalid experiment spec: {exc}") from exc


def load_spec(path: PathLike) -> ExperimentSpec:
    """Read an experiment spec from an INI (``key = value`` per section) or YAML file."""
    path = Path(path)
    if not path.exists():
        raise InvalidConfigError(f"spec file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if path.suffix in (".yaml", ".yml"):
        try:
            sections = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise InvalidConfigError(f"invalid YAML in {path}: {exc}") from exc
        if not isinstance(sections, dict):
            raise InvalidConfigError(f"{path}: expected a mapping of sections")
    else:
        parser = configparser.ConfigParser()
        try:
            parser.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise InvalidConfigError(f"invalid spec file {path}: {exc}") from exc
        sections = {name: dict(parser[name]) for name in parser.sections()}
    return spec_from_sections(sections, base_dir=path.parent)
