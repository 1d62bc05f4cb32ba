"""Command-line interface for QuaterGCN."""

import sys
from pathlib import Path
from typing import List, Optional

import click
from pydantic import ValidationError
from rich import print as rprint
from rich.console import Console
from rich.markup import escape

from .core.config import DsbmConfig, ExperimentSpec, ModelConfig, get_config
from .core.errors import EXIT_OK, EXIT_USAGE, EXIT_VERIFICATION_FAILED, QuaterGCNError
from .core.experiment import (
    ExperimentRunner,
    fold_model_config,
    load_graph,
    load_spec,
    prepare_task_data,
)
from .core.graph import digon_fraction, generate_dsbm, parse_edge_list, write_edge_list, write_labels
from .core.laplacian import MATRIX_KINDS, matrix_text
from .core.verifier import REGIMES, verify_graph, verify_matrix_file, verify_regime
from .engine.training import evaluate, load_checkpoint, save_checkpoint, train
from .utils.formats import atomic_write_text
from .utils.logger import configure_logging, get_logger

console = Console()
err_console = Console(stderr=True)

TASKS = ("NC", "3CEP", "4CEP", "5CEP")
LAPLACIANS = ("quaternionic", "classical", "sign-magnetic")


def _abort(exc: Exception) -> None:
    """Print the error and exit with the code its class maps to."""
    if isinstance(exc, ValidationError):
        err_console.print(f"[red]✗ Invalid options:[/red] {escape(str(exc))}")
        sys.exit(EXIT_USAGE)
    assert isinstance(exc, QuaterGCNError)
    err_console.print(f"[red]✗ {escape(str(exc))}[/red]")
    sys.exit(exc.exit_code)


def _widths(value: Optional[str]) -> Optional[List[int]]:
    if value is None:
        return None
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got '{value}'")


def data_options(func):
    """Options selecting the graph: an edge list (plus labels) or a generator preset."""
    options = [
        click.option("--task", type=click.Choice(TASKS), default="NC", show_default=True, help="Task"),
        click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), help="Edge list"),
        click.option("--labels", "labels_path", type=click.Path(exists=True, dir_okay=False), help="Label file"),
        click.option("--preset", type=click.Choice(["di150", "di500", "dsbm"]), default="di150", show_default=True,
                     help="Generator preset used when no --input is given"),
        click.option("--delta", type=float, default=None, help="Digon fraction override for the preset"),
        click.option("--signed/--unsigned", default=None, help="Signed weights for the preset"),
        click.option("--laplacian", type=click.Choice(LAPLACIANS), default="quaternionic", show_default=True,
                     help="Laplacian used for propagation"),
        click.option("--fold", type=int, default=0, show_default=True,
                     help="Fold index (split seed = seed + fold; NC test block = fold mod 5)"),
        click.option("--seed", type=int, default=0, show_default=True, help="Seed for data, split and model"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _data_spec(task, input_path, labels_path, preset, delta, signed, laplacian, seed, model=None) -> ExperimentSpec:
    if input_path:
        return ExperimentSpec(task=task, laplacian=laplacian, input_path=input_path, labels_path=labels_path,
                              model=model, seed_base=seed, folds=1)
    overrides = {"seed": seed}
    if delta is not None:
        overrides["digon_fraction"] = delta
    if signed is not None:
        overrides["signed"] = signed
    elif task in ("4CEP", "5CEP"):
        overrides["signed"] = True
    generator = DsbmConfig.preset(preset, **overrides)
    return ExperimentSpec(task=task, laplacian=laplacian, generator=generator, model=model, seed_base=seed, folds=1)


@click.group()
@click.option("--log-level", default=None, help="Log level (default: warning)")
@click.option("--log-format", type=click.Choice(["console", "json"]), default=None, help="Log format")
@click.pass_context
def cli(ctx, log_level, log_format):
    """QuaterGCN - quaternionic Laplacians and quaternion graph convolutions."""
    config = get_config()

    if log_level:
        config.log_level = log_level
    if log_format:
        config.log_format = log_format

    configure_logging(
        log_level=config.log_level,
        log_format=config.log_format,
        log_outputs=config.log_outputs_list,
        log_file=config.log_file,
    )

    ctx.ensure_object(dict)
    ctx.obj["config"] = config
    ctx.obj["logger"] = get_logger("cli")


@cli.command()
@click.option("--nodes", type=int, default=150, show_default=True, help="Total node count (N * C)")
@click.option("--clusters", type=int, default=5, show_default=True, help="Number of clusters C")
@click.option("--alpha-in", type=float, default=0.1, show_default=True, help="Intra-cluster edge probability")
@click.option("--alpha-out", type=float, default=0.6, show_default=True, help="Inter-cluster edge probability")
@click.option("--beta", type=float, default=0.2, show_default=True, help="Direction probability")
@click.option("--delta", type=float, default=0.2, show_default=True, help="Digon fraction")
@click.option("--wmin", type=int, default=2, show_default=True, help="Smallest integer weight")
@click.option("--wmax", type=int, default=4, show_default=True, help="Largest integer weight")
@click.option("--signed/--unsigned", default=False, show_default=True, help="Negate weights with probability 1/2")
@click.option("--meta-graph", type=click.Choice(["ordered", "cyclic"]), default="cyclic", show_default=True,
              help="How the direction probability is applied between clusters")
@click.option("--seed", type=int, default=0, show_default=True, help="Generator seed")
@click.option("--output", type=click.Path(dir_okay=False), required=True, help="Edge list to write")
@click.option("--labels", "labels_out", type=click.Path(dir_okay=False), default=None,
              help="Label file to write (default: <output>.labels)")
def generate(nodes, clusters, alpha_in, alpha_out, beta, delta, wmin, wmax, signed, meta_graph, seed, output,
             labels_out):
    """Generate a DSBM digraph as an edge list plus labels."""
    try:
        if clusters < 1 or nodes % clusters:
            raise click.UsageError(f"--nodes ({nodes}) must be a positive multiple of --clusters ({clusters})")
        cfg = DsbmConfig(
            nodes_per_cluster=nodes // clusters,
            clusters=clusters,
            intra_prob=alpha_in,
            inter_prob=alpha_out,
            direction_prob=beta,
            digon_fraction=delta,
            weight_low=wmin,
            weight_high=wmax,
            signed=signed,
            meta_graph=meta_graph,
            seed=seed,
        )
        g = generate_dsbm(cfg)
        labels_path = labels_out or f"{output}.labels"
        write_edge_list(g, output)
        write_labels(g, labels_path)
    except (QuaterGCNError, ValidationError) as e:
        _abort(e)

    rprint(f"[green]✓[/green] n={g.n} edges={g.edge_count} digon_fraction={digon_fraction(g):.4f}")
    rprint(f"Edge list: [cyan]{output}[/cyan]  Labels: [cyan]{labels_path}[/cyan]")


@cli.command()
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Edge list")
@click.option("--kind", type=click.Choice(MATRIX_KINDS), default="quaternionic", show_default=True,
              help="Matrix to build")
@click.option("--output", type=click.Path(dir_okay=False), default=None, help="Matrix file (default: stdout)")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Has no effect: matrix builds draw no random numbers")
def laplacian(input_path, kind, output, seed):
    """Build a Laplacian or propagation matrix from an edge list."""
    try:
        with open(input_path, encoding="utf-8") as handle:
            g = parse_edge_list(handle)
        text = matrix_text(g, kind)
    except QuaterGCNError as e:
        _abort(e)

    if output:
        atomic_write_text(output, text)
        rprint(f"[green]✓[/green] {kind} matrix ({g.n}x{g.n}) written to [cyan]{output}[/cyan]")
    else:
        click.echo(text, nl=False)


@cli.command()
@click.option("--regime", "regimes", type=click.Choice(REGIMES), multiple=True,
              help="Corpus regime (repeatable; default: all)")
@click.option("--count", type=int, default=100, show_default=True, help="Graphs per regime")
@click.option("--max-nodes", type=int, default=40, show_default=True, help="Largest graph size")
@click.option("--properties", default="all", show_default=True, help="Comma-separated property names")
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Verify one edge list instead of a corpus")
@click.option("--matrix-file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Check a stored matrix for Hermitian structure")
@click.option("--table/--no-table", default=False, show_default=True, help="Also print a summary table")
@click.option("--seed", type=int, default=0, show_default=True, help="First corpus seed")
@click.pass_context
def verify(ctx, regimes, count, max_nodes, properties, input_path, matrix_file, table, seed):
    """Check the Laplacian properties; exit 1 on any failure."""
    config = ctx.obj["config"]
    try:
        if matrix_file:
            check = verify_matrix_file(Path(matrix_file), tol=config.tolerances.hermitian)
            click.echo(check.to_key_value(), nl=False)
            sys.exit(EXIT_OK if check.ok else EXIT_VERIFICATION_FAILED)

        names = properties.split(",")
        if input_path:
            with open(input_path, encoding="utf-8") as handle:
                g = parse_edge_list(handle)
            reports = [verify_graph(g, names, config.tolerances, label=str(input_path))]
        else:
            reports = []
            with console.status("Verifying corpora..."):
                for regime in regimes or REGIMES:
                    reports.append(verify_regime(regime, count, seed, names, config.tolerances,
                                                 workers=config.workers, max_nodes=max_nodes))
    except QuaterGCNError as e:
        _abort(e)

    for report in reports:
        click.echo(report.to_key_value(), nl=False)
        if table:
            console.print(report.to_table())
    sys.exit(EXIT_OK if all(r.ok for r in reports) else EXIT_VERIFICATION_FAILED)


@cli.command("train")
@data_options
@click.option("--widths", default="32,32", show_default=True, help="Comma-separated layer widths")
@click.option("--head", type=click.Choice(["linear", "conv1d-pair"]), default="linear", show_default=True,
              help="Edge head")
@click.option("--dropout", type=float, default=0.5, show_default=True, help="Dropout before the head")
@click.option("--lr", type=float, default=None, help="Learning rate (default: per task)")
@click.option("--weight-decay", type=float, default=5e-4, show_default=True, help="Adam weight decay")
@click.option("--max-epochs", type=int, default=None, help="Epoch budget (default: per task)")
@click.option("--patience", type=int, default=500, show_default=True, help="Early-stopping patience")
@click.option("--checkpoint", type=click.Path(dir_okay=False), required=True, help="Checkpoint to write")
@click.option("--history", type=click.Path(dir_okay=False), default=None, help="History CSV to write")
def train_cmd(task, input_path, labels_path, preset, delta, signed, laplacian, fold, seed, widths, head, dropout,
              lr, weight_decay, max_epochs, patience, checkpoint, history):
    """Train one model on one split and save a checkpoint."""
    try:
        overrides = dict(widths=_widths(widths), head=head, dropout=dropout, weight_decay=weight_decay,
                         patience=patience, seed=seed)
        if lr is not None:
            overrides["learning_rate"] = lr
        if max_epochs is not None:
            overrides["max_epochs"] = max_epochs
        model_config = ModelConfig.for_task(task, **overrides)
        spec = _data_spec(task, input_path, labels_path, preset, delta, signed, laplacian, seed, model_config)
        g = load_graph(spec)
        data = prepare_task_data(spec, g, fold)
        fold_config = fold_model_config(spec, fold)
        with console.status(f"Training {task} with the {laplacian} Laplacian..."):
            result = train(fold_config, data)
        save_checkpoint(checkpoint, result.model, fold_config)
        if history:
            result.history.write(history)
    except (QuaterGCNError, ValidationError) as e:
        _abort(e)

    rprint(f"[green]✓[/green] Trained {len(result.history.rows)} epochs (best epoch {result.best_epoch})")
    rprint(f"Checkpoint saved to: [cyan]{checkpoint}[/cyan]")


@cli.command("eval")
@data_options
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), required=True, help="Checkpoint")
@click.option("--widths", default=None, help="Expected layer widths; must match the checkpoint")
@click.option("--part", type=click.Choice(["train", "val", "test"]), default="test", show_default=True,
              help="Split part to score")
def eval_cmd(task, input_path, labels_path, preset, delta, signed, laplacian, fold, seed, checkpoint, widths, part):
    """Evaluate a checkpoint on one part of a split."""
    try:
        spec = _data_spec(task, input_path, labels_path, preset, delta, signed, laplacian, seed)
        g = load_graph(spec)
        data = prepare_task_data(spec, g, fold)
        model, _ = load_checkpoint(checkpoint, in_features=data.in_features, num_classes=data.num_classes,
                                   widths=_widths(widths))
        acc = evaluate(model, data, part)
    except (QuaterGCNError, ValidationError) as e:
        _abort(e)

    click.echo(f"accuracy={acc!r} part={part} task={task} laplacian={laplacian}")


@cli.command()
@click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="INI or YAML experiment spec")
@click.option("--task", type=click.Choice(TASKS), default="NC", show_default=True, help="Task")
@click.option("--preset", type=click.Choice(["di150", "di500", "dsbm"]), default="di150", show_default=True,
              help="Generator preset")
@click.option("--delta", type=float, default=None, help="Digon fraction override")
@click.option("--laplacian", type=click.Choice(LAPLACIANS), default="quaternionic", show_default=True,
              help="Laplacian")
@click.option("--compare", default=None, help="Comma-separated Laplacians to compare, e.g. quaternionic,classical")
@click.option("--folds", type=int, default=10, show_default=True, help="Monte-Carlo folds")
@click.option("--max-epochs", type=int, default=None, help="Epoch budget (default: per task)")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed base for data, splits and models")
@click.option("--output", type=click.Path(dir_okay=False), default=None, help="Result CSV to write")
@click.pass_context
def experiment(ctx, spec_path, task, preset, delta, laplacian, compare, folds, max_epochs, seed, output):
    """Run a cross-validated experiment and print its result table."""
    runner = ExperimentRunner(ctx.obj["config"])
    try:
        if spec_path:
            spec = load_spec(spec_path)
        else:
            overrides = {"seed": seed}
            if delta is not None:
                overrides["digon_fraction"] = delta
            if task in ("4CEP", "5CEP"):
                overrides["signed"] = True
            model = ModelConfig.for_task(task, **({"max_epochs": max_epochs} if max_epochs is not None else {}))
            spec = ExperimentSpec(task=task, laplacian=laplacian, generator=DsbmConfig.preset(preset, **overrides),
                                  model=model, folds=folds, seed_base=seed)

        with console.status(f"Running {spec.task} ({spec.folds} folds)..."):
            if compare:
                kinds = [k.strip() for k in compare.split(",") if k.strip()]
                unknown = [k for k in kinds if k not in LAPLACIANS]
                if unknown:
                    raise click.UsageError(f"unknown Laplacian(s) in --compare: {', '.join(unknown)}")
                report = runner.compare([spec.with_laplacian(k) for k in kinds])
                renderable, csv = report.to_table(), report.to_csv()
            else:
                table = runner.run(spec)
                renderable, csv = table.to_table(), table.to_csv()
        if output:
            atomic_write_text(output, csv)
    except (QuaterGCNError, ValidationError) as e:
        _abort(e)

    console.print(renderable)
    if output:
        rprint(f"Results saved to: [cyan]{output}[/cyan]")


def main():
    """Main entry point."""
    cli()


if __name__ == "__main__":
    main()
