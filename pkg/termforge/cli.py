from __future__ import annotations

import argparse
import importlib.metadata
import importlib.util
import sys
from pathlib import Path
from typing import Any, Callable, Optional

from rich.console import Console
from rich.table import Table

from termforge import __version__
from termforge.core.config import Settings, load_settings
from termforge.core.errors import TermforgeError
from termforge.core.logging import configure_logging, run_context
from termforge.core.storage import LOCK_NAME, RunStore
from termforge.services.pipeline_service import PipelineService
from termforge.training.config import ABLATIONS

console = Console()
err_console = Console(stderr=True)

Command = Callable[[argparse.Namespace, Settings], None]

# CLI destination -> dotted settings key; flags left unset fall through to config file, env and defaults.
_OVERRIDES: dict[str, str] = {
    "run_dir": "run_dir",
    "seed": "seed",
    "workers": "workers",
    "log_level": "log_level",
    "split": "split_fraction",
    "theta_tok": "graph.theta_tok",
    "theta_sen": "graph.theta_sen",
    "provider": "graph.provider",
    "client": "augment.client",
    "endpoint": "augment.endpoint",
    "model_name": "augment.model_name",
    "cap_sen": "augment.cap_sen",
    "cap_tok": "augment.cap_tok",
    "lr": "train.lr",
    "tau": "train.tau",
    "epochs": "train.epochs_per_stage",
    "batch_size": "train.batch_size",
    "grad_clip": "train.grad_clip",
    "stages": "train.stages",
    "mode": "eval.mode",
    "max_new": "eval.max_new",
}


def main(argv: Optional[list[str]] = None) -> None:
    """The main entry point for the CLI.

    Args:
        argv: The command-line arguments.
    """
    parser = _build_parser()
    args = parser.parse_args(argv)

    if not hasattr(args, "func"):
        parser.print_help()
        sys.exit(1)

    try:
        settings = load_settings(args.config, _collect_overrides(args))
        configure_logging(settings.log_level)
        with run_context(command=args.command, seed=settings.seed, run_dir=str(settings.run_dir)):
            args.func(args, settings)
    except TermforgeError as exc:
        err_console.print(f"[red]{type(exc).__name__}[/] {exc}")
        sys.exit(exc.exit_code)


def _collect_overrides(args: argparse.Namespace) -> dict[str, Any]:
    overrides: dict[str, Any] = {}
    for dest, key in _OVERRIDES.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[key] = value
    cap = getattr(args, "cap", None)
    if cap is not None:
        overrides.setdefault("augment.cap_sen", cap)
        overrides.setdefault("augment.cap_tok", cap)
    return overrides


def _stages(value: str) -> Any:
    if value in ABLATIONS:
        return value
    return [part.strip() for part in value.split(",") if part.strip()]


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="TOML config file; flags override its values")
    common.add_argument("--run-dir", dest="run_dir", type=Path, default=None, help="Run directory for artifacts")
    common.add_argument("--seed", type=int, default=None, help="Root seed for every stage")
    common.add_argument("--workers", type=int, default=None, help="Worker threads (1 = inline)")
    common.add_argument("--log-level", dest="log_level", default=None, help="debug, info, warning or error")
    return common


def _add_ingest_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("corpus", type=Path, help="Corpus JSON-lines file")
    parser.add_argument("--lexicon", type=Path, default=None, help="Lexicon JSON-lines for entity extraction")
    parser.add_argument("--split", type=float, default=None, help="Train fraction (default 0.7)")


def _add_graph_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--theta-tok", dest="theta_tok", type=float, default=None)
    parser.add_argument("--theta-sen", dest="theta_sen", type=float, default=None)
    parser.add_argument("--provider", choices=["hashing", "model", "remote"], default=None)


def _add_augment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--client", choices=["offline", "remote"], default=None)
    parser.add_argument("--endpoint", default=None, help="Chat-completion endpoint for the remote client")
    parser.add_argument("--model-name", dest="model_name", default=None)
    parser.add_argument("--cap", type=int, default=None, help="Samples per anchor, both levels")
    parser.add_argument("--cap-sen", dest="cap_sen", type=int, default=None)
    parser.add_argument("--cap-tok", dest="cap_tok", type=int, default=None)


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lr", type=float, default=None)
    parser.add_argument("--tau", type=float, default=None)
    parser.add_argument("--epochs", type=int, default=None, help="Epochs per stage")
    parser.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    parser.add_argument("--grad-clip", dest="grad_clip", type=float, default=None)
    parser.add_argument(
        "--stages", type=_stages, default=None, help=f"Preset ({', '.join(ABLATIONS)}) or comma list like sft,sen"
    )


def _add_eval_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mode", choices=["embedding_similarity", "loglikelihood"], default=None)
    parser.add_argument("--max-new", dest="max_new", type=int, default=None)
    parser.add_argument("--split-name", dest="split_name", choices=["test", "train"], default="test")


def _build_parser() -> argparse.ArgumentParser:
    """Build the argument parser for the CLI.

    Returns:
        The argument parser.
    """
    parser = argparse.ArgumentParser(prog="termforge", description="Terminology-aware fine-tuning pipeline")
    parser.add_argument("--version", action="version", version=f"termforge {__version__}")
    common = _common_parser()
    subparsers = parser.add_subparsers(dest="command")

    ingest = subparsers.add_parser("ingest", parents=[common], help="Validate, annotate and split a corpus")
    _add_ingest_flags(ingest)
    ingest.set_defaults(func=_cmd_ingest)

    graph = subparsers.add_parser("graph", parents=[common], help="Build the sentence graph")
    _add_graph_flags(graph)
    graph.set_defaults(func=_cmd_graph)

    augment = subparsers.add_parser("augment", parents=[common], help="Generate sentence and token QCA samples")
    _add_augment_flags(augment)
    augment.set_defaults(func=_cmd_augment)

    train = subparsers.add_parser("train", parents=[common], help="Run the SFT, sentence and token stages")
    _add_train_flags(train)
    train.add_argument("--resume-from", dest="resume_from", type=Path, default=None, help="Stage checkpoint")
    train.set_defaults(func=_cmd_train)

    evaluate = subparsers.add_parser("eval", parents=[common], help="Score a checkpoint on QCA and QA")
    _add_eval_flags(evaluate)
    evaluate.add_argument("--checkpoint", type=Path, default=None, help="Defaults to the run's final checkpoint")
    evaluate.set_defaults(func=_cmd_eval)

    report = subparsers.add_parser("report", parents=[common], help="Summarise a run directory")
    report.add_argument("--no-plots", dest="no_plots", action="store_true", help="Skip writing plot files")
    report.set_defaults(func=_cmd_report)

    pipeline = subparsers.add_parser("pipeline", parents=[common], help="Run every stage into one run directory")
    _add_ingest_flags(pipeline)
    _add_graph_flags(pipeline)
    _add_augment_flags(pipeline)
    _add_train_flags(pipeline)
    _add_eval_flags(pipeline)
    pipeline.set_defaults(func=_cmd_pipeline)

    check = subparsers.add_parser("check", parents=[common], help="Show the effective configuration and packages")
    check.set_defaults(func=_cmd_check)
    return parser


def _service(settings: Settings, store: RunStore) -> PipelineService:
    return PipelineService(settings, store)


def _cmd_ingest(args: argparse.Namespace, settings: Settings) -> None:
    with RunStore(settings.run_dir) as store:
        corpus = _service(settings, store).ingest(args.corpus, args.lexicon)
    console.print(f"[green]Ingested {len(corpus)} records into {settings.run_dir}[/]")


def _cmd_graph(args: argparse.Namespace, settings: Settings) -> None:
    with RunStore(settings.run_dir) as store:
        _, stats = _service(settings, store).graph()
    console.print_json(data=stats.to_dict())


def _cmd_augment(args: argparse.Namespace, settings: Settings) -> None:
    with RunStore(settings.run_dir) as store:
        result = _service(settings, store).augment()
    console.print(
        f"[green]{len(result.q_sen)} sentence-level and {len(result.q_tok)} token-level samples[/]"
        f" [dim]({len(result.report)} rejected)[/]"
    )


def _cmd_train(args: argparse.Namespace, settings: Settings) -> None:
    with RunStore(settings.run_dir) as store:
        report = _service(settings, store).train(args.resume_from)
    _print_train(report.model_dump(mode="json"))


def _cmd_eval(args: argparse.Namespace, settings: Settings) -> None:
    with RunStore(settings.run_dir) as store:
        results = _service(settings, store).evaluate(args.checkpoint, mode=args.mode, split=args.split_name)
    _print_eval(results.to_dict())


def _cmd_report(args: argparse.Namespace, settings: Settings) -> None:
    with RunStore(settings.run_dir) as store:
        summary = _service(settings, store).summary(plots=not args.no_plots)
    _print_summary(summary)


def _cmd_pipeline(args: argparse.Namespace, settings: Settings) -> None:
    with RunStore(settings.run_dir) as store:
        service = _service(settings, store)
        service.ingest(args.corpus, args.lexicon)
        service.graph()
        service.augment()
        service.train()
        service.evaluate(mode=args.mode, split=args.split_name)
        summary = service.summary()
    _print_summary(summary)
    console.print(f"[green]Pipeline finished in {settings.run_dir}[/]")


def _cmd_check(args: argparse.Namespace, settings: Settings) -> None:
    table = Table(title="termforge environment")
    table.add_column("item")
    table.add_column("value")
    table.add_row("version", __version__)
    table.add_row("config hash", settings.config_hash())
    table.add_row("run dir", str(settings.run_dir))
    table.add_row("run dir locked", str((settings.run_dir / LOCK_NAME).exists()))
    table.add_row("api key set", str(settings.secrets.api_key is not None))
    for package in ("numpy", "pydantic", "pydantic-settings", "structlog", "httpx", "tenacity", "rich"):
        try:
            table.add_row(package, importlib.metadata.version(package))
        except importlib.metadata.PackageNotFoundError:
            table.add_row(package, "[red]missing[/]")
    table.add_row("matplotlib (plots)", "available" if importlib.util.find_spec("matplotlib") else "not installed")
    console.print(table)
    console.print_json(data=settings.public_dump())


def _print_train(train: dict[str, Any]) -> None:
    table = Table(title="training stages")
    for column in ("stage", "samples", "steps", "first loss", "final loss", "seconds", "checkpoint"):
        table.add_column(column)
    for stage in train.get("stages", []):
        curve = stage["curve"]
        table.add_row(
            stage["name"],
            str(stage["samples"]),
            str(stage["steps"]),
            f"{curve[0]:.4f}",
            f"{curve[-1]:.4f}",
            f"{stage['seconds']:.1f}",
            stage["checkpoint"],
        )
    console.print(table)
    if train.get("skipped_stages"):
        console.print(f"[dim]skipped stages: {', '.join(train['skipped_stages'])}[/]")
    margin = train.get("margin")
    if margin:
        console.print(f"embedding margin before/after sentence stage: {margin['before']:.4f} -> {margin['after']:.4f}")


def _print_eval(results: dict[str, Any]) -> None:
    table = Table(title=f"evaluation ({results['mode']}, split={results['config'].get('split')})")
    table.add_column("metric")
    table.add_column("value")
    for key, value in results["qca"]["aggregates"].items():
        table.add_row(f"qca.{key}", f"{value:.4f}" if isinstance(value, float) else str(value))
    if results.get("qa"):
        for key, value in results["qa"]["aggregates"].items():
            table.add_row(f"qa.{key}", f"{value:.4f}" if isinstance(value, float) else str(value))
    console.print(table)
    categories = results["qca"].get("by_category") or {}
    if categories:
        by_category = Table(title="qca accuracy by category")
        by_category.add_column("category")
        by_category.add_column("samples")
        by_category.add_column("accuracy")
        for name, score in categories.items():
            by_category.add_row(name, str(score["samples"]), f"{score['accuracy']:.4f}")
        console.print(by_category)


def _print_summary(summary: dict[str, Any]) -> None:
    if "corpus" in summary:
        corpus = summary["corpus"]
        console.print(
            f"corpus: {corpus['records']} records, {corpus['mentions']} mentions, "
            f"{corpus['distinct_terms']} distinct terms, splits {corpus['by_split']}"
        )
    if "graph" in summary:
        graph = summary["graph"]
        console.print(f"graph: {graph['nodes']} nodes, edges {graph['edges']}, isolated {graph['isolated']}")
    if "rejections" in summary:
        rejections = summary["rejections"]
        console.print(f"rejections: {rejections['total']} {rejections['by_code']}")
    if "train" in summary:
        _print_train(summary["train"])
    if "eval" in summary:
        _print_eval(summary["eval"])
    for plot in summary.get("plots", []):
        console.print(f"[dim]plot written: {plot}[/]")


if __name__ == "__main__":
    main()
