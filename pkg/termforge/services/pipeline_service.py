from __future__ import annotations

from pathlib import Path
from typing import Any, Optional

import httpx

from termforge.augment.pipeline import AugmentResult, augment_corpus, get_generator
from termforge.augment.records import SentenceQCA, TokenQCA, load_dataset, save_dataset
from termforge.core.config import Settings
from termforge.core.errors import ArtifactIOError, ValidationFailure
from termforge.core.logging import get_logger
from termforge.core.manifest import RunManifest, compute_sha256, derive_seed, upstream_hashes, write_manifest
from termforge.core.storage import RunStore
from termforge.core.workers import get_worker_backend
from termforge.corpus.extract import fill_entities
from termforge.corpus.loader import load_corpus, load_lexicon, save_corpus
from termforge.corpus.records import Corpus
from termforge.corpus.split import split_corpus
from termforge.corpus.stats import corpus_stats
from termforge.embedding.factory import get_provider
from termforge.evaluation.qa import score_qa
from termforge.evaluation.qca import score_qca
from termforge.evaluation.results import EvalResults, dumps_results
from termforge.evaluation.test_sets import make_test_sets
from termforge.graph.builder import build_graph
from termforge.graph.export import export_graph, load_graph
from termforge.graph.stats import GraphStats, graph_stats
from termforge.graph.types import SentenceGraph
from termforge.model.checkpoint import Checkpoint, load_checkpoint
from termforge.model.tinylm import TinyLM
from termforge.services.plots import write_plots
from termforge.training.data import fit_tokenizer
from termforge.training.pipeline import TrainReport, run_pipeline

CORPUS = "corpus.jsonl"
CORPUS_STATS = "corpus_stats.json"
GRAPH = "graph.jsonl"
GRAPH_STATS = "graph_stats.json"
Q_SEN = "q_sen.jsonl"
Q_TOK = "q_tok.jsonl"
REJECTIONS = "rejections.json"
TRAIN_REPORT = "train_report.json"
EVAL_RESULTS = "eval_results.json"


class PipelineService:
    """Runs each pipeline stage against one run directory.

    Every stage reads its inputs from the run directory (or explicit paths), writes a manifest before doing any
    work, then writes its artifacts. Callers hold the run-directory lock.
    """

    def __init__(self, settings: Settings, store: RunStore, *, transport: httpx.BaseTransport | None = None):
        self.settings = settings
        self.store = store
        self.transport = transport
        self.workers = get_worker_backend(settings.workers)
        self.logger = get_logger(component="pipeline_service", run_dir=str(store.root))

    def _record(
        self,
        stage: str,
        *,
        sub_seed: Optional[str] = None,
        inputs: Optional[dict[str, Path]] = None,
        upstream: Optional[list[str]] = None,
        outputs: Optional[list[str]] = None,
    ) -> RunManifest:
        hashed = {}
        for label, path in (inputs or {}).items():
            if not path.exists():
                raise ArtifactIOError("input_not_found", path=str(path))
            hashed[label] = compute_sha256(path)
        manifest = RunManifest(
            stage=stage,
            config_hash=self.settings.config_hash(),
            seed=self.settings.seed,
            sub_seed=derive_seed(self.settings.seed, sub_seed) if sub_seed else None,
            inputs=hashed,
            upstream=upstream_hashes(self.store, upstream or []),
            outputs=outputs or [],
        )
        write_manifest(self.store, manifest)
        self.logger.info("stage_recorded", stage=stage, config_hash=manifest.config_hash)
        return manifest

    def _require(self, name: str) -> Path:
        path = self.store.path(name)
        if not path.exists():
            raise ArtifactIOError("artifact_not_found", f"run the stage that produces {name} first", path=str(path))
        return path

    def load_corpus(self) -> Corpus:
        return load_corpus(self._require(CORPUS))

    def load_graph(self, corpus: Corpus) -> SentenceGraph:
        thresholds = {"theta_tok": self.settings.graph.theta_tok, "theta_sen": self.settings.graph.theta_sen}
        return load_graph(self._require(GRAPH), [record.id for record in corpus.records], thresholds)

    def load_datasets(self) -> tuple[list[SentenceQCA], list[TokenQCA]]:
        q_sen = [s for s in load_dataset(self._require(Q_SEN)) if isinstance(s, SentenceQCA)]
        q_tok = [s for s in load_dataset(self._require(Q_TOK)) if isinstance(s, TokenQCA)]
        return q_sen, q_tok

    def ingest(self, corpus_path: Path, lexicon_path: Optional[Path] = None) -> Corpus:
        inputs = {"corpus": corpus_path}
        if lexicon_path is not None:
            inputs["lexicon"] = lexicon_path
        self._record("ingest", sub_seed="split", inputs=inputs, outputs=[CORPUS, CORPUS_STATS])

        lexicon = load_lexicon(lexicon_path) if lexicon_path is not None else None
        corpus = load_corpus(corpus_path, lexicon)
        if lexicon is not None:
            corpus = fill_entities(corpus, lexicon)
        if corpus.is_split:
            self.logger.info("split_kept", records=len(corpus))
        else:
            corpus = split_corpus(corpus, self.settings.split_fraction, derive_seed(self.settings.seed, "split"))
        save_corpus(corpus, self.store.path(CORPUS))
        stats = corpus_stats(corpus)
        self.store.write_json(CORPUS_STATS, stats.to_dict())
        self.logger.info("ingest_finished", records=stats.records, by_split=stats.by_split)
        return corpus

    def graph(self) -> tuple[SentenceGraph, GraphStats]:
        self._record(
            "graph",
            sub_seed="graph",
            inputs={"corpus": self._require(CORPUS)},
            upstream=["ingest"],
            outputs=[GRAPH, GRAPH_STATS],
        )
        corpus = self.load_corpus()
        provider = get_provider(self.settings, transport=self.transport)
        graph = build_graph(corpus, provider, self.settings.graph.theta_tok, self.settings.graph.theta_sen, self.workers)
        export_graph(graph, self.store.path(GRAPH))
        stats = graph_stats(graph)
        self.store.write_json(GRAPH_STATS, stats.to_dict())
        self.logger.info("graph_finished", nodes=stats.nodes, edges=stats.edges["total"], isolated=stats.isolated)
        return graph, stats

    def augment(self) -> AugmentResult:
        self._record(
            "augment",
            sub_seed="augment",
            inputs={"corpus": self._require(CORPUS), "graph": self._require(GRAPH)},
            upstream=["ingest", "graph"],
            outputs=[Q_SEN, Q_TOK, REJECTIONS],
        )
        corpus = self.load_corpus()
        graph = self.load_graph(corpus)
        provider = get_provider(self.settings, transport=self.transport)
        backend = get_generator(self.settings, derive_seed(self.settings.seed, "augment"), transport=self.transport)
        try:
            result = augment_corpus(
                corpus, graph, backend, self.settings.augment, provider, self.settings.graph.theta_sen, self.workers
            )
        finally:
            close = getattr(getattr(backend, "client", None), "close", None)
            if close is not None:
                close()
        save_dataset(result.q_sen, self.store.path(Q_SEN))
        save_dataset(result.q_tok, self.store.path(Q_TOK))
        self.store.write_json(REJECTIONS, result.report.to_dict())
        self.logger.info(
            "augment_finished", q_sen=len(result.q_sen), q_tok=len(result.q_tok), rejected=len(result.report)
        )
        return result

    def initial_checkpoint(self, q_sen: list[SentenceQCA], q_tok: list[TokenQCA]) -> Checkpoint:
        """Fresh model whose vocabulary comes from a tokenizer fitted on the training samples."""
        tokenizer = fit_tokenizer(self.settings.model, q_sen, q_tok)
        config = self.settings.model.model_copy(update={"vocab_size": tokenizer.vocab_size})
        model = TinyLM.init(config, derive_seed(self.settings.seed, "model_init"))
        self.logger.info("model_initialised", parameters=model.n_parameters, vocab_size=tokenizer.vocab_size)
        return Checkpoint(model=model, tokenizer=tokenizer)

    def train(self, resume_from: Optional[Path] = None) -> TrainReport:
        inputs = {"q_sen": self._require(Q_SEN), "q_tok": self._require(Q_TOK)}
        if resume_from is not None:
            inputs["resume_from"] = resume_from
        self._record("train", sub_seed="model_init", inputs=inputs, upstream=["augment"], outputs=[TRAIN_REPORT])
        q_sen, q_tok = self.load_datasets()
        q_sen = [s for s in q_sen if s.split == "train"]
        q_tok = [s for s in q_tok if s.split == "train"]
        if resume_from is not None:
            checkpoint = load_checkpoint(resume_from)
            self.logger.info("training_resumed", checkpoint=str(resume_from), completed=checkpoint.completed_stages)
        else:
            checkpoint = self.initial_checkpoint(q_sen, q_tok)
        config = self.settings.train.model_copy(update={"seed": self.settings.seed})
        report = run_pipeline(
            checkpoint,
            q_sen,
            q_tok,
            config,
            self.store.root,
            workers=self.workers,
            resumed_from=str(resume_from) if resume_from is not None else None,
        )
        self.store.write_json(TRAIN_REPORT, report.model_dump(mode="json"))
        return report

    def latest_checkpoint(self) -> Path:
        if self.store.exists(TRAIN_REPORT):
            report = TrainReport.model_validate(self.store.read_json(TRAIN_REPORT))
            if report.final_checkpoint:
                return self.store.path(report.final_checkpoint)
        found = sorted(self.store.list("checkpoints"))
        if not found:
            raise ArtifactIOError("no_checkpoint", "run train first or pass --checkpoint")
        return found[-1]

    def evaluate(
        self, checkpoint_path: Optional[Path] = None, *, mode: Optional[str] = None, split: str = "test"
    ) -> EvalResults:
        checkpoint_path = checkpoint_path or self.latest_checkpoint()
        mode = mode or self.settings.eval.mode
        self._record(
            "eval",
            sub_seed="eval",
            inputs={"checkpoint": checkpoint_path, "q_sen": self._require(Q_SEN), "q_tok": self._require(Q_TOK)},
            upstream=["augment", "train"],
            outputs=[EVAL_RESULTS],
        )
        checkpoint = load_checkpoint(checkpoint_path)
        q_sen, q_tok = self.load_datasets()
        sets = make_test_sets(q_sen, q_tok, split=split)
        if not sets.qca:
            raise ValidationFailure("empty_test_set", split=split)
        eval_settings = self.settings.eval
        seed = eval_settings.seed if eval_settings.seed is not None else derive_seed(self.settings.seed, "eval")
        qca = score_qca(checkpoint.model, checkpoint.tokenizer, sets.qca, mode, seed=seed, workers=self.workers)
        qa = score_qa(checkpoint.model, checkpoint.tokenizer, sets.qa, eval_settings.max_new, workers=self.workers)
        results = EvalResults(
            config={
                "checkpoint": self._relative(checkpoint_path),
                "checkpoint_sha256": compute_sha256(checkpoint_path),
                "completed_stages": checkpoint.completed_stages,
                "max_new": eval_settings.max_new,
                "seed": seed,
                "split": split,
            },
            mode=mode,
            qca=qca,
            qa=qa,
        )
        self.store.write_text(EVAL_RESULTS, dumps_results(results))
        return results

    def summary(self, *, plots: bool = True) -> dict[str, Any]:
        """Collect the stats, report and results artifacts present in the run directory."""
        summary: dict[str, Any] = {}
        sources = {
            "corpus": CORPUS_STATS,
            "graph": GRAPH_STATS,
            "rejections": REJECTIONS,
            "train": TRAIN_REPORT,
            "eval": EVAL_RESULTS,
        }
        for key, name in sources.items():
            if self.store.exists(name):
                summary[key] = self.store.read_json(name)
        if not summary:
            raise ArtifactIOError("empty_run_dir", path=str(self.store.root))
        summary["plots"] = []
        if plots and "train" in summary:
            written = write_plots(summary["train"], self.store.path("plots"))
            summary["plots"] = [self._relative(path) for path in written]
        return summary

    def _relative(self, path: Path) -> str:
        try:
            return path.resolve().relative_to(self.store.root.resolve()).as_posix()
        except ValueError:
            return str(path)


__all__ = ["PipelineService"]
