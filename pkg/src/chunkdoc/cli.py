"""Batch command-line interface.

Commands: prepare, train, evaluate, predict, sweep. One JSON config file
drives everything; flags override it. All artifacts land in
``<output_dir>/<run_name>/`` next to a copy of the resolved configuration.

Exit codes: 0 success, 2 input/config error, 3 data error, 4 training failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .aggregator import load_aggregator, save_aggregator, write_training_log, collate
from .chunker import split_into_chunks
from .config import PipelineConfig, load_config
from .corpus import DatasetSplit, corpus_stats, load_corpus, split_dataset, tokenize
from .embedder import (embed_corpus, export_chunk_embeddings, infer_vector,
                       load_chunk_embeddings, load_pvdm, save_pvdm, _chunk_seed)
from .errors import ConfigError, DataError, TrainingError
from .evaluation import export_embeddings
from .pipeline import evaluate_linear, evaluate_svm, mean_chunk_vectors, train_pipeline
from .svm import load_svm, save_svm
from .sweep import DEFAULT_N_LIST, format_sweep_table, run_chunk_sweep, write_sweep_tsv

logger = logging.getLogger(__name__)


@contextmanager
def run_lock(run_dir: Path):
    """Advisory lock: two commands must not write the same run directory."""
    run_dir.mkdir(parents=True, exist_ok=True)
    lock = run_dir / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigError(
            f"run directory {run_dir} is locked by another command "
            f"(remove {lock} if that command is gone)"
        ) from None
    try:
        os.write(fd, f"{os.getpid()}\n".encode())
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def _resolved_config(args) -> PipelineConfig:
    config = load_config(args.config)
    if args.output is not None:
        config.output_dir = args.output
    if args.seed is not None:
        config.split.seed = args.seed
        config.aggregator.seed = args.seed
    if args.chunks is not None:
        if args.chunks < 1:
            raise ConfigError(f"--chunks must be >= 1, got {args.chunks}")
        config.chunking.n_chunks = args.chunks
    if getattr(args, "classifier", None) is not None:
        config.classifier = args.classifier
    return config


def _load_prepared(config: PipelineConfig):
    corpus = load_corpus(config.corpus.root, config.label_set(), config.header_labels())
    manifest = config.run_dir() / "split.json"
    if not manifest.is_file():
        raise ConfigError(f"no split manifest at {manifest}; run `prepare` first")
    return corpus, DatasetSplit.load(manifest)


def _write_resolved(config: PipelineConfig) -> None:
    (config.run_dir() / "resolved_config.json").write_text(config.to_json(), encoding="utf-8")


def cmd_prepare(args) -> int:
    config = _resolved_config(args)
    run_dir = config.run_dir()
    with run_lock(run_dir):
        _write_resolved(config)
        corpus = load_corpus(config.corpus.root, config.label_set(), config.header_labels())
        split = split_dataset(corpus, config.split.seed)
        split.save(run_dir / "split.json")
        stats = corpus_stats(corpus, config.header_labels())
        (run_dir / "stats.txt").write_text(stats.format_table() + "\n", encoding="utf-8")
        (run_dir / "stats.json").write_text(
            json.dumps(stats.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
        print(stats.format_table())
        print(f"split sizes: train={len(split.train)} validation={len(split.validation)} "
              f"test={len(split.test)} (seed {split.seed})")
    return 0


def cmd_train(args) -> int:
    config = _resolved_config(args)
    run_dir = config.run_dir()
    with run_lock(run_dir):
        _write_resolved(config)
        corpus, split = _load_prepared(config)
        marker = run_dir / "INCOMPLETE"
        marker.write_text("training in progress\n", encoding="utf-8")
        pipe = train_pipeline(
            corpus, split, config.settings(),
            n_chunks=config.chunking.n_chunks,
            classifier=config.classifier,
            seed=config.aggregator.seed,
        )
        save_pvdm(pipe.pvdm, run_dir / "pvdm.bin")
        save_aggregator(pipe.aggregator, run_dir / "aggregator.bin")
        write_training_log(pipe.train_log, run_dir / "train_log.jsonl")
        export_chunk_embeddings(pipe.embeddings, run_dir / "chunk_embeddings.tsv")
        doc_labels = {d.id: d.label for d in corpus}
        export_embeddings(mean_chunk_vectors(pipe.embeddings), doc_labels,
                          run_dir / "embeddings_doc2vec.tsv")
        export_embeddings(pipe.doc_vectors, doc_labels, run_dir / "embeddings_bilstm.tsv")
        if pipe.svm is not None:
            save_svm(pipe.svm, run_dir / "svm.bin")
        marker.unlink()
        best = max(pipe.train_log, key=lambda r: r["val_f1"])
        print(f"trained {config.chunking.n_chunks}-chunk model: "
              f"best val macro-F1 {100 * best['val_f1']:.2f} at epoch {best['epoch']} "
              f"({len(pipe.train_log)} epochs run)")
    return 0


class _LoadedRun:
    """Checkpoints plus re-derived embeddings for evaluate."""

    def __init__(self, config: PipelineConfig, corpus, need_svm: bool):
        run_dir = config.run_dir()
        pvdm_path = run_dir / "pvdm.bin"
        agg_path = run_dir / "aggregator.bin"
        for path in (pvdm_path, agg_path):
            if not path.is_file():
                raise ConfigError(f"missing checkpoint {path}; run `train` first")
        self.pvdm = load_pvdm(pvdm_path)
        self.aggregator = load_aggregator(agg_path)
        self.svm = None
        if need_svm:
            svm_path = run_dir / "svm.bin"
            if not svm_path.is_file():
                raise ConfigError(f"missing checkpoint {svm_path}; train with --classifier svm")
            self.svm = load_svm(svm_path)
        cached = run_dir / "chunk_embeddings.tsv"
        if cached.is_file():
            self.embeddings = load_chunk_embeddings(cached)
        else:
            self.embeddings = embed_corpus(
                self.pvdm, corpus, self.aggregator.n_chunks,
                steps=config.embedder.infer_steps, seed=config.aggregator.seed,
                alpha=config.embedder.alpha, min_alpha=config.embedder.min_alpha,
            )
        self.n_chunks = self.aggregator.n_chunks


def cmd_evaluate(args) -> int:
    config = _resolved_config(args)
    run_dir = config.run_dir()
    heads = {"linear": ["linear"], "svm": ["svm"], "both": ["linear", "svm"]}[config.classifier]
    with run_lock(run_dir):
        corpus, split = _load_prepared(config)
        run = _LoadedRun(config, corpus, need_svm="svm" in heads)
        from .pipeline import TrainedPipeline  # assembled from checkpoints
        from .aggregator import document_vectors

        doc_vecs = document_vectors(run.aggregator, run.embeddings)
        pipe = TrainedPipeline(
            pvdm=run.pvdm, embeddings=run.embeddings, aggregator=run.aggregator,
            train_log=[], doc_vectors=doc_vecs, svm=run.svm, n_chunks=run.n_chunks,
        )
        split_names = ["validation", "test"] if args.split == "all" else [args.split]
        for split_name in split_names:
            doc_ids = getattr(split, split_name)
            for head in heads:
                report = (evaluate_linear if head == "linear" else evaluate_svm)(
                    pipe, corpus, doc_ids, split_name
                )
                base = run_dir / f"eval_{split_name}_{head}"
                base.with_suffix(".json").write_text(report.to_json(), encoding="utf-8")
                base.with_suffix(".txt").write_text(report.format_table(), encoding="utf-8")
                print(f"[{split_name}/{head}] macro-F1 {100 * report.macro_f1:.2f} "
                      f"micro-F1 {100 * report.micro_f1:.2f}")
    return 0


def cmd_predict(args) -> int:
    config = _resolved_config(args)
    run_dir = config.run_dir()
    pvdm_path = run_dir / "pvdm.bin"
    agg_path = run_dir / "aggregator.bin"
    for path in (pvdm_path, agg_path):
        if not path.is_file():
            raise ConfigError(f"missing checkpoint {path}; run `train` first")
    input_path = Path(args.input)
    if not input_path.is_file():
        raise ConfigError(f"input file not found: {input_path}")
    pvdm = load_pvdm(pvdm_path)
    aggregator = load_aggregator(agg_path)
    n_chunks = args.chunks if args.chunks is not None else aggregator.n_chunks

    text = input_path.read_text(encoding="utf-8")
    tokens = tokenize(text)
    if not tokens:
        raise DataError(f"document {input_path} is empty after preprocessing")
    from .embedder import ChunkEmbedding, _infer_batch

    doc_id = input_path.stem
    chunks = split_into_chunks(tokens, n_chunks, doc_id=doc_id)
    embs = []
    for chunk in chunks:
        ids = pvdm.vocab.encode(chunk.tokens)
        if ids.size == 0:
            vec = np.zeros(pvdm.dim, dtype=np.float32)
        else:
            vec = _infer_batch(
                pvdm, [ids], config.embedder.infer_steps,
                [_chunk_seed(config.aggregator.seed, doc_id, chunk.index)],
                config.embedder.alpha, config.embedder.min_alpha,
            )[0]
        embs.append(ChunkEmbedding(doc_id, chunk.index, vec))
    x, mask = collate([embs])
    _, probs = aggregator.predict(x, mask)
    probabilities = {lab: float(p) for lab, p in zip(aggregator.labels, probs[0])}
    label = aggregator.labels[int(probs[0].argmax())]
    print(json.dumps({"label": label, "probabilities": probabilities}))
    return 0


def cmd_sweep(args) -> int:
    config = _resolved_config(args)
    run_dir = config.run_dir()
    if args.n is not None:
        try:
            n_list = [int(part) for part in args.n.split(",") if part]
        except ValueError:
            raise ConfigError(f"--n expects a comma-separated integer list, got {args.n!r}")
        if not n_list or min(n_list) < 1:
            raise ConfigError(f"--n values must be >= 1, got {args.n!r}")
    else:
        n_list = list(DEFAULT_N_LIST)
    classifiers = {"linear": ["linear"], "svm": ["svm"], "both": ["linear", "svm"]}[config.classifier]
    with run_lock(run_dir):
        _write_resolved(config)
        corpus, split = _load_prepared(config)
        rows = run_chunk_sweep(corpus, split, n_list, classifiers,
                               config.sweep_seeds(), config.settings())
        write_sweep_tsv(rows, run_dir / "sweep.tsv")
        print(format_sweep_table(rows))
    if all(r.failed for r in rows):
        raise TrainingError("every sweep cell failed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chunkdoc",
        description="Classify long documents by chunking, chunk embeddings, and an "
                    "attention BiLSTM aggregator with linear or SVM heads.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to the JSON config file")
    common.add_argument("--output", default=None, help="override output_dir")
    common.add_argument("--seed", type=int, default=None,
                        help="override the split and training seeds")
    common.add_argument("--chunks", type=int, default=None, help="override chunking.n_chunks")
    common.add_argument("--classifier", choices=["linear", "svm", "both"], default=None,
                        help="override the classifier head selection")
    common.add_argument("-v", "--verbose", action="store_true", help="info-level logging")

    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("prepare", parents=[common],
                       help="load the corpus, write the split manifest and stats")
    p.set_defaults(func=cmd_prepare)
    p = sub.add_parser("train", parents=[common],
                       help="train embedder, aggregator, and optional SVM; write checkpoints")
    p.set_defaults(func=cmd_train)
    p = sub.add_parser("evaluate", parents=[common], help="write F1 reports and confusion matrices")
    p.add_argument("--split", choices=["validation", "test", "all"], default="all")
    p.set_defaults(func=cmd_evaluate)
    p = sub.add_parser("predict", parents=[common], help="classify one plain-text document")
    p.add_argument("input", help="path to a UTF-8 text file")
    p.set_defaults(func=cmd_predict)
    p = sub.add_parser("sweep", parents=[common], help="train across chunk counts, emit a TSV")
    p.add_argument("--n", default=None, help="comma-separated chunk counts (default 1,3,5,7,10,25,50)")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except TrainingError as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
