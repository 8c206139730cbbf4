"""Shared builders for the CLI and acceptance suites."""

import json
from pathlib import Path

from chunkdoc.synthetic import SyntheticSpec, generate_synthetic_corpus

CLI_LABELS = ["class0", "class1", "class2"]


def write_corpus_tree(root: Path, spec: SyntheticSpec, seed: int = 0):
    corpus = generate_synthetic_corpus(spec, seed=seed)
    for doc in corpus:
        path = root / f"{doc.id}.txt"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(doc.raw_text, encoding="utf-8")
    return corpus


def make_cli_workspace(base: Path):
    """Small on-disk corpus plus a config tuned to train in about a second."""
    corpus_root = base / "corpus"
    spec = SyntheticSpec(n_classes=3, docs_per_class=12, doc_length=120,
                         filler_vocab_size=25, class_vocab_size=6, signal_rate=0.35)
    write_corpus_tree(corpus_root, spec)
    config = {
        "corpus": {"root": str(corpus_root), "labels": CLI_LABELS},
        "split": {"seed": 5},
        "chunking": {"n_chunks": 3},
        "embedder": {"dim": 16, "window": 3, "epochs": 15, "negative": 3,
                     "min_count": 1, "per_class": 3, "infer_steps": 10},
        "aggregator": {"hidden_size": 8, "learning_rate": 0.02, "batch_size": 8,
                       "epochs": 20, "patience": 20, "seed": 3},
        "svm": {"C": 1.0},
        "output_dir": str(base / "runs"),
        "run_name": "t",
    }
    config_path = base / "config.json"
    config_path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    return base, config_path, config
