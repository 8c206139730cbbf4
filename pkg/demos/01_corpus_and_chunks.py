"""Corpus handling and chunking walkthrough.

Builds a small synthetic labeled corpus, shows the preprocessing rules
(lowercasing, alphanumeric tokenization, header stripping), the stratified
70/15/15 split, and how documents partition into near-equal token chunks.

Run: python demos/01_corpus_and_chunks.py
"""

import numpy as np

from chunkdoc.chunker import mean_words_per_chunk, split_into_chunks
from chunkdoc.corpus import corpus_stats, split_dataset, strip_boilerplate, tokenize
from chunkdoc.synthetic import SyntheticSpec, generate_synthetic_corpus

print("== tokenization ==")
sample = "Quarterly Reports, 2019. Filed under Form 10-K."
print(f"raw : {sample!r}")
print(f"toks: {tokenize(sample)}")
print()

print("== header stripping ==")
filing = "\n".join([f"HEADER LINE {i}" for i in range(1, 7)] + ["Real content begins here.",
                                                                "And continues."])
print("a '10-K' style document starts with six identical header lines;")
print("after stripping only the body remains:")
print(repr(strip_boilerplate(filing, "10-K")))
print("labels outside the configured set are untouched:")
print(repr(strip_boilerplate(filing, "EX-99.1")[:24]), "...")
print()

print("== synthetic corpus and statistics ==")
spec = SyntheticSpec(n_classes=5, docs_per_class=40, doc_length=800,
                     filler_vocab_size=200, class_vocab_size=20, signal_rate=0.25)
corpus = generate_synthetic_corpus(spec, seed=7)
print(corpus_stats(corpus).format_table())
print()

print("== stratified split ==")
split = split_dataset(corpus, seed=11)
print(f"train={len(split.train)} validation={len(split.validation)} test={len(split.test)}")
train_set = set(split.train)
for label in corpus.label_set:
    ids = [d.id for d in corpus.by_label(label)]
    in_train = sum(1 for i in ids if i in train_set)
    print(f"  {label}: {in_train}/{len(ids)} in train")
print()

print("== chunking ==")
doc = corpus.documents[0]
for n in (1, 3, 7):
    chunks = split_into_chunks(doc.tokens, n, doc_id=doc.id)
    sizes = [len(c.tokens) for c in chunks]
    print(f"n={n:>2}: {len(chunks)} chunks, sizes {sizes[:8]}{'...' if len(sizes) > 8 else ''}")
flat = [t for c in split_into_chunks(doc.tokens, 7, doc.id) for t in c.tokens]
print(f"concatenating the chunks reproduces the document exactly: {list(doc.tokens) == flat}")
print()

print("== mean words per chunk across the corpus ==")
for n in (1, 3, 5, 7, 10, 25, 50):
    print(f"  n={n:>2}: W_c = {mean_words_per_chunk(corpus, n):8.1f}")
