"""Shared builders for small model instances and toy training setups."""
import numpy as np

from treenmt.blackout import UnigramSampler, unigram_counts
from treenmt.corpus import filter_pairs, load_pairs
from treenmt.params import ModelParams, init_params, randomize_params
from treenmt.toy import generate_toy_corpus
from treenmt.trainer import TrainConfig
from treenmt.vocab import build_vocab


def random_model(d=8, e=8, vocab=12, seed=7, dtype="float64", scale=0.5):
    params = ModelParams(vocab, vocab, d, e, dtype=dtype)
    randomize_params(params, np.random.default_rng(seed), scale=scale)
    return params


def toy_setup(task="copy", size=200, vocab_size=20, seed=3, config=None,
              dev_size=50, dev_seed=None):
    """Generated corpus -> vocabs, pairs, sampler, fresh params."""
    if config is None:
        config = TrainConfig(d=16, e=16, k_negatives=5, batch_size=16,
                             max_epochs=3, seed=seed, min_count=1)
    src, tgt, trees = generate_toy_corpus(size, vocab_size, task, seed)
    dev_src, dev_tgt, dev_trees = generate_toy_corpus(
        dev_size, vocab_size, task, dev_seed if dev_seed is not None else seed + 1)
    src_vocab = build_vocab((l.split() for l in src), 1)
    tgt_vocab = build_vocab((l.split() for l in tgt), 1)
    train_pairs, _ = load_pairs(src, tgt, src_vocab, tgt_vocab, trees)
    dev_pairs, _ = load_pairs(dev_src, dev_tgt, src_vocab, tgt_vocab, dev_trees)
    train_pairs = filter_pairs(train_pairs)
    dev_pairs = filter_pairs(dev_pairs, drop_unparsed=False)
    params = init_params(config, len(src_vocab), len(tgt_vocab), dtype=config.precision)
    counts = unigram_counts((p.tgt_ids for p in train_pairs), len(tgt_vocab))
    sampler = UnigramSampler(counts, config.beta)
    return {
        "config": config,
        "src_vocab": src_vocab,
        "tgt_vocab": tgt_vocab,
        "train_pairs": train_pairs,
        "dev_pairs": dev_pairs,
        "params": params,
        "sampler": sampler,
        "counts": counts,
    }
