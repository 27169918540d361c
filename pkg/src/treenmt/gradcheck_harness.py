"""Standard end-to-end gradient check instances.

Covers the four configurations {tree, fallback} x {blackout, softmax} on a
small random model in float64.  Parameters are randomized away from the
training initialization (zero blocks would hide sign errors behind zero
gradients), and blackout negatives are drawn once and frozen so the loss
is a deterministic function of the parameters.
"""
import numpy as np

from .blackout import UnigramSampler
from .corpus import SentencePair
from .gradcheck import gradient_check
from .params import ModelParams, randomize_params
from .tensor import GradientStore
from .toy import random_binary_tree
from .trainer import TrainConfig, pair_backward, pair_forward
from .vocab import Vocab

CHECK_VOCAB = 12


def build_instance(d=8, e=8, n_src=5, n_tgt=4, with_tree=True,
                   loss_mode="blackout", k=3, seed=1):
    """A frozen (loss_fn, grad_fn, params) triple for gradient_check."""
    rng = np.random.default_rng(seed)
    src_ids = list(rng.integers(2, CHECK_VOCAB, size=n_src)) + [Vocab.eos_id]
    tgt_ids = list(rng.integers(2, CHECK_VOCAB, size=n_tgt)) + [Vocab.eos_id]
    tree = None
    if with_tree:
        tree = random_binary_tree([f"t{i}" for i in range(n_src)], rng)
    pair = SentencePair([int(i) for i in src_ids], [int(i) for i in tgt_ids], tree)

    config = TrainConfig(d=d, e=e, k_negatives=k, loss_mode=loss_mode,
                         encoder_mode="tree", precision="float64",
                         batch_size=1, seed=seed, min_count=1)
    params = ModelParams(CHECK_VOCAB, CHECK_VOCAB, d, e, dtype="float64")
    randomize_params(params, rng)

    sampler = UnigramSampler(rng.integers(1, 20, size=CHECK_VOCAB), beta=0.4)
    negatives = None
    if loss_mode == "blackout":
        negatives = [sampler.sample_negatives(y, k, rng) for y in pair.tgt_ids]

    def loss_fn(p):
        return pair_forward(pair, p, config, sampler, negatives=negatives).loss

    def grad_fn(p):
        grads = GradientStore.for_params(p)
        fwd = pair_forward(pair, p, config, sampler, negatives=negatives)
        pair_backward(fwd, p, grads)
        return grads

    return loss_fn, grad_fn, params


def run_standard_checks(d=8, e=8, n_src=5, n_tgt=4, k=3, seed=1, eps=1e-4,
                        report=None):
    worst = 0.0
    for with_tree in (True, False):
        for loss_mode in ("blackout", "softmax"):
            loss_fn, grad_fn, params = build_instance(
                d, e, n_src, n_tgt, with_tree, loss_mode, k, seed)
            err = gradient_check(loss_fn, grad_fn, params, eps=eps)
            worst = max(worst, err)
            if report is not None:
                label = "tree" if with_tree else "fallback"
                report(f"grad-check {label}/{loss_mode}: max rel err {err:.3e}")
    return worst
