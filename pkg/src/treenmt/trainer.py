"""Minibatch SGD training of the translation objective.

The per-pair loss is the teacher-forced negative log-likelihood summed
over target steps (final eos included); the batch loss is its mean over
pairs.  Gradients are clipped by joint L2 norm before every update.  The
learning rate halves whenever the development loss (always computed with
the exact softmax) worsens; parameters are kept, only the rate changes.
"""
import time
from dataclasses import dataclass, field, fields

import numpy as np

from . import decoder as dec
from . import encoder as enc
from . import kernels
from .blackout import blackout_loss, full_softmax_loss
from .params import sgd_update
from .tensor import GradientStore, clip_global_norm
from .vocab import Vocab

LOSS_MODES = ("blackout", "softmax")


@dataclass
class TrainConfig:
    d: int = 64
    e: int = None  # embedding size; defaults to d
    k_negatives: int = 10
    beta: float = 0.4
    batch_size: int = 128
    learning_rate: float = 1.0
    clip_norm: float = 3.0
    max_epochs: int = 10
    seed: int = 1
    loss_mode: str = "blackout"
    min_count: int = 2
    encoder_mode: str = "tree"
    precision: str = "float32"
    bucket_by_length: bool = False
    reverse_source: bool = False

    def __post_init__(self):
        if self.e is None:
            self.e = self.d
        if self.d < 1 or self.e < 1 or self.batch_size < 1:
            raise ValueError("dimensions and batch size must be positive")
        if self.loss_mode not in LOSS_MODES:
            raise ValueError(f"loss_mode must be one of {LOSS_MODES}")
        if self.encoder_mode not in enc.ENCODER_MODES:
            raise ValueError(f"encoder_mode must be one of {enc.ENCODER_MODES}")

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_mapping(cls, mapping):
        """Build from a flat key=value mapping, coercing strings to field types."""
        kwargs = {}
        for f in fields(cls):
            if f.name not in mapping:
                continue
            raw = mapping[f.name]
            if isinstance(raw, str):
                if f.name in ("d", "e", "k_negatives", "batch_size", "max_epochs", "seed", "min_count"):
                    raw = int(raw)
                elif f.name in ("beta", "learning_rate", "clip_norm"):
                    raw = float(raw)
                elif f.name in ("bucket_by_length", "reverse_source"):
                    raw = raw.lower() in ("1", "true", "yes", "on")
            kwargs[f.name] = raw
        return cls(**kwargs)


class StepCache:
    __slots__ = ("y_prev", "y", "x", "s_prev", "c_prev", "gates", "c", "s",
                 "alpha", "context", "s_tilde", "rows", "dlogits")

    def __init__(self, y_prev, y, x, s_prev, c_prev, gates, c, s, alpha,
                 context, s_tilde, rows, dlogits):
        self.y_prev = y_prev
        self.y = y
        self.x = x
        self.s_prev = s_prev
        self.c_prev = c_prev
        self.gates = gates
        self.c = c
        self.s = s
        self.alpha = alpha
        self.context = context
        self.s_tilde = s_tilde
        self.rows = rows  # None in softmax mode
        self.dlogits = dlogits


@dataclass
class PairForward:
    loss: float
    steps: list
    enc_out: object
    init_cache: tuple
    negatives: list  # per-step arrays (empty in softmax mode)


def pair_forward(pair, params, config, sampler=None, rng=None, negatives=None):
    """Teacher-forced forward pass of one pair, caching for backward.

    Blackout negatives come from `negatives` (a per-step list, used by the
    gradient checks) or are drawn from sampler/rng.
    """
    enc_out = enc.encode(pair, params, mode=config.encoder_mode, collect=True)
    state, init_cache = dec.init_decoder(enc_out, params)
    use_blackout = config.loss_mode == "blackout"
    steps = []
    used_negatives = []
    total = 0.0
    y_prev = Vocab.eos_id
    for j, y in enumerate(pair.tgt_ids):
        state, att, s_tilde, cache = dec.advance(y_prev, state, enc_out, params)
        x, s_prev, c_prev, gates, c_new, s_new, _, _ = cache
        if use_blackout:
            if negatives is not None:
                negs = np.asarray(negatives[j])
            else:
                negs = sampler.sample_negatives(y, config.k_negatives, rng)
            used_negatives.append(negs)
            rows = np.concatenate(([y], negs))
            logits = params.out_W[rows] @ s_tilde + params.out_b[rows]
            loss_j, dlogits = blackout_loss(logits, sampler.q[rows], target_pos=0)
        else:
            rows = None
            logits = params.out_W @ s_tilde + params.out_b
            loss_j, dlogits = full_softmax_loss(logits, y)
        if not np.isfinite(loss_j):
            raise FloatingPointError(f"non-finite loss at target step {j}")
        total += loss_j
        steps.append(StepCache(y_prev, y, x, s_prev, c_prev, gates, c_new,
                               s_new, att.alpha, att.context, s_tilde, rows, dlogits))
        y_prev = y
    return PairForward(total, steps, enc_out, init_cache, used_negatives)


def pair_backward(fwd, params, grads):
    """Accumulate gradients of fwd.loss into grads (additive, unscaled)."""
    enc_out = fwd.enc_out
    d = params.d
    e = params.e
    dtype = params.dtype
    T = enc_out.seq_h.shape[0]
    d_seq_h = np.zeros_like(enc_out.seq_h)
    d_seq_c = np.zeros_like(enc_out.seq_c)
    d_phr_h = np.zeros_like(enc_out.phr_h)
    d_phr_c = np.zeros_like(enc_out.phr_c)
    d_cand = np.zeros_like(enc_out.cand_h)

    ds_next = np.zeros(d, dtype=dtype)
    dc_next = np.zeros(d, dtype=dtype)
    ds_tilde_carry = np.zeros(d, dtype=dtype)
    dec_grads = (grads["dec.W"], grads["dec.U"], grads["dec.b"])
    for step in reversed(fwd.steps):
        dlogits = step.dlogits
        if step.rows is None:
            grads["out_W"] += np.outer(dlogits, step.s_tilde)
            grads["out_b"] += dlogits
            ds_tilde = params.out_W.T @ dlogits
        else:
            np.add.at(grads["out_W"], step.rows, np.outer(dlogits, step.s_tilde))
            np.add.at(grads["out_b"], step.rows, dlogits)
            ds_tilde = params.out_W[step.rows].T @ dlogits
        ds_tilde = ds_tilde + ds_tilde_carry
        dpre = ds_tilde * (1.0 - step.s_tilde * step.s_tilde)
        cat = np.concatenate([step.s, step.context])
        grads["combine_W"] += np.outer(dpre, cat)
        grads["combine_b"] += dpre
        dcat = params.combine_W.T @ dpre
        ds = dcat[:d].copy()
        d_context = dcat[d:]
        ds += dec.attention_backward(d_context, step.alpha, step.s, enc_out, d_cand)
        ds += ds_next
        dx, ds_prev, dc_prev = kernels.lstm_backward(
            ds, dc_next, step.x, step.s_prev, step.c_prev, step.gates, step.c,
            params.dec.W, params.dec.U, *dec_grads,
        )
        grads["tgt_embed"][step.y_prev] += dx[:e]
        ds_tilde_carry = dx[e:]
        ds_next, dc_next = ds_prev, dc_prev

    # bridge cell: gradients for (s_1, c_1) flow to final chain state and root
    right_h, right_c, bridge_gates, c1 = fwd.init_cache
    dh_l, dc_l, dh_r, dc_r = kernels.tree_backward(
        ds_next, dc_next, enc_out.final_h, enc_out.final_c, right_h, right_c,
        bridge_gates, c1, params.bridge.Ul, params.bridge.Ur,
        grads["bridge.Ul"], grads["bridge.Ur"], grads["bridge.b"],
    )
    d_seq_h[-1] += dh_l
    d_seq_c[-1] += dc_l
    if not enc_out.fallback:
        d_phr_h[-1] += dh_r
        d_phr_c[-1] += dc_r

    d_seq_h += d_cand[:T]
    if d_phr_h.shape[0]:
        d_phr_h += d_cand[T:]
    enc.encoder_backward(enc_out, d_seq_h, d_seq_c, d_phr_h, d_phr_c, params, grads)


def batch_loss_and_grads(batch, params, config, sampler=None, rng=None,
                         negatives=None, grads=None):
    """Mean loss over the batch and its gradients (scaled by 1/|batch|)."""
    if grads is None:
        grads = GradientStore.for_params(params)
    total = 0.0
    for bi, pair in enumerate(batch):
        try:
            fwd = pair_forward(pair, params, config, sampler, rng,
                               None if negatives is None else negatives[bi])
        except FloatingPointError as exc:
            raise FloatingPointError(f"batch item {bi}: {exc}") from None
        total += fwd.loss
        pair_backward(fwd, params, grads)
    grads.scale(1.0 / len(batch))
    return total / len(batch), grads


@dataclass
class BatchStats:
    loss: float
    grad_norm: float  # before clipping
    update_norm: float  # after clipping


def train_minibatch(batch, params, config, lr, sampler=None, rng=None):
    """One SGD step on a batch; updates params in place and returns them."""
    if not batch:
        raise ValueError("empty minibatch")
    mean_loss, grads = batch_loss_and_grads(batch, params, config, sampler, rng)
    pre_norm = grads.global_norm()
    clip_global_norm(grads, config.clip_norm)
    sgd_update(params, grads, lr)
    return mean_loss, params, BatchStats(mean_loss, pre_norm, grads.global_norm())


@dataclass
class EvalResult:
    mean_nll: float  # per target token, exact softmax
    token_accuracy: float
    tokens: int

    @property
    def perplexity(self):
        return float(np.exp(self.mean_nll))


def evaluate(pairs, params, config):
    """Teacher-forced dev metrics with the exact softmax output layer."""
    nll = 0.0
    correct = 0
    tokens = 0
    for pair in pairs:
        enc_out = enc.encode(pair, params, mode=config.encoder_mode)
        state, _ = dec.init_decoder(enc_out, params)
        y_prev = Vocab.eos_id
        for y in pair.tgt_ids:
            state, _, _, log_probs = dec.decoder_step(y_prev, state, enc_out, params)
            nll -= float(log_probs[y])
            correct += int(int(np.argmax(log_probs)) == y)
            tokens += 1
            y_prev = y
    return EvalResult(nll / max(tokens, 1), correct / max(tokens, 1), tokens)


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    dev_loss: float
    dev_accuracy: float
    lr: float  # rate used during this epoch
    halved: bool  # schedule halved the rate after this epoch
    seconds: float
    max_update_norm: float

    def log_line(self):
        return (f"epoch {self.epoch} train_loss {self.train_loss:.4f} "
                f"dev_loss {self.dev_loss:.4f} lr {self.lr:g} "
                f"time {self.seconds:.1f}s")


def iter_batches(pairs, order, batch_size):
    for start in range(0, len(order), batch_size):
        yield [pairs[i] for i in order[start : start + batch_size]]


def run_training(train_pairs, dev_pairs, params, config, sampler=None,
                 ckpt_dir=None, src_vocab=None, tgt_vocab=None,
                 dev_eval=None, early_stop=None, log=None):
    """Full training loop with shuffling, lr halving and per-epoch checkpoints.

    dev_eval may replace the dev-loss computation (tests drive the schedule
    through it); early_stop(stats) can end training once a target is met.
    Returns the list of per-epoch stats.
    """
    if not train_pairs:
        raise ValueError("empty training corpus")
    root = np.random.SeedSequence(config.seed)
    shuffle_ss, sample_ss = root.spawn(2)
    shuffle_rng = np.random.default_rng(shuffle_ss)
    sample_rng = np.random.default_rng(sample_ss)
    lr = config.learning_rate
    prev_dev = None
    history = []
    for epoch in range(1, config.max_epochs + 1):
        t0 = time.perf_counter()
        order = _epoch_order(train_pairs, shuffle_rng, config)
        total = 0.0
        seen = 0
        max_update = 0.0
        for batch in iter_batches(train_pairs, order, config.batch_size):
            loss, _, stats = train_minibatch(batch, params, config, lr, sampler, sample_rng)
            total += loss * len(batch)
            seen += len(batch)
            max_update = max(max_update, stats.update_norm)
        params.assert_finite()
        if dev_eval is not None:
            dev_loss, dev_acc = dev_eval(dev_pairs, params, config)
        else:
            result = evaluate(dev_pairs, params, config)
            dev_loss, dev_acc = result.mean_nll, result.token_accuracy
        halved = prev_dev is not None and dev_loss > prev_dev
        stats = EpochStats(epoch, total / seen, dev_loss, dev_acc, lr, halved,
                           time.perf_counter() - t0, max_update)
        history.append(stats)
        if log is not None:
            log(stats.log_line())
        if ckpt_dir is not None:
            from .checkpoint import save_checkpoint

            rng_states = {
                "shuffle": shuffle_rng.bit_generator.state,
                "sample": sample_rng.bit_generator.state,
            }
            counts = sampler.counts.tolist() if sampler is not None else None
            save_checkpoint(
                f"{ckpt_dir}/epoch_{epoch:03d}.ckpt", params, config,
                src_vocab, tgt_vocab, epoch, lr, rng_states, counts,
            )
        if halved:
            lr /= 2.0
        prev_dev = dev_loss
        if early_stop is not None and early_stop(stats):
            break
    return history


def _epoch_order(pairs, rng, config):
    order = rng.permutation(len(pairs))
    if config.bucket_by_length:
        # group similar source lengths into batches, then shuffle batch order
        order = sorted(order, key=lambda i: pairs[i].src_len)
        blocks = [order[i : i + config.batch_size]
                  for i in range(0, len(order), config.batch_size)]
        rng.shuffle(blocks)
        order = [i for block in blocks for i in block]
    return list(order)
