"""Sampled-softmax training loss with importance-weighted negatives.

Negatives are drawn from the training-corpus unigram distribution raised
to a power beta (0.4 by default), with the current target excluded by
rejection; duplicates are allowed, so frequent words can appear several
times among the negatives of one step.  The evaluation path never uses
this: once trained, the output layer is scored with the ordinary softmax.
"""
import numpy as np

from .tensor import log_softmax, logsumexp, softmax

DEFAULT_BETA = 0.4


class UnigramSampler:
    """Proposal q(w) proportional to count(w)**beta, with O(log |V|) draws."""

    def __init__(self, counts, beta=DEFAULT_BETA):
        counts = np.asarray(counts, dtype=np.float64)
        if counts.ndim != 1 or counts.size < 1:
            raise ValueError("counts must be a 1-D array over the vocabulary")
        if not 0.0 <= beta <= 1.0:
            raise ValueError(f"beta {beta} outside [0, 1]")
        self.counts = np.maximum(counts, 1.0)  # every id keeps support
        self.beta = beta
        q = self.counts**beta
        self.q = q / q.sum()
        self._cdf = np.cumsum(self.q)
        self._cdf[-1] = 1.0

    @property
    def vocab_size(self):
        return self.q.size

    def draw(self, k, rng):
        """k independent draws from q (no exclusions)."""
        return np.searchsorted(self._cdf, rng.random(k), side="right")

    def sample_negatives(self, target_id, k, rng):
        """k draws from q with the target rejected and redrawn."""
        if k < 1:
            raise ValueError("need at least one negative sample")
        if self.vocab_size < 2:
            raise ValueError("cannot sample negatives from a vocabulary of size < 2")
        ids = self.draw(k, rng)
        while True:
            clash = ids == target_id
            if not clash.any():
                return ids
            ids[clash] = self.draw(int(clash.sum()), rng)


def blackout_loss(logits, q, target_pos=0):
    """Weighted-softmax loss over the target and its negative samples.

    logits and q are aligned over {target} | negatives; each score is
    importance-weighted by 1/q before the softmax.  Loss is
    -log p(target) - sum_k log(1 - p(k)).  Returns (loss, dlogits).
    """
    in_dtype = np.asarray(logits).dtype
    logits = np.asarray(logits, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if logits.shape != q.shape or logits.ndim != 1 or logits.size < 2:
        raise ValueError(f"need aligned 1-D logits/q of size >= 2, got {logits.shape} and {q.shape}")
    if not np.isfinite(logits).all():
        raise FloatingPointError("non-finite logits in blackout loss")
    if (q <= 0).any():
        raise ValueError("proposal probabilities must be positive")
    u = logits - np.log(q)
    log_p = log_softmax(u)
    p = np.exp(log_p)
    tiny = np.finfo(np.float64).tiny
    one_minus_p = np.maximum(1.0 - p, tiny)
    neg = np.ones(p.size, dtype=bool)
    neg[target_pos] = False
    loss = -log_p[target_pos] - np.log(one_minus_p[neg]).sum()
    # d/du_b = (p_b - [b=target]) + r_b*[b negative] - p_b * sum(r), r = p/(1-p)
    r = np.where(neg, p / one_minus_p, 0.0)
    dlogits = p.copy()
    dlogits[target_pos] -= 1.0
    dlogits += r
    dlogits -= p * r.sum()
    # stability math runs in float64; hand the gradient back in the caller's dtype
    return float(loss), dlogits.astype(in_dtype, copy=False)


def full_softmax_loss(logits, target):
    """Exact negative log-likelihood and its gradient over the whole vocabulary."""
    logits = np.asarray(logits)
    loss = float(logsumexp(logits) - logits[target])
    dlogits = softmax(logits)
    dlogits[target] -= 1.0
    return loss, dlogits


def unigram_counts(id_sequences, vocab_size):
    """Occurrence counts over target ids (eos and unk included)."""
    counts = np.zeros(vocab_size, dtype=np.float64)
    for ids in id_sequences:
        counts += np.bincount(ids, minlength=vocab_size)
    return counts
