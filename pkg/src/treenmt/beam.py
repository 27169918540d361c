"""Length-aware beam search decoding.

Candidates are ranked while alive by the running sum of log-probabilities;
a hypothesis finishes when it emits eos or reaches the 100-token cap, and
its final score adds log p(len(y) | len(x)) from the length model (omitted
in "simple" scoring, where the sum alone ranks the finished pool).  The
penalty applies only to finished hypotheses: the score is defined over
complete sentences, and partials of different lengths are not comparable
under it.

Expansion keeps the top beam_width continuations by running score and is
fully deterministic: ties break by lower token id, then shorter
hypothesis, then parent order.  The search stops once the finished pool is
full and no live hypothesis could still beat its worst member (running
sums only decrease and the length penalty is at most 0).
"""
from dataclasses import dataclass

import numpy as np

from . import decoder as dec
from . import encoder as enc
from .corpus import MAX_TARGET_LEN, SentencePair
from .vocab import Vocab


@dataclass
class Hypothesis:
    tokens: tuple  # emitted ids; eos itself is never stored
    logp: float  # running sum of step log-probabilities
    state: object
    alphas: tuple  # per-step attention rows (empty unless collecting)
    finished: bool = False
    ended_with_eos: bool = False
    score: float = None  # set on finish: logp + length penalty


@dataclass
class BeamResult:
    tokens: list
    score: float
    ended_with_eos: bool
    attention: list  # one row per decode step (eos step included)
    steps: int


def beam_search(enc_out, params, beam_width, length_model=None,
                max_len=MAX_TARGET_LEN, collect_attention=False):
    """Decode one encoded sentence; returns the best finished hypothesis.

    With beam_width=1 and no length model this is exactly greedy argmax
    decoding.  A uniform length model shifts every finished score by the
    same constant, so rankings match simple scoring.
    """
    if beam_width < 1:
        raise ValueError("beam width must be >= 1")
    src_len = enc_out.seq_h.shape[0] - 1
    init_state, _ = dec.init_decoder(enc_out, params)
    live = [Hypothesis((), 0.0, init_state, ())]
    finished = []

    def finish(hyp, with_eos):
        penalty = 0.0
        if length_model is not None:
            penalty = length_model.log_prob(len(hyp.tokens), src_len)
        hyp.finished = True
        hyp.ended_with_eos = with_eos
        hyp.score = hyp.logp + penalty
        finished.append(hyp)
        finished.sort(key=lambda h: (-h.score, h.tokens))
        del finished[beam_width:]

    while live:
        # expand every live hypothesis over the whole vocabulary
        expansions = []  # (logp, token, parent_len, parent_idx, state, alphas)
        for pi, hyp in enumerate(live):
            y_prev = hyp.tokens[-1] if hyp.tokens else Vocab.eos_id
            state, att, _, log_probs = dec.decoder_step(y_prev, hyp.state, enc_out, params)
            alphas = hyp.alphas + (att.alpha,) if collect_attention else ()
            expansions.append((hyp, state, alphas, hyp.logp + log_probs))
        neg_logp = np.concatenate([scores for *_, scores in expansions]) * -1.0
        V = params.tgt_vocab_size
        token_ids = np.tile(np.arange(V), len(expansions))
        parent_idx = np.repeat(np.arange(len(expansions)), V)
        parent_len = np.array([len(h.tokens) for h, *_ in expansions])[parent_idx]
        ranked = np.lexsort((parent_idx, parent_len, token_ids, neg_logp))

        new_live = []
        for flat in ranked[: beam_width]:
            hyp, state, alphas, scores = expansions[parent_idx[flat]]
            w = int(token_ids[flat])
            child = Hypothesis(hyp.tokens, float(scores[w]), state, alphas)
            if w == Vocab.eos_id:
                finish(child, with_eos=True)
            else:
                child.tokens = hyp.tokens + (w,)
                if len(child.tokens) >= max_len:
                    finish(child, with_eos=False)
                else:
                    new_live.append(child)
        live = new_live
        if len(finished) == beam_width:
            worst = finished[-1].score
            if not live or max(h.logp for h in live) <= worst:
                break

    best = finished[0]
    n_steps = len(best.tokens) + (1 if best.ended_with_eos else 0)
    return BeamResult(list(best.tokens), best.score, best.ended_with_eos,
                      list(best.alphas) if collect_attention else [], n_steps)


@dataclass
class TranslateStats:
    sentences: int = 0
    fallbacks: int = 0
    unterminated: int = 0


def translate_corpus(src_lines, tree_lines, params, src_vocab, tgt_vocab,
                     encoder_mode="tree", beam_width=20, length_model=None,
                     max_len=MAX_TARGET_LEN, binarize=False,
                     attention_sink=None):
    """Translate line-aligned input; parse failures decode via fallback.

    attention_sink, when given, is a writable text file receiving the
    attention dump of every sentence.  Returns (output lines, stats).
    """
    from . import trees as treelib

    if tree_lines is not None and len(tree_lines) != len(src_lines):
        raise ValueError(
            f"tree/source line counts differ: {len(tree_lines)} vs {len(src_lines)}"
        )
    outputs = []
    stats = TranslateStats()
    for row, src in enumerate(src_lines):
        src_toks = src.split()
        tree = None
        if tree_lines is not None:
            parsed = treelib.parse_tree(tree_lines[row], binarize=binarize)
            if treelib.is_tree(parsed) and treelib.leaf_tokens(parsed) == src_toks:
                tree = parsed
        pair = SentencePair(src_vocab.encode(src_toks), [Vocab.eos_id], tree)
        enc_out = enc.encode(pair, params, mode=encoder_mode)
        if enc_out.fallback:
            stats.fallbacks += 1
        result = beam_search(enc_out, params, beam_width, length_model,
                             max_len, collect_attention=attention_sink is not None)
        if not result.ended_with_eos:
            stats.unterminated += 1
        tokens = [tgt_vocab.token_of(i) for i in result.tokens]
        outputs.append(" ".join(tokens))
        stats.sentences += 1
        if attention_sink is not None:
            labels = tokens + (["eos"] if result.ended_with_eos else [])
            dec.dump_attention(attention_sink, row, src_toks, enc_out.spans,
                               list(zip(labels, result.attention)))
    return outputs, stats
