"""Command-line surface: corpus preparation, training, decoding, scoring.

Configuration comes from an optional key=value file plus flag overrides;
every TrainConfig field is a valid key, and path-valued keys (train_src,
dev_tgt, ...) may live there too.
"""
import argparse
import os
import sys

from . import trees as treelib
from .beam import translate_corpus
from .blackout import UnigramSampler, unigram_counts
from .bleu import bleu
from .checkpoint import load_checkpoint, save_checkpoint
from .corpus import LengthModel, estimate_length_model, filter_pairs, load_pairs, read_lines, write_lines
from .params import init_params
from .toy import generate_toy_corpus
from .trainer import TrainConfig, run_training
from .vocab import Vocab, build_vocab


def read_config_file(path):
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def _config_from_args(args):
    base = read_config_file(args.config) if getattr(args, "config", None) else {}
    overrides = {
        name: getattr(args, name)
        for name in ("d", "e", "k_negatives", "beta", "batch_size", "learning_rate",
                     "clip_norm", "max_epochs", "seed", "loss_mode", "min_count",
                     "encoder_mode", "precision", "bucket_by_length", "reverse_source")
        if getattr(args, name, None) is not None
    }
    base.update({k: v for k, v in overrides.items()})
    return TrainConfig.from_mapping(base), base


def _path_from(args, base, key):
    value = getattr(args, key, None)
    if value is None:
        value = base.get(key)
    return value


def _require(value, name):
    if value is None:
        raise SystemExit(f"error: missing required path {name} (flag or config key)")
    return value


def cmd_build_vocab(args):
    sentences = (line.split() for line in read_lines(args.corpus))
    vocab = build_vocab(sentences, args.min_count)
    vocab.save(args.out)
    print(f"wrote {len(vocab)} tokens to {args.out}")
    return 0


def cmd_prepare(args):
    src_vocab = Vocab.load(args.src_vocab)
    tgt_vocab = Vocab.load(args.tgt_vocab)
    tree_lines = read_lines(args.trees) if args.trees else None
    pairs, stats = load_pairs(read_lines(args.src), read_lines(args.tgt),
                              src_vocab, tgt_vocab, tree_lines,
                              binarize=args.binarize)
    drop_unparsed = args.mode == "train" and tree_lines is not None
    kept_pairs = filter_pairs(pairs, max_len=args.max_len, drop_unparsed=drop_unparsed)
    kept_rows = set(id(p) for p in kept_pairs)
    keep_mask = [id(p) in kept_rows for p in pairs]
    src_out = [line for line, keep in zip(read_lines(args.src), keep_mask) if keep]
    tgt_out = [line for line, keep in zip(read_lines(args.tgt), keep_mask) if keep]
    write_lines(args.out_prefix + ".src", src_out)
    write_lines(args.out_prefix + ".tgt", tgt_out)
    if tree_lines is not None:
        trees_out = [treelib.render(p.tree) if p.tree is not None else treelib.NOPARSE
                     for p in kept_pairs]
        write_lines(args.out_prefix + ".trees", trees_out)
    if args.length_model:
        estimate_length_model(kept_pairs, cap=args.length_cap).save(args.length_model)
    print(f"kept {len(kept_pairs)} of {stats.pairs} pairs "
          f"({stats.parse_failures} parse failures)")
    return 0


def cmd_train(args):
    config, base = _config_from_args(args)
    train_src = _require(_path_from(args, base, "train_src"), "train_src")
    train_tgt = _require(_path_from(args, base, "train_tgt"), "train_tgt")
    dev_src = _require(_path_from(args, base, "dev_src"), "dev_src")
    dev_tgt = _require(_path_from(args, base, "dev_tgt"), "dev_tgt")
    train_trees = _path_from(args, base, "train_trees")
    dev_trees = _path_from(args, base, "dev_trees")

    src_vocab_path = _path_from(args, base, "src_vocab")
    tgt_vocab_path = _path_from(args, base, "tgt_vocab")
    if src_vocab_path:
        src_vocab = Vocab.load(src_vocab_path)
    else:
        src_vocab = build_vocab((l.split() for l in read_lines(train_src)), config.min_count)
    if tgt_vocab_path:
        tgt_vocab = Vocab.load(tgt_vocab_path)
    else:
        tgt_vocab = build_vocab((l.split() for l in read_lines(train_tgt)), config.min_count)

    def load(src, tgt, trees, drop_unparsed):
        lines = read_lines(trees) if trees else None
        pairs, _ = load_pairs(read_lines(src), read_lines(tgt), src_vocab, tgt_vocab,
                              lines, reverse_source=config.reverse_source)
        return filter_pairs(pairs, drop_unparsed=drop_unparsed)

    use_trees = config.encoder_mode != "seq" and not config.reverse_source
    train_pairs = load(train_src, train_tgt, train_trees, drop_unparsed=use_trees and train_trees is not None)
    dev_pairs = load(dev_src, dev_tgt, dev_trees, drop_unparsed=False)
    if not train_pairs:
        raise SystemExit("error: no training pairs left after filtering")

    params = init_params(config, len(src_vocab), len(tgt_vocab), dtype=config.precision)
    counts = unigram_counts((p.tgt_ids for p in train_pairs), len(tgt_vocab))
    sampler = UnigramSampler(counts, config.beta)
    os.makedirs(args.ckpt_dir, exist_ok=True)
    log_path = os.path.join(args.ckpt_dir, "train.log")
    with open(log_path, "w", encoding="utf-8") as log_fh:

        def log(line):
            print(line)
            log_fh.write(line + "\n")
            log_fh.flush()

        history = run_training(train_pairs, dev_pairs, params, config, sampler,
                               ckpt_dir=args.ckpt_dir, src_vocab=src_vocab,
                               tgt_vocab=tgt_vocab, log=log)
    final = os.path.join(args.ckpt_dir, "final.ckpt")
    save_checkpoint(final, params, config, src_vocab, tgt_vocab,
                    len(history), history[-1].lr, {}, counts.tolist())
    print(f"saved {final}")
    return 0


def cmd_translate(args):
    ckpt = load_checkpoint(args.ckpt)
    src_lines = read_lines(args.src)
    tree_lines = read_lines(args.trees) if args.trees else None
    length_model = None
    if args.scoring == "proposed":
        if not args.length_model:
            raise SystemExit("error: --scoring proposed needs --length-model")
        length_model = LengthModel.load(args.length_model)
    sink = open(args.attention_dump, "w", encoding="utf-8") if args.attention_dump else None
    try:
        outputs, stats = translate_corpus(
            src_lines, tree_lines, ckpt.params, ckpt.src_vocab, ckpt.tgt_vocab,
            encoder_mode=ckpt.config.encoder_mode, beam_width=args.beam,
            length_model=length_model, max_len=args.max_len, attention_sink=sink,
        )
    finally:
        if sink is not None:
            sink.close()
    write_lines(args.out, outputs)
    print(f"translated {stats.sentences} sentences "
          f"({stats.fallbacks} fallback, {stats.unterminated} unterminated)")
    return 0


def cmd_score_bleu(args):
    report = bleu(read_lines(args.hyp), read_lines(args.ref))
    print(report.summary())
    if report.zero_ngram_order is not None:
        print(f"zero precision at n={report.zero_ngram_order}; BLEU reported as 0")
    return 0


def cmd_gen_toy(args):
    src, tgt, trees = generate_toy_corpus(args.size, args.vocab_size, args.task,
                                          args.seed, args.min_len, args.max_len)
    write_lines(args.out_prefix + ".src", src)
    write_lines(args.out_prefix + ".tgt", tgt)
    write_lines(args.out_prefix + ".trees", trees)
    print(f"wrote {args.size} {args.task} pairs to {args.out_prefix}.{{src,tgt,trees}}")
    return 0


def cmd_grad_check(args):
    from .gradcheck_harness import run_standard_checks

    worst = run_standard_checks(d=args.d, e=args.e, n_src=args.n, n_tgt=args.m,
                                k=args.k_negatives, seed=args.seed, eps=args.eps,
                                report=print)
    if worst >= args.tolerance:
        print(f"FAIL: max relative error {worst:.3e} >= {args.tolerance:g}")
        return 1
    print(f"OK: max relative error {worst:.3e} < {args.tolerance:g}")
    return 0


def cmd_inspect_attention(args):
    ckpt = load_checkpoint(args.ckpt)
    src_lines = read_lines(args.src)
    tree_lines = read_lines(args.trees) if args.trees else None
    with open(args.out, "w", encoding="utf-8") as sink:
        outputs, stats = translate_corpus(
            src_lines, tree_lines, ckpt.params, ckpt.src_vocab, ckpt.tgt_vocab,
            encoder_mode=ckpt.config.encoder_mode, beam_width=args.beam,
            max_len=args.max_len, attention_sink=sink,
        )
    print(f"dumped attention for {stats.sentences} sentences to {args.out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="treenmt")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-vocab", help="build a vocabulary from tokenized text")
    p.add_argument("--corpus", required=True)
    p.add_argument("--min-count", type=int, default=2, dest="min_count")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_vocab)

    p = sub.add_parser("prepare", help="filter a parallel corpus and fit the length model")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--trees")
    p.add_argument("--src-vocab", required=True, dest="src_vocab")
    p.add_argument("--tgt-vocab", required=True, dest="tgt_vocab")
    p.add_argument("--mode", choices=("train", "eval"), default="train")
    p.add_argument("--max-len", type=int, default=50, dest="max_len")
    p.add_argument("--binarize", action="store_true")
    p.add_argument("--length-model", dest="length_model")
    p.add_argument("--length-cap", type=int, default=1_000_000, dest="length_cap")
    p.add_argument("--out-prefix", required=True, dest="out_prefix")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--config")
    for name, typ in (("d", int), ("e", int), ("k_negatives", int), ("beta", float),
                      ("batch_size", int), ("learning_rate", float), ("clip_norm", float),
                      ("max_epochs", int), ("seed", int), ("min_count", int)):
        p.add_argument(f"--{name.replace('_', '-')}", type=typ, dest=name)
    p.add_argument("--loss-mode", choices=("blackout", "softmax"), dest="loss_mode")
    p.add_argument("--encoder-mode", choices=("tree", "seq", "tree_nocontext"),
                   dest="encoder_mode")
    p.add_argument("--precision", choices=("float32", "float64"))
    for name in ("train_src", "train_tgt", "train_trees", "dev_src", "dev_tgt",
                 "dev_trees", "src_vocab", "tgt_vocab"):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name)
    p.add_argument("--ckpt-dir", required=True, dest="ckpt_dir")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("translate", help="decode a source file with beam search")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--src", required=True)
    p.add_argument("--trees")
    p.add_argument("--out", required=True)
    p.add_argument("--beam", type=int, default=20)
    p.add_argument("--scoring", choices=("simple", "proposed"), default="simple")
    p.add_argument("--length-model", dest="length_model")
    p.add_argument("--max-len", type=int, default=100, dest="max_len")
    p.add_argument("--attention-dump", dest="attention_dump")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("score-bleu", help="corpus BLEU of a hypothesis file")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.set_defaults(func=cmd_score_bleu)

    p = sub.add_parser("gen-toy", help="generate a synthetic parallel corpus")
    p.add_argument("--task", choices=("copy", "reverse", "bracket"), default="copy")
    p.add_argument("--size", type=int, default=2000)
    p.add_argument("--vocab-size", type=int, default=50, dest="vocab_size")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--min-len", type=int, default=3, dest="min_len")
    p.add_argument("--max-len", type=int, default=12, dest="max_len")
    p.add_argument("--out-prefix", required=True, dest="out_prefix")
    p.set_defaults(func=cmd_gen_toy)

    p = sub.add_parser("grad-check", help="finite-difference check of every gradient path")
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--e", type=int, default=8)
    p.add_argument("--n", type=int, default=5, help="source tokens")
    p.add_argument("--m", type=int, default=4, help="target tokens")
    p.add_argument("--k-negatives", type=int, default=3, dest="k_negatives")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--eps", type=float, default=1e-4)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.set_defaults(func=cmd_grad_check)

    p = sub.add_parser("inspect-attention",
                       help="decode and dump the per-step attention matrix")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--src", required=True)
    p.add_argument("--trees")
    p.add_argument("--out", required=True)
    p.add_argument("--beam", type=int, default=1)
    p.add_argument("--max-len", type=int, default=100, dest="max_len")
    p.set_defaults(func=cmd_inspect_attention)
    return parser


def cli(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        return args.func(args)
    except SystemExit as exc:
        print(exc, file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli())


if __name__ == "__main__":
    main()
