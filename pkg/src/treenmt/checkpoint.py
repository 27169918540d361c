"""Self-describing binary checkpoints.

Layout: an 8-byte magic, a little-endian uint64 header length, a UTF-8
JSON header (format version, config, vocabularies, epoch, learning rate,
RNG states, unigram counts, and the name/shape of every parameter block),
then the raw parameter values row-major little-endian in the recorded
dtype (IEEE-754 float32 by default; float64 checkpoints keep full
precision so the round trip stays bit exact in either mode).
"""
import json
import struct
from dataclasses import dataclass

import numpy as np

from .params import ModelParams
from .trainer import TrainConfig
from .vocab import Vocab

MAGIC = b"TREENMT\x00"
FORMAT_VERSION = 1
_WIRE = {"float32": "<f4", "float64": "<f8"}


@dataclass
class Checkpoint:
    params: ModelParams
    config: TrainConfig
    src_vocab: Vocab
    tgt_vocab: Vocab
    epoch: int
    learning_rate: float
    rng_states: dict
    unigram_counts: list


def save_checkpoint(path, params, config, src_vocab, tgt_vocab, epoch,
                    learning_rate, rng_states=None, unigram_counts=None):
    dtype_name = np.dtype(params.dtype).name
    header = {
        "format_version": FORMAT_VERSION,
        "dtype": dtype_name,
        "config": config.to_dict(),
        "src_vocab": list(src_vocab.tokens),
        "tgt_vocab": list(tgt_vocab.tokens),
        "epoch": int(epoch),
        "learning_rate": float(learning_rate),
        "rng_states": rng_states or {},
        "unigram_counts": unigram_counts,
        "entries": [
            {"name": name, "shape": list(arr.shape)}
            for name, arr in params.named_arrays()
        ],
    }
    blob = json.dumps(header, separators=(",", ":")).encode("utf-8")
    wire = _WIRE[dtype_name]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for _, arr in params.named_arrays():
            fh.write(np.ascontiguousarray(arr, dtype=wire).tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a treenmt checkpoint")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        if header.get("format_version") != FORMAT_VERSION:
            raise ValueError(
                f"{path}: unsupported checkpoint version {header.get('format_version')}"
            )
        config = TrainConfig.from_mapping(header["config"])
        src_vocab = Vocab(header["src_vocab"])
        tgt_vocab = Vocab(header["tgt_vocab"])
        dtype_name = header["dtype"]
        params = ModelParams(len(src_vocab), len(tgt_vocab), config.d, config.e,
                             dtype=dtype_name)
        wire = np.dtype(_WIRE[dtype_name])
        for spec, (name, arr) in zip(header["entries"], params.named_arrays()):
            if spec["name"] != name or tuple(spec["shape"]) != arr.shape:
                raise ValueError(
                    f"{path}: entry {spec['name']} {spec['shape']} does not match "
                    f"model block {name} {list(arr.shape)}"
                )
            count = arr.size
            raw = fh.read(count * wire.itemsize)
            if len(raw) != count * wire.itemsize:
                raise ValueError(f"{path}: truncated data for entry {name}")
            arr[...] = np.frombuffer(raw, dtype=wire).reshape(arr.shape)
        trailing = fh.read(1)
        if trailing:
            raise ValueError(f"{path}: trailing bytes after parameter data")
    return Checkpoint(params, config, src_vocab, tgt_vocab, header["epoch"],
                      header["learning_rate"], header["rng_states"],
                      header["unigram_counts"])


def restore_rng(state):
    """Rebuild a numpy Generator from a saved bit-generator state dict."""
    bitgen = getattr(np.random, state["bit_generator"])()
    bitgen.state = state
    return np.random.Generator(bitgen)
