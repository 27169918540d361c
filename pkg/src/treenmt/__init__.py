"""Tree-to-sequence attentional translation at desk scale.

A chain LSTM encodes the source tokens, a binary tree cell composes
phrase states on top of the chain states, and the decoder attends over
words and phrases jointly.  Training uses plain SGD with either a
sampled-softmax loss or the exact softmax; decoding is beam search with
an optional target-length penalty.
"""
from .kernels import BACKEND as kernel_backend  # noqa: F401

__version__ = "0.1.0"
