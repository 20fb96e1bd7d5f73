"""Trainable codec: gradient tape, encoder/decoder, Adam, checkpoints."""
from . import checkpoint, tape
from .network import (
    CodecParams,
    Graph,
    ImageTensor,
    build_graph,
    decode,
    encode,
    init_params,
    layer_sizes,
)
from .optim import AdamState, adam_step

__all__ = [
    "AdamState",
    "CodecParams",
    "Graph",
    "ImageTensor",
    "adam_step",
    "build_graph",
    "checkpoint",
    "decode",
    "encode",
    "init_params",
    "layer_sizes",
    "tape",
]
