"""A small reverse-mode gradient engine over float64 numpy arrays.

Only the operations the codec needs are provided: affine maps, ``tanh``,
concatenation, per-block power normalisation, additive channel noise, the
straight-through modem node, sums and the MSE loss.  Every node stores its
forward value and a closure mapping the output gradient to parent gradients.
"""
from __future__ import annotations

import numpy as np

from .. import quantizer as _q
from ..core import complex_to_reals, reals_to_complex


class Node:
    __slots__ = ("value", "parents", "backward_fn", "requires_grad", "grad", "op")

    def __init__(self, value, parents=(), backward_fn=None, requires_grad=None, op="leaf"):
        self.value = np.asarray(value, dtype=np.float64)
        self.parents = tuple(parents)
        self.backward_fn = backward_fn
        if requires_grad is None:
            requires_grad = any(p.requires_grad for p in self.parents)
        self.requires_grad = requires_grad
        self.grad = None
        self.op = op

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Node({self.op}, shape={self.value.shape})"


def param(value) -> Node:
    """Trainable leaf."""
    return Node(np.array(value, dtype=np.float64), requires_grad=True)


def const(value) -> Node:
    return Node(value, requires_grad=False, op="const")


def _topological(root: Node) -> list[Node]:
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def backward(root: Node, grad=None) -> None:
    """Accumulate d(root)/d(leaf) into ``.grad`` of every node that requires it."""
    root.grad = np.ones_like(root.value) if grad is None else np.asarray(grad, dtype=np.float64)
    for node in reversed(_topological(root)):
        if node.backward_fn is None or node.grad is None:
            continue
        for p, g in zip(node.parents, node.backward_fn(node.grad)):
            if g is None or not p.requires_grad:
                continue
            p.grad = g if p.grad is None else p.grad + g


def affine(x: Node, w: Node, b: Node) -> Node:
    """x @ w + b for a (B, n_in) batch."""
    xv, wv = x.value, w.value
    if xv.shape[-1] != wv.shape[0] or b.value.shape != (wv.shape[1],):
        raise ValueError(f"affine shape mismatch: {xv.shape} @ {wv.shape} + {b.value.shape}")

    def bw(g):
        return g @ wv.T, xv.T @ g, g.sum(axis=0)

    return Node(xv @ wv + b.value, (x, w, b), bw, op="affine")


def tanh(x: Node) -> Node:
    y = np.tanh(x.value)
    return Node(y, (x,), lambda g: (g * (1.0 - y * y),), op="tanh")


def concat(a: Node, b: Node) -> Node:
    """Concatenate along the last axis."""
    split = a.value.shape[-1]
    return Node(
        np.concatenate([a.value, b.value], axis=-1),
        (a, b),
        lambda g: (g[..., :split], g[..., split:]),
        op="concat",
    )


def normalize_power(x: Node) -> Node:
    """Rescale each row of 2k reals so its k complex symbols have unit average power."""
    xv = x.value
    half = xv.shape[-1] / 2.0
    sq = np.sum(xv * xv, axis=-1, keepdims=True)
    if np.any(sq == 0):
        raise ValueError("cannot normalise an all-zero block")
    scale = np.sqrt(half / sq)

    def bw(g):
        return (scale * (g - xv * np.sum(xv * g, axis=-1, keepdims=True) / sq),)

    return Node(xv * scale, (x,), bw, op="normalize_power")


def add_noise(x: Node, noise) -> Node:
    """x + noise, with ``noise`` a constant array (analog channel)."""
    return Node(x.value + noise, (x,), lambda g: (g,), op="add_noise")


def total(x: Node) -> Node:
    return Node(np.sum(x.value), (x,), lambda g: (np.broadcast_to(g, x.value.shape).copy(),), op="sum")


def mse(pred: Node, target) -> Node:
    """Batch mean of per-image pixel-mean squared error."""
    t = target.value if isinstance(target, Node) else np.asarray(target, dtype=np.float64)
    if pred.value.shape != t.shape:
        raise ValueError(f"mse shape mismatch: {pred.value.shape} vs {t.shape}")
    diff = pred.value - t
    n = diff.size

    def bw(g):
        return (2.0 * g * diff / n,)

    return Node(np.mean(diff * diff), (pred,), bw, op="mse")


def ste_modem(s: Node, modem, noise=None, distance: Node | None = None) -> Node:
    """Discrete modulate -> channel -> demodulate, straight-through backward.

    ``s`` holds 2k reals per row.  Forward is the true discrete chain.
    Backward hands the output gradient to ``s`` unchanged (masked to the clip
    range in regular mode), and in regular mode ``distance`` receives the
    closed-form step gradient summed over every I/Q component.
    """
    sv = s.value
    y = reals_to_complex(sv)
    z = modem.nearest(y)
    z_hat = z if noise is None else z + noise
    y_hat = modem.nearest(z_hat)
    out = complex_to_reals(y_hat).reshape(sv.shape)

    if modem.mode == "regular":
        q = modem.quantizer
        if distance is not None and float(distance.value) != q.d:
            raise ValueError("distance node does not match the modem's quantizer")
        mask = _q.grad_wrt_input(sv, q)
        dgrad = _q.grad_wrt_distance(sv, q) if distance is not None else None

        def bw(g):
            gd = None if dgrad is None else np.asarray(np.sum(g * dgrad))
            return g * mask, gd

        parents = (s,) if distance is None else (s, distance)
        node = Node(out, parents, bw, op="ste_modem")
    else:
        node = Node(out, (s,), lambda g: (g,), op="ste_modem")
    return node
