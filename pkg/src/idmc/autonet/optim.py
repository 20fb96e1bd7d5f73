"""Adam."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericalError

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8


@dataclass
class AdamState:
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    t: int = 0


def adam_step(params, grads, lr, state: AdamState, names=None):
    """Return updated copies of ``params``; ``state`` is advanced in place.

    ``lr`` is a scalar or a per-parameter sequence.  Non-finite gradients abort
    the step before anything is modified.
    """
    for i, g in enumerate(grads):
        if not np.all(np.isfinite(g)):
            label = names[i] if names else f"#{i}"
            raise NumericalError(f"non-finite gradient in parameter {label} at step {state.t + 1}")
    if not state.m:
        state.m = [np.zeros_like(p, dtype=np.float64) for p in params]
        state.v = [np.zeros_like(p, dtype=np.float64) for p in params]
    lrs = np.broadcast_to(np.asarray(lr, dtype=np.float64), (len(params),))
    state.t += 1
    c1 = 1.0 - BETA1**state.t
    c2 = 1.0 - BETA2**state.t
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = BETA1 * state.m[i] + (1.0 - BETA1) * g
        state.v[i] = BETA2 * state.v[i] + (1.0 - BETA2) * g * g
        m_hat = state.m[i] / c1
        v_hat = state.v[i] / c2
        out.append(p - lrs[i] * m_hat / (np.sqrt(v_hat) + EPS))
    return out
