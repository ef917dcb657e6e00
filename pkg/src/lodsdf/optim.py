"""Adam optimizer state and in-place updates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8


@dataclass
class AdamState:
    """First/second moment buffers keyed by tensor name, with a shared step
    counter; codebook rows keep per-row counters because only the rows
    touched in a batch advance."""

    moments: dict[str, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)
    step: int = 0
    row_moments: tuple[np.ndarray, np.ndarray] | None = None
    row_steps: np.ndarray | None = None

    @classmethod
    def for_tensors(cls, named_tensors, codebook: np.ndarray | None = None) -> "AdamState":
        state = cls()
        for name, arr in named_tensors:
            state.moments[name] = (np.zeros_like(arr), np.zeros_like(arr))
        if codebook is not None:
            state.row_moments = (np.zeros_like(codebook), np.zeros_like(codebook))
            state.row_steps = np.zeros(len(codebook), dtype=np.int64)
        return state


def _update(value: np.ndarray, grad: np.ndarray, m: np.ndarray, v: np.ndarray,
            t: int, lr: float) -> None:
    m *= BETA1
    m += (1 - BETA1) * grad
    v *= BETA2
    v += (1 - BETA2) * (grad * grad)
    m_hat = m / (1 - BETA1**t)
    v_hat = v / (1 - BETA2**t)
    value -= (lr * m_hat / (np.sqrt(v_hat) + EPS)).astype(value.dtype, copy=False)


def adam_step(named_tensors, named_grads, state: AdamState, lr: float) -> None:
    """One bias-corrected Adam step over matching (name, tensor) pairs."""
    state.step += 1
    grads = dict(named_grads)
    for name, value in named_tensors:
        m, v = state.moments[name]
        _update(value, grads[name], m, v, state.step, lr)


def adam_step_rows(codebook: np.ndarray, row_grads: dict[int, np.ndarray],
                   state: AdamState, lr: float) -> None:
    """Adam update restricted to the codebook rows present in ``row_grads``."""
    m, v = state.row_moments
    for row, grad in row_grads.items():
        state.row_steps[row] += 1
        _update(codebook[row], grad, m[row], v[row], int(state.row_steps[row]), lr)
