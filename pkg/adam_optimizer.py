#!/usr/bin/env python3
"""
Adam optimizer for the two weight matrices of the backbone

    m = b1 m + (1 - b1) g
    v = b2 v + (1 - b2) g^2
    w = w - lr * m_hat / (sqrt(v_hat) + eps)
"""

from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from gcn_model import GcnParams, GradientSet

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


@dataclass(frozen=True)
class AdamState:
    """First/second moment accumulators per parameter matrix and the step counter"""
    m_w0: np.ndarray
    v_w0: np.ndarray
    m_w1: np.ndarray
    v_w1: np.ndarray
    step: int = 0
    beta1: float = BETA1
    beta2: float = BETA2
    eps: float = EPSILON

    @classmethod
    def for_params(cls, params: GcnParams) -> 'AdamState':
        return cls(
            m_w0=np.zeros_like(params.w0),
            v_w0=np.zeros_like(params.w0),
            m_w1=np.zeros_like(params.w1),
            v_w1=np.zeros_like(params.w1),
        )


def _moments(m, v, g, beta1, beta2):
    m = beta1 * m + (1.0 - beta1) * g
    v = beta2 * v + (1.0 - beta2) * g * g
    return m, v


def adam_step(params: GcnParams, grads: GradientSet, state: AdamState, lr: float) -> Tuple[GcnParams, AdamState]:
    """One bias-corrected Adam update; returns new params and state"""
    step = state.step + 1
    m_w0, v_w0 = _moments(state.m_w0, state.v_w0, grads.g_w0, state.beta1, state.beta2)
    m_w1, v_w1 = _moments(state.m_w1, state.v_w1, grads.g_w1, state.beta1, state.beta2)

    correction1 = 1.0 - state.beta1 ** step
    correction2 = 1.0 - state.beta2 ** step
    w0 = params.w0 - lr * (m_w0 / correction1) / (np.sqrt(v_w0 / correction2) + state.eps)
    w1 = params.w1 - lr * (m_w1 / correction1) / (np.sqrt(v_w1 / correction2) + state.eps)

    new_state = replace(state, m_w0=m_w0, v_w0=v_w0, m_w1=m_w1, v_w1=v_w1, step=step)
    return params.updated(w0, w1), new_state
