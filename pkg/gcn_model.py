#!/usr/bin/env python3
"""
Two-layer graph convolutional backbone

    Z = op . Dropout(ReLU(op . X . w0)) . w1,  P = softmax(Z)

Forward and hand-derived backward passes. With the identity operator the same
network is the two-layer perceptron GLP trains on filtered features.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from graph_filters import PropagationOperator
from linalg_ops import DenseMatrix, matmul, relu, row_softmax
from shoestring_errors import DimensionMismatchError, InputError, StaleCacheError

logger = logging.getLogger(__name__)

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class GcnParams:
    """First-layer (m x h) and second-layer (h x K) weights"""
    w0: DenseMatrix
    w1: DenseMatrix
    version: int = 0

    def updated(self, w0: DenseMatrix, w1: DenseMatrix) -> 'GcnParams':
        return replace(self, w0=w0, w1=w1, version=self.version + 1)


@dataclass
class ForwardCache:
    """Intermediate tensors of one forward pass, stamped with the parameter version"""
    op_x: DenseMatrix
    pre_activation: DenseMatrix
    hidden: DenseMatrix
    keep_mask: np.ndarray
    keep_scale: float
    hidden_dropped: DenseMatrix
    op_hidden: DenseMatrix
    logits: DenseMatrix
    probs: DenseMatrix
    version: int = 0


@dataclass
class GradientSet:
    g_w0: DenseMatrix
    g_w1: DenseMatrix


def glorot_init(rows: int, cols: int, rng_seed) -> DenseMatrix:
    """Uniform in +-sqrt(6 / (rows + cols)), deterministic per seed"""
    if rows <= 0 or cols <= 0:
        raise InputError(f"Glorot init needs positive dimensions, got {rows}x{cols}")
    bound = np.sqrt(6.0 / (rows + cols))
    return np.random.default_rng(rng_seed).uniform(-bound, bound, size=(rows, cols))


def gcn_forward(op: PropagationOperator, x: DenseMatrix, params: GcnParams, dropout_rate: float,
                training: bool, rng: Optional[np.random.Generator] = None,
                op_x: Optional[DenseMatrix] = None, keep_mask: Optional[np.ndarray] = None) -> ForwardCache:
    """
    Forward pass

    Args:
        op: propagation operator (A_hat, A_hat^k, AR solve, or identity)
        x: n x m features
        params: weights
        dropout_rate: probability of dropping a hidden unit during training
        training: apply inverted dropout
        rng: generator for the dropout mask
        op_x: precomputed op . x (constant across epochs)
        keep_mask: fixed boolean mask, overrides sampling

    Returns:
        ForwardCache
    """
    if not 0.0 <= dropout_rate < 1.0:
        raise InputError(f"Dropout rate must lie in [0, 1), got {dropout_rate}")
    if x.shape[1] != params.w0.shape[0]:
        raise DimensionMismatchError(f"Features have {x.shape[1]} columns, w0 expects {params.w0.shape[0]}")

    if op_x is None:
        op_x = op.apply(x)
    pre_activation = matmul(op_x, params.w0)
    hidden = relu(pre_activation)

    if training and dropout_rate > 0.0:
        if keep_mask is None:
            if rng is None:
                raise InputError("Training with dropout needs a random generator")
            keep_mask = rng.random(hidden.shape) >= dropout_rate
        keep_scale = 1.0 / (1.0 - dropout_rate)
    else:
        keep_mask = np.ones(hidden.shape, dtype=bool) if keep_mask is None else keep_mask
        keep_scale = 1.0

    hidden_dropped = hidden * keep_mask * keep_scale if keep_scale != 1.0 else hidden * keep_mask
    op_hidden = op.apply(hidden_dropped)
    logits = matmul(op_hidden, params.w1)
    return ForwardCache(
        op_x=op_x,
        pre_activation=pre_activation,
        hidden=hidden,
        keep_mask=keep_mask,
        keep_scale=keep_scale,
        hidden_dropped=hidden_dropped,
        op_hidden=op_hidden,
        logits=logits,
        probs=row_softmax(logits),
        version=params.version,
    )


def _labeled_index(mask) -> np.ndarray:
    idx = np.asarray(mask, dtype=np.int64).ravel()
    if idx.size == 0:
        raise InputError("Labeled set is empty")
    return idx


def ce_loss(p: DenseMatrix, labels, mask) -> float:
    """Summed cross-entropy over the labeled nodes"""
    idx = _labeled_index(mask)
    labels = np.asarray(labels, dtype=np.int64)
    picked = p[idx, labels[idx]]
    return float(-np.log(np.maximum(picked, PROB_FLOOR)).sum())


def ce_grad(p: DenseMatrix, labels, mask) -> DenseMatrix:
    """d ce_loss / d logits: P - onehot on labeled rows, zero elsewhere"""
    idx = _labeled_index(mask)
    labels = np.asarray(labels, dtype=np.int64)
    grad = np.zeros_like(p)
    grad[idx] = p[idx]
    grad[idx, labels[idx]] -= 1.0
    floored = p[idx, labels[idx]] < PROB_FLOOR
    grad[idx[floored]] = 0.0
    return grad


def gcn_backward(cache: ForwardCache, op: PropagationOperator, x: DenseMatrix, params: GcnParams,
                 d_logits: DenseMatrix, d_hidden: Optional[DenseMatrix] = None) -> GradientSet:
    """
    Backward pass

    The operator is symmetric, so it stands in for its own transpose.

    Args:
        cache: forward cache produced with params
        op: the forward operator
        x: features (shape check only; op . x is cached)
        params: weights
        d_logits: dLoss/dZ
        d_hidden: extra gradient on the dropped hidden activations (metric head on the hidden layer)

    Returns:
        GradientSet
    """
    if cache.version != params.version:
        raise StaleCacheError(
            f"Forward cache was computed at parameter version {cache.version}, parameters are at {params.version}"
        )
    if d_logits.shape != cache.logits.shape:
        raise DimensionMismatchError(f"d_logits is {d_logits.shape}, logits are {cache.logits.shape}")
    if x.shape[0] != cache.op_x.shape[0]:
        raise DimensionMismatchError(f"Features have {x.shape[0]} rows, cache has {cache.op_x.shape[0]}")

    g_w1 = cache.op_hidden.T @ d_logits
    d_hidden_dropped = op.apply(d_logits) @ params.w1.T
    if d_hidden is not None:
        d_hidden_dropped = d_hidden_dropped + d_hidden
    d_pre = d_hidden_dropped * cache.keep_mask * cache.keep_scale * (cache.pre_activation > 0.0)
    g_w0 = cache.op_x.T @ d_pre
    return GradientSet(g_w0=g_w0, g_w1=g_w1)
