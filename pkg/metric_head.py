#!/usr/bin/env python3
"""
Prototype metric head
Class centroids over labeled embeddings, similarity to each centroid, the
prototype softmax, the metric-based loss and its gradient, and nearest-centroid
prediction.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from linalg_ops import DenseMatrix, row_softmax
from shoestring_errors import ConfigurationError, InputError

logger = logging.getLogger(__name__)

NORM_EPS = 1e-12
PROB_FLOOR = 1e-12


class SimilarityKind(str, Enum):
    """L1/L2 are negated distances so larger always means more similar"""
    COS = 'cos'
    L1 = 'l1'
    L2 = 'l2'


DEFAULT_LAMBDA = {
    SimilarityKind.COS: 0.01,
    SimilarityKind.L1: 0.05,
    SimilarityKind.L2: 0.001,
}


@dataclass(frozen=True)
class Prototypes:
    """Per-class centroid embeddings (K x d) and labeled counts"""
    c: DenseMatrix
    counts: np.ndarray


def _labeled_index(labeled_set) -> np.ndarray:
    idx = np.asarray(labeled_set, dtype=np.int64).ravel()
    if idx.size == 0:
        raise InputError("Labeled set is empty")
    return idx


def class_centroids(z: DenseMatrix, labels, labeled_set, num_classes: Optional[int] = None) -> Prototypes:
    """
    Mean embedding of each class's labeled nodes

    Args:
        z: n x d embeddings
        labels: full label vector
        labeled_set: indices of labeled nodes
        num_classes: K (defaults to max label + 1)

    Returns:
        Prototypes
    """
    labels = np.asarray(labels, dtype=np.int64)
    idx = _labeled_index(labeled_set)
    k = int(num_classes) if num_classes is not None else int(labels.max()) + 1
    y = labels[idx]
    counts = np.bincount(y, minlength=k)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise ConfigurationError(f"Class {int(empty[0])} has no labeled sample; centroids need at least one per class")

    sums = np.zeros((k, z.shape[1]), dtype=np.float64)
    np.add.at(sums, y, z[idx])
    return Prototypes(c=sums / counts[:, None], counts=counts)


def _unit_rows(m: DenseMatrix):
    norms = np.linalg.norm(m, axis=1)
    guarded = np.maximum(norms, NORM_EPS)
    return m / guarded[:, None], norms, guarded


def similarity(a, b, kind: SimilarityKind) -> float:
    """Similarity between two embedding vectors"""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    kind = SimilarityKind(kind)
    if kind == SimilarityKind.COS:
        return float(a @ b / (max(np.linalg.norm(a), NORM_EPS) * max(np.linalg.norm(b), NORM_EPS)))
    if kind == SimilarityKind.L1:
        return -float(np.abs(a - b).sum())
    return -float(((a - b) ** 2).sum())


def similarity_matrix(z: DenseMatrix, c: DenseMatrix, kind: SimilarityKind) -> DenseMatrix:
    """n x K similarities of every embedding row to every centroid"""
    kind = SimilarityKind(kind)
    if kind == SimilarityKind.COS:
        u, _, _ = _unit_rows(z)
        v, _, _ = _unit_rows(c)
        return u @ v.T
    if kind == SimilarityKind.L1:
        return -cdist(z, c, metric='cityblock')
    return -cdist(z, c, metric='sqeuclidean')


def prototype_probs(z: DenseMatrix, protos: Prototypes, kind: SimilarityKind) -> DenseMatrix:
    """Softmax over similarities to the class prototypes"""
    return row_softmax(similarity_matrix(z, protos.c, kind))


def metric_loss(z: DenseMatrix, labels, labeled_set, protos: Prototypes, kind: SimilarityKind) -> float:
    """Cross-entropy of the prototype softmax over the labeled set"""
    labels = np.asarray(labels, dtype=np.int64)
    idx = _labeled_index(labeled_set)
    probs = prototype_probs(z[idx], protos, kind)
    picked = probs[np.arange(idx.size), labels[idx]]
    return float(-np.log(np.maximum(picked, PROB_FLOOR)).sum())


def combined_loss(ce: float, me: float, lam: float) -> float:
    """Backbone loss plus lambda times the metric loss"""
    if lam < 0:
        raise ConfigurationError(f"lambda must be non-negative, got {lam}")
    return ce + lam * me


def _normalization_backward(grad_unit: DenseMatrix, unit: DenseMatrix, norms: np.ndarray,
                            guarded: np.ndarray) -> DenseMatrix:
    """Pull a gradient on m / max(|m|, eps) back to m"""
    radial = np.einsum('ij,ij->i', grad_unit, unit)
    projected = grad_unit - unit * radial[:, None]
    # below the guard the map is a plain scaling by 1/eps
    projected = np.where((norms > NORM_EPS)[:, None], projected, grad_unit)
    return projected / guarded[:, None]


def metric_backward(z: DenseMatrix, labels, labeled_set, kind: SimilarityKind,
                    num_classes: Optional[int] = None, stop_gradient_centroids: bool = False) -> DenseMatrix:
    """
    Gradient of the metric loss with respect to every embedding row

    Centroids are recomputed from z and differentiated through unless
    stop_gradient_centroids is set. Unlabeled rows get zero gradient.

    Args:
        z: n x d embeddings
        labels: full label vector
        labeled_set: indices of labeled nodes
        kind: similarity kind
        num_classes: K (defaults to max label + 1)
        stop_gradient_centroids: treat centroids as constants

    Returns:
        n x d gradient
    """
    kind = SimilarityKind(kind)
    labels = np.asarray(labels, dtype=np.int64)
    idx = _labeled_index(labeled_set)
    protos = class_centroids(z, labels, idx, num_classes)
    c = protos.c
    k = c.shape[0]
    zl = z[idx]
    y = labels[idx]

    probs = row_softmax(similarity_matrix(zl, c, kind))
    # dL/dS for the labeled rows; clamped probabilities have zero derivative
    onehot = np.eye(k)[y]
    g = probs - onehot
    floored = probs[np.arange(idx.size), y] < PROB_FLOOR
    g[floored] = 0.0

    if kind == SimilarityKind.L2:
        diff = zl[:, None, :] - c[None, :, :]
        grad_zl = -2.0 * np.einsum('ik,ikd->id', g, diff)
        grad_c = 2.0 * np.einsum('ik,ikd->kd', g, diff)
    elif kind == SimilarityKind.L1:
        sign = np.sign(zl[:, None, :] - c[None, :, :])
        grad_zl = -np.einsum('ik,ikd->id', g, sign)
        grad_c = np.einsum('ik,ikd->kd', g, sign)
    else:
        u, z_norms, z_guarded = _unit_rows(zl)
        v, c_norms, c_guarded = _unit_rows(c)
        grad_zl = _normalization_backward(g @ v, u, z_norms, z_guarded)
        grad_c = _normalization_backward(g.T @ u, v, c_norms, c_guarded)

    if not stop_gradient_centroids:
        grad_zl = grad_zl + grad_c[y] / protos.counts[y][:, None]

    grad = np.zeros_like(z, dtype=np.float64)
    np.add.at(grad, idx, grad_zl)
    return grad


def shoestring_predict(z: DenseMatrix, protos: Prototypes, kind: SimilarityKind) -> np.ndarray:
    """Nearest prototype per node; argmax of the similarities (softmax is monotone), ties to lowest class"""
    return np.argmax(similarity_matrix(z, protos.c, kind), axis=1).astype(np.int64)
