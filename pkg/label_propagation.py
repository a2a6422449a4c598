#!/usr/bin/env python3
"""
Label propagation and generalized label propagation (GLP)

LP minimizes ||Z - Y||^2 + alpha Tr(Z^T L Z), whose minimizer solves
(I + alpha L) Z = Y. GLP filters the node features instead and trains a
two-layer perceptron on them.
"""

import logging
from typing import Optional

import numpy as np

from experiment_config import TrainConfig
from graph_filters import FilterKind, FilterSpec, IdentityOperator, apply_filter, ar_system
from graph_ops import Graph, laplacian
from linalg_ops import DEFAULT_CG_TOL, DenseMatrix, conjugate_gradient_solve
from network_trainer import ModelState, fit_network
from shoestring_errors import ConfigurationError, InputError

logger = logging.getLogger(__name__)


def label_matrix(labels, labeled_set, num_classes: int) -> DenseMatrix:
    """One-hot rows for labeled nodes, zero rows elsewhere"""
    labels = np.asarray(labels, dtype=np.int64)
    idx = np.asarray(labeled_set, dtype=np.int64).ravel()
    y = np.zeros((labels.shape[0], num_classes), dtype=np.float64)
    y[idx, labels[idx]] = 1.0
    return y


def lp_solve(g: Graph, y: DenseMatrix, alpha: float, normalized_laplacian: bool = False,
             tol: float = DEFAULT_CG_TOL) -> DenseMatrix:
    """
    Closed-form label propagation

    Args:
        g: graph
        y: n x K label matrix
        alpha: Laplacian regularization weight
        normalized_laplacian: use I - D^{-1/2} A D^{-1/2}

    Returns:
        n x K scores Z solving (I + alpha L) Z = Y
    """
    if not alpha > 0:
        raise ConfigurationError(f"LP alpha must be positive, got {alpha}")
    if not y.any(axis=1).any():
        raise InputError("Label propagation needs at least one labeled row")
    system = ar_system(laplacian(g, normalized=normalized_laplacian), alpha)
    return conjugate_gradient_solve(system, y, tol=tol)


def lp_predict(z: DenseMatrix) -> np.ndarray:
    """Row argmax, ties to the lowest class"""
    return np.argmax(z, axis=1).astype(np.int64)


def glp_pipeline(g: Graph, x: DenseMatrix, spec: FilterSpec, labels, labeled_set, config: TrainConfig,
                 num_classes: int, epochs: Optional[int] = None) -> ModelState:
    """
    Filter features over the graph, then train a two-layer perceptron on them

    Args:
        g: graph
        x: raw features
        spec: RNM or AR filter
        labels: full label vector
        labeled_set: training indices
        config: hyperparameters
        num_classes: K
        epochs: override of config.epochs

    Returns:
        Trained ModelState (identity operator over the filtered features)
    """
    if spec.kind == FilterKind.NONE:
        raise ConfigurationError("GLP needs an RNM or AR filter")
    filtered = apply_filter(spec, g, x, normalized_laplacian=config.normalized_laplacian, tol=config.cg_tol)
    logger.debug(f"GLP: filtered {x.shape[1]} features with {spec.kind.value}")
    return fit_network(IdentityOperator(g.n), filtered, labels, labeled_set, num_classes, config, spec,
                       epochs=epochs)
