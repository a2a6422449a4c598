#!/usr/bin/env python3
"""
Shoestring pipeline
Train any backbone (GCN, IGCN, LP, GLP) with or without the prototype metric
head, predict labels and score them.
"""

import logging
from typing import Optional

import numpy as np

from experiment_config import TrainConfig
from graph_filters import build_operator
from graph_ops import Graph
from label_propagation import glp_pipeline, label_matrix, lp_predict, lp_solve
from linalg_ops import DenseMatrix
from metric_head import class_centroids, shoestring_predict
from network_trainer import ModelState, fit_network, network_embeddings, network_outputs
from shoestring_errors import ConfigurationError, DimensionMismatchError, InputError

logger = logging.getLogger(__name__)

METHOD_NAMES = {
    'gcn': 'GCN',
    'igcn_rnm': 'IGCN(RNM)',
    'igcn_ar': 'IGCN(AR)',
    'lp': 'LP',
    'glp_rnm': 'GLP(RNM)',
    'glp_ar': 'GLP(AR)',
}


def method_label(method: str, shoestring: bool, metric: Optional[str] = None) -> str:
    """Display name, e.g. 'GCN' or 'Shoestring-IGCN(RNM)-COS'"""
    name = METHOD_NAMES.get(method, method)
    if not shoestring:
        return name
    return f"Shoestring-{name}-{(metric or '').upper()}"


def _num_classes(labels: np.ndarray, num_classes: Optional[int]) -> int:
    return int(num_classes) if num_classes is not None else int(labels.max()) + 1


def train(config: TrainConfig, graph: Graph, x: DenseMatrix, labels, labeled_set,
          num_classes: Optional[int] = None) -> ModelState:
    """
    Train one configuration on one labeled set

    Args:
        config: hyperparameters (method, Shoestring flag, metric, ...)
        graph: graph
        x: n x m node features
        labels: full label vector (only labeled_set entries are used for fitting)
        labeled_set: labeled node indices
        num_classes: K (defaults to max label + 1)

    Returns:
        ModelState
    """
    labels = np.asarray(labels, dtype=np.int64)
    labeled = np.asarray(labeled_set, dtype=np.int64).ravel()
    if labeled.size == 0:
        raise InputError("Labeled set is empty")
    if x.shape[0] != graph.n:
        raise DimensionMismatchError(f"Features have {x.shape[0]} rows, graph has {graph.n} nodes")

    k = _num_classes(labels, num_classes)
    counts = np.bincount(labels[labeled], minlength=k)
    missing = np.flatnonzero(counts == 0)
    if config.shoestring and missing.size:
        raise ConfigurationError(
            f"Shoestring needs a labeled sample of every class; class {int(missing[0])} has none"
        )
    budget = int(counts[counts > 0].min())
    spec = config.filter_spec(budget)

    if config.method == 'lp':
        scores = lp_solve(graph, label_matrix(labels, labeled, k), config.lp_alpha,
                          normalized_laplacian=config.normalized_laplacian, tol=config.cg_tol)
        return ModelState(config=config, num_classes=k, filter_spec=spec, lp_scores=scores)

    if config.method in ('glp_rnm', 'glp_ar'):
        model = glp_pipeline(graph, x, spec, labels, labeled, config, k)
    else:
        op = build_operator(config.method, graph, spec, normalized_laplacian=config.normalized_laplacian,
                            tol=config.cg_tol)
        model = fit_network(op, x, labels, labeled, k, config, spec)

    logger.debug(f"Trained {method_label(config.method, config.shoestring, config.metric)} "
                 f"seed {config.seed}: final loss {model.loss_history[-1]:.4f}")
    return model


def model_embeddings(model: ModelState) -> DenseMatrix:
    """Node embeddings the metric head sees (LP: the propagated scores)"""
    if model.is_network:
        return network_embeddings(model)
    return model.lp_scores


def predict(model: ModelState, graph: Graph, x: DenseMatrix, labels, labeled_set) -> np.ndarray:
    """
    Label every node

    Shoestring models classify by the nearest class centroid of the labeled
    embeddings; baselines take the argmax of the backbone output.

    Args:
        model: trained state
        graph: the training graph
        x: the training features (op . x is cached on the model)
        labels: full label vector (labeled entries define the centroids)
        labeled_set: labeled node indices

    Returns:
        Label vector
    """
    n = model.lp_scores.shape[0] if not model.is_network else model.op.n
    if graph.n != n or x.shape[0] != n:
        raise DimensionMismatchError(f"Model was trained on {n} nodes, got graph {graph.n} / features {x.shape[0]}")

    if model.config.shoestring:
        z = model_embeddings(model)
        protos = class_centroids(z, labels, labeled_set, model.num_classes)
        return shoestring_predict(z, protos, model.similarity_kind)
    if not model.is_network:
        return lp_predict(model.lp_scores)
    return np.argmax(network_outputs(model).probs, axis=1).astype(np.int64)


def evaluate(pred, truth, test_set) -> float:
    """Fraction of test nodes predicted correctly"""
    idx = np.asarray(test_set, dtype=np.int64).ravel()
    if idx.size == 0:
        raise InputError("Test set is empty")
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    return float(np.mean(pred[idx] == truth[idx]))
