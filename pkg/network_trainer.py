#!/usr/bin/env python3
"""
Full-graph training loop shared by GCN, IGCN and the GLP classifier

Per epoch: forward with dropout, d_logits = dCE/dZ (+ lambda dME/dZ under
Shoestring), backward, weight decay, Adam step.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from adam_optimizer import AdamState, adam_step
from experiment_config import TrainConfig
from gcn_model import GcnParams, GradientSet, ce_grad, ce_loss, gcn_backward, gcn_forward, glorot_init
from graph_filters import FilterSpec, PropagationOperator
from linalg_ops import DenseMatrix
from metric_head import SimilarityKind, class_centroids, combined_loss, metric_backward, metric_loss
from shoestring_errors import DivergenceError

logger = logging.getLogger(__name__)

LOG_EVERY = 50


@dataclass
class ModelState:
    """Everything predict needs: method, weights, operator, filter, metric and optimizer moments"""
    config: TrainConfig
    num_classes: int
    filter_spec: FilterSpec
    params: Optional[GcnParams] = None
    adam: Optional[AdamState] = None
    op: Optional[PropagationOperator] = None
    op_x: Optional[DenseMatrix] = None
    lp_scores: Optional[DenseMatrix] = None
    loss_history: List[float] = field(default_factory=list)

    @property
    def similarity_kind(self) -> SimilarityKind:
        return self.config.similarity_kind

    @property
    def is_network(self) -> bool:
        return self.params is not None


def init_params(num_features: int, hidden: int, num_classes: int, seed: int) -> GcnParams:
    seed_w0, seed_w1 = np.random.SeedSequence(seed).generate_state(2)
    return GcnParams(
        w0=glorot_init(num_features, hidden, int(seed_w0)),
        w1=glorot_init(hidden, num_classes, int(seed_w1)),
    )


def _embedding(cache, layer: str) -> DenseMatrix:
    return cache.hidden_dropped if layer == 'hidden' else cache.logits


def fit_network(op: PropagationOperator, x: DenseMatrix, labels, labeled_set, num_classes: int,
                config: TrainConfig, filter_spec: FilterSpec, epochs: Optional[int] = None) -> ModelState:
    """
    Train the two-layer network on one labeled set

    Args:
        op: propagation operator (identity for GLP)
        x: n x m input features (already filtered for GLP)
        labels: full label vector
        labeled_set: indices used for the losses
        num_classes: K
        config: hyperparameters
        filter_spec: recorded on the returned state
        epochs: override of config.epochs (0 returns the initialized network)

    Returns:
        ModelState
    """
    labels = np.asarray(labels, dtype=np.int64)
    labeled = np.asarray(labeled_set, dtype=np.int64)
    epochs = config.epochs if epochs is None else epochs
    lam = config.effective_lambda
    kind = config.similarity_kind

    params = init_params(x.shape[1], config.hidden, num_classes, config.seed)
    adam = AdamState.for_params(params)
    dropout_rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(1)[0])
    op_x = op.apply(x)
    history: List[float] = []

    for epoch in range(1, epochs + 1):
        cache = gcn_forward(op, x, params, config.dropout, training=True, rng=dropout_rng, op_x=op_x)
        loss = ce_loss(cache.probs, labels, labeled)
        d_logits = ce_grad(cache.probs, labels, labeled)
        d_hidden = None

        if config.shoestring:
            z = _embedding(cache, config.embedding_layer)
            protos = class_centroids(z, labels, labeled, num_classes)
            me = metric_loss(z, labels, labeled, protos, kind)
            d_me = metric_backward(z, labels, labeled, kind, num_classes,
                                   stop_gradient_centroids=config.stop_gradient_centroids)
            loss = combined_loss(loss, me, lam)
            if config.embedding_layer == 'hidden':
                d_hidden = lam * d_me
            else:
                d_logits = d_logits + lam * d_me

        if not math.isfinite(loss):
            raise DivergenceError(f"Non-finite loss at epoch {epoch}", epoch=epoch)
        history.append(loss)

        grads = gcn_backward(cache, op, x, params, d_logits, d_hidden=d_hidden)
        if config.weight_decay > 0:
            grads = GradientSet(
                g_w0=grads.g_w0 + config.weight_decay * params.w0,
                g_w1=grads.g_w1 + config.weight_decay * params.w1 if config.weight_decay_scope == 'all' else grads.g_w1,
            )
        params, adam = adam_step(params, grads, adam, config.lr)

        if epoch % LOG_EVERY == 0 or epoch == epochs:
            logger.debug(f"epoch {epoch}/{epochs} loss {loss:.6f}")

    return ModelState(
        config=config,
        num_classes=num_classes,
        filter_spec=filter_spec,
        params=params,
        adam=adam,
        op=op,
        op_x=op_x,
        loss_history=history,
    )


def network_outputs(model: ModelState):
    """Inference-mode forward pass (no dropout)"""
    return gcn_forward(model.op, model.op_x, model.params, model.config.dropout, training=False,
                       op_x=model.op_x)


def network_embeddings(model: ModelState) -> DenseMatrix:
    """Embeddings fed to the metric head: final logits or hidden activations"""
    return _embedding(network_outputs(model), model.config.embedding_layer)
