import numpy as np
import pytest

from gcn_model import GcnParams, ce_grad, ce_loss, gcn_backward, gcn_forward, glorot_init
from graph_filters import FilterSpec, IdentityOperator, PowerOperator, build_operator
from graph_ops import build_graph, renormalized_adjacency
from metric_head import SimilarityKind, class_centroids, combined_loss, metric_backward, metric_loss
from network_trainer import init_params
from shoestring_errors import DimensionMismatchError, InputError, StaleCacheError

STEP = 1e-5
NUM_CLASSES = 3
LAMBDA = 0.5


def objective(op, x, params, labels, labeled, kind, layer):
    cache = gcn_forward(op, x, params, 0.0, training=False)
    loss = ce_loss(cache.probs, labels, labeled)
    if kind is not None:
        z = cache.logits if layer == 'final' else cache.hidden_dropped
        protos = class_centroids(z, labels, labeled, NUM_CLASSES)
        loss = combined_loss(loss, metric_loss(z, labels, labeled, protos, kind), LAMBDA)
    return loss


def analytic_gradients(op, x, params, labels, labeled, kind, layer):
    cache = gcn_forward(op, x, params, 0.0, training=False)
    d_logits = ce_grad(cache.probs, labels, labeled)
    d_hidden = None
    if kind is not None:
        if layer == 'final':
            d_logits = d_logits + LAMBDA * metric_backward(cache.logits, labels, labeled, kind, NUM_CLASSES)
        else:
            d_hidden = LAMBDA * metric_backward(cache.hidden_dropped, labels, labeled, kind, NUM_CLASSES)
    return gcn_backward(cache, op, x, params, d_logits, d_hidden=d_hidden)


def numeric_gradient(op, x, params, labels, labeled, kind, layer, which):
    target = getattr(params, which)
    grad = np.zeros_like(target)
    for index in np.ndindex(target.shape):
        shifted = []
        for sign in (1.0, -1.0):
            w = target.copy()
            w[index] += sign * STEP
            p = GcnParams(w0=w, w1=params.w1) if which == 'w0' else GcnParams(w0=params.w0, w1=w)
            shifted.append(objective(op, x, p, labels, labeled, kind, layer))
        grad[index] = (shifted[0] - shifted[1]) / (2 * STEP)
    return grad


def relative_error(analytic, numeric):
    """Largest entrywise |a - fd| / max(|a|, |fd|, 1e-8)"""
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / scale))


@pytest.mark.parametrize("kind", [None, SimilarityKind.COS, SimilarityKind.L1, SimilarityKind.L2])
@pytest.mark.parametrize("layer", ['final', 'hidden'])
def test_parameter_gradients_match_finite_differences(small_problem, kind, layer):
    graph, x, labels, labeled = small_problem
    if kind is None and layer == 'hidden':
        pytest.skip("hidden layer only matters with the metric head")
    op = PowerOperator(renormalized_adjacency(graph), 1)
    params = init_params(6, 4, NUM_CLASSES, seed=11)
    grads = analytic_gradients(op, x, params, labels, labeled, kind, layer)
    for which, analytic in (('w0', grads.g_w0), ('w1', grads.g_w1)):
        numeric = numeric_gradient(op, x, params, labels, labeled, kind, layer, which)
        assert relative_error(analytic, numeric) < 1e-4, which


@pytest.mark.parametrize("kind", [None, SimilarityKind.COS])
def test_gradients_through_filtered_operator(small_problem, kind):
    graph, x, labels, labeled = small_problem
    op = build_operator('igcn_rnm', graph, FilterSpec(kind='rnm', k=3))
    params = init_params(6, 4, NUM_CLASSES, seed=4)
    grads = analytic_gradients(op, x, params, labels, labeled, kind, 'final')
    numeric = numeric_gradient(op, x, params, labels, labeled, kind, 'final', 'w0')
    assert relative_error(grads.g_w0, numeric) < 1e-4


def test_linear_network_gradient_collapses(small_problem):
    graph, x, labels, labeled = small_problem
    op = IdentityOperator(12)
    params = GcnParams(w0=np.abs(glorot_init(6, 4, 0)) + 0.1, w1=glorot_init(4, 3, 1))
    cache = gcn_forward(op, x, params, 0.0, training=False)
    assert (cache.pre_activation > 0).all()
    d = ce_grad(cache.probs, labels, labeled)
    grads = gcn_backward(cache, op, x, params, d)
    assert np.allclose(grads.g_w0, x.T @ (d @ params.w1.T), atol=1e-12)


def test_ce_grad_is_zero_off_the_labeled_set(small_problem):
    graph, x, labels, labeled = small_problem
    params = init_params(6, 4, NUM_CLASSES, seed=0)
    cache = gcn_forward(IdentityOperator(12), x, params, 0.0, training=False)
    grad = ce_grad(cache.probs, labels, labeled)
    unlabeled = np.setdiff1d(np.arange(12), labeled)
    assert not grad[unlabeled].any()
    assert np.allclose(grad[labeled].sum(axis=1), 0.0)


def test_ce_loss_is_summed():
    p = np.array([[0.5, 0.5], [0.25, 0.75]])
    assert np.isclose(ce_loss(p, [0, 1], [0, 1]), -np.log(0.5) - np.log(0.75))


def test_ce_loss_empty_mask():
    with pytest.raises(InputError):
        ce_loss(np.ones((2, 2)) / 2, [0, 1], [])


def test_stale_cache_is_rejected(small_problem):
    graph, x, labels, labeled = small_problem
    op = IdentityOperator(12)
    params = init_params(6, 4, NUM_CLASSES, seed=0)
    cache = gcn_forward(op, x, params, 0.0, training=False)
    newer = params.updated(params.w0, params.w1)
    with pytest.raises(StaleCacheError):
        gcn_backward(cache, op, x, newer, ce_grad(cache.probs, labels, labeled))


def test_forward_rejects_feature_width_mismatch(small_problem):
    graph, x, labels, labeled = small_problem
    params = init_params(5, 4, NUM_CLASSES, seed=0)
    with pytest.raises(DimensionMismatchError):
        gcn_forward(IdentityOperator(12), x, params, 0.0, training=False)


def test_dropout_scales_kept_units(small_problem):
    graph, x, labels, labeled = small_problem
    params = init_params(6, 4, NUM_CLASSES, seed=0)
    cache = gcn_forward(IdentityOperator(12), x, params, 0.5, training=True, rng=np.random.default_rng(0))
    assert cache.keep_scale == 2.0
    assert np.allclose(cache.hidden_dropped, cache.hidden * cache.keep_mask * 2.0)


def test_inference_ignores_dropout(small_problem):
    graph, x, labels, labeled = small_problem
    params = init_params(6, 4, NUM_CLASSES, seed=0)
    cache = gcn_forward(IdentityOperator(12), x, params, 0.5, training=False)
    assert np.array_equal(cache.hidden_dropped, cache.hidden)
    assert np.allclose(cache.probs.sum(axis=1), 1.0)


def test_glorot_init_is_deterministic_and_bounded():
    w = glorot_init(10, 6, 3)
    assert np.array_equal(w, glorot_init(10, 6, 3))
    assert np.abs(w).max() <= np.sqrt(6.0 / 16)
    with pytest.raises(InputError):
        glorot_init(0, 3, 1)


@pytest.mark.parametrize("method", ['gcn', 'igcn_rnm'])
def test_relabeling_nodes_permutes_probabilities(small_problem, method):
    graph, x, labels, labeled = small_problem
    perm = np.random.default_rng(21).permutation(12)
    relabeled = build_graph(12, np.argsort(perm)[graph.edges()])
    spec = FilterSpec(kind='rnm', k=3)
    params = init_params(6, 4, NUM_CLASSES, seed=8)
    original = gcn_forward(build_operator(method, graph, spec), x, params, 0.0, training=False)
    permuted = gcn_forward(build_operator(method, relabeled, spec), x[perm], params, 0.0, training=False)
    assert np.abs(permuted.probs - original.probs[perm]).max() < 1e-12
