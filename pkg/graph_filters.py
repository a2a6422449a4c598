#!/usr/bin/env python3
"""
Low-pass graph filters and propagation operators

RNM filters with powers of the renormalized adjacency, AR filters by solving
(I + alpha L) R = X. The same operators drive the IGCN layers and the GLP
feature pre-filtering.
"""

import logging
from dataclasses import dataclass
from enum import Enum

from graph_ops import Graph, laplacian, renormalized_adjacency
from linalg_ops import (DEFAULT_CG_TOL, DenseMatrix, SparseMatrix, as_sparse,
                        conjugate_gradient_solve, identity, spmm)
from shoestring_errors import ConfigurationError, DimensionMismatchError

logger = logging.getLogger(__name__)


class FilterKind(str, Enum):
    NONE = 'none'
    RNM = 'rnm'
    AR = 'ar'


# Budgets at or below this many labels per class get the stronger filter defaults
SCARCE_BUDGET = 2


@dataclass(frozen=True)
class FilterSpec:
    """Filter kind and strength"""
    kind: FilterKind = FilterKind.NONE
    k: int = 2
    alpha: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, 'kind', FilterKind(self.kind))
        if self.kind == FilterKind.RNM and self.k < 1:
            raise ConfigurationError(f"RNM filter needs k >= 1, got {self.k}")
        if self.kind == FilterKind.AR and not self.alpha > 0:
            raise ConfigurationError(f"AR filter needs alpha > 0, got {self.alpha}")


def default_filter_spec(kind: FilterKind, labels_per_class: int) -> FilterSpec:
    """Budget-dependent filter strength: stronger smoothing when labels are scarce"""
    if labels_per_class <= SCARCE_BUDGET:
        return FilterSpec(kind=kind, k=4, alpha=4.0)
    return FilterSpec(kind=kind, k=2, alpha=2.0)


def rnm_filter(a_hat: SparseMatrix, x: DenseMatrix, k: int) -> DenseMatrix:
    """A_hat^k X as k successive sparse products"""
    if a_hat.shape[0] != a_hat.shape[1]:
        raise DimensionMismatchError(f"RNM filter needs a square operator, got {a_hat.shape}")
    if k < 1:
        raise ConfigurationError(f"RNM filter needs k >= 1, got {k}")
    out = x
    for _ in range(k):
        out = spmm(a_hat, out)
    return out


def ar_system(l: SparseMatrix, alpha: float) -> SparseMatrix:
    """I + alpha L"""
    return as_sparse(identity(l.shape[0]) + alpha * l)


def ar_filter(l: SparseMatrix, x: DenseMatrix, alpha: float, tol: float = DEFAULT_CG_TOL) -> DenseMatrix:
    """(I + alpha L)^{-1} X via conjugate gradient"""
    if not alpha > 0:
        raise ConfigurationError(f"AR filter needs alpha > 0, got {alpha}")
    if l.shape[1] != x.shape[0]:
        raise DimensionMismatchError(f"AR filter: Laplacian is {l.shape}, signal has {x.shape[0]} rows")
    return conjugate_gradient_solve(ar_system(l, alpha), x, tol=tol)


def apply_filter(spec: FilterSpec, g: Graph, x: DenseMatrix, normalized_laplacian: bool = False,
                 tol: float = DEFAULT_CG_TOL) -> DenseMatrix:
    """Filter node features according to spec"""
    if spec.kind == FilterKind.NONE:
        return x
    if spec.kind == FilterKind.RNM:
        return rnm_filter(renormalized_adjacency(g), x, spec.k)
    return ar_filter(laplacian(g, normalized=normalized_laplacian), x, spec.alpha, tol=tol)


class PropagationOperator:
    """Symmetric linear operator applied to node signals"""

    n: int

    def apply(self, x: DenseMatrix) -> DenseMatrix:
        raise NotImplementedError

    def _check(self, x: DenseMatrix):
        if x.shape[0] != self.n:
            raise DimensionMismatchError(f"{type(self).__name__} acts on {self.n} nodes, got {x.shape[0]} rows")


class IdentityOperator(PropagationOperator):
    def __init__(self, n: int):
        self.n = n

    def apply(self, x: DenseMatrix) -> DenseMatrix:
        self._check(x)
        return x


class PowerOperator(PropagationOperator):
    """matrix^k applied without forming the power"""

    def __init__(self, matrix: SparseMatrix, k: int = 1):
        self.matrix = matrix
        self.k = k
        self.n = matrix.shape[0]

    def apply(self, x: DenseMatrix) -> DenseMatrix:
        self._check(x)
        return rnm_filter(self.matrix, x, self.k)


class SolveOperator(PropagationOperator):
    """system^{-1} applied through conjugate gradient"""

    def __init__(self, system: SparseMatrix, tol: float = DEFAULT_CG_TOL):
        self.system = system
        self.tol = tol
        self.n = system.shape[0]

    def apply(self, x: DenseMatrix) -> DenseMatrix:
        self._check(x)
        return conjugate_gradient_solve(self.system, x, tol=self.tol)


def build_operator(method: str, g: Graph, spec: FilterSpec, normalized_laplacian: bool = False,
                   tol: float = DEFAULT_CG_TOL) -> PropagationOperator:
    """
    Propagation operator used inside the two network layers

    Args:
        method: gcn, igcn_rnm, igcn_ar, or any GLP/MLP method (identity)
        g: graph
        spec: filter strength for the IGCN variants

    Returns:
        PropagationOperator
    """
    if method == 'gcn':
        return PowerOperator(renormalized_adjacency(g), 1)
    if method == 'igcn_rnm':
        return PowerOperator(renormalized_adjacency(g), spec.k)
    if method == 'igcn_ar':
        return SolveOperator(ar_system(laplacian(g, normalized=normalized_laplacian), spec.alpha), tol=tol)
    return IdentityOperator(g.n)
