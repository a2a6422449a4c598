#!/usr/bin/env python3
"""
Graph construction and spectral operators
Undirected, unweighted graphs with the renormalized adjacency and Laplacians
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import laplacian as csgraph_laplacian

from linalg_ops import SparseMatrix, as_sparse, identity
from shoestring_errors import GraphInputError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Graph:
    """Binary symmetric adjacency with zero diagonal plus its degree vector"""
    n: int
    adjacency: SparseMatrix
    degrees: np.ndarray

    @property
    def edge_count(self) -> int:
        """Number of undirected edges"""
        return self.adjacency.nnz // 2

    def edges(self) -> np.ndarray:
        """Undirected edges as (i, j) rows with i < j, sorted"""
        upper = sp.triu(self.adjacency, k=1).tocoo()
        order = np.lexsort((upper.col, upper.row))
        return np.column_stack([upper.row[order], upper.col[order]]).astype(np.int64)


def build_graph(n: int, edges: Iterable[Tuple[int, int]]) -> Graph:
    """
    Build a graph from an edge list

    Edges are symmetrized, duplicates collapse and self-loops are dropped.

    Args:
        n: node count
        edges: (i, j) pairs with 0 <= i, j < n

    Returns:
        Graph
    """
    if n < 0:
        raise GraphInputError(f"Node count must be non-negative, got {n}")

    pairs = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
    if pairs.size == 0:
        pairs = pairs.reshape(0, 2)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise GraphInputError(f"Edges must be (i, j) pairs, got array of shape {pairs.shape}")

    bad = (pairs < 0) | (pairs >= n)
    if bad.any():
        i, j = pairs[np.flatnonzero(bad.any(axis=1))[0]]
        raise GraphInputError(f"Edge ({i}, {j}) has an endpoint outside [0, {n})", pair=(int(i), int(j)))

    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    adjacency = as_sparse(sp.coo_matrix((np.ones(rows.shape[0]), (rows, cols)), shape=(n, n)))
    adjacency.data[:] = 1.0

    degrees = np.asarray(adjacency.sum(axis=1), dtype=np.float64).ravel()
    logger.debug(f"Built graph: {n} nodes, {adjacency.nnz // 2} undirected edges")
    return Graph(n=n, adjacency=adjacency, degrees=degrees)


def renormalized_adjacency(g: Graph) -> SparseMatrix:
    """D~^{-1/2} (A + I) D~^{-1/2}"""
    a_tilde = g.adjacency + identity(g.n)
    d_inv_sqrt = 1.0 / np.sqrt(g.degrees + 1.0)
    scale = sp.diags(d_inv_sqrt)
    return as_sparse(scale @ a_tilde @ scale)


def laplacian(g: Graph, normalized: bool = False) -> SparseMatrix:
    """
    Graph Laplacian

    Args:
        g: graph
        normalized: symmetric-normalized I - D^{-1/2} A D^{-1/2} instead of D - A

    Returns:
        Sparse Laplacian
    """
    return as_sparse(csgraph_laplacian(g.adjacency, normed=normalized))
