import os
from pathlib import Path

import hypothesis
import numpy as np
import pytest

from citation_data import sbm_generate
from graph_ops import build_graph

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=50, deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "fast"))


def random_graph(n, p, seed):
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((n, n)) < p, k=1)
    return build_graph(n, np.argwhere(upper))


@pytest.fixture
def small_graph():
    """12-node ring with a few chords"""
    ring = [(i, (i + 1) % 12) for i in range(12)]
    chords = [(0, 6), (2, 9), (3, 7), (4, 10)]
    return build_graph(12, ring + chords)


@pytest.fixture
def small_problem(small_graph):
    """Graph, positive features, labels over 3 classes and 2 labeled nodes per class"""
    rng = np.random.default_rng(7)
    x = rng.uniform(0.1, 1.0, size=(12, 6))
    labels = np.array([0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2])
    labeled = np.array([0, 1, 4, 5, 8, 9])
    return small_graph, x, labels, labeled


@pytest.fixture
def tiny_sbm():
    return sbm_generate(n=40, num_classes=2, p_in=0.5, p_out=0.05, feature_dim=4, noise=0.5, seed=3)


@pytest.fixture
def citation_files(tmp_path):
    """Five papers, two classes, one dangling cite"""
    content = tmp_path / "toy.content"
    cites = tmp_path / "toy.cites"
    content.write_text(
        "p10 1 0 1 Theory\n"
        "p20 0 1 1 Neural\n"
        "p30 1 1 0 Theory\n"
        "p40 0 0 2 Neural\n"
        "p50 1 0 0 Theory\n"
    )
    cites.write_text(
        "p10 p20\n"
        "p20 p30\n"
        "p30 p10\n"
        "p40 p50\n"
        "p99 p10\n"
    )
    return content, cites


def cora_dir():
    return Path(os.getenv("SHOESTRING_DATA_DIR", "data")) / "cora"
