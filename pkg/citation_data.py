#!/usr/bin/env python3
"""
Citation datasets, synthetic SBM graphs, label splits and embedding export

File formats
- content: `<id> <f_1> ... <f_m> <label>` (whitespace separated)
- cites:   `<cited_id> <citing_id>`
- embeddings: CSV `node_index,label,z_1,...,z_d`, floats at 17 significant digits
"""

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import networkx as nx
import numpy as np
import pandas as pd

from graph_ops import Graph, build_graph
from linalg_ops import DenseMatrix
from shoestring_errors import ConfigurationError, ExportError, FeatureWidthError, InputError, ParseError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'
CITATION_DATASETS = ('cora', 'citeseer', 'pubmed')


@dataclass(frozen=True)
class Dataset:
    """Graph, features and one label per node"""
    graph: Graph
    features: DenseMatrix
    labels: np.ndarray
    class_names: List[str]
    name: str
    node_ids: List[str] = field(default_factory=list)
    skipped_edges: int = 0

    @property
    def num_nodes(self) -> int:
        return self.graph.n

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @property
    def num_features(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class SplitSpec:
    """Labeled nodes (exactly labels_per_class per class) and the remaining test nodes"""
    labels_per_class: int
    seed: int
    labeled_set: np.ndarray
    test_set: np.ndarray


def row_normalize(features: DenseMatrix) -> DenseMatrix:
    """Divide each row by its sum; all-zero rows stay zero"""
    sums = features.sum(axis=1, keepdims=True)
    safe = np.where(sums == 0.0, 1.0, sums)
    return np.where(sums == 0.0, 0.0, features / safe)


def _read_lines(path: Path):
    with open(path, 'r', encoding='utf-8') as handle:
        for line_number, line in enumerate(handle, start=1):
            tokens = line.split()
            if tokens:
                yield line_number, tokens


def load_citation(content_path, cites_path, row_normalize_features: bool = True,
                  name: Optional[str] = None) -> Dataset:
    """
    Load a citation network in the content/cites format

    Node IDs map to indices in first-seen order; class names are sorted.
    Cites lines that reference unknown IDs are skipped and counted.

    Args:
        content_path: `<id> <features...> <label>` lines
        cites_path: `<cited_id> <citing_id>` lines
        row_normalize_features: divide feature rows by their sums
        name: dataset name (defaults to the content file stem)

    Returns:
        Dataset
    """
    content_path = Path(content_path)
    cites_path = Path(cites_path)

    node_ids: List[str] = []
    index: Dict[str, int] = {}
    rows: List[np.ndarray] = []
    raw_labels: List[str] = []
    width: Optional[int] = None

    for line_number, tokens in _read_lines(content_path):
        if len(tokens) < 3:
            raise ParseError(f"{content_path}:{line_number}: expected '<id> <features...> <label>'",
                             line_number=line_number)
        node_id, label = tokens[0], tokens[-1]
        if width is None:
            width = len(tokens) - 2
        elif len(tokens) - 2 != width:
            raise FeatureWidthError(
                f"{content_path}:{line_number}: {len(tokens) - 2} features, expected {width}",
                line_number=line_number,
            )
        if node_id in index:
            raise ParseError(f"{content_path}:{line_number}: duplicate node id '{node_id}'", line_number=line_number)
        try:
            rows.append(np.asarray(tokens[1:-1], dtype=np.float64))
        except ValueError:
            raise ParseError(f"{content_path}:{line_number}: non-numeric feature value",
                             line_number=line_number) from None
        index[node_id] = len(node_ids)
        node_ids.append(node_id)
        raw_labels.append(label)

    if not node_ids:
        raise ParseError(f"{content_path}: no nodes found")

    edges: List[Tuple[int, int]] = []
    skipped = 0
    for line_number, tokens in _read_lines(cites_path):
        if len(tokens) != 2:
            raise ParseError(f"{cites_path}:{line_number}: expected '<cited_id> <citing_id>'", line_number=line_number)
        cited, citing = tokens
        if cited not in index or citing not in index:
            skipped += 1
            continue
        edges.append((index[cited], index[citing]))

    if skipped:
        logger.warning(f"Skipped {skipped} cites lines referencing unknown node ids in {cites_path}")

    class_names = sorted(set(raw_labels))
    class_index = {c: i for i, c in enumerate(class_names)}
    features = np.vstack(rows)
    if row_normalize_features:
        features = row_normalize(features)

    dataset = Dataset(
        graph=build_graph(len(node_ids), edges),
        features=features,
        labels=np.asarray([class_index[c] for c in raw_labels], dtype=np.int64),
        class_names=class_names,
        name=name or content_path.stem,
        node_ids=node_ids,
        skipped_edges=skipped,
    )
    logger.info(f"Loaded {dataset.name}: {dataset.num_nodes} nodes, {dataset.graph.edge_count} edges, "
                f"{dataset.num_classes} classes, {dataset.num_features} features")
    return dataset


def _write_table(frame: pd.DataFrame, path: Path, **kwargs):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, **kwargs)
    except OSError as e:
        raise ExportError(f"Could not write {path}: {e}", path=str(path)) from e


def write_citation(dataset: Dataset, directory) -> Tuple[Path, Path]:
    """Write a dataset as <directory>/<name>.content and <name>.cites"""
    directory = Path(directory)
    ids = dataset.node_ids or [str(i) for i in range(dataset.num_nodes)]
    content = pd.DataFrame(dataset.features)
    content.insert(0, 'id', ids)
    content['label'] = [dataset.class_names[k] for k in dataset.labels]
    edges = dataset.graph.edges()
    cites = pd.DataFrame({
        'cited': [ids[j] for j in edges[:, 1]],
        'citing': [ids[i] for i in edges[:, 0]],
    })

    content_path = directory / f"{dataset.name}.content"
    cites_path = directory / f"{dataset.name}.cites"
    _write_table(content, content_path, sep='\t', header=False)
    _write_table(cites, cites_path, sep='\t', header=False)
    logger.info(f"Wrote {dataset.name} to {directory}")
    return content_path, cites_path


def dataset_paths(name: str, data_dir) -> Tuple[Path, Path]:
    base = Path(data_dir) / name
    return base / f"{name}.content", base / f"{name}.cites"


def load_dataset(name: str, data_dir=None, row_normalize_features: bool = True) -> Dataset:
    """Load cora, citeseer or pubmed from <data_dir>/<name>/<name>.content|cites"""
    data_dir = data_dir or os.getenv('SHOESTRING_DATA_DIR', 'data')
    content_path, cites_path = dataset_paths(name, data_dir)
    if not content_path.is_file() or not cites_path.is_file():
        raise ConfigurationError(
            f"Dataset '{name}' not found under {data_dir} (expected {content_path} and {cites_path}); "
            f"fetch it with scripts/fetch_citation_data.py"
        )
    return load_citation(content_path, cites_path, row_normalize_features=row_normalize_features, name=name)


def sbm_generate(n: int, num_classes: int, p_in: float, p_out: float, feature_dim: int, noise: float,
                 seed: int) -> Dataset:
    """
    Stochastic block model with planted equal-size communities

    Features are a one-hot block signature tiled over feature_dim columns
    (column j marks block j mod K) plus uniform noise in [-noise, noise].

    Args:
        n: node count (multiple of num_classes)
        num_classes: number of blocks K
        p_in: intra-block edge probability
        p_out: inter-block edge probability (< p_in)
        feature_dim: feature columns (>= K)
        noise: noise amplitude
        seed: random seed for edges and features

    Returns:
        Dataset
    """
    if num_classes < 1 or n < num_classes or n % num_classes:
        raise InputError(f"SBM needs K >= 1 dividing n, got n={n}, K={num_classes}")
    if not 0.0 <= p_out < p_in <= 1.0:
        raise InputError(f"SBM needs 0 <= p_out < p_in <= 1, got p_in={p_in}, p_out={p_out}")
    if feature_dim < num_classes:
        raise InputError(f"SBM feature_dim must be at least K={num_classes}, got {feature_dim}")
    if noise < 0:
        raise InputError(f"SBM noise must be non-negative, got {noise}")

    block_size = n // num_classes
    probs = np.full((num_classes, num_classes), p_out)
    np.fill_diagonal(probs, p_in)
    sbm = nx.stochastic_block_model([block_size] * num_classes, probs.tolist(), seed=seed)
    edges = np.asarray(list(sbm.edges()), dtype=np.int64).reshape(-1, 2)

    labels = np.repeat(np.arange(num_classes, dtype=np.int64), block_size)
    signature = (np.arange(feature_dim)[None, :] % num_classes == labels[:, None]).astype(np.float64)
    rng = np.random.default_rng(seed)
    features = signature + rng.uniform(-noise, noise, size=signature.shape) if noise > 0 else signature

    return Dataset(
        graph=build_graph(n, edges),
        features=features,
        labels=labels,
        class_names=[f"block_{k}" for k in range(num_classes)],
        name='sbm',
        node_ids=[str(i) for i in range(n)],
    )


def sample_split(dataset: Dataset, labels_per_class: int, seed: int) -> SplitSpec:
    """Sample labels_per_class labeled nodes per class without replacement; the rest is the test set"""
    if labels_per_class < 1:
        raise InputError(f"labels_per_class must be positive, got {labels_per_class}")
    rng = np.random.default_rng(seed)
    chosen = []
    for k in range(dataset.num_classes):
        members = np.flatnonzero(dataset.labels == k)
        if members.size < labels_per_class:
            raise InputError(
                f"Class {k} ({dataset.class_names[k]}) has {members.size} nodes, "
                f"fewer than {labels_per_class} labels per class"
            )
        chosen.append(rng.choice(members, size=labels_per_class, replace=False))

    labeled = np.sort(np.concatenate(chosen)).astype(np.int64)
    test = np.setdiff1d(np.arange(dataset.num_nodes), labeled).astype(np.int64)
    return SplitSpec(labels_per_class=labels_per_class, seed=seed, labeled_set=labeled, test_set=test)


def export_embeddings(z: DenseMatrix, labels, path) -> Path:
    """Write `node_index,label,z_1,...,z_d` rows (17 significant digits)"""
    path = Path(path)
    frame = pd.DataFrame(z, columns=[f"z_{j + 1}" for j in range(z.shape[1])])
    frame.insert(0, 'label', np.asarray(labels, dtype=np.int64))
    frame.insert(0, 'node_index', np.arange(z.shape[0], dtype=np.int64))
    _write_table(frame, path)
    logger.info(f"Exported {z.shape[0]} embeddings of dimension {z.shape[1]} to {path}")
    return path


def read_embeddings(path) -> Tuple[np.ndarray, np.ndarray, DenseMatrix]:
    """Inverse of export_embeddings: (node_index, labels, z)"""
    frame = pd.read_csv(path, float_precision='round_trip')
    z_columns = [c for c in frame.columns if c.startswith('z_')]
    return (frame['node_index'].to_numpy(dtype=np.int64),
            frame['label'].to_numpy(dtype=np.int64),
            frame[z_columns].to_numpy(dtype=np.float64))


def convert_pubmed_tab(node_tab, cites_tab, out_dir) -> Tuple[Path, Path]:
    """
    Convert the public PubMed-Diabetes tabular release to content/cites files

    NODE.paper.tab declares its TF-IDF columns on line 2 (`numeric:<word>:0.0`)
    and lists `<id> label=<k> <word>=<value> ... summary=...` per paper;
    DIRECTED.cites.tab lists `<edge> paper:<a> | paper:<b>`.

    Args:
        node_tab: path to Pubmed-Diabetes.NODE.paper.tab
        cites_tab: path to Pubmed-Diabetes.DIRECTED.cites.tab
        out_dir: directory receiving pubmed.content and pubmed.cites

    Returns:
        (content_path, cites_path)
    """
    node_tab = Path(node_tab)
    columns: Dict[str, int] = {}
    ids: List[str] = []
    labels: List[str] = []
    rows: List[np.ndarray] = []

    with open(node_tab, 'r', encoding='utf-8') as handle:
        for line_number, line in enumerate(handle, start=1):
            tokens = line.rstrip('\n').split('\t')
            if line_number == 1 or not line.strip():
                continue
            if line_number == 2:
                for declaration in tokens:
                    kind, _, rest = declaration.partition(':')
                    if kind == 'numeric':
                        columns[rest.rsplit(':', 1)[0]] = len(columns)
                continue
            row = np.zeros(len(columns), dtype=np.float64)
            label = None
            for token in tokens[1:]:
                key, _, value = token.partition('=')
                if key == 'label':
                    label = value
                elif key in columns:
                    try:
                        row[columns[key]] = float(value)
                    except ValueError:
                        raise ParseError(f"{node_tab}:{line_number}: bad value for '{key}'",
                                         line_number=line_number) from None
            if label is None:
                raise ParseError(f"{node_tab}:{line_number}: missing label=<k>", line_number=line_number)
            ids.append(tokens[0])
            labels.append(label)
            rows.append(row)

    cites_tab = Path(cites_tab)
    pairs: List[Tuple[str, str]] = []
    with open(cites_tab, 'r', encoding='utf-8') as handle:
        for line_number, line in enumerate(handle, start=1):
            if line_number <= 2 or not line.strip():
                continue
            tokens = line.split()
            if len(tokens) != 4 or tokens[2] != '|':
                raise ParseError(f"{cites_tab}:{line_number}: expected '<edge> paper:<a> | paper:<b>'",
                                 line_number=line_number)
            pairs.append((tokens[1].split(':', 1)[-1], tokens[3].split(':', 1)[-1]))

    out_dir = Path(out_dir)
    content = pd.DataFrame(np.vstack(rows) if rows else np.zeros((0, len(columns))))
    content.insert(0, 'id', ids)
    content['label'] = labels
    content_path = out_dir / 'pubmed.content'
    cites_path = out_dir / 'pubmed.cites'
    _write_table(content, content_path, sep='\t', header=False)
    _write_table(pd.DataFrame(pairs, columns=['cited', 'citing']), cites_path, sep='\t', header=False)
    logger.info(f"Converted PubMed: {len(ids)} papers, {len(columns)} features, {len(pairs)} cites")
    return content_path, cites_path
