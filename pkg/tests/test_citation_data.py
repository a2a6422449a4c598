import logging

import numpy as np
import pytest

from citation_data import (convert_pubmed_tab, export_embeddings, load_citation, load_dataset, read_embeddings,
                           row_normalize, sample_split, sbm_generate, write_citation)
from shoestring_errors import ConfigurationError, ExportError, FeatureWidthError, InputError, ParseError


def test_load_citation_maps_ids_in_file_order(citation_files):
    dataset = load_citation(*citation_files, row_normalize_features=False)
    assert dataset.node_ids == ['p10', 'p20', 'p30', 'p40', 'p50']
    assert dataset.class_names == ['Neural', 'Theory']
    assert dataset.labels.tolist() == [1, 0, 1, 0, 1]
    assert dataset.features.shape == (5, 3)
    assert dataset.graph.edges().tolist() == [[0, 1], [0, 2], [1, 2], [3, 4]]
    assert dataset.name == 'toy'


def test_dangling_cites_are_skipped_with_a_warning(citation_files, caplog):
    with caplog.at_level(logging.WARNING):
        dataset = load_citation(*citation_files)
    assert dataset.skipped_edges == 1
    assert 'Skipped 1 cites' in caplog.text


def test_features_are_row_normalized(citation_files):
    dataset = load_citation(*citation_files)
    assert np.allclose(dataset.features.sum(axis=1), 1.0)
    assert np.allclose(dataset.features[3], [0.0, 0.0, 1.0])


def test_row_normalize_keeps_zero_rows():
    out = row_normalize(np.array([[0.0, 0.0], [1.0, 3.0]]))
    assert out.tolist() == [[0.0, 0.0], [0.25, 0.75]]


def test_inconsistent_feature_width_reports_line(tmp_path):
    content = tmp_path / "bad.content"
    content.write_text("a 1 0 X\nb 1 0 X\nc 1 Y\n")
    cites = tmp_path / "bad.cites"
    cites.write_text("")
    with pytest.raises(FeatureWidthError) as info:
        load_citation(content, cites)
    assert info.value.line_number == 3


def test_malformed_cites_line_reports_line(citation_files):
    content, cites = citation_files
    cites.write_text("p10 p20\np20\n")
    with pytest.raises(ParseError) as info:
        load_citation(content, cites)
    assert info.value.line_number == 2


def test_non_numeric_feature(tmp_path):
    content = tmp_path / "bad.content"
    content.write_text("a 1 x L\n")
    (tmp_path / "bad.cites").write_text("")
    with pytest.raises(ParseError) as info:
        load_citation(content, tmp_path / "bad.cites")
    assert info.value.line_number == 1


def test_load_dataset_missing_files(tmp_path):
    with pytest.raises(ConfigurationError):
        load_dataset('cora', tmp_path)


def test_load_dataset_reads_layout(tmp_path, citation_files):
    content, cites = citation_files
    target = tmp_path / 'data' / 'cora'
    target.mkdir(parents=True)
    (target / 'cora.content').write_text(content.read_text())
    (target / 'cora.cites').write_text(cites.read_text())
    dataset = load_dataset('cora', tmp_path / 'data')
    assert dataset.name == 'cora'
    assert dataset.num_nodes == 5


def test_sbm_shapes_and_blocks():
    dataset = sbm_generate(n=40, num_classes=4, p_in=0.3, p_out=0.02, feature_dim=8, noise=0.2, seed=1)
    assert dataset.num_nodes == 40
    assert np.bincount(dataset.labels).tolist() == [10, 10, 10, 10]
    assert dataset.features.shape == (40, 8)
    assert dataset.num_classes == 4


def test_sbm_is_reproducible():
    a = sbm_generate(60, 3, 0.2, 0.01, 6, 0.5, seed=9)
    b = sbm_generate(60, 3, 0.2, 0.01, 6, 0.5, seed=9)
    assert np.array_equal(a.graph.edges(), b.graph.edges())
    assert np.array_equal(a.features, b.features)


def test_sbm_extreme_probabilities_give_disjoint_cliques():
    dataset = sbm_generate(12, 3, 1.0, 0.0, 3, 0.0, seed=0)
    assert dataset.graph.edge_count == 3 * 6
    for i, j in dataset.graph.edges():
        assert dataset.labels[i] == dataset.labels[j]


def test_sbm_without_noise_is_separable():
    dataset = sbm_generate(20, 4, 0.5, 0.1, 8, 0.0, seed=0)
    assert np.array_equal(np.argmax(dataset.features[:, :4], axis=1), dataset.labels)


@pytest.mark.parametrize("kwargs", [
    dict(n=10, num_classes=3),
    dict(p_in=0.1, p_out=0.2),
    dict(feature_dim=2),
    dict(noise=-1.0),
])
def test_sbm_rejects_invalid_parameters(kwargs):
    settings = dict(n=12, num_classes=4, p_in=0.5, p_out=0.1, feature_dim=4, noise=0.1, seed=0)
    settings.update(kwargs)
    with pytest.raises(InputError):
        sbm_generate(**settings)


def test_sample_split_takes_budget_per_class(tiny_sbm):
    split = sample_split(tiny_sbm, 3, seed=4)
    assert np.bincount(tiny_sbm.labels[split.labeled_set]).tolist() == [3, 3]
    assert not np.intersect1d(split.labeled_set, split.test_set).size
    assert split.labeled_set.size + split.test_set.size == tiny_sbm.num_nodes


def test_sample_split_is_seeded(tiny_sbm):
    assert np.array_equal(sample_split(tiny_sbm, 2, 7).labeled_set, sample_split(tiny_sbm, 2, 7).labeled_set)
    assert not np.array_equal(sample_split(tiny_sbm, 2, 7).labeled_set, sample_split(tiny_sbm, 2, 8).labeled_set)


def test_sample_split_rejects_small_classes(tiny_sbm):
    with pytest.raises(InputError):
        sample_split(tiny_sbm, 21, seed=0)


def test_export_embeddings_format(tmp_path):
    path = export_embeddings(np.array([[1.0, 2.0]]), [0], tmp_path / 'z.csv')
    assert path.read_text().splitlines() == ['node_index,label,z_1,z_2', '0,0,1,2']


def test_export_embeddings_round_trips_exactly(tmp_path):
    z = np.random.default_rng(0).normal(size=(6, 3)) * 1e3
    labels = np.array([0, 1, 2, 0, 1, 2])
    nodes, read_labels, read_z = read_embeddings(export_embeddings(z, labels, tmp_path / 'z.csv'))
    assert nodes.tolist() == list(range(6))
    assert np.array_equal(read_labels, labels)
    assert np.array_equal(read_z, z)


def test_export_embeddings_unwritable_path(tmp_path):
    blocker = tmp_path / 'file'
    blocker.write_text('x')
    with pytest.raises(ExportError) as info:
        export_embeddings(np.ones((1, 1)), [0], blocker / 'z.csv')
    assert info.value.path.endswith('z.csv')


def test_write_citation_round_trips(tmp_path):
    dataset = sbm_generate(24, 3, 0.4, 0.05, 5, 0.5, seed=2)
    content, cites = write_citation(dataset, tmp_path)
    loaded = load_citation(content, cites, row_normalize_features=False)
    assert loaded.class_names == dataset.class_names
    assert np.array_equal(loaded.labels, dataset.labels)
    assert np.array_equal(loaded.features, dataset.features)
    assert np.array_equal(loaded.graph.edges(), dataset.graph.edges())


def test_convert_pubmed_tab(tmp_path):
    node_tab = tmp_path / 'Pubmed-Diabetes.NODE.paper.tab'
    node_tab.write_text(
        "NODE\tpaper\n"
        "cat=1,2,3:label\tnumeric:w-rat:0.0\tnumeric:w-insulin:0.0\tstring:summary\n"
        "12187484\tlabel=1\tw-rat=0.09\tsummary=w-rat\n"
        "2344352\tlabel=3\tw-insulin=0.02\tw-rat=0.5\tsummary=w-rat,w-insulin\n"
    )
    cites_tab = tmp_path / 'Pubmed-Diabetes.DIRECTED.cites.tab'
    cites_tab.write_text(
        "DIRECTED\tcites\n"
        "NO_FEATURES\n"
        "33824\tpaper:12187484\t|\tpaper:2344352\n"
    )
    content, cites = convert_pubmed_tab(node_tab, cites_tab, tmp_path / 'pubmed')
    dataset = load_citation(content, cites, row_normalize_features=False)
    assert dataset.node_ids == ['12187484', '2344352']
    assert dataset.class_names == ['1', '3']
    assert np.allclose(dataset.features, [[0.09, 0.0], [0.5, 0.02]])
    assert dataset.graph.edge_count == 1
