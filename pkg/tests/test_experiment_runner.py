import json
import random

import pandas as pd
import pytest

import experiment_runner
from experiment_config import ExperimentConfig, TrainConfig
from experiment_runner import (CSV_COLUMNS, ExperimentResult, aggregate, load_results_csv, paired_differences,
                               report_table, run_grid)


def sbm_config(tmp_path, **settings):
    values = dict(
        dataset='sbm', data_dir=str(tmp_path), out_dir=str(tmp_path / 'out'), methods=['gcn'], modes='baseline',
        metrics=['cos'], labels_per_class=[1], seeds=3, sbm_n=40, sbm_classes=2, sbm_p_in=0.5,
        sbm_p_out=0.05, sbm_feature_dim=4, sbm_noise=0.5, train=TrainConfig(epochs=20),
    )
    values.update(settings)
    return ExperimentConfig(**values)


def result(method='gcn', shoestring=False, metric='none', budget=1, accuracies=(0.5,), dataset='sbm'):
    return ExperimentResult(fingerprint='f', dataset=dataset, method=method, shoestring=shoestring, metric=metric,
                            labels_per_class=budget, seeds=list(range(len(accuracies))),
                            accuracies=list(accuracies), seconds=[0.1] * len(accuracies))


def test_single_cell_grid_writes_rows_and_summary(tmp_path):
    results = run_grid(config=sbm_config(tmp_path))
    assert len(results) == 1
    assert results[0].seeds == [0, 1, 2]

    frame = pd.read_csv(tmp_path / 'out' / 'results.csv')
    assert list(frame.columns) == CSV_COLUMNS
    assert len(frame) == 3
    assert set(frame['metric']) == {'none'}

    summary = json.loads((tmp_path / 'out' / 'summary.json').read_text())
    assert len(summary['results']) == 1
    assert summary['failed_runs'] == 0
    assert summary['results'][0]['fingerprint'] == results[0].fingerprint


def test_mean_and_std_follow_the_seed_list(tmp_path):
    r = run_grid(config=sbm_config(tmp_path))[0]
    mean = sum(r.accuracies) / len(r.accuracies)
    assert abs(r.mean - mean) < 1e-12
    assert abs(r.std - (sum((a - mean) ** 2 for a in r.accuracies) / len(r.accuracies)) ** 0.5) < 1e-12


def test_grid_is_reproducible(tmp_path):
    first = run_grid(config=sbm_config(tmp_path, out_dir=str(tmp_path / 'a'), modes='both', metrics=['cos', 'l2']))
    second = run_grid(config=sbm_config(tmp_path, out_dir=str(tmp_path / 'b'), modes='both', metrics=['cos', 'l2'],
                                        jobs=3))
    assert [r.accuracies for r in first] == [r.accuracies for r in second]
    assert [r.fingerprint for r in first] == [r.fingerprint for r in second]


def test_csv_parses_back_into_the_same_results(tmp_path):
    results = run_grid(config=sbm_config(tmp_path, modes='both', methods=['gcn', 'lp']))
    reloaded = aggregate(load_results_csv(tmp_path / 'out' / 'results.csv'))
    assert [(r.method, r.shoestring, r.metric) for r in reloaded] == [(r.method, r.shoestring, r.metric)
                                                                      for r in results]
    assert [r.accuracies for r in reloaded] == [r.accuracies for r in results]
    assert [r.seconds for r in reloaded] == [r.seconds for r in results]


def test_summary_pairs_baseline_and_shoestring(tmp_path):
    results = run_grid(config=sbm_config(tmp_path, modes='both'))
    summary = json.loads((tmp_path / 'out' / 'summary.json').read_text())
    (pair,) = summary['paired_differences']
    baseline, shoestring = results
    assert pair['method'] == 'gcn' and pair['metric'] == 'cos'
    expected = [s - b for s, b in zip(shoestring.accuracies, baseline.accuracies)]
    assert pair['differences'] == pytest.approx(expected)
    assert pair['mean_difference'] == pytest.approx(shoestring.mean - baseline.mean)


def test_failed_runs_are_recorded_and_the_grid_continues(tmp_path, monkeypatch):
    real = experiment_runner.run_configuration

    def flaky(dataset, split, config):
        if config.seed == 1:
            raise RuntimeError("boom")
        return real(dataset, split, config)

    monkeypatch.setattr(experiment_runner, 'run_configuration', flaky)
    (r,) = run_grid(config=sbm_config(tmp_path))
    assert r.seeds == [0, 2]
    assert r.failures == [{'seed': 1, 'error': 'RuntimeError: boom'}]
    summary = json.loads((tmp_path / 'out' / 'summary.json').read_text())
    assert summary['failed_runs'] == 1
    assert summary['results'][0]['fingerprint'] == r.fingerprint


def test_paired_differences_use_common_seeds():
    base = result(accuracies=(0.5, 0.6, 0.7))
    shoe = ExperimentResult(fingerprint='g', dataset='sbm', method='gcn', shoestring=True, metric='cos',
                            labels_per_class=1, seeds=[1, 2], accuracies=[0.8, 0.9], seconds=[0.1, 0.1])
    (pair,) = paired_differences([base, shoe])
    assert pair['seeds'] == [1, 2]
    assert pair['differences'] == pytest.approx([0.2, 0.2])


def test_report_single_result_is_one_by_one():
    table = report_table([result(accuracies=(0.8,))])
    lines = table.splitlines()
    assert len(lines) == 3
    assert 'GCN' in lines[-1] and '80.0 (0.0)' in lines[-1]


def test_report_std_of_identical_accuracies_is_zero():
    assert '70.0 (0.0)' in report_table([result(accuracies=(0.7, 0.7, 0.7))])


def test_report_is_stable_under_permutation():
    results = [
        result('gcn', False, 'none', 1, (0.5,)),
        result('gcn', True, 'cos', 1, (0.6,)),
        result('lp', False, 'none', 2, (0.4,)),
        result('gcn', True, 'l1', 20, (0.9, 0.8)),
        result('igcn_rnm', True, 'cos', 2, (0.7,)),
    ]
    expected = report_table(results)
    shuffled = results[:]
    for seed in range(5):
        random.Random(seed).shuffle(shuffled)
        assert report_table(shuffled) == expected
    rows = [line.split()[0] for line in expected.splitlines()[2:]]
    assert rows == ['GCN', 'Shoestring-GCN-COS', 'Shoestring-GCN-L1', 'Shoestring-IGCN(RNM)-COS', 'LP']


def test_report_seconds_table():
    assert '0.10s' in report_table([result()], value='seconds')


def test_reloaded_results_keep_the_summary_fingerprints(tmp_path):
    results = run_grid(config=sbm_config(tmp_path, modes='both'))
    reloaded = aggregate(load_results_csv(tmp_path / 'out' / 'results.csv'))
    summary = json.loads((tmp_path / 'out' / 'summary.json').read_text())
    assert [r.fingerprint for r in reloaded] == [r.fingerprint for r in results]
    assert [r.fingerprint for r in reloaded] == [entry['fingerprint'] for entry in summary['results']]


def test_csv_without_fingerprints_still_loads(tmp_path):
    path = tmp_path / 'results.csv'
    path.write_text("dataset,method,shoestring,metric,labels_per_class,seed,accuracy,seconds\n"
                    "sbm,gcn,False,none,1,0,0.5,0.25\n")
    (record,) = load_results_csv(path)
    assert record.fingerprint == ''
    (cell,) = aggregate([record])
    assert cell.fingerprint and cell.accuracies == [0.5]


def test_oversized_budget_is_recorded_as_failed_runs(tmp_path):
    results = run_grid(config=sbm_config(tmp_path, labels_per_class=[1, 25]))
    assert [r.labels_per_class for r in results] == [1, 25]
    ok, oversized = results
    assert ok.seeds == [0, 1, 2] and not ok.failures
    assert oversized.accuracies == []
    assert [f['seed'] for f in oversized.failures] == [0, 1, 2]
    assert all(f['error'].startswith('InputError') for f in oversized.failures)
    summary = json.loads((tmp_path / 'out' / 'summary.json').read_text())
    assert summary['failed_runs'] == 3
    assert 'failed' in report_table(results)
