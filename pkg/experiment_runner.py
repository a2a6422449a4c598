#!/usr/bin/env python3
"""
Experiment Runner
Runs method x mode x metric x label-budget x seed grids, writes
results.csv plus summary.json and renders mean(std) report tables.
"""

import json
import logging
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd

from citation_data import Dataset, SplitSpec, export_embeddings, load_dataset, sample_split, sbm_generate
from experiment_config import METHODS, ExperimentConfig, TrainConfig, settings_fingerprint
from shoestring_errors import ExportError, InputError
from shoestring_pipeline import evaluate, method_label, model_embeddings, predict, train

logger = logging.getLogger(__name__)

CSV_COLUMNS = ['dataset', 'method', 'shoestring', 'metric', 'labels_per_class', 'seed', 'accuracy', 'seconds',
               'fingerprint']
RESULTS_CSV = 'results.csv'
SUMMARY_JSON = 'summary.json'
BASELINE_METRIC = 'none'
METRIC_ORDER = {'cos': 0, 'l1': 1, 'l2': 2, BASELINE_METRIC: -1}


@dataclass(frozen=True)
class RunRecord:
    """One CSV row"""
    dataset: str
    method: str
    shoestring: bool
    metric: str
    labels_per_class: int
    seed: int
    accuracy: float
    seconds: float
    fingerprint: str = ''

    @property
    def cell(self) -> Tuple[str, str, bool, str, int]:
        return self.dataset, self.method, self.shoestring, self.metric, self.labels_per_class


@dataclass(frozen=True)
class ExperimentResult:
    """Per-seed accuracies of one grid cell"""
    fingerprint: str
    dataset: str
    method: str
    shoestring: bool
    metric: str
    labels_per_class: int
    seeds: List[int]
    accuracies: List[float]
    seconds: List[float]
    failures: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies)) if self.accuracies else float('nan')

    @property
    def std(self) -> float:
        """Population standard deviation"""
        return float(np.std(self.accuracies)) if self.accuracies else float('nan')

    @property
    def mean_seconds(self) -> float:
        return float(np.mean(self.seconds)) if self.seconds else float('nan')

    @property
    def label(self) -> str:
        return method_label(self.method, self.shoestring, None if self.metric == BASELINE_METRIC else self.metric)

    def to_dict(self) -> Dict[str, Any]:
        summary = asdict(self)
        summary.update(label=self.label, mean=self.mean, std=self.std, mean_seconds=self.mean_seconds)
        return summary


@dataclass(frozen=True)
class RunTask:
    """One scheduled run; split is None when the budget could not be sampled"""
    dataset: Dataset
    split: Optional[SplitSpec]
    config: TrainConfig
    labels_per_class: int
    fingerprint: str
    split_error: Optional[str] = None

    @property
    def metric(self) -> str:
        return self.config.metric if self.config.shoestring else BASELINE_METRIC


def load_experiment_dataset(config: ExperimentConfig) -> Dataset:
    """The configured citation dataset, or a generated SBM graph for dataset = sbm"""
    if config.dataset == 'sbm':
        return sbm_generate(config.sbm_n, config.sbm_classes, config.sbm_p_in, config.sbm_p_out,
                            config.sbm_feature_dim, config.sbm_noise, config.sbm_seed)
    return load_dataset(config.dataset, config.data_dir, row_normalize_features=config.row_normalize)


def run_configuration(dataset: Dataset, split: SplitSpec, config: TrainConfig) -> Tuple[float, float]:
    """
    Train and score one configuration on one split

    Returns:
        (test accuracy, wall-clock seconds)
    """
    start = time.perf_counter()
    model = train(config, dataset.graph, dataset.features, dataset.labels, split.labeled_set,
                  dataset.num_classes)
    pred = predict(model, dataset.graph, dataset.features, dataset.labels, split.labeled_set)
    accuracy = evaluate(pred, dataset.labels, split.test_set)
    seconds = time.perf_counter() - start
    logger.info(f"{method_label(config.method, config.shoestring, config.metric)} "
                f"{split.labels_per_class}/class seed {config.seed}: accuracy {accuracy:.4f} ({seconds:.2f}s)")
    return accuracy, seconds


def _grid_tasks(config: ExperimentConfig, dataset: Dataset) -> List[RunTask]:
    """
    Every run of the grid; one split per (budget, seed) shared by all methods

    A budget some class cannot supply leaves split None on its tasks so the
    runs are recorded as failures instead of aborting the grid.
    """
    tasks = []
    for budget in config.labels_per_class:
        for seed in config.seed_list:
            split, split_error = None, None
            try:
                split = sample_split(dataset, budget, seed)
            except InputError as e:
                logger.error(f"Cannot sample {budget} labels per class with seed {seed}: {e}")
                split_error = f"{type(e).__name__}: {e}"
            for method in config.methods:
                for shoestring in config.shoestring_modes:
                    metrics = config.metrics if shoestring else [config.train.metric]
                    for metric in metrics:
                        run_config = replace(config.train, method=method, shoestring=shoestring,
                                             metric=metric, seed=seed)
                        cell_metric = metric if shoestring else BASELINE_METRIC
                        tasks.append(RunTask(
                            dataset=dataset,
                            split=split,
                            config=run_config,
                            labels_per_class=budget,
                            fingerprint=cell_fingerprint(config, method, shoestring, cell_metric, budget),
                            split_error=split_error,
                        ))
    return tasks


def cell_fingerprint(config: ExperimentConfig, method: str, shoestring: bool, metric: str,
                     labels_per_class: int) -> str:
    """Hash of every setting that determines one grid cell"""
    settings = config.to_dict()
    settings.update(methods=[method], metrics=[metric], labels_per_class=[labels_per_class],
                    modes='shoestring' if shoestring else 'baseline', jobs=None, out_dir=None)
    return settings_fingerprint(settings)


def _execute(task: RunTask) -> Tuple[Optional[RunRecord], Optional[str]]:
    if task.split is None:
        return None, task.split_error
    try:
        accuracy, seconds = run_configuration(task.dataset, task.split, task.config)
    except Exception as e:
        logger.error(f"Run failed: {task.config.method} shoestring={task.config.shoestring} "
                     f"metric={task.metric} budget={task.labels_per_class} seed={task.config.seed}: {e}",
                     exc_info=True)
        return None, f"{type(e).__name__}: {e}"
    return RunRecord(
        dataset=task.dataset.name,
        method=task.config.method,
        shoestring=task.config.shoestring,
        metric=task.metric,
        labels_per_class=task.labels_per_class,
        seed=task.config.seed,
        accuracy=accuracy,
        seconds=seconds,
        fingerprint=task.fingerprint,
    ), None


def _cell_sort_key(cell: Tuple[str, str, bool, str, int]):
    dataset, method, shoestring, metric, budget = cell
    method_rank = METHODS.index(method) if method in METHODS else len(METHODS)
    return dataset, method_rank, method, shoestring, METRIC_ORDER.get(metric, len(METRIC_ORDER)), metric, budget


def aggregate(records: Iterable[RunRecord]) -> List[ExperimentResult]:
    """Group run records into per-cell results (deterministic ordering)"""
    cells: Dict[Tuple, List[RunRecord]] = defaultdict(list)
    for record in records:
        cells[record.cell].append(record)

    results = []
    for cell in sorted(cells, key=_cell_sort_key):
        dataset, method, shoestring, metric, budget = cell
        rows = sorted(cells[cell], key=lambda r: r.seed)
        results.append(ExperimentResult(
            fingerprint=rows[0].fingerprint or settings_fingerprint({
                'dataset': dataset, 'method': method, 'shoestring': shoestring, 'metric': metric,
                'labels_per_class': budget,
            }),
            dataset=dataset,
            method=method,
            shoestring=shoestring,
            metric=metric,
            labels_per_class=budget,
            seeds=[r.seed for r in rows],
            accuracies=[r.accuracy for r in rows],
            seconds=[r.seconds for r in rows],
        ))
    return results


def paired_differences(results: Iterable[ExperimentResult]) -> List[Dict[str, Any]]:
    """Shoestring minus baseline accuracy per method, metric and budget over the seeds both completed"""
    results = list(results)
    baselines = {(r.dataset, r.method, r.labels_per_class): r for r in results if not r.shoestring}
    pairs = []
    for result in results:
        baseline = baselines.get((result.dataset, result.method, result.labels_per_class))
        if not result.shoestring or baseline is None:
            continue
        base_by_seed = dict(zip(baseline.seeds, baseline.accuracies))
        seeds = [s for s in result.seeds if s in base_by_seed]
        diffs = [acc - base_by_seed[s] for s, acc in zip(result.seeds, result.accuracies) if s in base_by_seed]
        pairs.append({
            'dataset': result.dataset,
            'method': result.method,
            'metric': result.metric,
            'labels_per_class': result.labels_per_class,
            'seeds': seeds,
            'differences': diffs,
            'mean_difference': float(np.mean(diffs)) if diffs else float('nan'),
        })
    return pairs


def write_results_csv(records: Iterable[RunRecord], path) -> Path:
    path = Path(path)
    frame = pd.DataFrame([asdict(r) for r in records], columns=CSV_COLUMNS)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format='%.17g')
    except OSError as e:
        raise ExportError(f"Could not write {path}: {e}", path=str(path)) from e
    return path


def load_results_csv(path) -> List[RunRecord]:
    """Parse a results.csv back into run records"""
    frame = pd.read_csv(path, float_precision='round_trip', keep_default_na=False,
                        dtype={'dataset': str, 'method': str, 'metric': str, 'fingerprint': str})
    return [
        RunRecord(
            dataset=row.dataset,
            method=row.method,
            shoestring=str(row.shoestring).strip().lower() == 'true',
            metric=row.metric,
            labels_per_class=int(row.labels_per_class),
            seed=int(row.seed),
            accuracy=float(row.accuracy),
            seconds=float(row.seconds),
            fingerprint=getattr(row, 'fingerprint', ''),
        )
        for row in frame.itertuples(index=False)
    ]


def write_summary(config: ExperimentConfig, results: List[ExperimentResult], path) -> Path:
    path = Path(path)
    summary = {
        'fingerprint': config.fingerprint(),
        'dataset': config.dataset,
        'config': config.to_dict(),
        'results': [r.to_dict() for r in results],
        'paired_differences': paired_differences(results),
        'failed_runs': sum(len(r.failures) for r in results),
    }
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as handle:
            json.dump(summary, handle, indent=2, default=str)
    except OSError as e:
        raise ExportError(f"Could not write {path}: {e}", path=str(path)) from e
    return path


def run_grid(config_file: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None,
             config: Optional[ExperimentConfig] = None) -> List[ExperimentResult]:
    """
    Run the configured grid and write results.csv and summary.json to out_dir

    Failed runs are logged and recorded under their cell's fingerprint; the
    grid keeps going.

    Args:
        config_file: flat key = value config file
        overrides: values that win over the file
        config: ready-made configuration (skips file loading)

    Returns:
        One ExperimentResult per (method, mode, metric, budget) cell
    """
    config = config or ExperimentConfig.from_config(config_file, overrides)
    dataset = load_experiment_dataset(config)
    tasks = _grid_tasks(config, dataset)
    logger.info(f"🚀 Running {len(tasks)} runs on {dataset.name} ({config.jobs} job(s))")

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(_execute, tasks))
    else:
        outcomes = [_execute(task) for task in tasks]

    records = [record for record, _ in outcomes if record is not None]
    failures: Dict[Tuple, List[Dict[str, Any]]] = defaultdict(list)
    for task, (record, error) in zip(tasks, outcomes):
        if error is not None:
            cell = (dataset.name, task.config.method, task.config.shoestring, task.metric,
                    task.labels_per_class)
            failures[cell].append({'seed': task.config.seed, 'error': error})

    by_cell = {(r.dataset, r.method, r.shoestring, r.metric, r.labels_per_class): r for r in aggregate(records)}
    results = []
    for cell in sorted(set(by_cell) | set(failures), key=_cell_sort_key):
        _, method, shoestring, metric, budget = cell
        result = by_cell.get(cell) or ExperimentResult(
            fingerprint='', dataset=dataset.name, method=method, shoestring=shoestring, metric=metric,
            labels_per_class=budget, seeds=[], accuracies=[], seconds=[],
        )
        fingerprint = cell_fingerprint(config, method, shoestring, metric, budget)
        results.append(replace(result, fingerprint=fingerprint, failures=failures.get(cell, [])))

    out_dir = Path(config.out_dir)
    write_results_csv(records, out_dir / RESULTS_CSV)
    write_summary(config, results, out_dir / SUMMARY_JSON)

    failed = sum(len(f) for f in failures.values())
    if failed:
        logger.warning(f"⚠️ {failed} of {len(tasks)} runs failed; see {out_dir / SUMMARY_JSON}")
    else:
        logger.info(f"✅ {len(tasks)} runs complete; results in {out_dir}")
    return results


def report_table(results: Iterable[ExperimentResult], value: str = 'accuracy') -> str:
    """
    Text table: rows are methods, columns label budgets

    Args:
        results: experiment results
        value: 'accuracy' for mean(std) in percent, 'seconds' for mean wall-clock

    Returns:
        Formatted table
    """
    results = sorted(results, key=lambda r: _cell_sort_key(
        (r.dataset, r.method, r.shoestring, r.metric, r.labels_per_class)))
    if not results:
        return ''
    several = len({r.dataset for r in results}) > 1

    rows: Dict[str, Dict[int, str]] = {}
    for result in results:
        row = f"{result.dataset}: {result.label}" if several else result.label
        if not result.accuracies:
            cell = 'failed'
        elif value == 'seconds':
            cell = f"{result.mean_seconds:.2f}s"
        else:
            cell = f"{100 * result.mean:.1f} ({100 * result.std:.1f})"
        rows.setdefault(row, {})[result.labels_per_class] = cell

    budgets = sorted({r.labels_per_class for r in results})
    frame = pd.DataFrame.from_dict(rows, orient='index').reindex(columns=budgets).fillna('-')
    frame.columns = [str(b) for b in budgets]
    frame.index.name = 'method'
    return frame.to_string()


def export_model_embeddings(config: ExperimentConfig, labels_per_class: int, seed: int, path) -> Path:
    """Train config.train on one split and write the embeddings the metric head sees"""
    dataset = load_experiment_dataset(config)
    split = sample_split(dataset, labels_per_class, seed)
    run_config = replace(config.train, seed=seed)
    model = train(run_config, dataset.graph, dataset.features, dataset.labels, split.labeled_set,
                  dataset.num_classes)
    return export_embeddings(model_embeddings(model), dataset.labels, path)
