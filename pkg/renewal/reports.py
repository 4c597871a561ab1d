"""Отчёты прогона: таблицы, экспорт CSV/JSON и manifest.json."""
import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np
import pandas as pd

from .dist_factory import json_default
from .exceptions import DomainError, UnsupportedModeError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'
PACKAGES = ('django', 'numpy', 'scipy', 'numba', 'pandas', 'matplotlib')
# Схема колонок для каждого вида отчёта.
SCHEMAS = {
    'tail': ('x', 'p_hat', 'q_hat'),
    'renewal': ('x', 'u', 'U_cumulative', 'integrated_ratio'),
    'srt_ratio': ('x', 'u', 'ratio', 'truncation_error'),
    'an_profile': ('functional', 'delta', 'x', 'R', 'stderr'),
    'eta_sweep': ('eta', 'x', 'R', 'above_threshold'),
    'suff': ('x', 'statistic'),
    'lld': (
        'n', 'x', 'probability', 'stderr', 'method', 'flag', 'ratio',
        'ratio_stderr',
    ),
    'lld_unconstrained': ('n', 'x', 'probability', 'ratio'),
    'fuk_nagaev': ('n', 'x', 'probability', 'ratio'),
    'stone_llt': ('n', 'x_over_an', 'scaled_mass', 'density'),
    'basic_bound': ('n', 'z', 'bound_ratio'),
    'appendix': ('x', 'ratio_half', 'ratio_tilde', 'ratio_chain'),
}
FORMATS = ('csv', 'json')


@dataclass
class Report:
    kind: str
    name: str
    table: pd.DataFrame
    header: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SCHEMAS:
            raise DomainError(f'неизвестный вид отчёта: {self.kind}')
        expected = list(SCHEMAS[self.kind])
        if list(self.table.columns) != expected:
            raise DomainError(
                f'{self.kind}: колонки {list(self.table.columns)} '
                f'вместо {expected}'
            )

    @property
    def columns(self):
        return list(SCHEMAS[self.kind])


def provenance_block(dist):
    """Метаданные построителя: константы c, c′, θ, p, n₀ и модель хвоста."""
    if dist is None:
        return {}
    header = dist.header()
    return {
        'builder': header['provenance'],
        'constants': header['constants'],
        'tail_meta': header['tail_meta'],
        'window': header['window'],
        'truncation_mass': header['truncation_mass'],
    }


def finite_or_none(value):
    value = float(value)
    return value if np.isfinite(value) else None


def strict_json(value):
    """NaN и бесконечности заменяются на null на любой глубине."""
    if isinstance(value, dict):
        return {key: strict_json(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [strict_json(item) for item in value]
    if isinstance(value, np.ndarray):
        return strict_json(value.tolist())
    if isinstance(value, (float, np.floating)):
        return finite_or_none(value)
    return value


def export(report, path, fmt='csv'):
    """Экспорт без потери точности; путь создаётся при необходимости."""
    if fmt not in FORMATS:
        raise UnsupportedModeError(f'формат {fmt} не поддерживается')
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == 'csv':
        report.table.to_csv(
            path, index=False, float_format=FLOAT_FORMAT, na_rep='nan'
        )
    else:
        payload = strict_json({
            'kind': report.kind,
            'name': report.name,
            'columns': report.columns,
            'provenance': report.provenance,
            'header': report.header,
            'rows': report.table.to_dict(orient='list'),
        })
        path.write_text(
            json.dumps(
                payload, default=json_default, indent=2, allow_nan=False
            ),
            encoding='utf-8',
        )
    logger.debug('экспорт %s -> %s', report.name, path)
    return path


def read_report(path, kind=None):
    """Обратное чтение экспорта; для CSV вид задаётся явно."""
    path = Path(path)
    if path.suffix == '.json':
        payload = json.loads(path.read_text(encoding='utf-8'))
        table = pd.DataFrame(payload['rows'], columns=payload['columns'])
        return Report(
            payload['kind'], payload['name'], table, payload['header'],
            payload['provenance'],
        )
    if kind is None:
        raise DomainError('для CSV укажите вид отчёта')
    table = pd.read_csv(
        path, float_precision='round_trip', keep_default_na=False,
        na_values=['nan'],
    )
    return Report(kind, path.stem, table)


def package_versions():
    versions = {}
    for package in PACKAGES:
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = None
    return versions


class OperationGraph:
    """Граф операций прогона с замером времени каждого узла."""

    def __init__(self):
        self.nodes = []

    @contextmanager
    def step(self, op, inputs=(), outputs=()):
        started = time.perf_counter()
        node = {'op': op, 'inputs': list(inputs), 'outputs': list(outputs)}
        try:
            yield node
        finally:
            node['seconds'] = time.perf_counter() - started
            self.nodes.append(node)

    @property
    def timings(self):
        totals = {}
        for node in self.nodes:
            op = node['op']
            totals[op] = totals.get(op, 0.0) + node['seconds']
        return totals


def write_manifest(out_dir, config, constants, graph, flags, artifacts,
                   status='ok'):
    manifest = strict_json({
        'status': status,
        'config': config,
        'constants': constants,
        'versions': package_versions(),
        'timings': graph.timings,
        'operation_graph': graph.nodes,
        'flags': flags,
        'artifacts': artifacts,
        'created': time.strftime('%Y-%m-%dT%H:%M:%S'),
    })
    path = Path(out_dir) / 'manifest.json'
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(
            manifest, default=json_default, indent=2, allow_nan=False
        ),
        encoding='utf-8',
    )
    return path, manifest


def frame(kind, data):
    """DataFrame в порядке колонок схемы."""
    table = pd.DataFrame(data)
    return table[list(SCHEMAS[kind])]
