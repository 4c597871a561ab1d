"""Фикстуры для тестов лаборатории теории восстановления.

Общие модели хвоста, распределения на решётке и конфигурации прогонов.
"""
import json

import pytest

from renewal.dist_factory import build_baseline, build_custom
from renewal.models import Run
from renewal.rv_kernel import Family, TailModel

# Окно базовых законов в быстрых тестах.
SMALL_WINDOW = 2**12


@pytest.fixture
def model_half():
    """Фикстура создаёт чистую степень A(x) = x^{1/2}."""
    return TailModel(0.5)


@pytest.fixture
def log_model():
    """Фикстура создаёт модель с поправкой (log(e+x))^β."""
    return TailModel(0.3, Family.LOG_POWER, beta=1.0)


@pytest.fixture
def baseline_half(model_half):
    """Положительный базовый закон при α = 1/2."""
    return build_baseline(model_half, x_max=SMALL_WINDOW)


@pytest.fixture
def baseline_07():
    return build_baseline(TailModel(0.7), x_max=SMALL_WINDOW)


@pytest.fixture
def baseline_03():
    return build_baseline(TailModel(0.3), x_max=2**14)


@pytest.fixture
def baseline_two_sided(model_half):
    """Двусторонний базовый закон с p = q = 1."""
    return build_baseline(
        model_half, 'two_sided', x_max=2**10, p=1.0, q=1.0
    )


@pytest.fixture
def toy(model_half):
    """Фикстура создаёт игрушечный шаг ½δ₁ + ½δ₂."""
    return build_custom({1: 0.5, 2: 0.5}, model=model_half)


@pytest.fixture
def three_atoms(model_half):
    """Двусторонний шаг из трёх атомов для перебора цепочек."""
    return build_custom({-1: 1 / 3, 1: 1 / 3, 2: 1 / 3}, model=model_half)


@pytest.fixture
def run_config(tmp_path):
    """Фикстура создаёт конфигурацию сценария srt_ratio на малом окне."""
    return {
        'rv_kernel': {'alpha': 0.7, 'family': 'constant'},
        'dist_factory': {'builder': 'baseline', 'x_max': SMALL_WINDOW},
        'scenario': {'name': 'srt_ratio'},
        'grids': {'x': [256, 512, 1024]},
        'seed': 0,
        'output': {
            'dir': str(tmp_path / 'runs'),
            'formats': ['csv', 'json'],
        },
    }


@pytest.fixture
def config_file(tmp_path, run_config):
    """Фикстура записывает конфигурацию в JSON-файл."""
    path = tmp_path / 'config.json'
    path.write_text(json.dumps(run_config), encoding='utf-8')
    return path


@pytest.fixture
def run():
    """Фикстура создаёт запись журнала прогонов."""
    return Run.objects.create(
        scenario='srt_ratio',
        seed=7,
        config={'scenario': {'name': 'srt_ratio'}},
        output_dir='runs/srt_ratio',
    )
