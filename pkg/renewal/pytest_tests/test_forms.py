"""Тесты проверки файла конфигурации.

Проверяются:
- неизвестные ключи на верхнем уровне и в секциях
- диапазоны alpha, сеток и допусков
- обязательность rv_kernel, alpha и seed
- нормализованная конфигурация
"""
import pytest
from django.core.exceptions import ValidationError

from renewal.forms import (
    ALPHA_RANGE, ALPHA_REQUIRED, DELTA_RANGE, J_INTERVAL, MODEL_REQUIRED,
    NEGATIVE_TOLERANCE, SEED_REQUIRED, UNKNOWN_FUNCTIONAL, UNKNOWN_KEY,
    X_POSITIVE, TolerancesForm,
)
from renewal.scenarios import validate_config


def _messages(raw):
    with pytest.raises(ValidationError) as error:
        validate_config(raw)
    return error.value.messages


def _assert_reported(raw, message):
    messages = _messages(raw)
    assert any(message in text for text in messages), messages


def test_valid_config_is_normalised(run_config):
    """Тест: отсутствующие секции заменяются пустыми словарями."""
    config = validate_config(run_config)
    assert config['rv_kernel'] == {'alpha': 0.7, 'family': 'constant'}
    assert config['grids'] == {'x': [256, 512, 1024]}
    assert config['tolerances'] == {}
    assert config['seed'] == 0
    assert config['dist_factory']['x_max'] == 4096


def test_config_must_be_object():
    with pytest.raises(ValidationError):
        validate_config([1, 2, 3])


def test_unknown_top_level_key(run_config):
    """Тест: лишний ключ верхнего уровня даёт ошибку."""
    run_config['colour'] = 'red'
    _assert_reported(run_config, UNKNOWN_KEY.format(key='colour'))


def test_unknown_section_key(run_config):
    """Тест: лишний ключ внутри секции называется с именем секции."""
    run_config['grids']['xs'] = [1]
    messages = _messages(run_config)
    assert any(
        text.startswith('grids: ') and UNKNOWN_KEY.format(key='xs') in text
        for text in messages
    )


@pytest.mark.parametrize('alpha', (0.0, 1.0, 2.5))
def test_alpha_range(run_config, alpha):
    """Тест: alpha вне (0, 1) ∪ (1, 2) отклоняется."""
    run_config['rv_kernel']['alpha'] = alpha
    _assert_reported(run_config, ALPHA_RANGE)


def test_model_required(run_config):
    """Тест: базовому закону нужна секция rv_kernel."""
    del run_config['rv_kernel']
    _assert_reported(run_config, MODEL_REQUIRED.format(builder='baseline'))


def test_counter_needs_alpha(run_config):
    """Тест: контрпримеру нужна alpha в одной из секций."""
    del run_config['rv_kernel']
    run_config['dist_factory'] = {'builder': 'counter_renewal'}
    _assert_reported(
        run_config, ALPHA_REQUIRED.format(builder='counter_renewal')
    )


def test_counter_takes_alpha_from_dist_section(run_config):
    del run_config['rv_kernel']
    run_config['dist_factory'] = {'builder': 'counter_renewal', 'alpha': 0.25}
    assert validate_config(run_config)['rv_kernel'] is None


def test_seed_required_for_monte_carlo(run_config):
    """Тест: сценарий с Монте-Карло без seed не запускается."""
    del run_config['seed']
    run_config['scenario'] = {'name': 'lld_scan', 'method': 'monte_carlo'}
    _assert_reported(run_config, SEED_REQUIRED)


def test_seed_required_for_deep_chain(run_config):
    """Тест: цепочка k >= 2 в режиме auto требует seed."""
    del run_config['seed']
    run_config['scenario'] = {'name': 'an_scan', 'functional': 'tilde_I2'}
    _assert_reported(run_config, SEED_REQUIRED)
    run_config['scenario']['mode'] = 'exact'
    assert validate_config(run_config)['seed'] == 0


@pytest.mark.parametrize(
    'scenario, dist_factory',
    (
        ({'name': 'lld_scan', 'method': 'exact'}, None),
        ({'name': 'srt_ratio'}, {'sided': 'two_sided', 'q': 1.0}),
        ({'name': 'renewal_scan'}, {'builder': 'two_sided_counter'}),
        ({'name': 'appendix_diag', 'k': 2}, None),
    ),
)
def test_seed_required_for_sampling_paths(run_config, scenario,
                                          dist_factory):
    """Тест: калибровка, C по выборке и глубокие цепочки требуют seed."""
    del run_config['seed']
    run_config['scenario'] = scenario
    if dist_factory:
        run_config['dist_factory'].update(dist_factory)
        run_config['dist_factory'].setdefault('alpha', 0.3)
    _assert_reported(run_config, SEED_REQUIRED)


def test_seed_not_required_with_given_constant(run_config):
    """Тест: при заданной C и положительном шаге выборки нет."""
    del run_config['seed']
    run_config['dist_factory'].update({'sided': 'two_sided', 'q': 1.0})
    run_config['scenario'] = {'name': 'srt_ratio', 'C': 0.3}
    assert validate_config(run_config)['seed'] == 0
    run_config['dist_factory'] = {'builder': 'baseline', 'x_max': 4096}
    run_config['scenario'] = {'name': 'srt_ratio'}
    assert validate_config(run_config)['seed'] == 0


def test_unknown_functional(run_config):
    run_config['scenario'] = {'name': 'an_scan', 'functional': 'J3'}
    _assert_reported(run_config, UNKNOWN_FUNCTIONAL)


@pytest.mark.parametrize(
    'grids, message',
    (
        ({'J': [0, -1]}, J_INTERVAL),
        ({'J': [0]}, J_INTERVAL),
        ({'delta': [0.5, 1.5]}, DELTA_RANGE),
        ({'x': [16, 1.5]}, X_POSITIVE),
        ({'x': [0]}, X_POSITIVE),
    ),
)
def test_grid_validation(run_config, grids, message):
    """Тест: сетки проверяются поэлементно."""
    run_config['grids'] = grids
    _assert_reported(run_config, message)


def test_negative_tolerance(run_config):
    run_config['tolerances'] = {'clip_abort': -1e-6}
    _assert_reported(run_config, NEGATIVE_TOLERANCE)


def test_tolerances_form_section():
    """Тест: section() содержит только заданные допуски нужного типа."""
    form = TolerancesForm(data={'fft_crossover': '32', 'tail_band': '0.2'})
    assert form.is_valid(), form.errors
    assert form.section() == {'fft_crossover': 32, 'tail_band': 0.2}
