"""Тесты регулярно меняющихся функций и констант SRT.

Проверяются:
- нормировка A и обратная функция a_u
- ставки b_k и b̃_k
- таблица κ_α
- теоремы Караматы и оценки Поттера на моделях хвоста
"""
import math

import numpy as np
import pytest
from scipy import integrate

from renewal.exceptions import DomainError, UnsupportedModeError
from renewal.rv_kernel import (
    Family, TailModel, cond_half_statistic, eval_A, inverse_A, kappa_alpha,
    karamata_ratio, model_from_config, model_to_config, norming_sequence,
    oscillating_model, positivity_parameter, potter_constant, rate_b,
    rate_btilde, segment_integrals, srt_constant,
)

# Таблица κ_α = ⌊1/α⌋ - 1.
KAPPA_TABLE = (
    (0.6, 0),
    (0.45, 1),
    (0.4, 1),
    (1 / 3, 2),
    (0.3, 2),
    (0.25, 3),
    (0.21, 3),
)


@pytest.mark.parametrize('alpha, expected', KAPPA_TABLE)
def test_kappa_table(alpha, expected):
    """Тест: κ_α совпадает с таблицей без допуска."""
    assert kappa_alpha(alpha) == expected


@pytest.mark.parametrize('alpha', (0.0, 1.0, 1.5))
def test_kappa_outside_unit_interval(alpha):
    """Тест: κ_α определена только при 0 < α < 1."""
    with pytest.raises(DomainError):
        kappa_alpha(alpha)


@pytest.mark.parametrize(
    'x, expected',
    (
        (0.0, 0.5),
        (0.5, 0.75),
        (1.0, 1.0),
        (16.0, 4.0),
    ),
)
def test_eval_A_anchors(model_half, x, expected):
    """Тест: A(0) = 1/2, A(1) = 1, линейность на [0, 1], x^α выше."""
    assert eval_A(model_half, x) == pytest.approx(expected, rel=1e-15)


def test_eval_A_rejects_negative(model_half):
    """Тест: отрицательный аргумент A запрещён."""
    with pytest.raises(DomainError):
        eval_A(model_half, -1.0)


def test_inverse_A_examples(model_half):
    """Тест: a_4 = 16 и a_1 = 1 для чистой степени α = 1/2."""
    assert inverse_A(model_half, 4.0) == pytest.approx(16.0, rel=1e-14)
    assert inverse_A(model_half, 1.0) == pytest.approx(1.0, rel=1e-14)


def test_inverse_A_bisection_residual(log_model):
    """Тест: бисекция для логарифмической поправки даёт |A(a_u) - u| мало."""
    value = inverse_A(log_model, 100.0)
    assert abs(eval_A(log_model, value) - 100.0) <= 1e-8


def test_inverse_is_left_inverse(model_half, log_model, subtests):
    """Тест: A(A⁻¹(u)) = u с относительной ошибкой не больше 1e-10."""
    u = np.array([0.5, 0.75, 1.0, 3.0, 50.0, 1e3, 1e5])
    for model in (model_half, log_model):
        with subtests.test(family=model.family.value):
            back = eval_A(model, inverse_A(model, u))
            assert np.allclose(back, u, rtol=1e-10, atol=0)


def test_inverse_A_rejects_small_u(model_half):
    """Тест: a_u не определена при u < 1/2."""
    with pytest.raises(DomainError):
        inverse_A(model_half, 0.25)


def test_norming_sequence(model_half):
    """Тест: a_n = n² при α = 1/2."""
    expected = np.arange(1, 11, dtype=float) ** 2
    assert np.allclose(norming_sequence(model_half, 10), expected)


@pytest.mark.parametrize(
    'k, x, expected',
    (
        (2, 100.0, 1.0),
        (3, 0.0, 0.125),
        (1, 1e6, 1e-3),
    ),
)
def test_rate_b(model_half, k, x, expected):
    """Тест: b_k(x) = A(|x|)^k/(|x| ∨ 1)."""
    assert rate_b(model_half, k, x) == pytest.approx(expected, rel=1e-12)


def test_rate_b_is_even(model_half):
    """Тест: b_k(-x) = b_k(x)."""
    x = np.array([3.0, 17.0, 250.0])
    assert np.array_equal(rate_b(model_half, 2, -x), rate_b(model_half, 2, x))


def test_segment_integrals_unit_part(model_half):
    """Тест: ∫_0^1 A(t)² dt = 7/12 при A(t) = (1 + t)/2."""
    value = segment_integrals(model_half, 2, 0.0, 1.0)
    assert value == pytest.approx(7 / 12, rel=1e-14)


def test_segment_integrals_log_model_matches_quad(log_model):
    """Тест: квадратура Гаусса–Лежандра совпадает с адаптивной."""
    a = np.array([1.0, 7.0, 300.0, 5e4])
    values = segment_integrals(log_model, 2, a, 2 * a)
    for lo, value in zip(a, values):
        expected, _ = integrate.quad(
            lambda t: eval_A(log_model, t) ** 2 / t / t, lo, 2 * lo,
            epsrel=1e-13,
        )
        assert value == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize('method', ('integral', 'sum'))
def test_rate_btilde_vanishes(model_half, method):
    """Тест: b̃_k(z, x) = 0 при |x| > |z|."""
    assert rate_btilde(model_half, 2, 5.0, 10.0, method) == 0.0


def test_rate_btilde_log_integral(model_half):
    """Тест: при α = 1/2, k = 2 интеграл равен ln(z/x)."""
    x0 = 37.0
    value = rate_btilde(model_half, 2, math.e * x0, x0)
    assert value == pytest.approx(1.0, rel=1e-12)


def test_rate_btilde_sum_comparable(model_half):
    """Тест: суммарная и интегральная формы b̃ сравнимы."""
    z, x = 2.0**16, 2.0**8
    ratio = (
        rate_btilde(model_half, 2, z, x, 'sum')
        / rate_btilde(model_half, 2, z, x, 'integral')
    )
    assert 0.2 <= ratio <= 5.0


def test_rate_btilde_unknown_method(model_half):
    with pytest.raises(UnsupportedModeError):
        rate_btilde(model_half, 2, 10.0, 1.0, 'trapezoid')


def test_tail_model_validation():
    """Тест: недопустимые α и β отклоняются."""
    with pytest.raises(DomainError):
        TailModel(1.0)
    with pytest.raises(DomainError):
        TailModel(0.3, Family.LOG_POWER, beta=-0.5)
    with pytest.raises(DomainError):
        TailModel(0.5, Family.SPLINE, table=((2.0, 1.0), (4.0, 2.0)))


def test_model_config_round_trip(model_half, log_model):
    """Тест: модель восстанавливается из своей конфигурации."""
    for model in (model_half, log_model):
        assert model_from_config(model_to_config(model)) == model


def test_srt_constant_closed_form():
    """Тест: C(1/2, 1) = 1/π."""
    constant = srt_constant(0.5)
    assert constant.value == pytest.approx(1 / math.pi, rel=1e-15)


def test_srt_constant_small_alpha():
    """Тест: sin(πα)/π ≈ α при α → 0."""
    alpha = 1e-3
    assert srt_constant(alpha).value / alpha == pytest.approx(1.0, rel=0.01)


def test_srt_constant_closed_form_needs_one_sided():
    """Тест: замкнутая форма C недоступна при ρ < 1."""
    with pytest.raises(UnsupportedModeError):
        srt_constant(0.5, rho=0.7)


def test_srt_constant_monte_carlo():
    """Тест: оценка Монте-Карло в пределах трёх ошибок от 1/π."""
    constant = srt_constant(0.5, 1.0, 'monte_carlo', samples=10**6, seed=11)
    assert abs(constant.value - 1 / math.pi) <= 3 * constant.stderr


def test_positivity_parameter():
    """Тест: ρ = 1 для одностороннего хвоста и 1/2 для симметричного."""
    assert positivity_parameter(0.5, 1.0, 0.0) == pytest.approx(1.0)
    assert positivity_parameter(0.5, 1.0, 1.0) == pytest.approx(0.5)


def test_karamata_power_above_minus_one(model_half):
    """Тест: ∫_1^T t^{1/2} dt ≈ T·f(T)/(ζ+1) при T = 2²⁰."""
    ratio = karamata_ratio(model_half, 1, 2.0**20)
    assert ratio == pytest.approx(1.0, abs=0.05)


def test_karamata_power_below_minus_one(model_half):
    """Тест: хвостовой интеграл ∫_T^∞ t^{-3/2} dt точно равен 2/√T."""
    ratio = karamata_ratio(model_half, -3, 2.0**20)
    assert ratio == pytest.approx(1.0, rel=1e-8)


def test_karamata_sum_form(log_model):
    """Тест: сумма Σ A(n) сравнивается с T·A(T)/(α+1)."""
    # Логарифмический множитель даёт поправку порядка 1/log T.
    ratio = karamata_ratio(log_model, 1, 2.0**20, form='sum')
    assert ratio == pytest.approx(1.0, abs=0.1)


def test_karamata_critical_exponent(model_half):
    """Тест: при ζ = -1 теорема Караматы не применима."""
    with pytest.raises(DomainError):
        karamata_ratio(model_half, -2, 1e3)


def test_potter_constant(model_half, log_model):
    """Тест: K_ε = 1 для чистой степени и K_ε <= 10 для поправки."""
    assert potter_constant(model_half).constant == 1.0
    assert potter_constant(log_model).constant <= 10.0


def test_cond_half_statistic_for_square_root(model_half):
    """Тест: статистика cond_half тождественно равна 1 при A = √x."""
    x = 2.0 ** np.arange(1, 21)
    assert np.allclose(cond_half_statistic(model_half, x), 1.0)


def test_oscillating_model_is_spline():
    """Тест: осциллирующая модель задаётся сплайном с A(1) = 1."""
    model = oscillating_model(0.5, 0.05, 2.0, 2.0**20)
    assert model.family is Family.SPLINE
    assert eval_A(model, 1.0) == pytest.approx(1.0)
    x = 2.0 ** np.arange(0, 20)
    assert np.all(np.diff(eval_A(model, x)) > 0)
