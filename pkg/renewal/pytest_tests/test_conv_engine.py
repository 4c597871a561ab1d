"""Тесты точных свёрток, меры восстановления и сумм T_ℓ."""
import math

import numpy as np
import pytest
from pytest_lazy_fixtures import lf

from renewal.conv_engine import (
    MassVector, WalkEngine, basic_bound_fit, convolve, hit_table,
    integrated_renewal_ratio, llt_sup_constant, partial_sum_T, renewal_mass,
    srt_ratio, walk_marginal,
)
from renewal.dist_factory import build_baseline, build_custom, build_point_mass
from renewal.exceptions import (
    DomainError, InvariantViolation, SpanMismatchError, UnsupportedModeError,
)
from renewal.rv_kernel import TailModel, eval_A, srt_constant

# Три «случайных» тяжёлых закона для сравнения решателей.
ORACLE_ALPHAS = (0.3, 0.5, 0.8)


def _random_vector(rng, size):
    values = rng.dirichlet(np.ones(size))
    return MassVector(int(rng.integers(-5, 5)), values)


def test_fft_matches_direct():
    """Тест: FFT и прямая свёртка совпадают до 1e-12 на длине 64."""
    rng = np.random.default_rng(3)
    p, q = _random_vector(rng, 64), _random_vector(rng, 64)
    fast = convolve(p, q, method='fft')
    slow = convolve(p, q, method='direct')
    assert fast.offset == slow.offset
    assert np.max(np.abs(fast.values - slow.values)) <= 1e-12


def test_convolve_conserves_mass():
    """Тест: масса в окне плюс утечка равна произведению масс."""
    rng = np.random.default_rng(5)
    p, q = _random_vector(rng, 200), _random_vector(rng, 300)
    result = convolve(p, q, window=(-20, 100))
    assert result.total == pytest.approx(1.0, abs=1e-12)
    assert result.leakage > 0
    assert np.all(result.values >= 0)


def test_convolve_rejects_span_mismatch():
    p = MassVector(0, np.ones(1))
    q = MassVector(0, np.ones(1), span=2.0)
    with pytest.raises(SpanMismatchError):
        convolve(p, q)


def test_clip_ledger_abort():
    """Тест: переполненный журнал клиппинга прерывает расчёт."""
    p = MassVector(0, np.ones(1), clip_ledger=1e-3)
    with pytest.raises(InvariantViolation):
        convolve(p, MassVector(0, np.ones(1)))


def test_unknown_convolution_method():
    p = MassVector(0, np.ones(1))
    with pytest.raises(UnsupportedModeError):
        convolve(p, p, method='karatsuba')


def test_walk_marginal_toy(toy):
    """Тест: P(S₂ = ·) для ½δ₁ + ½δ₂."""
    marginal = walk_marginal(toy, 2)
    assert np.allclose(marginal.at([2, 3, 4]), [0.25, 0.5, 0.25])
    assert marginal.total == pytest.approx(1.0)


def test_walk_marginal_with_constraint(toy):
    """Тест: при M₂ <= 1 остаётся только путь 1 + 1."""
    marginal = walk_marginal(toy, 2, constraint_max=1)
    assert marginal.at([2, 3, 4]) == pytest.approx([0.25, 0.0, 0.0])


def test_single_step_above_cap_is_impossible(baseline_half):
    """Тест: n = 1, x > m даёт нулевую вероятность."""
    marginal = walk_marginal(baseline_half, 1, constraint_max=10)
    assert marginal.at([11, 50]).tolist() == [0.0, 0.0]


@pytest.mark.parametrize(
    'dist, n, window',
    (
        (lf('toy'), 3, (0, 6)),
        (lf('three_atoms'), 3, (-3, 6)),
        (lf('baseline_half'), 3, (0, 256)),
    ),
)
def test_constraint_is_monotone_in_cap(dist, n, window):
    """Тест: P(S_n = ·, M_n <= m) растёт по m до P(S_n = ·)."""
    free = walk_marginal(dist, n, window=window)
    top = int(dist.x_max)
    caps = sorted({int(dist.x_min), (int(dist.x_min) + top) // 2, top})
    nodes = np.arange(window[0], window[1] + 1)
    previous = np.zeros(nodes.size)
    for cap in caps:
        bounded = walk_marginal(dist, n, constraint_max=cap, window=window)
        values = bounded.at(nodes)
        assert np.all(values <= free.at(nodes) + 1e-12)
        assert np.all(values >= previous - 1e-12)
        previous = values
    assert np.allclose(previous, free.at(nodes), rtol=0.0, atol=1e-15)
    above = walk_marginal(dist, n, constraint_max=top + 7, window=window)
    assert np.array_equal(above.at(nodes), free.at(nodes))


def test_binary_powers_match_sequential(baseline_half):
    """Тест: бинарное возведение в степень совпадает с итерацией."""
    engine = WalkEngine(baseline_half, (0, 1024))
    for n, marginal in engine.sequential(13):
        if n in (5, 8, 13):
            powered = engine.marginal(n)
            assert np.allclose(powered.values, marginal.values, atol=1e-14)


def test_sequential_conservation(baseline_half):
    """Тест: масса плюс утечка равна 1 с точностью 1e-9·n."""
    engine = WalkEngine(baseline_half, (0, 512))
    for n, marginal in engine.sequential(40):
        assert abs(marginal.total - 1.0) <= 1e-9 * n


def test_walk_marginal_rejects_zero_steps(toy):
    with pytest.raises(DomainError):
        walk_marginal(toy, 0)


def test_renewal_toy(toy):
    """Тест: u(0) = 1, u(1) = ½, u(2) = ¾ и u(x) → 2/3."""
    table = renewal_mass(toy, 200, method='direct')
    assert table.u[:3].tolist() == [1.0, 0.5, 0.75]
    assert table.u[200] == pytest.approx(2 / 3, abs=1e-12)
    newton = renewal_mass(toy, 200)
    assert np.allclose(newton.u, table.u, atol=1e-12)


@pytest.mark.parametrize('alpha', ORACLE_ALPHAS)
def test_newton_matches_direct(alpha):
    """Тест: Ньютон и прямая рекурсия совпадают до 1e-10 на X = 4096."""
    dist = build_baseline(TailModel(alpha), x_max=2**13)
    newton = renewal_mass(dist, 4096, method='newton')
    direct = renewal_mass(dist, 4096, method='direct')
    assert np.max(np.abs(newton.u - direct.u)) <= 1e-10
    assert newton.residual <= 1e-9


def test_renewal_needs_positive_support(baseline_two_sided, model_half):
    """Тест: двусторонний шаг и атом в нуле отклоняются."""
    with pytest.raises(UnsupportedModeError):
        renewal_mass(baseline_two_sided, 100)
    with pytest.raises(DomainError):
        renewal_mass(build_custom({0: 0.5, 1: 0.5}, model=model_half), 100)


def test_unknown_renewal_method(toy):
    with pytest.raises(UnsupportedModeError):
        renewal_mass(toy, 10, method='gauss')


def test_partial_sum_T_empty_range(model_half):
    """Тест: при δx < 1 сумма пуста."""
    dist = build_point_mass(1, model_half)
    assert partial_sum_T(dist, 0, 0.5, 1) == 0.0


def test_partial_sum_T_deterministic_walk():
    """Тест: для шага δ₁ в точку x = 3 попадает только n = 3."""
    dist = build_point_mass(1, TailModel(1.5))
    assert partial_sum_T(dist, 0, 1.0, 3) == pytest.approx(1.0)
    assert partial_sum_T(dist, 2, 1.0, 3) == pytest.approx(9.0)


def test_partial_sum_T_toy(toy):
    """Тест: T₀(1; 4) = P(S₂ = 4), T₁ удваивает вклад n = 2."""
    assert partial_sum_T(toy, 0, 1.0, 4) == pytest.approx(0.25)
    assert partial_sum_T(toy, 1, 1.0, 4) == pytest.approx(0.5)


def test_partial_sum_T_checks_delta(toy):
    with pytest.raises(DomainError):
        partial_sum_T(toy, 0, 1.5, 4)


def test_hit_table_shape(toy):
    table = hit_table(toy, [2, 3, 4], 3)
    assert table.shape == (3, 3)
    assert table[1].tolist() == pytest.approx([0.25, 0.5, 0.25])


def test_srt_ratio_positive(baseline_07):
    """Тест: отношение SRT собрано из u(x) и нормировки x/(C·A(x))."""
    C = srt_constant(0.7).value
    xs = np.array([256, 512, 1024])
    result = srt_ratio(baseline_07, xs, C)
    table = renewal_mass(baseline_07, 1024)
    expected = table.interval(xs) * xs / (C * eval_A(baseline_07.model, xs))
    assert np.allclose(result.ratio, expected, rtol=1e-12)
    assert not result.flagged
    assert np.all(result.truncation_error == 0)


def test_srt_ratio_two_sided_flags_truncation(baseline_two_sided):
    """Тест: слишком короткий ряд по n помечается флагом."""
    result = srt_ratio(
        baseline_two_sided, [64], 1 / math.pi, overrides={'srt_n_cap': 2}
    )
    assert result.flagged
    assert result.n_used == 2
    assert result.c2_hat > 0


def test_integrated_ratio(baseline_half):
    """Тест: U([0, x]) сравнивается с (C/α)·A(x)."""
    table = renewal_mass(baseline_half, 2048)
    ratio = integrated_renewal_ratio(table, baseline_half, [2048], 1 / math.pi)
    assert 0.5 < ratio[0] < 2.0


def test_basic_bound_fit_stable():
    """Тест: подобранная C меняется не более чем вдвое при удвоении сетки."""
    dist = build_baseline(TailModel(0.5), x_max=2**12)
    small = basic_bound_fit(dist, [1, 2, 4, 8, 16], [16, 32, 64, 128])
    large = basic_bound_fit(
        dist, [1, 2, 4, 8, 16, 32], [16, 32, 64, 128, 256]
    )
    assert small.max_violation == 0.0
    assert small.c > 0
    assert 0.5 <= large.C / small.C <= 2.0
    assert 0.0 <= small.holdout_violation <= math.log(2)


def test_basic_bound_needs_positive_step(baseline_two_sided):
    with pytest.raises(DomainError):
        basic_bound_fit(baseline_two_sided, [1], [4])


def test_llt_sup_constant(baseline_half):
    """Тест: max a_n·sup P(S_n = z) конечна и положительна."""
    value = llt_sup_constant(baseline_half, 32, window=(0, 4096))
    assert 0.1 < value < 10.0
