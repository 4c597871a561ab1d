"""Локальные большие уклонения, устойчивые законы, локальная теорема.

Нормировка предела: при F̄(x) ~ p/A(x), F(-x) ~ q/A(x) величина Y
строго устойчива в параметризации S1 с масштабом
((p+q)·Γ(1-α)·cos(πα/2))^{1/α} и асимметрией β = (p-q)/(p+q).
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from numba import njit
from scipy import integrate, stats
from scipy.special import gamma as gamma_fn
from scipy.special import gammaln

from .conf import lab_setting, tolerance
from .conv_engine import WalkEngine, walk_window
from .exceptions import DomainError, UnsupportedModeError
from .rv_kernel import eval_A, inverse_A, positivity_parameter

logger = logging.getLogger(__name__)

SERIES_TERMS = 400


def skewness_from_rho(alpha, rho):
    """β по параметру положительности ρ = P(Y > 0)."""
    if not 0 < alpha < 1:
        raise DomainError('устойчивые законы поддерживаются при 0 < alpha < 1')
    if not 0 <= rho <= 1:
        raise DomainError(f'rho={rho} недопустимо при alpha={alpha}')
    beta = math.tan(math.pi * alpha * (rho - 0.5)) / math.tan(
        math.pi * alpha / 2
    )
    return float(np.clip(beta, -1.0, 1.0))


def stable_scale(alpha, tail_mass=1.0):
    return (tail_mass * gamma_fn(1.0 - alpha)
            * math.cos(math.pi * alpha / 2)) ** (1.0 / alpha)


def stable_sample(alpha, rho, count, seed=0, tail_mass=1.0):
    """Выборка Чемберса–Мэллоуза–Стака для предела S_n/a_n."""
    beta = skewness_from_rho(alpha, rho)
    rng = np.random.default_rng(seed)
    u = rng.uniform(-math.pi / 2, math.pi / 2, count)
    w = rng.exponential(1.0, count)
    shift = math.atan(beta * math.tan(math.pi * alpha / 2)) / alpha
    t1 = np.sin(alpha * (u + shift)) / (
        math.cos(alpha * shift) * np.cos(u)
    ) ** (1.0 / alpha)
    t2 = (np.cos(alpha * shift + (alpha - 1.0) * u) / w) ** (
        (1.0 - alpha) / alpha
    )
    return stable_scale(alpha, tail_mass) * t1 * t2


def _laplace_scale(alpha, tail_mass):
    """Y = s·S, где E exp(-λS) = exp(-λ^α)."""
    return (tail_mass * gamma_fn(1.0 - alpha)) ** (1.0 / alpha)


def _series_density(alpha, x, limit):
    """Сходящийся ряд для плотности S, второй ответ: флаг сокращения."""
    k = np.arange(1, SERIES_TERMS + 1, dtype=float)
    log_terms = (
        gammaln(k * alpha + 1.0) - gammaln(k + 1.0)
        - np.multiply.outer(np.log(x), k * alpha + 1.0)
    )
    signs = np.where(k % 2 == 1, 1.0, -1.0) * np.sin(np.pi * k * alpha)
    with np.errstate(over='ignore', invalid='ignore'):
        terms = np.exp(log_terms) * signs
    value = terms.sum(axis=-1) / np.pi
    largest = np.abs(terms).max(axis=-1) / np.pi
    with np.errstate(divide='ignore', invalid='ignore'):
        cancellation = largest / np.abs(value)
    last = np.abs(terms[..., -1]) / np.pi
    unreliable = (
        ~np.isfinite(cancellation) | (cancellation > limit)
        | (last > 1e-16 * np.abs(value))
    )
    return value, unreliable


def _integral_density(alpha, x):
    """Представление Золотарёва–Кантера для плотности S."""
    power = alpha / (1.0 - alpha)

    def kernel(phi):
        return (
            (math.sin(alpha * phi) / math.sin(phi)) ** (1.0 / (1.0 - alpha))
            * math.sin((1.0 - alpha) * phi) / math.sin(alpha * phi)
        )

    out = np.empty(np.shape(x))
    for idx, value in np.ndenumerate(np.asarray(x, dtype=float)):
        scale = value ** (-power)
        integral, _ = integrate.quad(
            lambda phi: kernel(phi) * math.exp(-kernel(phi) * scale),
            0.0, math.pi, limit=200, epsabs=0.0, epsrel=1e-11,
        )
        out[idx] = (
            alpha / ((1.0 - alpha) * math.pi)
            * value ** (-1.0 / (1.0 - alpha)) * integral
        )
    return out


@dataclass
class DensityValues:
    y: np.ndarray
    values: np.ndarray
    method: np.ndarray
    flagged: np.ndarray


def stable_density(alpha, y, tail_mass=1.0, method='auto'):
    """Плотность одностороннего (ρ = 1) предела Y."""
    if not 0 < alpha < 1:
        raise DomainError('stable_density: нужно 0 < alpha < 1')
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(y <= 0):
        raise DomainError('плотность считается при y > 0')
    scale = _laplace_scale(alpha, tail_mass)
    x = y / scale
    methods = np.full(y.shape, method, dtype=object)
    flagged = np.zeros(y.shape, dtype=bool)
    if method == 'closed_form':
        if abs(alpha - 0.5) > 1e-12:
            raise DomainError('замкнутая форма известна только при alpha=1/2')
        c = stable_scale(alpha, tail_mass)
        return DensityValues(
            y, stats.levy.pdf(y, scale=c), methods, flagged
        )
    if method == 'integral':
        return DensityValues(
            y, _integral_density(alpha, x) / scale, methods, flagged
        )
    limit = lab_setting('series_cancellation')
    values, unreliable = _series_density(alpha, x, limit)
    values = values / scale
    if method == 'series':
        if np.any(unreliable):
            logger.warning(
                'ряд для плотности не сходится в %d точках',
                int(unreliable.sum()),
            )
        return DensityValues(y, values, methods, unreliable)
    if np.any(unreliable):
        values[unreliable] = _integral_density(alpha, x[unreliable]) / scale
        methods[unreliable] = 'integral'
    methods[~unreliable] = 'series'
    return DensityValues(y, values, methods, flagged)


def srt_window_constant(alpha, delta, tail_mass=1.0):
    """C(δ) = α ∫_δ^{1/δ} z^{α-2} φ(1/z) dz = α E[Y^{-α}; δ <= Y <= 1/δ]."""
    def integrand(t):
        y = math.exp(t)
        phi = stable_density(alpha, y, tail_mass).values[0]
        return y ** (1.0 - alpha) * phi

    value, _ = integrate.quad(
        integrand, math.log(delta), -math.log(delta), limit=200
    )
    return alpha * value


@njit(cache=True)
def _alias_setup(probs):
    size = probs.size
    scaled = probs * size
    alias = np.zeros(size, dtype=np.int64)
    small = np.empty(size, dtype=np.int64)
    large = np.empty(size, dtype=np.int64)
    n_small = 0
    n_large = 0
    for i in range(size):
        if scaled[i] < 1.0:
            small[n_small] = i
            n_small += 1
        else:
            large[n_large] = i
            n_large += 1
    while n_small > 0 and n_large > 0:
        n_small -= 1
        s = small[n_small]
        n_large -= 1
        g = large[n_large]
        alias[s] = g
        scaled[g] = scaled[g] - (1.0 - scaled[s])
        if scaled[g] < 1.0:
            small[n_small] = g
            n_small += 1
        else:
            large[n_large] = g
            n_large += 1
    for i in range(n_large):
        scaled[large[i]] = 1.0
    for i in range(n_small):
        scaled[small[i]] = 1.0
    return scaled, alias


@dataclass
class AliasTable:
    points: np.ndarray
    prob: np.ndarray
    alias: np.ndarray

    def draw(self, rng, size):
        idx = rng.integers(0, self.points.size, size)
        keep = rng.random(size) < self.prob[idx]
        return self.points[np.where(keep, idx, self.alias[idx])]


def alias_table(dist):
    """Таблица Уолкера–Воуза по носителю распределения."""
    nonzero = np.flatnonzero(dist.masses)
    probs = dist.masses[nonzero] / dist.masses[nonzero].sum()
    prob, alias = _alias_setup(probs)
    return AliasTable(dist.offset + nonzero, prob, alias)


def sample_walks(dist, n, count, rng, table=None):
    """S_n и M_n = max X_i для count независимых блужданий."""
    table = alias_table(dist) if table is None else table
    total = np.zeros(count, dtype=np.int64)
    largest = np.full(count, np.iinfo(np.int64).min, dtype=np.int64)
    for _ in range(n):
        steps = table.draw(rng, count)
        total += steps
        np.maximum(largest, steps, out=largest)
    return total, largest


def band_exponent(gamma):
    """k с γ ∈ [1/k, 1/(k-1))."""
    if gamma <= 0:
        raise DomainError('gamma должна быть > 0')
    return max(1, math.ceil(1.0 / gamma - 1e-12))


def _default_n_grid(model, x, delta=0.2):
    top = int(math.floor(eval_A(model, delta * x)))
    return np.arange(1, max(top, 1) + 1)


@dataclass
class LLDReport:
    gamma: float
    ceil_inv_gamma: int
    cells: pd.DataFrame
    sup: float
    sup_by_x: dict
    flags: list = field(default_factory=list)
    header: dict = field(default_factory=dict)


def _sup_by_x(cells):
    return {
        int(x): float(value)
        for x, value in cells.groupby('x')['ratio'].max().items()
    }


def _interval_probability(marginal, x, J):
    lo, hi = J
    points = np.arange(int(math.floor(lo)) + 1, int(math.floor(hi)) + 1)
    return float(marginal.at(x + points).sum())


def _mc_cell(dist, n, x, cap, J, samples, rng, table):
    total, largest = sample_walks(dist, n, samples, rng, table)
    lo, hi = J
    hit = (total > x + lo) & (total <= x + hi)
    if cap is not None:
        hit &= largest <= cap
    p_hat = hit.mean()
    stderr = math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / samples)
    return float(p_hat), stderr, int(hit.sum())


def lld_bound_ratio(dist, gamma, J=(-1, 0), n_grid=None, x_grid=None,
                    method='exact', samples=None, seed=0, overrides=None):
    """P(S_n ∈ x+J, M_n <= γx)·a_n·(A(x)/n)^{⌈1/γ⌉} по сетке (n, x)."""
    if method not in ('exact', 'monte_carlo'):
        raise UnsupportedModeError(f'lld_bound_ratio: режим {method}')
    model = dist.model
    k = band_exponent(gamma)
    x_grid = np.asarray(x_grid, dtype=np.int64)
    samples = samples or lab_setting('mc_samples')
    rows, flags = [], []
    table = alias_table(dist) if method == 'monte_carlo' else None
    for j, x in enumerate(x_grid):
        x = int(x)
        cap = math.floor(gamma * x)
        ns = _default_n_grid(model, x) if n_grid is None else np.asarray(
            n_grid
        )
        if method == 'exact':
            window = walk_window(dist, x + max(J), overrides)
            engine = WalkEngine(dist, window, cap, overrides)
            wanted = set(int(n) for n in ns)
            for n, marginal in engine.sequential(int(max(ns))):
                if n not in wanted:
                    continue
                prob = _interval_probability(marginal, x, J)
                rows.append((n, x, prob, 0.0, 'exact', ''))
        else:
            for i, n in enumerate(ns):
                rng = np.random.default_rng([seed, j, i])
                prob, stderr, hits = _mc_cell(
                    dist, int(n), x, cap, J, samples, rng, table
                )
                flag = 'inconclusive' if hits == 0 else ''
                if flag:
                    flags.append(
                        f'n={n},x={x}: нет попаданий, '
                        f'P <= {hits_upper_bound(samples):.2e}'
                    )
                rows.append((int(n), x, prob, stderr, 'mc', flag))
    cells = pd.DataFrame(
        rows, columns=['n', 'x', 'probability', 'stderr', 'method', 'flag']
    )
    a_n = inverse_A(model, cells['n'].to_numpy(dtype=float))
    norm = a_n * (
        eval_A(model, cells['x'].to_numpy(dtype=float))
        / cells['n'].to_numpy(dtype=float)
    ) ** k
    cells['ratio'] = cells['probability'] * norm
    cells['ratio_stderr'] = cells['stderr'] * norm
    sup_by_x = _sup_by_x(cells)
    report = LLDReport(
        gamma, k, cells, float(cells['ratio'].max()), sup_by_x, flags,
        header={'J': list(J), 'seed': seed, 'method': method},
    )
    logger.info('lld_bound_ratio gamma=%.3f: sup=%.4g', gamma, report.sup)
    return report


def unconstrained_ratio(dist, J=(-1, 0), n_grid=None, x_grid=None,
                        overrides=None):
    """P(S_n ∈ x+J)·a_n·A(x)/n по сетке (n, x)."""
    model = dist.model
    x_grid = np.asarray(x_grid, dtype=np.int64)
    if n_grid is None:
        n_grid = _default_n_grid(model, int(x_grid.max()))
    n_grid = np.asarray(n_grid, dtype=np.int64)
    window = walk_window(dist, int(x_grid.max()) + max(J), overrides)
    engine = WalkEngine(dist, window, overrides=overrides)
    wanted = set(int(n) for n in n_grid)
    rows = []
    for n, marginal in engine.sequential(int(n_grid.max())):
        if n not in wanted:
            continue
        a_n = float(inverse_A(model, n))
        for x in x_grid:
            prob = _interval_probability(marginal, int(x), J)
            ratio = prob * a_n * eval_A(model, float(x)) / n
            rows.append((n, int(x), prob, ratio))
    cells = pd.DataFrame(rows, columns=['n', 'x', 'probability', 'ratio'])
    return LLDReport(
        1.0, 1, cells, float(cells['ratio'].max()),
        _sup_by_x(cells),
        header={'J': list(J)},
    )


def fuk_nagaev_tail(dist, gamma, x_grid, n_grid, overrides=None):
    """P(S_n >= x, M_n <= γx) против (n/A(x))^{1/γ}."""
    if gamma <= 0:
        raise DomainError('gamma должна быть > 0')
    model = dist.model
    n_grid = np.asarray(n_grid, dtype=np.int64)
    rows, flags = [], []
    for x in np.asarray(x_grid, dtype=np.int64):
        x = int(x)
        cap = math.floor(gamma * x)
        if dist.is_positive:
            # Всё, что ушло правее x - 1, и есть событие {S_n >= x}.
            window = (0, x - 1)
        else:
            window = walk_window(dist, x, overrides)
            flags.append(f'x={x}: двусторонний шаг, нижняя оценка')
        engine = WalkEngine(dist, window, cap, overrides)
        wanted = set(int(n) for n in n_grid)
        for n, marginal in engine.sequential(int(n_grid.max())):
            if n not in wanted:
                continue
            if dist.is_positive:
                prob = marginal.leakage
            else:
                prob = marginal.tail_from(x)
            ratio = prob / (n / eval_A(model, float(x))) ** (1.0 / gamma)
            rows.append((n, x, prob, ratio))
    cells = pd.DataFrame(rows, columns=['n', 'x', 'probability', 'ratio'])
    return LLDReport(
        gamma, band_exponent(gamma), cells, float(cells['ratio'].max()),
        _sup_by_x(cells), flags,
    )


@dataclass
class StoneReport:
    cells: pd.DataFrame
    max_deviation: dict
    sup_constant: float
    flags: list = field(default_factory=list)
    calibration: str = 'closed_form_scale'


def stone_llt_diag(dist, n_grid, x_over_an_grid=None, width=1,
                   overrides=None):
    """a_n·P(S_n ∈ x+J) против v·φ(x/a_n) и константа sup-оценки."""
    model = dist.model
    n_grid = np.asarray(n_grid, dtype=np.int64)
    ratios = np.asarray(
        np.linspace(0.5, 20.0, 40) if x_over_an_grid is None
        else x_over_an_grid, dtype=float,
    )
    tail_mass = dist.p + dist.q
    one_sided = dist.is_positive
    a_max = float(inverse_A(model, float(n_grid.max())))
    reach = int(math.ceil(ratios.max() * a_max)) + width
    window = (0, reach) if one_sided else walk_window(dist, reach, overrides)
    engine = WalkEngine(dist, window, overrides=overrides)
    wanted = set(int(n) for n in n_grid)
    if one_sided:
        density = stable_density(model.alpha, ratios, tail_mass)
        phi = density.values
    rows, flags = [], []
    sup_constant = 0.0
    deviation = {}
    for n, marginal in engine.sequential(int(n_grid.max())):
        a_n = float(inverse_A(model, n))
        sup_constant = max(sup_constant, a_n * float(marginal.values.max()))
        if n not in wanted or not one_sided:
            continue
        xs = np.rint(ratios * a_n).astype(np.int64)
        local = np.array([
            _interval_probability(marginal, int(x), (-width, 0)) for x in xs
        ])
        scaled = a_n * local
        expected = width * phi
        dev = np.abs(scaled - expected)
        if np.any(density.flagged):
            flags.append(f'n={n}: ряд не сходится в части точек')
            dev = np.where(density.flagged, np.nan, dev)
        deviation[int(n)] = float(np.nanmax(dev))
        rows.extend(
            (int(n), float(r), float(s), float(e))
            for r, s, e in zip(ratios, scaled, expected)
        )
    cells = pd.DataFrame(
        rows, columns=['n', 'x_over_an', 'scaled_mass', 'density']
    )
    if not one_sided:
        flags.append('двусторонний шаг: только константа sup-оценки')
    return StoneReport(cells, deviation, sup_constant, flags)


@dataclass
class Calibration:
    factor: float
    quantiles: tuple
    exact: np.ndarray
    sampled: np.ndarray


def calibrate_scale(dist, n, samples=100_000, seed=0, rho=None,
                    quantiles=(0.25, 0.5, 0.75), overrides=None):
    """Отношение квантилей S_n/a_n к квантилям устойчивой выборки."""
    model = dist.model
    a_n = float(inverse_A(model, n))
    if rho is None:
        rho = 1.0 if dist.q == 0 else _rho_from_tails(dist)
    sampled = np.quantile(
        stable_sample(model.alpha, rho, samples, seed, dist.p + dist.q),
        quantiles,
    )
    reach = int(math.ceil(abs(sampled).max() * a_n * 2))
    window = (0, reach) if dist.is_positive else (-reach, reach)
    marginal = WalkEngine(dist, window, overrides=overrides).marginal(n)
    cdf = np.cumsum(marginal.values)
    if dist.is_positive:
        exact_points = np.searchsorted(cdf, quantiles)
    else:
        below = marginal.leakage / 2.0
        exact_points = np.searchsorted(cdf + below, quantiles)
    exact = (marginal.offset + exact_points) / a_n
    factor = float(np.median(exact / sampled))
    logger.info('calibrate_scale n=%d: множитель %.4f', n, factor)
    return Calibration(factor, tuple(quantiles), exact, sampled)


def _rho_from_tails(dist):
    return positivity_parameter(dist.alpha, dist.p, dist.q)


def hits_upper_bound(samples):
    """Правило трёх: верхняя граница вероятности при нуле попаданий."""
    return 3.0 / samples


def mc_agreement(exact, estimate, stderr, sigma=None):
    sigma = tolerance('mc_sigma') if sigma is None else sigma
    return abs(exact - estimate) <= sigma * max(stderr, 1e-300)
