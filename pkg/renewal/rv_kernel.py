"""Регулярно меняющиеся функции: хвост A, обратная a_n, ставки b_k и b̃_k.

Нормировка: A(0) = 1/2, A(1) = 1, на [0, 1] функция A линейна.
Все функции принимают скаляры или numpy-массивы.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .exceptions import DomainError, UnsupportedModeError

logger = logging.getLogger(__name__)

LOG_E_PLUS_ONE = math.log(math.e + 1.0)
BISECTION_STEPS = 90
# Узлы Гаусса–Лежандра для интегралов по коротким отрезкам.
GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


class Family(str, Enum):
    CONSTANT = 'constant'
    LOG_POWER = 'log_power'
    SPLINE = 'spline'


@dataclass(frozen=True)
class TailModel:
    """A(x) = x^α · L(x) с медленно меняющимся множителем L."""

    alpha: float
    family: Family = Family.CONSTANT
    beta: float = 0.0
    table: tuple = ()
    _spline: object = field(
        default=None, init=False, repr=False, compare=False
    )

    def __post_init__(self):
        object.__setattr__(self, 'family', Family(self.family))
        alpha = self.alpha
        if not (0 < alpha < 1 or 1 < alpha < 2):
            raise DomainError(f'alpha={alpha} вне (0,1)∪(1,2)')
        if self.family is Family.LOG_POWER and self.beta < -alpha:
            raise DomainError(
                f'beta={self.beta} < -alpha: A перестаёт возрастать'
            )
        if self.family is Family.SPLINE:
            object.__setattr__(self, '_spline', self._build_spline())

    def _build_spline(self):
        table = np.asarray(self.table, dtype=float)
        if table.ndim != 2 or table.shape[0] < 2 or table.shape[1] != 2:
            raise DomainError('таблица сплайна: нужно >= 2 пар (x, A)')
        x, a = table[:, 0], table[:, 1]
        if x[0] != 1.0 or a[0] != 1.0:
            raise DomainError('таблица сплайна должна начинаться с (1, 1)')
        if np.any(np.diff(x) <= 0) or np.any(np.diff(a) <= 0):
            raise DomainError('таблица сплайна должна строго возрастать')
        return PchipInterpolator(np.log(x), np.log(a), extrapolate=False)

    @property
    def is_pure_power(self):
        return self.family is Family.CONSTANT

    def log_a(self, x):
        """log A(x) для x >= 1."""
        logx = np.log(x)
        if self.family is Family.CONSTANT:
            return self.alpha * logx
        if self.family is Family.LOG_POWER:
            return self.alpha * logx + self.beta * (
                np.log(np.log(np.e + x)) - math.log(LOG_E_PLUS_ONE)
            )
        t_last = math.log(self.table[-1][0])
        inside = np.minimum(logx, t_last)
        values = self._spline(inside)
        return values + self.alpha * np.maximum(logx - t_last, 0.0)


def _as_output(values, like):
    if np.ndim(like) == 0:
        return float(values)
    return values


def eval_A(model, x):
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0) or np.any(np.isnan(x_arr)):
        raise DomainError('A(x) определена только при x >= 0')
    above = np.exp(model.log_a(np.maximum(x_arr, 1.0)))
    values = np.where(x_arr < 1.0, 0.5 + 0.5 * x_arr, above)
    return _as_output(values, x)


def inverse_A(model, u):
    """a_u = A^{-1}(u), u >= 1/2."""
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr < 0.5) or np.any(np.isnan(u_arr)):
        raise DomainError('A^{-1}(u) определена только при u >= 1/2')
    low_part = 2.0 * u_arr - 1.0
    safe_u = np.maximum(u_arr, 1.0)
    if model.is_pure_power:
        high_part = safe_u ** (1.0 / model.alpha)
    else:
        high_part = _bisect_inverse(model, safe_u)
    values = np.where(u_arr <= 1.0, low_part, high_part)
    return _as_output(values, u)


def _bisect_inverse(model, u):
    target = np.log(u)
    lo = np.zeros_like(target)
    hi = np.maximum(target / model.alpha, 1.0)
    short = model.log_a(np.exp(hi)) < target
    while np.any(short):
        hi = np.where(short, 2.0 * hi, hi)
        short = model.log_a(np.exp(hi)) < target
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        below = model.log_a(np.exp(mid)) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return np.exp(0.5 * (lo + hi))


def norming_sequence(model, n_max):
    """a_n = A^{-1}(n) для n = 1..n_max."""
    return inverse_A(model, np.arange(1, n_max + 1, dtype=float))


def rate_b(model, k, x):
    ax = np.abs(np.asarray(x, dtype=float))
    values = eval_A(model, ax) ** k / np.maximum(ax, 1.0)
    return _as_output(values, x)


def _power_piece(a, b, exponent):
    """∫_a^b t^{exponent-1} dt при 1 <= a <= b без потери точности."""
    log_ratio = np.log(b) - np.log(a)
    with np.errstate(divide='ignore', invalid='ignore'):
        generic = a ** exponent * np.expm1(exponent * log_ratio) / exponent
    return np.where(np.abs(exponent) < 1e-14, log_ratio, generic)


def segment_integrals(model, k, a, b):
    """∫_a^b b_k(t)/(t∨1) dt для массивов отрезков 0 <= a <= b.

    Для моделей, отличных от чистой степени, отрезки с a >= 1 должны
    удовлетворять b <= 2a (квадратура Гаусса–Лежандра по log t).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    # На [0, 1]: A(t) = (1 + t)/2, подынтегральное A(t)^k.
    lo_unit = np.minimum(a, 1.0)
    hi_unit = np.minimum(b, 1.0)
    unit_part = 2.0 / (k + 1) * (
        ((1.0 + hi_unit) / 2.0) ** (k + 1) - ((1.0 + lo_unit) / 2.0) ** (k + 1)
    )
    lo = np.maximum(a, 1.0)
    hi = np.maximum(b, 1.0)
    if model.is_pure_power:
        upper_part = _power_piece(lo, hi, k * model.alpha - 1.0)
    else:
        s_lo, s_hi = np.log(lo), np.log(hi)
        half = 0.5 * (s_hi - s_lo)
        mid = 0.5 * (s_hi + s_lo)
        nodes = mid[..., None] + half[..., None] * GL_NODES
        values = np.exp(k * model.log_a(np.exp(nodes)) - nodes)
        upper_part = half * (values * GL_WEIGHTS).sum(axis=-1)
    return unit_part + upper_part


def cumulative_btilde(model, k, t_max):
    """Φ_k(m) = ∫_0^m b_k(t)/(t∨1) dt на целых m = 0..⌈t_max⌉."""
    m_max = int(math.ceil(t_max))
    edges = np.arange(m_max + 1, dtype=float)
    pieces = segment_integrals(model, k, edges[:-1], edges[1:])
    return np.concatenate(([0.0], np.cumsum(pieces)))


def rate_btilde(model, k, z, x, method='integral'):
    """b̃_k(z, x) = ∫_{|x|}^{|z|} b_k(t)/(t∨1) dt; ноль при |x| > |z|."""
    lo, hi = abs(float(x)), abs(float(z))
    if lo > hi:
        return 0.0
    if method == 'sum':
        first = max(1, math.ceil(eval_A(model, lo)))
        last = math.floor(eval_A(model, hi))
        if last < first:
            return 0.0
        n = np.arange(first, last + 1, dtype=float)
        return float(np.sum(n ** (k - 1) / inverse_A(model, n)))
    if method != 'integral':
        raise UnsupportedModeError(f'неизвестный метод b̃: {method}')
    if model.is_pure_power:
        return float(segment_integrals(model, k, lo, hi))
    unit = float(segment_integrals(model, k, min(lo, 1.0), min(hi, 1.0)))
    if hi <= 1.0:
        return unit
    s_lo, s_hi = math.log(max(lo, 1.0)), math.log(hi)
    value, _ = integrate.quad(
        lambda s: math.exp(k * float(model.log_a(math.exp(s))) - s),
        s_lo, s_hi, epsabs=0.0, epsrel=1e-12, limit=200,
    )
    return unit + value


def kappa_alpha(alpha):
    """κ_α = ⌊1/α⌋ - 1 с точной обработкой α = 1/m."""
    if not 0 < alpha < 1:
        raise DomainError(f'kappa_alpha: alpha={alpha} вне (0, 1)')
    inverse = 1.0 / alpha
    nearest = round(inverse)
    if abs(inverse - nearest) <= 1e-9 * inverse:
        return int(nearest) - 1
    return math.floor(inverse) - 1


def positivity_parameter(alpha, p, q):
    """ρ = P(Y > 0) предельного устойчивого закона."""
    skew = (p - q) / (p + q)
    return 0.5 + math.atan(skew * math.tan(math.pi * alpha / 2)) / (
        math.pi * alpha
    )


@dataclass(frozen=True)
class SrtConstant:
    value: float
    stderr: float = None
    samples: int = 0
    mode: str = 'one_sided_closed_form'


def srt_constant(alpha, rho=1.0, mode='one_sided_closed_form',
                 samples=None, seed=0, tail_mass=1.0):
    """C(α, ρ) = α E[Y^{-α}; Y > 0]; tail_mass = p + q."""
    if mode == 'one_sided_closed_form':
        if rho != 1.0:
            raise UnsupportedModeError(
                'замкнутая формула C известна только при rho = 1'
            )
        return SrtConstant(math.sin(math.pi * alpha) / (math.pi * tail_mass))
    if mode != 'monte_carlo':
        raise UnsupportedModeError(f'неизвестный режим: {mode}')
    if not samples:
        raise UnsupportedModeError('для monte_carlo нужен samples > 0')
    from .lld_mc import stable_sample

    y = stable_sample(alpha, rho, samples, seed, tail_mass)
    positive = y > 0
    weights = np.zeros_like(y)
    weights[positive] = alpha * y[positive] ** (-alpha)
    stderr = float(weights.std(ddof=1) / math.sqrt(samples))
    logger.info(
        'C(%.3f, %.3f) методом Монте-Карло: %.6f ± %.6f',
        alpha, rho, weights.mean(), stderr,
    )
    return SrtConstant(float(weights.mean()), stderr, samples, mode)


def karamata_ratio(model, power, T, t_power=0.0, form='integral'):
    """Отношение из теоремы Караматы для f(t) = A(t)^power · t^t_power.

    При ζ > -1 сравнивается ∫_1^T f с T f(T)/(ζ+1),
    при ζ < -1 сравнивается ∫_T^∞ f с -T f(T)/(ζ+1).
    """
    zeta = power * model.alpha + t_power
    if abs(zeta + 1.0) < 1e-12:
        raise DomainError('теорема Караматы не применима при zeta = -1')

    def f(t):
        return eval_A(model, t) ** power * t ** t_power

    reference = T * f(T) / abs(zeta + 1.0)
    if form == 'sum':
        if zeta < -1:
            raise UnsupportedModeError('сумма для zeta < -1 не реализована')
        n = np.arange(1, int(T) + 1, dtype=float)
        return float(np.sum(f(n)) / reference)

    def integrand(s):
        t = math.exp(s)
        return float(f(t)) * t

    if zeta > -1:
        value, _ = integrate.quad(
            integrand, 0.0, math.log(T), epsrel=1e-10, limit=200
        )
    else:
        value, _ = integrate.quad(
            integrand, math.log(T), np.inf, epsrel=1e-10, limit=200
        )
    return value / reference


@dataclass(frozen=True)
class PotterReport:
    eps: float
    constant: float
    worst_rho: float
    worst_s: float


def potter_constant(model, eps=0.05, rhos=(0.5, 0.25, 0.125),
                    s_grid=None):
    """Измеренная константа K_ε в оценках Поттера."""
    if s_grid is None:
        s_grid = 2.0 ** np.arange(0, 41)
    s_grid = np.asarray(s_grid, dtype=float)
    alpha = model.alpha
    best = (1.0, None, None)
    for rho in rhos:
        s = s_grid[rho * s_grid >= 1.0]
        if s.size == 0:
            continue
        ratio = eval_A(model, rho * s) / eval_A(model, s)
        needed = np.maximum(
            rho ** (alpha + eps) / ratio, ratio / rho ** (alpha - eps)
        )
        worst = int(np.argmax(needed))
        if needed[worst] > best[0]:
            best = (float(needed[worst]), rho, float(s[worst]))
    return PotterReport(eps, *best)


def cond_half_statistic(model, x_grid, points_per_octave=64):
    """sup_{1<=s<=x} A(s)/√s, делённый на A(x)/√x, на сетке x."""
    x_grid = np.asarray(x_grid, dtype=float)
    octaves = max(1.0, math.log2(float(x_grid.max())))
    s = np.unique(np.concatenate((
        2.0 ** np.linspace(0.0, octaves, int(octaves * points_per_octave) + 1),
        x_grid,
    )))
    ratio = eval_A(model, s) / np.sqrt(s)
    running = np.maximum.accumulate(ratio)
    idx = np.searchsorted(s, x_grid, side='right') - 1
    return running[idx] / (eval_A(model, x_grid) / np.sqrt(x_grid))


def oscillating_model(alpha, amplitude, omega, x_max,
                      points_per_octave=16):
    """Экспериментальная модель с осциллирующим медленным множителем.

    log A(x) = α log x + g(log x), g(t) = a t^{1/4} sin(ω(√t - 1)) при t >= 1.
    Амплитуда растёт, поэтому условие «sup A(s)/√s = O(A(x)/√x)» нарушается.
    """
    octaves = math.log2(x_max)
    x = 2.0 ** np.linspace(
        0.0, octaves, int(octaves * points_per_octave) + 1
    )
    t = np.log(x)
    g = np.where(
        t >= 1.0,
        amplitude * t ** 0.25 * np.sin(omega * (np.sqrt(t) - 1.0)),
        0.0,
    )
    values = np.exp(alpha * t + g)
    if np.any(np.diff(values) <= 0):
        raise DomainError(
            'oscillating_model: амплитуда слишком велика, A не возрастает'
        )
    logger.warning(
        'oscillating_model: экспериментальная модель (сплайн по таблице)'
    )
    table = tuple(zip(x.tolist(), values.tolist()))
    return TailModel(alpha, Family.SPLINE, table=table)


def model_to_config(model):
    config = {'alpha': model.alpha, 'family': model.family.value}
    if model.family is Family.LOG_POWER:
        config['beta'] = model.beta
    if model.family is Family.SPLINE:
        config['table'] = [list(row) for row in model.table]
    return config


def model_from_config(config):
    table = tuple(tuple(row) for row in config.get('table') or ())
    return TailModel(
        alpha=float(config['alpha']),
        family=Family(config.get('family', Family.CONSTANT.value)),
        beta=float(config.get('beta') or 0.0),
        table=table,
    )
