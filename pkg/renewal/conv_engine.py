"""Точные свёртки на решётке: маргиналы блуждания, мера восстановления, T_ℓ."""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import fft, integrate
from scipy.special import zeta as hurwitz_zeta

from .conf import tolerance
from .exceptions import (
    DomainError, InvariantViolation, SpanMismatchError, UnsupportedModeError,
)
from .rv_kernel import eval_A, inverse_A

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MassVector:
    """values[i] = масса в узле offset + i; leakage ушла из окна."""

    offset: int
    values: np.ndarray
    leakage: float = 0.0
    clip_ledger: float = 0.0
    span: float = 1.0

    @property
    def lo(self):
        return self.offset

    @property
    def hi(self):
        return self.offset + self.values.size - 1

    @property
    def total(self):
        return float(self.values.sum()) + self.leakage

    def at(self, points):
        """Массы в узлах points (вне окна ноль)."""
        points = np.asarray(points, dtype=np.int64)
        idx = points - self.offset
        inside = (idx >= 0) & (idx < self.values.size)
        out = np.zeros(points.shape)
        out[inside] = self.values[idx[inside]]
        return out

    def tail_from(self, x):
        """Масса узлов >= x внутри окна."""
        start = max(0, int(x) - self.offset)
        return float(self.values[start:].sum())

    def restrict(self, window):
        lo, hi = window
        a = max(lo, self.lo)
        b = min(hi, self.hi)
        if b < a:
            return MassVector(
                lo, np.zeros(1), self.total, self.clip_ledger, self.span
            )
        values = self.values[a - self.offset:b - self.offset + 1]
        dropped = float(self.values.sum() - values.sum())
        return MassVector(
            a, values.copy(), self.leakage + max(dropped, 0.0),
            self.clip_ledger, self.span,
        )


def delta_vector(point=0, span=1.0):
    return MassVector(point, np.ones(1), span=span)


def kernel_from_dist(dist, window=None, cap=None):
    """Ядро шага на окне; при cap берётся f·1{x <= cap} без перенормировки.

    Дальние атомы в окно не попадают и сразу учитываются как утечка.
    """
    points = dist.points
    eligible = np.ones(points.size, dtype=bool)
    if cap is not None:
        eligible = points <= cap
    core = dist.core_masses
    far_mass = float(np.sum(dist.masses[eligible]) - np.sum(core[eligible]))
    if window is None:
        window = (dist.x_min, dist.x_max)
    lo, hi = window
    inside = eligible & (points >= lo) & (points <= hi)
    values = np.where(inside, core, 0.0)
    lost = float(np.sum(core[eligible]) - values.sum())
    a, b = max(lo, dist.x_min), min(hi, dist.x_max)
    if b < a:
        return MassVector(lo, np.zeros(1), far_mass + lost, span=dist.span)
    return MassVector(
        a,
        values[a - dist.x_min:b - dist.x_min + 1].copy(),
        leakage=far_mass + max(lost, 0.0),
        span=dist.span,
    )


def _direct(a, b):
    return np.convolve(a, b)


def _fft(a, b):
    size = a.size + b.size - 1
    n = fft.next_fast_len(size, real=True)
    spectrum = fft.rfft(a, n) * fft.rfft(b, n)
    return fft.irfft(spectrum, n)[:size]


def convolve(p, q, window=None, method='auto', overrides=None):
    """p ∗ q, обрезанное до окна; утечка и журнал клиппинга обновляются."""
    if p.span != q.span:
        raise SpanMismatchError(f'шаги решёток {p.span} и {q.span}')
    crossover = tolerance('fft_crossover', overrides)
    if method == 'auto':
        method = (
            'direct' if min(p.values.size, q.values.size) <= crossover
            else 'fft'
        )
    if method == 'direct':
        raw = _direct(p.values, q.values)
        clipped = 0.0
    elif method == 'fft':
        raw = _fft(p.values, q.values)
        negative = raw < 0
        clipped = float(-raw[negative].sum())
        raw[negative] = 0.0
    else:
        raise UnsupportedModeError(f'неизвестный метод свёртки: {method}')
    if clipped > tolerance('clip_step', overrides):
        logger.warning('клиппинг за шаг %.3e превышает допуск', clipped)
    ledger = p.clip_ledger + q.clip_ledger + clipped
    if ledger > tolerance('clip_abort', overrides):
        raise InvariantViolation(f'журнал клиппинга {ledger:.3e} > допуска')
    result = MassVector(p.offset + q.offset, raw, 0.0, ledger, p.span)
    if window is not None:
        result = result.restrict(window)
    expected = p.total * q.total
    leakage = expected - float(result.values.sum())
    if leakage < -tolerance('conservation', overrides):
        raise InvariantViolation(
            f'свёртка создала массу {-leakage:.3e} сверх исходной'
        )
    return MassVector(
        result.offset, result.values, max(leakage, 0.0), ledger, p.span
    )


def default_window(dist, n=1, overrides=None):
    """[0, X] для положительных блужданий, [-fX, fX] для двусторонних."""
    lo, hi = dist.core_window
    if dist.is_positive:
        return (0, n * hi)
    factor = tolerance('two_sided_window_factor', overrides)
    reach = max(abs(lo), abs(hi))
    width = min(n * reach, factor * reach)
    return (-width, width)


def walk_window(dist, x, overrides=None):
    if dist.is_positive:
        return (0, int(x))
    factor = tolerance('two_sided_window_factor', overrides)
    return (-factor * int(x), factor * int(x))


@dataclass(eq=False)
class WalkEngine:
    """Кэш диадических степеней ядра и последовательные маргиналы."""

    dist: object
    window: tuple
    cap: float = None
    overrides: dict = None
    _powers: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        self.kernel = kernel_from_dist(self.dist, self.window, self.cap)
        self._powers[1] = self.kernel

    def _conv(self, p, q):
        return convolve(p, q, self.window, overrides=self.overrides)

    def power(self, exponent):
        """Ядро в степени 2^j из кэша."""
        if exponent not in self._powers:
            half = self.power(exponent // 2)
            self._powers[exponent] = self._conv(half, half)
        return self._powers[exponent]

    def marginal(self, n):
        """P(S_n = ·) бинарным возведением в степень."""
        if n < 1:
            raise DomainError('n должно быть >= 1')
        result = None
        bit = 1
        while bit <= n:
            if n & bit:
                piece = self.power(bit)
                result = piece if result is None else self._conv(
                    result, piece
                )
            bit <<= 1
        return result

    def sequential(self, n_max):
        """Итератор (n, P(S_n = ·)) с p_{n+1} = p_n ∗ f."""
        current = self.kernel
        for n in range(1, n_max + 1):
            if n > 1:
                current = self._conv(current, self.kernel)
            logger.debug(
                'шаг %d: утечка %.3e, клиппинг %.3e',
                n, current.leakage, current.clip_ledger,
            )
            yield n, current


def walk_marginal(dist, n, constraint_max=None, window=None, overrides=None):
    """P(S_n = ·) или P(S_n = ·, M_n <= m) при constraint_max = m."""
    if window is None:
        window = default_window(dist, n, overrides)
    engine = WalkEngine(dist, window, constraint_max, overrides)
    return engine.marginal(n)


def hit_table(dist, points, n_max, window=None, cap=None, overrides=None):
    """Таблица P(S_n = x) для n = 1..n_max и всех x из points."""
    points = np.asarray(points, dtype=np.int64)
    if window is None:
        reach = int(np.max(np.abs(points)))
        window = walk_window(dist, reach, overrides)
    engine = WalkEngine(dist, window, cap, overrides)
    table = np.zeros((n_max, points.size))
    for n, marginal in engine.sequential(n_max):
        table[n - 1] = marginal.at(points)
    return table


@dataclass(frozen=True, eq=False)
class RenewalTable:
    u: np.ndarray
    residual: float
    method: str
    span: float = 1.0

    @property
    def X(self):
        return self.u.size - 1

    def interval(self, x):
        """U((x - h, x]) = u(x)."""
        return self.u[np.asarray(x, dtype=np.int64)]

    def cumulative(self, x):
        """U([0, x])."""
        return np.cumsum(self.u)[np.asarray(x, dtype=np.int64)]


@njit(cache=True)
def _renewal_direct(f, support, X):
    u = np.zeros(X + 1)
    u[0] = 1.0
    for x in range(1, X + 1):
        acc = 0.0
        for y in support:
            if y > x:
                break
            acc += f[y] * u[x - y]
        u[x] = acc
    return u


def _series_mult(a, b, length):
    if min(a.size, b.size) <= 64:
        return np.convolve(a, b)[:length]
    return _fft(a, b)[:length]


def _renewal_newton(f, X):
    h = -f.copy()
    h[0] = 1.0
    g = np.ones(1)
    length = 1
    while length < X + 1:
        length = min(2 * length, X + 1)
        hg = _series_mult(h[:length], g, length)
        correction = _series_mult(g, hg, length)
        padded = np.zeros(length)
        padded[:g.size] = g
        g = 2.0 * padded - correction
    return g


def renewal_mass(dist, X, method='newton', overrides=None):
    """Решение u = δ₀ + f∗u на [0, X]."""
    if not dist.is_positive:
        if dist.mass_at(0) > 0 and dist.x_min >= 0:
            raise DomainError('f(0) != 0: мера восстановления не определена')
        raise UnsupportedModeError(
            'двустороннее распределение: используйте srt_ratio'
        )
    X = int(X)
    f = np.zeros(X + 1)
    kernel = kernel_from_dist(dist, (0, X))
    f[kernel.lo:kernel.hi + 1] = kernel.values
    if method == 'direct':
        support = np.flatnonzero(f).astype(np.int64)
        u = _renewal_direct(f, support, X)
    elif method == 'newton':
        u = _renewal_newton(f, X)
    else:
        raise UnsupportedModeError(f'неизвестный метод: {method}')
    np.maximum(u, 0.0, out=u)
    rhs = _fft(f, u)[:X + 1] if X > 64 else np.convolve(f, u)[:X + 1]
    rhs[0] += 1.0
    residual = float(np.max(np.abs(u - rhs)))
    if residual > tolerance('renewal_residual', overrides):
        raise InvariantViolation(f'невязка уравнения {residual:.3e}')
    logger.info('renewal_mass[%s]: X=%d, невязка %.2e', method, X, residual)
    return RenewalTable(u, residual, method, dist.span)


def _check_delta(delta):
    if not 0 < delta <= 1:
        raise DomainError(f'delta={delta} вне (0, 1]')


def T_profile_row(dist, ell, deltas, x, hits):
    """T_ℓ(δ; x) для всех δ по столбцу hits[n-1] = P(S_n = x)."""
    n = np.arange(1, hits.size + 1, dtype=float)
    weighted = np.cumsum(n ** ell * hits)
    out = []
    for delta in deltas:
        _check_delta(delta)
        top = int(math.floor(eval_A(dist.model, delta * x)))
        if top > hits.size:
            raise DomainError(f'таблица попаданий короче N={top}')
        out.append(float(weighted[top - 1]) if top >= 1 else 0.0)
    return np.array(out)


def partial_sum_T(dist, ell, delta, x, overrides=None):
    """T_ℓ(δ; x) = Σ_{1 <= n <= A(δx)} n^ℓ P(S_n ∈ x + I)."""
    _check_delta(delta)
    if x <= 0:
        raise DomainError('partial_sum_T: нужно x > 0')
    top = int(math.floor(eval_A(dist.model, delta * x)))
    if top < 1:
        return 0.0
    hits = hit_table(dist, [x], top, overrides=overrides)[:, 0]
    return float(T_profile_row(dist, ell, [delta], x, hits)[0])


def _norming_tail(model, N):
    """Σ_{n > N} 1/a_n."""
    if model.is_pure_power:
        return float(hurwitz_zeta(1.0 / model.alpha, N + 1.0))
    value, _ = integrate.quad(
        lambda u: 1.0 / inverse_A(model, u), N + 0.5, np.inf, limit=200
    )
    return value


@dataclass
class SrtResult:
    x: np.ndarray
    u: np.ndarray
    ratio: np.ndarray
    truncation_error: np.ndarray
    flagged: bool
    n_used: int = 0
    c2_hat: float = None


def srt_ratio(dist, x, C, table=None, overrides=None):
    """U((x-h, x])·x/(h·C·A(x)) для массива диадических x."""
    xs = np.atleast_1d(np.asarray(x, dtype=np.int64))
    h = dist.span
    scale = xs * h / (h * C * eval_A(dist.model, xs * h))
    if dist.is_positive:
        if table is None:
            table = renewal_mass(dist, int(xs.max()), overrides=overrides)
        u = table.interval(xs)
        zeros = np.zeros(xs.size)
        return SrtResult(xs, u, u * scale, zeros, False)
    return _srt_two_sided(dist, xs, scale, overrides)


def _srt_two_sided(dist, xs, scale, overrides):
    model = dist.model
    tol = tolerance('srt_truncation_tol', overrides)
    n_cap = tolerance('srt_n_cap', overrides)
    engine = WalkEngine(dist, walk_window(dist, xs.max(), overrides),
                        overrides=overrides)
    u = np.zeros(xs.size)
    c2_hat = 0.0
    error = np.full(xs.size, np.inf)
    n_used = 0
    for n, marginal in engine.sequential(n_cap):
        u += marginal.at(xs)
        a_n = float(inverse_A(model, n))
        c2_hat = max(c2_hat, a_n * float(marginal.values.max()))
        error = np.full(xs.size, c2_hat * _norming_tail(model, n))
        n_used = n
        if np.all(error <= tol * u):
            break
    limit = tolerance('srt_truncation_flag', overrides)
    flagged = bool(np.any(error > limit * u))
    if flagged:
        logger.warning(
            'srt_ratio: оценка хвоста ряда превышает допуск (n=%d)', n_used
        )
    return SrtResult(xs, u, u * scale, error * scale, flagged, n_used, c2_hat)


@dataclass
class BasicBoundFit:
    c: float
    C: float
    max_violation: float
    n_grid: np.ndarray
    z_grid: np.ndarray
    holdout_violation: float = 0.0


def _geometric_midpoints(grid):
    grid = np.unique(grid)
    if grid.size < 2:
        return grid
    mids = np.rint(np.sqrt(grid[:-1] * grid[1:].astype(float)))
    return np.setdiff1d(mids.astype(np.int64), grid)


def basic_bound_fit(dist, n_grid, z_grid, overrides=None):
    """c = ½ inf A(z)F̄(z), наименьшее C в P(S_n = z) <= C/a_n·e^{-cn/A(z)}.

    max_violation считается на сетке подбора и равен нулю. Отдельно
    оценка проверяется в геометрических серединах сеток n и z:
    holdout_violation есть log превышения там (0, если не превышена).
    """
    if not dist.is_positive:
        raise DomainError('basic_bound_fit: нужен положительный шаг')
    model = dist.model
    n_grid = np.asarray(n_grid, dtype=np.int64)
    z_grid = np.asarray(z_grid, dtype=np.int64)
    z_all = np.arange(0, dist.x_max, dtype=float)
    c = 0.5 * float(np.min(eval_A(model, z_all) * dist.tails_above(z_all)))
    if c <= 0:
        raise DomainError('basic_bound_fit: хвост не доминирует (c <= 0)')
    n_held = _geometric_midpoints(n_grid)
    z_held = _geometric_midpoints(z_grid)
    z_points = np.concatenate([z_grid, z_held])
    table = hit_table(
        dist, z_points, int(n_grid.max()), window=(0, int(z_grid.max())),
        overrides=overrides,
    )

    def needed(n, z, hits):
        a_n = inverse_A(model, n.astype(float))[:, None]
        exponent = c * n[:, None] / eval_A(model, z.astype(float))
        with np.errstate(divide='ignore'):
            log_needed = np.log(hits) + np.log(a_n) + exponent
        return np.where(hits > 0, log_needed, -np.inf)

    log_needed = needed(n_grid, z_grid, table[n_grid - 1][:, :z_grid.size])
    log_C = float(np.max(log_needed))
    violation = max(0.0, float(np.max(log_needed - log_C)))
    holdout = 0.0
    if n_held.size and z_held.size:
        held = needed(n_held, z_held, table[n_held - 1][:, z_grid.size:])
        holdout = max(0.0, float(np.max(held)) - log_C)
    logger.info(
        'basic_bound_fit: c=%.4g, C=%.4g, вне сетки %.3g',
        c, math.exp(log_C), holdout,
    )
    return BasicBoundFit(
        c, math.exp(log_C), violation, n_grid, z_grid, holdout,
    )


def llt_sup_constant(dist, n_max, window=None, overrides=None):
    """max_n a_n·sup_z P(S_n = z)."""
    if window is None:
        window = default_window(dist, n_max, overrides)
    engine = WalkEngine(dist, window, overrides=overrides)
    best = 0.0
    for n, marginal in engine.sequential(n_max):
        a_n = float(inverse_A(dist.model, n))
        best = max(best, a_n * float(marginal.values.max()))
    return best


def renewal_interval_mass(table, x):
    """U([0, x])."""
    return table.cumulative(x)


def integrated_renewal_ratio(table, dist, x, C):
    """U([0, x]) / ((C/α)·A(x))."""
    model = dist.model
    x = np.asarray(x)
    return table.cumulative(x) / (C / model.alpha * eval_A(model, x))
