"""Функционалы условия SRT: I₁⁺, Ĩ₁⁺, I_k, Ĩ_k, Ĩ₁* и профили a.n.

Все суммы считаются точно на решётке по массам без дальних атомов.
Цепочки k >= 2 вычисляются обратной индукцией по марковской структуре:
W_{j-1}(y) = Σ_{|u| <= η|y|} F({u - y}) W_j(u).
"""
import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from numba import njit

from .conf import lab_setting, tolerance
from .conv_engine import T_profile_row, hit_table, walk_window
from .dist_factory import reflect
from .exceptions import DomainError, UnsupportedModeError
from .rv_kernel import (
    cond_half_statistic, cumulative_btilde, eval_A, kappa_alpha, rate_b,
    segment_integrals,
)

logger = logging.getLogger(__name__)

MAX_EXACT_DEPTH = 4
MODES = ('exact', 'monte_carlo', 'auto')
CHAIN_SELECTOR = re.compile(r'^(?P<tilde>tilde_)?I(?P<k>[1-9]\d*)$')
T_SELECTOR = re.compile(r'^T(?P<ell>\d*)$')

LOOKS_AN = 'looks_an'
LOOKS_NOT_AN = 'looks_not_an'
INCONCLUSIVE = 'inconclusive'


@dataclass(frozen=True)
class ChainSpec:
    k: int = 1
    eta: float = 0.5
    delta: float = 0.1
    mode: str = 'exact'
    samples: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise DomainError('глубина цепочки k должна быть >= 1')
        if not 0 < self.eta < 1:
            raise DomainError(f'eta={self.eta} вне (0, 1)')
        if not 0 < self.delta <= 1:
            raise DomainError(f'delta={self.delta} вне (0, 1]')
        if self.mode not in MODES:
            raise UnsupportedModeError(f'неизвестный режим: {self.mode}')
        if self.mode == 'exact' and self.k > MAX_EXACT_DEPTH:
            raise UnsupportedModeError(
                f'точный перебор поддерживает k <= {MAX_EXACT_DEPTH}'
            )
        if self.mode == 'monte_carlo' and self.samples <= 0:
            raise DomainError('для monte_carlo нужен samples > 0')


@dataclass
class ChainResult:
    value: float
    stderr: float = 0.0
    mode: str = 'exact'
    nodes: int = 0
    flag: str = ''
    trace: list = field(default_factory=list)


def _core_at(dist, points):
    idx = np.asarray(points, dtype=np.int64) - dist.offset
    inside = (idx >= 0) & (idx < dist.masses.size)
    out = np.zeros(idx.shape)
    out[inside] = dist.core_masses[idx[inside]]
    return out


def _btilde_tails(model, k, top):
    """tails[j] = ∫_j^{top} b_k(t)/(t∨1) dt для j = 0..⌊top⌋."""
    m = int(math.floor(top))
    edges = np.arange(m + 1, dtype=float)
    pieces = segment_integrals(
        model, k, edges, np.minimum(edges + 1.0, top)
    )
    return np.cumsum(pieces[::-1])[::-1]


def _first_level(dist, x, lo, hi):
    y = np.arange(lo, hi + 1, dtype=np.int64)
    weights = _core_at(dist, x + y)
    keep = weights > 0
    return y[keep], weights[keep]


def I1_plus(dist, delta, x):
    """Σ_{z ∈ [1, δx]} F({x - z}) b₂(z)."""
    top = int(math.floor(delta * x))
    if top < 1:
        return 0.0
    y, weights = _first_level(dist, x, -top, -1)
    return float(np.sum(weights * rate_b(dist.model, 2, y)))


def tilde_I1_plus(dist, delta, x, form='density_form'):
    """∫_1^{δx} F((x - z, x])/z · b₂(z) dz двумя способами."""
    top_real = delta * x
    top = int(math.floor(top_real))
    if top < 1:
        return 0.0
    j = np.arange(0, top + 1)
    local = _core_at(dist, x - j)
    edges = np.arange(1, top + 1, dtype=float)
    pieces = segment_integrals(
        dist.model, 2, edges, np.minimum(edges + 1.0, top_real)
    )
    if form == 'density_form':
        # G(m) = F((x - z, x]) при z ∈ (m, m + 1).
        G = np.cumsum(local)[1:]
        return float(np.sum(G * pieces))
    if form == 'fubini_form':
        tails = np.cumsum(pieces[::-1])[::-1]
        weights = np.concatenate(([tails[0]], tails))
        return float(np.sum(local * weights))
    raise UnsupportedModeError(f'неизвестная форма: {form}')


@njit(cache=True, nogil=True)
def _level_pass(ys, f, f_lo, eta, weights, w_lo, phi, phi_ys, tilde):
    f_hi = f_lo + f.size - 1
    out = np.zeros(ys.size)
    nodes = 0
    for i in range(ys.size):
        y = ys[i]
        bound = int(np.floor(eta * abs(y)))
        lo = max(-bound, y + f_lo)
        hi = min(bound, y + f_hi)
        acc = 0.0
        for u in range(lo, hi + 1):
            mass = f[u - y - f_lo]
            if mass == 0.0:
                continue
            nodes += 1
            if tilde:
                acc += mass * (phi_ys[i] - phi[abs(u)])
            else:
                acc += mass * weights[u - w_lo]
        out[i] = acc
    return out, nodes


def _radii(spec, x):
    radii = [int(math.floor(spec.delta * x))]
    for _ in range(1, spec.k):
        radii.append(int(math.floor(spec.eta * radii[-1])))
    return radii


def _window_count(ys, eta):
    return int(np.sum(2 * np.floor(eta * np.abs(ys)) + 1))


def predicted_nodes(dist, spec, x):
    """Верхняя оценка числа слагаемых во внутренних суммах."""
    radii = _radii(spec, x)
    y1, _ = _first_level(dist, x, -radii[0], radii[0])
    if spec.k == 1:
        return int(y1.size)
    total = _window_count(y1, spec.eta)
    for radius in radii[1:spec.k - 1]:
        total += _window_count(np.arange(-radius, radius + 1), spec.eta)
    return total


def _exact_chain(dist, spec, x, tilde):
    model = dist.model
    radii = _radii(spec, x)
    y1, w1 = _first_level(dist, x, -radii[0], radii[0])
    trace = [('level', 1, -radii[0], radii[0], int(y1.size))]
    if y1.size == 0:
        return ChainResult(0.0, trace=trace)
    if spec.k == 1:
        if tilde:
            tails = _btilde_tails(model, 2, spec.delta * x)
            terminal = tails[np.abs(y1)]
        else:
            terminal = rate_b(model, 2, y1)
        return ChainResult(
            float(np.sum(w1 * terminal)), nodes=int(y1.size), trace=trace
        )

    f = np.ascontiguousarray(dist.core_masses)
    f_lo = int(dist.offset)
    dummy = np.zeros(1)

    def level_points(level):
        if level == 1:
            return y1
        radius = radii[level - 1]
        return np.arange(-radius, radius + 1, dtype=np.int64)

    nodes = 0
    k = spec.k
    if tilde:
        ys = level_points(k - 1)
        phi = cumulative_btilde(model, k + 1, radii[k - 2])
        weights, visited = _level_pass(
            ys, f, f_lo, spec.eta, dummy, 0, phi, phi[np.abs(ys)], True
        )
        level = k - 1
    else:
        ys = level_points(k)
        weights = rate_b(model, k + 1, ys)
        visited = 0
        level = k
    nodes += visited
    w_lo = -radii[level - 1]
    while level > 1:
        ys = level_points(level - 1)
        weights, visited = _level_pass(
            ys, f, f_lo, spec.eta, weights, w_lo,
            dummy, np.zeros(ys.size), False,
        )
        nodes += visited
        trace.append(('level', level, -radii[level - 1], radii[level - 1],
                      int(visited)))
        level -= 1
        w_lo = -radii[level - 1]
    return ChainResult(float(np.sum(w1 * weights)), nodes=nodes, trace=trace)


class RestrictedSampler:
    """Выборка шага из F, ограниченного на отрезок [a, b].

    Для отрезков в верхней половине масс используются обратные
    кумулятивные суммы, чтобы не терять точность в хвосте.
    """

    def __init__(self, dist):
        masses = dist.core_masses
        self.offset = dist.offset
        self.size = masses.size
        self.forward = np.concatenate(([0.0], np.cumsum(masses)))
        self.backward = np.concatenate(
            (np.cumsum(masses[::-1])[::-1], [0.0])
        )
        self.split = int(np.searchsorted(self.forward, 0.5 * self.forward[-1]))

    def _bounds(self, a, b):
        ia = np.clip(np.asarray(a, dtype=np.int64) - self.offset, 0, self.size)
        ib = np.clip(
            np.asarray(b, dtype=np.int64) - self.offset + 1, 0, self.size
        )
        return ia, np.maximum(ib, ia)

    def mass(self, a, b):
        ia, ib = self._bounds(a, b)
        forward = self.forward[ib] - self.forward[ia]
        backward = self.backward[ia] - self.backward[ib]
        return np.where(ia >= self.split, backward, forward)

    def sample(self, a, b, uniforms):
        ia, ib = self._bounds(a, b)
        upper = ia >= self.split
        target_f = self.forward[ia] + uniforms * (
            self.forward[ib] - self.forward[ia]
        )
        idx_f = np.searchsorted(self.forward, target_f, side='left') - 1
        target_b = self.backward[ib] + uniforms * (
            self.backward[ia] - self.backward[ib]
        )
        rev = self.backward[::-1]
        idx_b = self.size - np.searchsorted(rev, target_b, side='left')
        idx = np.where(upper, idx_b, idx_f)
        idx = np.clip(idx, ia, np.maximum(ib - 1, ia))
        return self.offset + idx


def _mc_chain(dist, spec, x, tilde, samples, rng):
    model = dist.model
    sampler = RestrictedSampler(dist)
    top = int(math.floor(spec.delta * x))
    first_mass = float(sampler.mass(x - top, x + top))
    if first_mass <= 0:
        return ChainResult(
            0.0, mode='monte_carlo', flag='no_admissible_first_step'
        )
    uniforms = 1.0 - rng.random(samples)
    y = sampler.sample(
        np.full(samples, x - top), np.full(samples, x + top), uniforms
    ) - x
    weight = np.full(samples, first_mass)
    previous = y
    for _ in range(1, spec.k):
        bound = np.floor(spec.eta * np.abs(y)).astype(np.int64)
        lo, hi = -bound - y, bound - y
        mass = sampler.mass(lo, hi)
        alive = mass > 0
        step = sampler.sample(lo, hi, 1.0 - rng.random(samples))
        previous = y
        y = np.where(alive, y + step, 0)
        weight = weight * mass
    if not tilde:
        terminal = rate_b(model, spec.k + 1, y)
    elif spec.k == 1:
        terminal = _btilde_tails(model, 2, spec.delta * x)[np.abs(y)]
    else:
        phi = cumulative_btilde(model, spec.k + 1, top)
        terminal = phi[np.abs(previous)] - phi[np.abs(y)]
    estimates = weight * terminal
    stderr = float(estimates.std(ddof=1) / math.sqrt(samples))
    return ChainResult(
        float(estimates.mean()), stderr, 'monte_carlo', samples
    )


def _chain(dist, spec, x, tilde, seed, cell, y1_range=None,
           overrides=None):
    if x <= 0:
        raise DomainError('функционал определён при x > 0')
    if y1_range is not None:
        return _restricted_first_level(dist, spec, x, tilde, y1_range)
    budget = tolerance('chain_node_budget', overrides)
    mode = spec.mode
    if mode in ('exact', 'auto'):
        predicted = predicted_nodes(dist, spec, x)
        if predicted <= budget and spec.k <= MAX_EXACT_DEPTH:
            result = _exact_chain(dist, spec, x, tilde)
            result.trace.append(('predicted', predicted))
            return result
        logger.warning(
            'цепочка k=%d при x=%d: %d узлов > бюджета, Монте-Карло',
            spec.k, x, predicted,
        )
    samples = spec.samples or tolerance('mc_samples', overrides)
    rng = np.random.default_rng([seed, cell])
    result = _mc_chain(dist, spec, x, tilde, samples, rng)
    if mode != 'monte_carlo':
        result.flag = result.flag or 'mc_fallback'
    return result


def _restricted_first_level(dist, spec, x, tilde, y1_range):
    if spec.k != 1:
        raise UnsupportedModeError('y1_range поддерживается только при k=1')
    top = int(math.floor(spec.delta * x))
    lo, hi = max(-top, y1_range[0]), min(top, y1_range[1])
    if hi < lo:
        return ChainResult(0.0)
    y, weights = _first_level(dist, x, lo, hi)
    if tilde:
        terminal = _btilde_tails(dist.model, 2, spec.delta * x)[np.abs(y)]
    else:
        terminal = rate_b(dist.model, 2, y)
    return ChainResult(float(np.sum(weights * terminal)), nodes=int(y.size))


def I_chain(dist, spec, x, seed=0, cell=0, y1_range=None, overrides=None):
    """I_k(δ, η; x) с терминальным весом b_{k+1}(y_k)."""
    return _chain(dist, spec, x, False, seed, cell, y1_range, overrides)


def tilde_I_chain(dist, spec, x, seed=0, cell=0, form='tilde_I1',
                  overrides=None):
    """Ĩ_k(δ, η; x) с весами b̃₂(δx, y) и b̃_{k+1}(y_{k-1}, y_k).

    При k = 1 доступна форма tilde_I10: ∫_0^{δx} F((x-t, x+t])/(t∨1) b₂(t) dt.
    """
    if form == 'tilde_I10':
        if spec.k != 1:
            raise UnsupportedModeError('форма tilde_I10 определена при k=1')
        return ChainResult(tilde_I1_symmetric(dist, spec.delta, x))
    if form != 'tilde_I1':
        raise UnsupportedModeError(f'неизвестная форма: {form}')
    return _chain(dist, spec, x, True, seed, cell, overrides=overrides)


def tilde_I1_symmetric(dist, delta, x):
    """Ĩ₁ через F((x - t, x + t]) = Σ_{|y| <= m} F({x + y}) на (m, m+1)."""
    top_real = delta * x
    top = int(math.floor(top_real))
    edges = np.arange(0, top + 1, dtype=float)
    pieces = segment_integrals(
        dist.model, 2, edges, np.minimum(edges + 1.0, top_real)
    )
    centre = _core_at(dist, [x])[0]
    right = _core_at(dist, x + np.arange(1, top + 1))
    left = _core_at(dist, x - np.arange(1, top + 1))
    G = centre + np.concatenate(([0.0], np.cumsum(right + left)))
    return float(np.sum(G * pieces))


def tilde_I1_star(dist, delta, x, seed=0, cell=0, overrides=None):
    """Ĩ₁*(δ; x): Ĩ₁ для отражённого распределения F*(B) = F(-B)."""
    spec = ChainSpec(k=1, delta=delta)
    return tilde_I_chain(
        reflect(dist), spec, x, seed, cell, overrides=overrides
    )


def headline_functional(alpha):
    """Какой функционал решает вопрос о SRT при данном α."""
    kappa = kappa_alpha(alpha)
    if kappa == 0:
        return None
    return f'tilde_I{kappa}'


def eta_threshold(alpha):
    """η > 1 - α/(1-α): a.n. при одном η влечёт a.n. при всех η."""
    return 1.0 - alpha / (1.0 - alpha)


def evaluate(dist, selector, delta, x, eta=None, mode='auto',
             samples=0, seed=0, cell=0, overrides=None):
    """Значение функционала по строковому селектору."""
    eta = lab_setting('ETA') if eta is None else eta
    if selector == 'I1_plus':
        return ChainResult(I1_plus(dist, delta, x))
    if selector == 'tilde_I1_plus':
        return ChainResult(tilde_I1_plus(dist, delta, x))
    if selector == 'tilde_I1_star':
        return tilde_I1_star(dist, delta, x, seed, cell, overrides)
    match = CHAIN_SELECTOR.match(selector)
    if match is None:
        raise UnsupportedModeError(f'неизвестный функционал: {selector}')
    k = int(match['k'])
    if k > MAX_EXACT_DEPTH and mode == 'exact':
        raise UnsupportedModeError('точный режим требует k <= 4')
    spec = ChainSpec(k=k, eta=eta, delta=delta, mode=mode, samples=samples)
    if match['tilde']:
        return tilde_I_chain(dist, spec, x, seed, cell, overrides=overrides)
    return I_chain(dist, spec, x, seed, cell, overrides=overrides)


@dataclass
class ANProfile:
    functional: str
    delta_grid: np.ndarray
    x_grid: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    an_score: np.ndarray
    verdict: str
    flags: list = field(default_factory=list)

    def to_frame(self):
        """Матрица R(δ, x) в длинном формате."""
        rows = []
        for i, delta in enumerate(self.delta_grid):
            for j, x in enumerate(self.x_grid):
                rows.append({
                    'functional': self.functional,
                    'delta': delta,
                    'x': int(x),
                    'R': self.values[i, j],
                    'stderr': self.stderr[i, j],
                })
        return pd.DataFrame(rows)

    def verdict_block(self):
        return {
            'functional': self.functional,
            'verdict': self.verdict,
            'an_score': dict(zip(
                map(float, self.delta_grid), map(float, self.an_score)
            )),
            'flags': self.flags,
            'heuristic': True,
        }


def default_x_grid(dist, octaves=8):
    top = int(math.floor(math.log2(max(2, dist.core_window[1]))))
    return 2 ** np.arange(max(3, top - octaves + 1), top + 1)


def an_scores(values):
    """Максимум R по верхней четверти сетки x для каждого δ."""
    quarter = max(1, math.ceil(values.shape[1] / 4))
    return values[:, -quarter:].max(axis=1)


def an_verdict(values, overrides=None):
    """Правило вердикта по матрице R (строки: δ по убыванию)."""
    threshold = tolerance('an_threshold', overrides)
    ceiling = tolerance('an_ceiling', overrides)
    scores = an_scores(values)
    if not np.any(values):
        return LOOKS_AN
    # Убывание по δ задаётся только концами сетки.
    if scores[-1] < threshold * scores[0] and scores[-1] < ceiling:
        return LOOKS_AN
    last = values[-1, -4:]
    if last.size == 4 and np.all(np.diff(last) > 0):
        return LOOKS_NOT_AN
    return INCONCLUSIVE


def _T_values(dist, ell, deltas, xs, overrides):
    n_max = int(math.floor(eval_A(dist.model, deltas.max() * xs.max())))
    if n_max < 1:
        return np.zeros((deltas.size, xs.size))
    hits = hit_table(
        dist, xs, n_max, window=walk_window(dist, xs.max(), overrides),
        overrides=overrides,
    )
    out = np.zeros((deltas.size, xs.size))
    for j, x in enumerate(xs):
        out[:, j] = T_profile_row(dist, ell, deltas, x, hits[:, j])
    return out


def an_profile(dist, selector, delta_grid=None, x_grid=None, eta=None,
               mode='auto', samples=0, seed=0, threads=None, overrides=None):
    """Матрица R(δ, x) = J(δ; x)/b₁(x), оценки a.n. и вердикт."""
    deltas = np.sort(np.asarray(
        lab_setting('DELTA_GRID') if delta_grid is None else delta_grid,
        dtype=float,
    ))[::-1]
    xs = np.asarray(
        default_x_grid(dist) if x_grid is None else x_grid, dtype=np.int64
    )
    if deltas.size == 0 or xs.size == 0:
        raise DomainError('сетки delta и x должны быть непусты')
    b1 = eval_A(dist.model, xs.astype(float)) / xs
    stderr = np.zeros((deltas.size, xs.size))
    flags = []
    t_match = T_SELECTOR.match(selector)
    if t_match:
        ell = int(t_match['ell'] or 0)
        raw = _T_values(dist, ell, deltas, xs, overrides)
    else:
        cells = [
            (i, j, float(delta), int(x))
            for i, delta in enumerate(deltas) for j, x in enumerate(xs)
        ]

        def run(cell):
            i, j, delta, x = cell
            return cell, evaluate(
                dist, selector, delta, x, eta, mode, samples, seed,
                cell=i * xs.size + j, overrides=overrides,
            )

        raw = np.zeros((deltas.size, xs.size))
        workers = threads or lab_setting('THREADS')
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for (i, j, delta, x), result in pool.map(run, cells):
                raw[i, j] = result.value
                stderr[i, j] = result.stderr / b1[j]
                if result.flag:
                    flags.append(f'{result.flag}@delta={delta},x={x}')
    values = raw / b1
    verdict = an_verdict(values, overrides)
    logger.info(
        'an_profile %s для %s: вердикт %s', selector, dist, verdict
    )
    return ANProfile(
        selector, deltas, xs, values, stderr, an_scores(values),
        verdict, flags,
    )


def eta_sweep(dist, k, delta, x_grid, etas=(0.25, 0.5, 0.75, 0.9),
              tilde=True, mode='auto', seed=0, overrides=None):
    """R(η, x) для набора η; отмечается порог 1 - α/(1-α)."""
    selector = f'tilde_I{k}' if tilde else f'I{k}'
    xs = np.asarray(x_grid, dtype=np.int64)
    b1 = eval_A(dist.model, xs.astype(float)) / xs
    rows = []
    for eta in etas:
        for j, x in enumerate(xs):
            result = evaluate(
                dist, selector, delta, int(x), eta, mode, seed=seed, cell=j,
                overrides=overrides,
            )
            rows.append({
                'eta': eta,
                'x': int(x),
                'R': result.value / b1[j],
                'above_threshold': eta > eta_threshold(dist.alpha),
            })
    return pd.DataFrame(rows)


@dataclass
class SuffReport:
    mode: str
    x: np.ndarray
    statistic: np.ndarray
    sup: float
    trend: float
    passed: bool
    regime: str = ''


def _growth(statistic, band):
    middle = statistic[len(statistic) // 2]
    trend = float(statistic[-1] / middle) if middle > 0 else math.inf
    return trend, trend <= 1.0 + band


def _d97_statistic(dist):
    lo, hi = dist.core_window
    top = int(math.floor(math.log2(hi + 1))) - 1
    xs, stats = [], []
    for j in range(0, top + 1):
        points = np.arange(2 ** j, 2 ** (j + 1), dtype=np.int64)
        masses = _core_at(dist, points)
        xs.append(2 ** j)
        stats.append(float(np.max(
            masses * points * eval_A(dist.model, points.astype(float))
        )))
    return np.array(xs), np.array(stats)


def _suff0_statistic(dist, gamma, x_grid):
    cum = np.concatenate(([0.0], np.cumsum(dist.core_masses)))
    stats = []
    for x in x_grid:
        y = np.arange(1, x // 2 + 1, dtype=np.int64)
        upper = np.clip(x - dist.offset + 1, 0, cum.size - 1)
        lower = np.clip(x - y - dist.offset + 1, 0, cum.size - 1)
        interval = cum[upper] - cum[lower]
        stats.append(float(np.max(
            interval * eval_A(dist.model, float(x)) * (x / y) ** gamma
        )))
    return np.array(stats)


def suff_check(dist, mode='D97', gamma=1.0, x_grid=None, overrides=None,
               **profile_kwargs):
    """Достаточные условия SRT: D97, suff0(γ), cond_half и suffrw."""
    band = tolerance('suff_growth_band', overrides)
    if mode in ('D97', 'suff0') and not dist.is_positive:
        raise DomainError(f'{mode}: нужен положительный шаг')
    if mode == 'D97':
        xs, stats = _d97_statistic(dist)
        trend, passed = _growth(stats, band)
        regime = ''
    elif mode == 'suff0':
        xs = np.asarray(
            default_x_grid(dist, 12) if x_grid is None else x_grid,
            dtype=np.int64,
        )
        stats = _suff0_statistic(dist, gamma, xs)
        trend, passed = _growth(stats, band)
        regime = (
            'sufficient' if gamma > 1.0 - 2.0 * dist.alpha else 'necessary'
        )
    elif mode == 'cond_half':
        if abs(dist.alpha - 0.5) > 1e-12:
            raise DomainError('cond_half определено только при alpha = 1/2')
        xs = np.asarray(
            default_x_grid(dist, 12) if x_grid is None else x_grid,
            dtype=float,
        )
        stats = cond_half_statistic(dist.model, xs)
        trend, passed = _growth(stats, band)
        regime = ''
    elif mode == 'suffrw':
        right = an_profile(dist, 'tilde_I1', x_grid=x_grid, **profile_kwargs)
        left = an_profile(
            dist, 'tilde_I1_star', x_grid=x_grid, **profile_kwargs
        )
        stats = np.concatenate((right.an_score, left.an_score))
        passed = right.verdict == LOOKS_AN and left.verdict == LOOKS_AN
        return SuffReport(
            mode, right.x_grid, stats, float(stats.max()), math.nan, passed,
            f'{right.verdict}/{left.verdict}',
        )
    else:
        raise UnsupportedModeError(f'неизвестный режим: {mode}')
    sup = float(np.max(stats[len(stats) // 2:]))
    if not passed:
        logger.warning('suff_check %s: статистика растёт (%.3g)', mode, trend)
    return SuffReport(mode, xs, stats, sup, trend, passed, regime)


@dataclass
class AppendixReport:
    x: np.ndarray
    ratio_half: np.ndarray
    ratio_tilde: np.ndarray
    ratio_chain: np.ndarray
    kappa: float
    bounded: dict


def _safe_ratio(num, den):
    if den > 0:
        return num / den
    return 0.0 if num == 0 else math.inf


def appendix_diag(dist, delta, eta=None, x_grid=None, k=2, mode='auto',
                  seed=0):
    """I₁(δ/2)/Ĩ₁(δ), Ĩ₁/I₁ и max{I_{k-1}, I_k}/Ĩ_k по сетке x."""
    eta = lab_setting('ETA') if eta is None else eta
    xs = np.asarray(
        default_x_grid(dist) if x_grid is None else x_grid, dtype=np.int64
    )
    half, tilde_ratio, chain = [], [], []
    kappa = math.inf
    for j, x in enumerate(xs):
        x = int(x)
        one = ChainSpec(k=1, eta=eta, delta=delta)
        i1_half = I_chain(dist, ChainSpec(k=1, eta=eta, delta=delta / 2), x)
        ti1 = tilde_I_chain(dist, one, x).value
        i1 = I_chain(dist, one, x).value
        half.append(_safe_ratio(i1_half.value, ti1))
        tilde_ratio.append(_safe_ratio(ti1, i1))
        deep = ChainSpec(k=k, eta=eta, delta=delta, mode=mode)
        ik = I_chain(dist, deep, x, seed, j).value
        tik = tilde_I_chain(dist, deep, x, seed, j).value
        previous = I_chain(
            dist, ChainSpec(k=k - 1, eta=eta, delta=delta, mode=mode),
            x, seed, j,
        ).value
        chain.append(_safe_ratio(max(previous, ik), tik))
        if ik > 0:
            kappa = min(kappa, tik / ik)
    half, tilde_ratio, chain = map(np.array, (half, tilde_ratio, chain))
    bounded = {
        'ratio_half': bool(np.all(np.isfinite(half))),
        'ratio_tilde': bool(np.all(np.isfinite(tilde_ratio))),
        'ratio_chain': bool(np.all(np.isfinite(chain))),
    }
    return AppendixReport(xs, half, tilde_ratio, chain, kappa, bounded)
