"""Явные решётчатые распределения шага: базовые, «пиковые», контрпримеры.

Все распределения живут на решётке hℤ и хранятся в единицах решётки.
Хвост за окном сворачивается в «дальний» атом сразу за границей окна;
функционалы этот атом исключают.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np
import pandas as pd
from scipy import integrate
from scipy.special import zeta as hurwitz_zeta

from .conf import tolerance
from .exceptions import ConstructionError, DomainError
from .rv_kernel import (
    TailModel, eval_A, model_from_config, model_to_config,
)

logger = logging.getLogger(__name__)

MASS_TOLERANCE = 1e-12
# Сколько дополнительных диадических блоков суммируется за окном.
EXTRA_BLOCKS = 900


class Provenance(str, Enum):
    BASELINE_POS = 'baseline_pos'
    BASELINE_TWO_SIDED = 'baseline_two_sided'
    SPIKY = 'spiky'
    COUNTER_RENEWAL = 'counter_renewal'
    TWO_SIDED_COUNTER = 'two_sided_counter'
    CUSTOM = 'custom'


def _zeta_log(x):
    return np.log(x)


def _zeta_sqrt_log(x):
    return np.sqrt(np.log(x))


def _zeta_log_log(x):
    return np.log(np.maximum(np.log(x), 1.0))


ZETA_FUNCTIONS = {
    'log': _zeta_log,
    'sqrt_log': _zeta_sqrt_log,
    'log_log': _zeta_log_log,
}


@dataclass(frozen=True, eq=False)
class LatticeDist:
    """Распределение на решётке: masses[i] = F({(offset + i)·h})."""

    offset: int
    masses: np.ndarray
    model: TailModel = None
    p: float = 1.0
    q: float = 0.0
    provenance: Provenance = Provenance.CUSTOM
    span: float = 1.0
    far_atoms: tuple = ()
    truncation_mass: float = 0.0
    constants: dict = field(default_factory=dict)
    blocks: tuple = ()

    def __post_init__(self):
        masses = np.ascontiguousarray(self.masses, dtype=float)
        masses.setflags(write=False)
        object.__setattr__(self, 'masses', masses)
        object.__setattr__(self, 'provenance', Provenance(self.provenance))
        check_invariants(self)

    @property
    def alpha(self):
        return None if self.model is None else self.model.alpha

    @property
    def x_min(self):
        return self.offset

    @property
    def x_max(self):
        return self.offset + self.masses.size - 1

    @cached_property
    def points(self):
        return np.arange(self.x_min, self.x_max + 1, dtype=np.int64)

    @cached_property
    def core_masses(self):
        """Массы без дальних атомов."""
        core = self.masses.copy()
        for atom in self.far_atoms:
            core[atom - self.offset] = 0.0
        core.setflags(write=False)
        return core

    @cached_property
    def core_window(self):
        """Минимальный и максимальный узлы носителя без дальних атомов."""
        nonzero = np.flatnonzero(self.core_masses)
        if nonzero.size == 0:
            return (0, 0)
        return (
            int(self.offset + nonzero[0]), int(self.offset + nonzero[-1])
        )

    @property
    def is_positive(self):
        """Носитель лежит в {1, 2, ...}."""
        first = np.flatnonzero(self.masses)[0]
        return self.offset + first >= 1

    @cached_property
    def _cumulative(self):
        return np.concatenate(([0.0], np.cumsum(self.masses)))

    def _index(self, x):
        """Число узлов решётки <= x внутри окна."""
        return int(np.clip(
            math.floor(x) - self.offset + 1, 0, self.masses.size
        ))

    def mass_at(self, x):
        idx = int(x) - self.offset
        if idx < 0 or idx >= self.masses.size:
            return 0.0
        return float(self.masses[idx])

    def interval_mass(self, a, b):
        """F((a, b])."""
        if b <= a:
            return 0.0
        cum = self._cumulative
        return float(cum[self._index(b)] - cum[self._index(a)])

    def tail_above(self, x):
        """P(X > x)."""
        cum = self._cumulative
        return float(cum[-1] - cum[self._index(x)])

    def tail_below(self, x):
        """P(X < -x)."""
        return float(self._cumulative[self._index(math.ceil(-x) - 1)])

    def tails_above(self, xs):
        """P(X > x) для массива x."""
        idx = np.clip(
            np.floor(np.asarray(xs)).astype(np.int64) - self.offset + 1,
            0, self.masses.size,
        )
        cum = self._cumulative
        return cum[-1] - cum[idx]

    def header(self):
        return {
            'span': self.span,
            'window': [self.x_min, self.x_max],
            'tail_meta': {
                'alpha': self.alpha,
                'p': self.p,
                'q': self.q,
                'model': (
                    None if self.model is None
                    else model_to_config(self.model)
                ),
            },
            'provenance': self.provenance.value,
            'far_atoms': list(self.far_atoms),
            'truncation_mass': self.truncation_mass,
            'constants': self.constants,
            'blocks': [list(block) for block in self.blocks],
        }

    def __str__(self):
        return f'{self.provenance.value}[{self.x_min}, {self.x_max}]'


def check_invariants(dist):
    masses = dist.masses
    if masses.ndim != 1 or masses.size == 0:
        raise ConstructionError('пустой вектор масс')
    if np.any(masses < 0) or not np.all(np.isfinite(masses)):
        raise ConstructionError('массы должны быть конечными и >= 0')
    total = masses.sum()
    if abs(total - 1.0) > MASS_TOLERANCE:
        raise ConstructionError(f'сумма масс {total!r} отличается от 1')
    support = dist.offset + np.flatnonzero(masses)
    if np.gcd.reduce(np.abs(support)) != 1:
        raise ConstructionError('шаг решётки носителя больше h')


def _baseline_weights(model, n_top):
    n = np.arange(1, n_top + 1, dtype=float)
    return model.alpha / (n * eval_A(model, n))


def _beyond_window(model, n_top):
    """Σ_{n > n_top} α/(n A(n))."""
    alpha = model.alpha
    if model.is_pure_power:
        return float(alpha * hurwitz_zeta(1.0 + alpha, n_top + 1.0))
    value, _ = integrate.quad(
        lambda s: alpha / eval_A(model, math.exp(s)),
        math.log(n_top + 0.5), np.inf, limit=200,
    )
    return value


def _baseline_arrays(model, x_max, p, q):
    """Массы базового закона на [-x_max-1, x_max+1] как словарь частей."""
    if not 0 < model.alpha < 1:
        raise DomainError('базовый закон строится только при alpha < 1')
    if p < 0 or q < 0 or p + q <= 0:
        raise DomainError('веса хвостов p, q должны быть >= 0, p + q > 0')
    weights = _baseline_weights(model, x_max)
    beyond = _beyond_window(model, x_max)
    # suffix[j] = Σ_{n > j} weights, j = 0..x_max.
    suffix = np.concatenate((np.cumsum(weights[::-1])[::-1], [0.0])) + beyond
    totals = (p + q) * suffix
    admissible = np.flatnonzero(totals[1:] < 1.0)
    if admissible.size == 0 or admissible[0] + 1 > x_max // 2:
        raise ConstructionError(
            'нормировка недостижима: увеличьте окно или уменьшите хвост'
        )
    n0 = int(admissible[0] + 1)
    remainder = 1.0 - totals[n0]
    positive = np.zeros(x_max + 2)
    negative = np.zeros(x_max + 2)
    positive[n0 + 1:x_max + 1] = p * weights[n0:]
    negative[n0 + 1:x_max + 1] = q * weights[n0:]
    positive[x_max + 1] = p * beyond
    negative[x_max + 1] = q * beyond
    if p > 0:
        positive[n0] += remainder
    else:
        negative[n0] += remainder
    logger.debug(
        'базовый закон: n0=%d, масса за окном %.3e', n0, (p + q) * beyond
    )
    return positive, negative, n0, (p + q) * beyond


def _assemble(positive, negative=None):
    """Склеивает массы на [0, L] и [-L, 0] в один вектор со смещением."""
    if negative is None or not np.any(negative):
        return 0, positive
    size = max(positive.size, negative.size)
    pos = np.zeros(size)
    neg = np.zeros(size)
    pos[:positive.size] = positive
    neg[:negative.size] = negative
    merged = np.concatenate((neg[:0:-1], [pos[0] + neg[0]], pos[1:]))
    return -(size - 1), merged


def _trim(offset, masses):
    nonzero = np.flatnonzero(masses)
    first, last = nonzero[0], nonzero[-1]
    return int(offset + first), masses[first:last + 1] / masses.sum()


def build_baseline(model, sided='positive', x_max=2**20, p=1.0, q=0.0):
    """Массы p·α/(nA(n)) при n > n₀ и атом в n₀ с остатком массы."""
    if sided == 'positive':
        p, q = 1.0, 0.0
    elif sided != 'two_sided':
        raise DomainError(f'неизвестный вариант baseline: {sided}')
    return _baseline(model, x_max, p, q, scale=1.0)


def _baseline(model, x_max, p, q, scale):
    positive, negative, n0, far = _baseline_arrays(
        model, x_max, scale * p, scale * q
    )
    two_sided = q > 0
    offset, masses = _trim(*_assemble(positive, negative))
    far_atoms = tuple(
        atom for atom, weight in ((x_max + 1, p), (-x_max - 1, q))
        if weight > 0
    )
    return LatticeDist(
        offset=offset,
        masses=masses,
        model=model,
        p=scale * p,
        q=scale * q,
        provenance=(
            Provenance.BASELINE_TWO_SIDED if two_sided
            else Provenance.BASELINE_POS
        ),
        far_atoms=far_atoms,
        truncation_mass=far,
        constants={'c': scale, 'n0': n0, 'p': p, 'q': q},
    )


def build_point_mass(point=1, model=None):
    return build_custom({point: 1.0}, model=model)


def build_custom(atoms, model=None, p=1.0, q=0.0):
    """Распределение из словаря {узел: масса}; массы нормируются."""
    if not atoms:
        raise ConstructionError('пустой набор атомов')
    points = np.array(sorted(int(x) for x in atoms), dtype=np.int64)
    masses = np.zeros(points[-1] - points[0] + 1)
    for x, mass in atoms.items():
        masses[int(x) - points[0]] += mass
    if np.any(masses < 0) or masses.sum() <= 0:
        raise ConstructionError('массы атомов должны быть >= 0')
    return LatticeDist(
        offset=int(points[0]),
        masses=masses / masses.sum(),
        model=model,
        p=p,
        q=q,
        provenance=Provenance.CUSTOM,
    )


def reflect(dist):
    """F*(B) = F(-B)."""
    return LatticeDist(
        offset=-dist.x_max,
        masses=dist.masses[::-1].copy(),
        model=dist.model,
        p=dist.q,
        q=dist.p,
        provenance=dist.provenance,
        span=dist.span,
        far_atoms=tuple(-atom for atom in dist.far_atoms),
        truncation_mass=dist.truncation_mass,
        constants={**dist.constants, 'reflected': True},
        blocks=dist.blocks,
    )


def mixture(parts, weights, **fields):
    """Σ w_i F_i на общем окне; дальние атомы объединяются."""
    lo = min(part.x_min for part in parts)
    hi = max(part.x_max for part in parts)
    masses = np.zeros(hi - lo + 1)
    far = set()
    truncation = 0.0
    for part, weight in zip(parts, weights):
        start = part.x_min - lo
        masses[start:start + part.masses.size] += weight * part.masses
        far.update(part.far_atoms)
        truncation += weight * part.truncation_mass
    return LatticeDist(
        offset=lo,
        masses=masses / masses.sum(),
        far_atoms=tuple(sorted(far)),
        truncation_mass=truncation,
        **fields,
    )


def _greedy_subsequence(weights):
    """Индексы с w_{n_{k+1}} <= w_{n_k}/2 и суммой весов не больше 1/2."""
    for start in range(weights.size):
        chosen = [start]
        for idx in range(start + 1, weights.size):
            if weights[idx] <= 0.5 * weights[chosen[-1]]:
                chosen.append(idx)
        if weights[chosen].sum() <= 0.5:
            return chosen
    return []


def build_spiky(model, x_seq=None, eps_seq=None, x_max=2**20):
    """F = ½(F₁ + F₂): F₁ с хвостом 2/A, F₂ из атомов на подпоследовательности.

    По умолчанию x_n = 2ⁿ и ε_n = 1/log(1+n).
    """
    if x_seq is None:
        x_seq = 2.0 ** np.arange(1, int(math.log2(x_max)) + 1)
    x_seq = np.asarray(x_seq, dtype=float)
    if eps_seq is None:
        eps_seq = 1.0 / np.log1p(np.arange(1, x_seq.size + 1))
    eps_seq = np.asarray(eps_seq, dtype=float)
    if x_seq.shape != eps_seq.shape:
        raise DomainError('x_seq и eps_seq должны иметь одну длину')
    if np.any(np.diff(x_seq) <= 0) or np.any(eps_seq <= 0):
        raise DomainError('x_seq должна возрастать, eps_seq > 0')
    lattice = np.rint(x_seq).astype(np.int64)
    inside = (lattice >= 1) & (lattice <= x_max)
    lattice, eps_seq = lattice[inside], eps_seq[inside]
    weights = eps_seq / eval_A(model, lattice.astype(float))
    chosen = _greedy_subsequence(weights)
    if len(chosen) < 3:
        raise ConstructionError(
            'в окне меньше трёх допустимых точек подпоследовательности'
        )
    c2 = 1.0 / weights[chosen].sum()
    atoms = {int(lattice[i]): c2 * weights[i] for i in chosen}
    first = _baseline(model, x_max, 1.0, 0.0, scale=2.0)
    second = build_custom(atoms, model=model)
    constants = {
        **{f'F1_{key}': value for key, value in first.constants.items()},
        'c2': c2,
        'k0': int(chosen[0]),
        'spikes': [int(lattice[i]) for i in chosen],
    }
    blocks = tuple(
        (int(lattice[i]), float(eps_seq[i]), float(weights[i]))
        for i in chosen
    )
    return mixture(
        (first, second), (0.5, 0.5),
        model=model, p=1.0, q=0.0, provenance=Provenance.SPIKY,
        constants=constants, blocks=blocks,
    )


def counter_parameters(alpha):
    """θ и ε из условия 1 - 2(1+θ)(α+ε) > 0."""
    theta = min(1.0, (1.0 - 2.0 * alpha) / (8.0 * alpha))
    eps = (1.0 - 2.0 * alpha) / 8.0
    return theta, eps


def build_counter_renewal(alpha, zeta='log', x_max=2**22):
    """Контрпример к SRT при α < 1/2: F = ½(F₁ + F₂).

    F₂ имеет постоянную плотность c·ζ(x_{n-1})/(x_n A(x_n)) на
    (x_n - z_n, x_n], x_n = 2ⁿ, z_n = ½ x_n / ζ(x_{n-1})^{1+θ}.
    """
    if not 0 < alpha < 0.5:
        raise DomainError('build_counter_renewal: нужно 0 < alpha < 1/2')
    zeta_fn = ZETA_FUNCTIONS[zeta] if isinstance(zeta, str) else zeta
    model = TailModel(alpha)
    theta, eps = counter_parameters(alpha)
    top = int(math.floor(math.log2(x_max)))

    def capped(x):
        return np.minimum(zeta_fn(x), np.log(x))

    n_all = np.arange(2, top + EXTRA_BLOCKS + 1)
    x_n = 2.0 ** n_all
    zeta_prev = capped(x_n / 2.0)
    z_n = 0.5 * x_n / zeta_prev ** (1.0 + theta)
    start = np.flatnonzero((zeta_prev >= 1.0) & (z_n >= 8.0))
    if start.size == 0:
        raise ConstructionError('ζ не достигает 1 в допустимом диапазоне')
    n0 = int(n_all[start[0]])
    keep = n_all >= n0
    n_all, x_n, zeta_prev, z_n = (
        n_all[keep], x_n[keep], zeta_prev[keep], z_n[keep]
    )
    inside = n_all <= top
    if inside.sum() < 5:
        raise ConstructionError('в окне меньше пяти диадических блоков')
    widths = np.where(inside, np.ceil(z_n), z_n)
    density = zeta_prev / (x_n * eval_A(model, x_n))
    raw = density * widths
    c = 1.0 / raw.sum()
    far = c * raw[~inside].sum()

    positive = np.zeros(x_max + 2)
    blocks = []
    for n, x, width, dens, z in zip(
        n_all[inside], x_n[inside], widths[inside],
        density[inside], z_n[inside],
    ):
        right = int(x)
        left = right - int(width)
        positive[left + 1:right + 1] = c * dens
        blocks.append((int(n), right, float(z), int(width), c * dens * width))
    positive[x_max + 1] = far
    second = LatticeDist(
        offset=0, masses=positive / positive.sum(), model=model,
        far_atoms=(x_max + 1,), truncation_mass=far,
    )
    first = _baseline(model, x_max, 1.0, 0.0, scale=2.0)
    mixed = mixture(
        (first, second), (0.5, 0.5),
        model=model, p=1.0, q=0.0, provenance=Provenance.COUNTER_RENEWAL,
        constants={
            'c': c, 'theta': theta, 'eps': eps, 'n0': n0,
            'zeta': zeta if isinstance(zeta, str) else 'custom',
            'F1_n0': first.constants['n0'],
        },
        blocks=tuple(blocks),
    )
    mixed.constants['K_local'] = local_bound_constant(mixed, zeta_fn)
    logger.info(
        'counter_renewal alpha=%.3f: %d блоков, c=%.4g, K=%.3g',
        alpha, len(blocks), c, mixed.constants['K_local'],
    )
    return mixed


def local_bound_constant(dist, zeta_fn):
    """sup F({x})·x·A(x)/ζ(x) по окну (x >= 3)."""
    lo, hi = max(3, dist.core_window[0]), dist.core_window[1]
    x = np.arange(lo, hi + 1, dtype=float)
    masses = dist.core_masses[lo - dist.offset:hi - dist.offset + 1]
    scale = np.minimum(zeta_fn(x), np.log(x))
    return float(np.max(masses * x * eval_A(dist.model, x) / scale))


def two_sided_exponent(alpha):
    """p = (1 + 1/(3α))/2 ∈ (1, 1/(3α))."""
    return 0.5 * (1.0 + 1.0 / (3.0 * alpha))


def _ell(n):
    return np.log1p(n)


def build_two_sided_counter(alpha, x_max=2**20):
    """F = (F₁ + F₂ + F₃*)/3 при α < 1/3, A(x) = x^α."""
    if not 0 < alpha < 1.0 / 3.0:
        raise DomainError('build_two_sided_counter: нужно 0 < alpha < 1/3')
    model = TailModel(alpha)
    p_exp = two_sided_exponent(alpha)
    top = int(math.floor(math.log2(x_max)))

    # F₂: блоки E_{n,k} ⊆ [2ⁿ, 2^{n+1}) для 1 <= k < n.
    k_all = np.arange(1, top + EXTRA_BLOCKS + 1, dtype=float)
    k_weight = 2.0 ** (k_all * (1.0 - 2.0 * alpha)) / (2.0 * k_all ** p_exp)
    k_prefix = np.concatenate(([0.0], np.cumsum(k_weight)))
    n_all = np.arange(2, top + EXTRA_BLOCKS + 1)
    n_scale = 1.0 / (_ell(n_all) * 2.0 ** (n_all * (1.0 - alpha)))
    inside_n = n_all + 1 <= top
    outside = ~inside_n
    raw_far = float(np.sum(n_scale[outside] * k_prefix[n_all[outside] - 1]))

    positive = np.zeros(x_max + 2)
    pieces = []
    for n, scale in zip(n_all[inside_n], n_scale[inside_n]):
        for k in range(1, n):
            width = int(math.ceil(2.0 ** k / (2.0 * k ** p_exp)))
            left = 2 ** n + 2 ** k
            density = scale / 2.0 ** (2.0 * alpha * k)
            positive[left:left + width] = density
            pieces.append((int(n), k, left, width, density * width))
    c = 1.0 / (positive.sum() + raw_far)
    positive *= c
    positive[x_max + 1] = c * raw_far
    second = LatticeDist(
        offset=0, masses=positive / positive.sum(), model=model,
        far_atoms=(x_max + 1,), truncation_mass=c * raw_far,
    )

    # F₃: плотность (c'/ℓ(k))·k^p/2^{k(1+α)} на G_k = [2ᵏ, 2ᵏ + 2ᵏ/k^p).
    g_weight = 1.0 / (_ell(k_all) * 2.0 ** (k_all * alpha))
    inside_k = k_all + 1 <= top
    raw_far3 = float(np.sum(g_weight[~inside_k]))
    third_pos = np.zeros(x_max + 2)
    for k in k_all[inside_k].astype(int):
        width = int(math.ceil(2.0 ** k / k ** p_exp))
        density = k ** p_exp / (_ell(k) * 2.0 ** (k * (1.0 + alpha)))
        third_pos[2 ** k:2 ** k + width] = density
    c_prime = 1.0 / (third_pos.sum() + raw_far3)
    third_pos *= c_prime
    third_pos[x_max + 1] = c_prime * raw_far3
    third = reflect(LatticeDist(
        offset=0, masses=third_pos / third_pos.sum(), model=model,
        far_atoms=(x_max + 1,), truncation_mass=c_prime * raw_far3,
    ))

    first = _baseline(model, x_max, 1.0, 1.0, scale=3.0)
    blocks = tuple(
        (n, k, left, width, c * mass) for n, k, left, width, mass in pieces
    )
    return mixture(
        (first, second, third), (1 / 3, 1 / 3, 1 / 3),
        model=model, p=1.0, q=1.0,
        provenance=Provenance.TWO_SIDED_COUNTER,
        constants={
            'c': c, 'c_prime': c_prime, 'p_exp': p_exp,
            'F1_n0': first.constants['n0'],
        },
        blocks=blocks,
    )


@dataclass
class TailReport:
    x: np.ndarray
    p_hat: np.ndarray
    q_hat: np.ndarray
    passed: bool
    band: float
    reason: str = ''

    def rows(self):
        return pd.DataFrame(
            {'x': self.x, 'p_hat': self.p_hat, 'q_hat': self.q_hat}
        )


def _close(values, target, band):
    if target == 0:
        return bool(np.all(np.abs(values) <= band))
    return bool(np.all(np.abs(values - target) <= band * target))


def tail_check(dist, band=None, overrides=None):
    """F̄(x)·A(x) и F(-x)·A(x) на диадической сетке окна."""
    band = tolerance('tail_band', overrides) if band is None else band
    hi = max(abs(dist.x_min), abs(dist.x_max))
    top = max(1, int(math.floor(math.log2(max(hi - 1, 2)))))
    x = 2.0 ** np.arange(1, top + 1)
    if dist.model is None:
        empty = np.zeros_like(x)
        return TailReport(x, empty, empty, False, band, 'нет модели хвоста')
    scale = eval_A(dist.model, x)
    p_hat = np.array([dist.tail_above(v) for v in x]) * scale
    q_hat = np.array([dist.tail_below(v) for v in x]) * scale
    decade = x >= x[-1] / 10.0
    if not np.any(p_hat[decade]) and not np.any(q_hat[decade]):
        return TailReport(x, p_hat, q_hat, False, band, 'конечный носитель')
    passed = (
        _close(p_hat[decade], dist.p, band)
        and _close(q_hat[decade], dist.q, band)
    )
    if not passed:
        logger.warning('tail_check %s: хвосты вне полосы %.2f', dist, band)
    return TailReport(x, p_hat, q_hat, passed, band)


def json_default(value):
    """Приводит скаляры и массивы numpy к типам JSON."""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Enum):
        return value.value
    raise TypeError(f'{type(value).__name__} не сериализуется в JSON')


def save_dist(dist, path):
    """Сохраняет массы в .npz, заголовок хранится рядом как JSON-строка."""
    np.savez(
        path,
        lattice=dist.points,
        mass=dist.masses,
        header=np.array(json.dumps(dist.header(), default=json_default)),
    )


def load_dist(path):
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data['header']))
        lattice = data['lattice']
        masses = data['mass']
    meta = header['tail_meta']
    model = None if meta['model'] is None else model_from_config(
        meta['model']
    )
    return LatticeDist(
        offset=int(lattice[0]),
        masses=masses,
        model=model,
        p=meta['p'],
        q=meta['q'],
        provenance=header['provenance'],
        span=header['span'],
        far_atoms=tuple(header['far_atoms']),
        truncation_mass=header['truncation_mass'],
        constants=header['constants'],
        blocks=tuple(tuple(block) for block in header['blocks']),
    )


def dist_to_csv(dist, path):
    nonzero = np.flatnonzero(dist.masses)
    frame = pd.DataFrame({
        'x': dist.points[nonzero] * dist.span,
        'mass': dist.masses[nonzero],
    })
    frame.to_csv(path, index=False, float_format='%.17g')
    return path
