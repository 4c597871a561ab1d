"""Сценарии прогона: распределение из конфигурации, расчёт, отчёты, журнал."""
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError
from django.db import DatabaseError
from django.test import override_settings
from django.utils import timezone

from . import conv_engine, dist_factory, functionals, lld_mc
from .conf import lab_setting
from .exceptions import InvariantViolation, LabError
from .forms import RunConfigForm
from .models import Artifact, Run
from .plots import safe_plot
from .reports import (
    OperationGraph, Report, export, frame, provenance_block, write_manifest,
)
from .rv_kernel import (
    eval_A, inverse_A, model_from_config, positivity_parameter, srt_constant,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVARIANT = 2
EXIT_IO = 3


@dataclass
class ScenarioOutcome:
    exit_code: int
    out_dir: Path
    manifest: dict
    reports: list = field(default_factory=list)
    run_id: int = None


@dataclass
class RunContext:
    """Всё, что сценарий получает на вход."""

    config: dict
    dist: object
    graph: OperationGraph
    seed: int
    threads: int
    flags: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)

    @property
    def scenario(self):
        return self.config['scenario']

    @property
    def grids(self):
        return self.config['grids']

    def report(self, kind, name, data, **header):
        header.setdefault('seed', self.seed)
        return Report(
            kind, name, frame(kind, data), header,
            provenance_block(self.dist),
        )


def load_config(path):
    """Чтение и проверка файла конфигурации."""
    raw = json.loads(Path(path).read_text(encoding='utf-8'))
    return validate_config(raw)


def validate_config(raw):
    if not isinstance(raw, dict):
        raise ValidationError('Конфигурация должна быть объектом JSON.')
    form = RunConfigForm(data=raw)
    if not form.is_valid():
        raise ValidationError([
            f'{name}: {message}'
            for name, messages in form.errors.items()
            for message in messages
        ])
    return form.config()


def build_distribution(config):
    """LatticeDist по секциям rv_kernel и dist_factory."""
    params = dict(config['dist_factory'])
    builder = params.pop('builder')
    model = (
        model_from_config(config['rv_kernel'])
        if config.get('rv_kernel') else None
    )
    alpha = params.get('alpha') or (model.alpha if model else None)
    x_max = params.get('x_max')
    if builder == 'baseline':
        return dist_factory.build_baseline(
            model, params.get('sided') or 'positive',
            x_max or 2**20, params.get('p', 1.0), params.get('q', 0.0),
        )
    if builder == 'spiky':
        return dist_factory.build_spiky(
            model, params.get('x_seq'), params.get('eps_seq'),
            x_max or 2**20,
        )
    if builder == 'counter_renewal':
        return dist_factory.build_counter_renewal(
            alpha, params.get('zeta') or 'log', x_max or 2**22
        )
    if builder == 'two_sided_counter':
        return dist_factory.build_two_sided_counter(alpha, x_max or 2**20)
    if builder == 'point_mass':
        return dist_factory.build_point_mass(params.get('point') or 1, model)
    if builder == 'custom':
        atoms = {int(k): float(v) for k, v in params['atoms'].items()}
        return dist_factory.build_custom(
            atoms, model, params.get('p', 1.0), params.get('q', 0.0)
        )
    return dist_factory.load_dist(params['path'])


def _dyadic_grid(lo, hi):
    return [2 ** j for j in range(lo, int(math.floor(math.log2(hi))) + 1)]


def _x_grid(ctx, default):
    return list(ctx.grids.get('x') or default)


def _top(ctx):
    return ctx.dist.core_window[1]


def _srt_C(ctx):
    """Константа C(α, ρ): замкнутая форма при ρ = 1, иначе Монте-Карло."""
    dist = ctx.dist
    given = ctx.scenario.get('C')
    if given is not None:
        return given
    tail_mass = dist.p + dist.q
    rho = positivity_parameter(dist.alpha, dist.p, dist.q)
    if dist.q == 0:
        constant = srt_constant(dist.alpha, tail_mass=tail_mass)
    else:
        with ctx.graph.step('srt_constant', ['alpha', 'rho'], ['C']):
            constant = srt_constant(
                dist.alpha, rho, 'monte_carlo',
                ctx.scenario.get('samples') or lab_setting('mc_samples'),
                ctx.seed, tail_mass,
            )
        ctx.flags.append('C оценена Монте-Карло: нормировка Y калибруется')
    ctx.constants['C'] = constant.value
    ctx.constants['C_stderr'] = constant.stderr
    ctx.constants['rho'] = rho
    return constant.value


def run_dist_build(ctx, out_dir):
    dist = ctx.dist
    with ctx.graph.step('tail_check', ['dist'], ['tail']):
        tail = dist_factory.tail_check(dist)
    if not tail.passed:
        ctx.flags.append(f'tail_check: {tail.reason or "вне полосы"}')
    with ctx.graph.step('save_dist', ['dist'], ['dist.npz', 'dist.csv']):
        dist_factory.save_dist(dist, Path(out_dir) / 'dist.npz')
        dist_factory.dist_to_csv(dist, Path(out_dir) / 'dist.csv')
    return [ctx.report(
        'tail', 'tail_check', tail.rows(), passed=tail.passed, band=tail.band,
    )]


def run_renewal_scan(ctx, out_dir):
    dist = ctx.dist
    window = ctx.scenario.get('window') or _top(ctx)
    method = ctx.scenario.get('renewal_method') or 'newton'
    with ctx.graph.step('renewal_mass', ['dist'], ['u']):
        table = conv_engine.renewal_mass(dist, window, method)
    xs = np.asarray(_x_grid(ctx, _dyadic_grid(1, window)), dtype=np.int64)
    C = _srt_C(ctx) if dist.alpha < 1 else None
    with ctx.graph.step('integrated_renewal_ratio', ['u', 'C'], ['renewal']):
        integrated = (
            conv_engine.integrated_renewal_ratio(table, dist, xs, C)
            if C else np.full(xs.size, np.nan)
        )
        data = {
            'x': xs,
            'u': table.interval(xs),
            'U_cumulative': conv_engine.renewal_interval_mass(table, xs),
            'integrated_ratio': integrated,
        }
    ctx.constants['renewal_residual'] = table.residual
    reports = [ctx.report(
        'renewal', 'renewal', data, method=method, residual=table.residual,
    )]
    if C:
        result = conv_engine.srt_ratio(dist, xs, C, table)
        reports.append(_srt_report(ctx, result, C))
    return reports


def _srt_report(ctx, result, C):
    data = {
        'x': result.x,
        'u': result.u,
        'ratio': result.ratio,
        'truncation_error': result.truncation_error,
    }
    if result.flagged:
        ctx.flags.append('srt_ratio: хвост ряда по n велик')
    return ctx.report(
        'srt_ratio', 'srt_ratio', data, C=C, flagged=result.flagged,
        n_used=result.n_used, c2_hat=result.c2_hat,
    )


def run_srt_ratio(ctx, out_dir):
    dist = ctx.dist
    C = _srt_C(ctx)
    xs = _x_grid(ctx, _dyadic_grid(4, _top(ctx) // 2))
    with ctx.graph.step('srt_ratio', ['dist', 'C'], ['srt_ratio']):
        result = conv_engine.srt_ratio(dist, xs, C)
    reports = [_srt_report(ctx, result, C)]
    ctx.constants['final_ratio'] = float(result.ratio[-1])
    mode = ctx.scenario.get('suff')
    if mode:
        reports.append(_suff_report(ctx, mode))
    return reports


def _suff_report(ctx, mode):
    gamma = ctx.scenario.get('gamma_suff') or 1.0
    with ctx.graph.step(f'suff_check:{mode}', ['dist'], ['suff']):
        check = functionals.suff_check(
            ctx.dist, mode, gamma, ctx.grids.get('x'),
            seed=ctx.seed, threads=ctx.threads,
        )
    ctx.constants[f'suff_{mode}'] = check.passed
    return ctx.report(
        'suff', f'suff_{mode}', {'x': check.x, 'statistic': check.statistic},
        mode=mode, passed=check.passed, sup=check.sup, trend=check.trend,
        regime=check.regime,
    )


def _selectors(ctx, default):
    scenario = ctx.scenario
    if scenario.get('functionals'):
        return list(scenario['functionals'])
    if scenario.get('functional'):
        return [scenario['functional']]
    return default


def _profile_report(ctx, selector, xs, eta):
    with ctx.graph.step(f'an_profile:{selector}', ['dist'], [selector]):
        profile = functionals.an_profile(
            ctx.dist, selector, ctx.grids.get('delta'), xs, eta,
            ctx.scenario.get('mode') or 'auto',
            ctx.scenario.get('samples') or 0, ctx.seed, ctx.threads,
        )
    ctx.flags.extend(profile.flags)
    return profile, ctx.report(
        'an_profile', f'an_{selector}', profile.to_frame(),
        **profile.verdict_block(),
    )


def run_an_scan(ctx, out_dir):
    dist = ctx.dist
    headline = functionals.headline_functional(dist.alpha)
    selectors = _selectors(ctx, [headline or 'I1_plus'])
    xs = ctx.grids.get('x')
    etas = ctx.grids.get('eta') or [lab_setting('ETA')]
    reports = []
    for selector in selectors:
        profile, report = _profile_report(ctx, selector, xs, etas[0])
        ctx.constants[f'verdict_{selector}'] = profile.verdict
        reports.append(report)
    match = functionals.CHAIN_SELECTOR.match(selectors[0])
    if len(etas) > 1 and match and int(match['k']) > 1:
        delta = (ctx.grids.get('delta') or lab_setting('DELTA_GRID'))[-1]
        with ctx.graph.step('eta_sweep', ['dist'], ['eta_sweep']):
            sweep = functionals.eta_sweep(
                dist, int(match['k']), delta,
                xs or functionals.default_x_grid(dist), etas,
                tilde=bool(match['tilde']),
                mode=ctx.scenario.get('mode') or 'auto', seed=ctx.seed,
            )
        reports.append(ctx.report(
            'eta_sweep', 'eta_sweep', sweep,
            threshold=functionals.eta_threshold(dist.alpha),
        ))
    return reports


def _lld_for_gamma(ctx, gamma, xs, J):
    dist = ctx.dist
    method = ctx.scenario.get('method') or 'exact'
    report = lld_mc.lld_bound_ratio(
        dist, gamma, J, ctx.grids.get('n'), xs, method,
        ctx.scenario.get('samples'), ctx.seed,
    )
    n_grid = ctx.grids.get('n') or np.arange(
        1, int(eval_A(dist.model, 0.2 * max(xs))) + 1
    )
    tail = lld_mc.fuk_nagaev_tail(dist, gamma, xs, n_grid)
    return gamma, report, tail


def run_lld_scan(ctx, out_dir):
    dist = ctx.dist
    xs = _x_grid(ctx, _dyadic_grid(10, _top(ctx) // 4))
    gammas = ctx.grids.get('gamma') or [0.5]
    J = tuple(ctx.grids.get('J') or (-1, 0))
    reports = []
    with ctx.graph.step('lld_bound_ratio', ['dist'], ['lld']):
        with ThreadPoolExecutor(max_workers=ctx.threads) as pool:
            results = list(pool.map(
                lambda gamma: _lld_for_gamma(ctx, gamma, xs, J), gammas
            ))
    for gamma, report, tail in results:
        ctx.flags.extend(report.flags + tail.flags)
        ctx.constants[f'lld_sup_gamma_{gamma:g}'] = report.sup
        reports.append(ctx.report(
            'lld', f'lld_gamma_{gamma:g}', report.cells,
            gamma=gamma, ceil_inv_gamma=report.ceil_inv_gamma, sup=report.sup,
            sup_by_x=report.sup_by_x, **report.header,
        ))
        reports.append(ctx.report(
            'fuk_nagaev', f'fuk_nagaev_gamma_{gamma:g}', tail.cells,
            gamma=gamma, sup=tail.sup,
        ))
    with ctx.graph.step('unconstrained_ratio', ['dist'], ['unconstrained']):
        free = lld_mc.unconstrained_ratio(dist, J, ctx.grids.get('n'), xs)
    reports.append(ctx.report(
        'lld_unconstrained', 'lld_unconstrained', free.cells, sup=free.sup,
    ))
    if dist.is_positive and dist.alpha < 1:
        n_grid = ctx.grids.get('n') or [16, 64, 256]
        with ctx.graph.step('stone_llt_diag', ['dist'], ['stone_llt']):
            stone = lld_mc.stone_llt_diag(dist, n_grid)
        with ctx.graph.step('calibrate_scale', ['dist'], ['calibration']):
            calibration = lld_mc.calibrate_scale(
                dist, int(max(n_grid)),
                ctx.scenario.get('samples') or lab_setting('mc_samples'),
                ctx.seed,
            )
        ctx.flags.extend(stone.flags)
        ctx.constants['calibration_factor'] = calibration.factor
        reports.append(ctx.report(
            'stone_llt', 'stone_llt', stone.cells,
            max_deviation=stone.max_deviation,
            sup_constant=stone.sup_constant,
            calibration=stone.calibration,
            calibration_factor=calibration.factor,
        ))
        reports.append(_basic_bound_report(ctx, n_grid, xs))
    return reports


def _basic_bound_report(ctx, n_grid, z_grid):
    dist = ctx.dist
    with ctx.graph.step('basic_bound_fit', ['dist'], ['basic_bound']):
        fit = conv_engine.basic_bound_fit(dist, n_grid, z_grid)
        hits = conv_engine.hit_table(
            dist, z_grid, int(max(n_grid)), window=(0, int(max(z_grid))),
        )
    rows = []
    for n in n_grid:
        a_n = float(inverse_A(dist.model, n))
        for j, z in enumerate(z_grid):
            bound = fit.C / a_n * math.exp(
                -fit.c * n / eval_A(dist.model, float(z))
            )
            rows.append((int(n), int(z), hits[n - 1, j] / bound))
    ctx.constants['basic_bound'] = {
        'c': fit.c, 'C': fit.C, 'holdout_violation': fit.holdout_violation,
    }
    return ctx.report(
        'basic_bound', 'basic_bound',
        dict(zip(('n', 'z', 'bound_ratio'), zip(*rows))),
        c=fit.c, C=fit.C, max_violation=fit.max_violation,
        holdout_violation=fit.holdout_violation,
    )


def run_counterexample_demo(ctx, out_dir):
    """Парные профили: I₁⁺ и T либо Ĩ₁ и I₂ для двустороннего шага."""
    dist = ctx.dist
    if dist.provenance is dist_factory.Provenance.TWO_SIDED_COUNTER:
        default = ['tilde_I1', 'I2']
    else:
        default = ['I1_plus', 'T']
    selectors = _selectors(ctx, default)
    blocks = [block[1] for block in dist.blocks] if dist.blocks else []
    xs = ctx.grids.get('x') or [
        x for x in blocks if x <= dist.core_window[1]
    ][-6:] or None
    eta = (ctx.grids.get('eta') or [lab_setting('ETA')])[0]
    reports, verdicts = [], {}
    for selector in selectors:
        profile, report = _profile_report(ctx, selector, xs, eta)
        verdicts[selector] = profile.verdict
        reports.append(report)
    ctx.constants['verdicts'] = verdicts
    if default == ['I1_plus', 'T'] and set(default) <= set(verdicts):
        ctx.constants['equivalence_holds'] = (
            verdicts['I1_plus'] == verdicts['T']
        )
    return reports


def run_appendix_diag(ctx, out_dir):
    dist = ctx.dist
    deltas = ctx.grids.get('delta') or [0.1]
    eta = (ctx.grids.get('eta') or [lab_setting('ETA')])[0]
    k = ctx.scenario.get('k') or 2
    reports = []
    for delta in deltas:
        with ctx.graph.step('appendix_diag', ['dist'], ['appendix']):
            diag = functionals.appendix_diag(
                dist, delta, eta, ctx.grids.get('x'), k,
                ctx.scenario.get('mode') or 'auto', ctx.seed,
            )
        data = {
            'x': diag.x,
            'ratio_half': diag.ratio_half,
            'ratio_tilde': diag.ratio_tilde,
            'ratio_chain': diag.ratio_chain,
        }
        reports.append(ctx.report(
            'appendix', f'appendix_delta_{delta:g}', data, delta=delta,
            kappa=diag.kappa, bounded=diag.bounded, k=k,
        ))
    return reports


SCENARIO_RUNNERS = {
    'dist_build': run_dist_build,
    'renewal_scan': run_renewal_scan,
    'srt_ratio': run_srt_ratio,
    'an_scan': run_an_scan,
    'lld_scan': run_lld_scan,
    'counterexample_demo': run_counterexample_demo,
    'appendix_diag': run_appendix_diag,
}


def _ledger_start(config, out_dir):
    try:
        return Run.objects.create(
            scenario=config['scenario']['name'], seed=config['seed'],
            config=json.loads(json.dumps(
                config, default=dist_factory.json_default
            )),
            output_dir=str(out_dir),
        )
    except DatabaseError as error:
        logger.warning('журнал прогонов недоступен: %s', error)
        return None


def _ledger_finish(run, status, exit_code, manifest, artifacts):
    if run is None:
        return
    try:
        run.status = status
        run.exit_code = exit_code
        run.manifest = json.loads(json.dumps(
            manifest, default=dist_factory.json_default
        ))
        run.finished = timezone.now()
        run.save()
        Artifact.objects.bulk_create(
            Artifact(run=run, kind=kind, path=path, columns=columns)
            for kind, path, columns in artifacts
        )
    except DatabaseError as error:
        logger.warning('журнал прогонов не обновлён: %s', error)


def _lab_overrides(config, threads, tolerances):
    lab = dict(settings.RENEWAL_LAB)
    lab['TOLERANCES'] = {
        **lab['TOLERANCES'], **config['tolerances'], **(tolerances or {}),
    }
    lab['THREADS'] = threads
    return lab


def _write_reports(reports, out_dir, config):
    formats = config['output'].get('formats') or ['csv']
    plots = config['output'].get('plots', False)
    artifacts = []
    for report in reports:
        for fmt in formats:
            path = export(report, Path(out_dir) / f'{report.name}.{fmt}', fmt)
            artifacts.append((report.kind, str(path), report.columns))
        if plots:
            image = safe_plot(report, Path(out_dir) / f'{report.name}.png')
            if image is not None:
                artifacts.append(('plot', str(image), []))
    return artifacts


def run_scenario(config, out_dir=None, seed=None, threads=None,
                 tolerances=None):
    """Выполняет сценарий; InvariantViolation и ошибки I/O пробрасываются."""
    config = dict(config)
    if seed is not None:
        config['seed'] = seed
    out_dir = Path(
        out_dir or config['output'].get('dir')
        or Path(lab_setting('OUTPUT_DIR')) / config['scenario']['name']
    )
    threads = threads or lab_setting('THREADS')
    out_dir.mkdir(parents=True, exist_ok=True)
    run = _ledger_start(config, out_dir)
    graph = OperationGraph()
    status, exit_code = 'failed', EXIT_INVARIANT
    ctx = None
    with override_settings(
        RENEWAL_LAB=_lab_overrides(config, threads, tolerances)
    ):
        try:
            with graph.step('build_distribution', ['config'], ['dist']):
                dist = build_distribution(config)
            ctx = RunContext(config, dist, graph, config['seed'], threads)
            runner = SCENARIO_RUNNERS[config['scenario']['name']]
            reports = runner(ctx, out_dir)
            artifacts = _write_reports(reports, out_dir, config)
            status, exit_code = 'ok', EXIT_OK
        except InvariantViolation as error:
            logger.error('нарушен инвариант: %s', error)
            _fail(run, out_dir, config, graph, ctx, str(error), EXIT_INVARIANT)
            raise
        except OSError as error:
            _fail(run, out_dir, config, graph, ctx, str(error), EXIT_IO)
            raise
        except LabError as error:
            _fail(run, out_dir, config, graph, ctx, str(error), EXIT_USAGE)
            raise
    _, manifest = write_manifest(
        out_dir, config, ctx.constants, graph, ctx.flags,
        [path for _, path, _ in artifacts], status,
    )
    _ledger_finish(run, status, exit_code, manifest, artifacts)
    for flag in ctx.flags:
        logger.warning('флаг: %s', flag)
    logger.info('сценарий %s завершён: %s', config['scenario']['name'],
                out_dir)
    return ScenarioOutcome(
        exit_code, out_dir, manifest, reports,
        None if run is None else run.pk,
    )


def _fail(run, out_dir, config, graph, ctx, message, exit_code):
    flags = [] if ctx is None else ctx.flags
    constants = {} if ctx is None else ctx.constants
    try:
        _, manifest = write_manifest(
            out_dir, config, constants, graph, flags + [message], [],
            'failed',
        )
    except OSError as error:
        logger.error('manifest не записан: %s', error)
        manifest = {'status': 'failed', 'error': message}
    _ledger_finish(run, 'failed', exit_code, manifest, [])
