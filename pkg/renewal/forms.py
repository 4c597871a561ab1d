"""Проверка файла конфигурации прогона: одна форма на секцию."""
from django import forms
from django.core.exceptions import ValidationError

from .dist_factory import ZETA_FUNCTIONS
from .functionals import CHAIN_SELECTOR, MODES, T_SELECTOR
from .rv_kernel import Family

SCENARIOS = (
    'renewal_scan',
    'srt_ratio',
    'an_scan',
    'lld_scan',
    'counterexample_demo',
    'appendix_diag',
    'dist_build',
)
BUILDERS = (
    'baseline',
    'spiky',
    'counter_renewal',
    'two_sided_counter',
    'point_mass',
    'custom',
    'load',
)
# Построители, которые сами задают модель хвоста по alpha.
SELF_MODELLED = ('counter_renewal', 'two_sided_counter', 'load')
COUNTER_BUILDERS = ('counter_renewal', 'two_sided_counter')
FIXED_FUNCTIONALS = ('I1_plus', 'tilde_I1_plus', 'tilde_I1_star')

UNKNOWN_KEY = 'Неизвестный ключ: {key}.'
NOT_A_SECTION = 'Секция должна быть объектом JSON.'
ALPHA_RANGE = 'alpha должна лежать в (0, 1) или (1, 2).'
BETA_RANGE = 'beta должна быть не меньше -alpha.'
SPLINE_TABLE = 'Для семейства spline нужна таблица [[x, A(x)], ...].'
UNKNOWN_ZETA = 'Неизвестная функция zeta.'
SIDED_BAD = 'sided: positive или two_sided.'
EMPTY_GRID = 'Сетка не должна быть пустой.'
DELTA_RANGE = 'Все delta должны лежать в (0, 1].'
X_POSITIVE = 'Все x должны быть целыми и положительными.'
N_POSITIVE = 'Все n должны быть целыми и положительными.'
ETA_RANGE = 'Все eta должны лежать в (0, 1).'
GAMMA_POSITIVE = 'Все gamma должны быть положительными.'
J_INTERVAL = 'J задаётся парой целых lo < hi.'
UNKNOWN_FUNCTIONAL = 'Неизвестный функционал.'
NEGATIVE_TOLERANCE = 'Допуски должны быть положительными.'
MODEL_REQUIRED = 'Секция rv_kernel обязательна для построителя {builder}.'
ALPHA_REQUIRED = 'Построителю {builder} нужна alpha.'
PATH_REQUIRED = 'Для построителя load нужен path.'
SEED_REQUIRED = 'Сценарий использует Монте-Карло: укажите seed.'


class SectionForm(forms.Form):
    """Форма секции: лишние ключи считаются ошибкой."""

    def clean(self):
        cleaned_data = super().clean()
        extra = sorted(set(self.data) - set(self.fields))
        if extra:
            raise ValidationError(
                [UNKNOWN_KEY.format(key=key) for key in extra]
            )
        return cleaned_data

    def section(self):
        """cleaned_data без незаданных полей."""
        return {
            key: value for key, value in self.cleaned_data.items()
            if key in self.data
        }


def _number_list(value, message, kind=float):
    if not isinstance(value, (list, tuple)) or not value:
        raise ValidationError(EMPTY_GRID)
    try:
        numbers = [kind(item) for item in value]
    except (TypeError, ValueError):
        raise ValidationError(message)
    if kind is int and any(
        isinstance(item, float) and not item.is_integer() for item in value
    ):
        raise ValidationError(message)
    return numbers


class TailModelForm(SectionForm):
    alpha = forms.FloatField()
    family = forms.ChoiceField(
        choices=[(family.value, family.value) for family in Family],
        required=False,
    )
    beta = forms.FloatField(required=False)
    table = forms.JSONField(required=False)

    def clean_alpha(self):
        alpha = self.cleaned_data['alpha']
        if not (0 < alpha < 1 or 1 < alpha < 2):
            raise ValidationError(ALPHA_RANGE)
        return alpha

    def clean(self):
        cleaned_data = super().clean()
        alpha = cleaned_data.get('alpha')
        beta = cleaned_data.get('beta')
        if alpha is not None and beta is not None and beta < -alpha:
            self.add_error('beta', BETA_RANGE)
        if cleaned_data.get('family') == Family.SPLINE.value:
            table = cleaned_data.get('table')
            if not isinstance(table, list) or len(table) < 2:
                self.add_error('table', SPLINE_TABLE)
        return cleaned_data


class DistributionForm(SectionForm):
    builder = forms.ChoiceField(choices=[(b, b) for b in BUILDERS])
    sided = forms.CharField(required=False)
    x_max = forms.IntegerField(min_value=2, required=False)
    p = forms.FloatField(min_value=0, required=False)
    q = forms.FloatField(min_value=0, required=False)
    alpha = forms.FloatField(required=False)
    zeta = forms.CharField(required=False)
    x_seq = forms.JSONField(required=False)
    eps_seq = forms.JSONField(required=False)
    atoms = forms.JSONField(required=False)
    point = forms.IntegerField(required=False)
    path = forms.CharField(required=False)

    def clean_sided(self):
        sided = self.cleaned_data['sided']
        if sided and sided not in ('positive', 'two_sided'):
            raise ValidationError(SIDED_BAD)
        return sided

    def clean_zeta(self):
        zeta = self.cleaned_data['zeta']
        if zeta and zeta not in ZETA_FUNCTIONS:
            raise ValidationError(UNKNOWN_ZETA)
        return zeta

    def clean(self):
        cleaned_data = super().clean()
        if cleaned_data.get('builder') == 'load' and not cleaned_data.get(
            'path'
        ):
            self.add_error('path', PATH_REQUIRED)
        return cleaned_data


class ScenarioForm(SectionForm):
    name = forms.ChoiceField(choices=[(s, s) for s in SCENARIOS])
    functional = forms.CharField(required=False)
    functionals = forms.JSONField(required=False)
    mode = forms.ChoiceField(choices=[(m, m) for m in MODES], required=False)
    method = forms.ChoiceField(
        choices=[('exact', 'exact'), ('monte_carlo', 'monte_carlo')],
        required=False,
    )
    renewal_method = forms.ChoiceField(
        choices=[('newton', 'newton'), ('direct', 'direct')],
        required=False,
    )
    window = forms.IntegerField(min_value=2, required=False)
    samples = forms.IntegerField(min_value=1, required=False)
    C = forms.FloatField(min_value=0, required=False)
    rho = forms.FloatField(min_value=0, max_value=1, required=False)
    k = forms.IntegerField(min_value=1, required=False)
    suff = forms.ChoiceField(
        choices=[(m, m) for m in ('D97', 'suff0', 'cond_half', 'suffrw')],
        required=False,
    )
    gamma_suff = forms.FloatField(required=False)

    def _check_selector(self, selector):
        if selector in FIXED_FUNCTIONALS:
            return
        if CHAIN_SELECTOR.match(selector) or T_SELECTOR.match(selector):
            return
        raise ValidationError(UNKNOWN_FUNCTIONAL)

    def clean_functional(self):
        functional = self.cleaned_data['functional']
        if functional:
            self._check_selector(functional)
        return functional

    def clean_functionals(self):
        functionals = self.cleaned_data['functionals']
        if functionals is None:
            return functionals
        if not isinstance(functionals, list) or not functionals:
            raise ValidationError(EMPTY_GRID)
        for selector in functionals:
            self._check_selector(str(selector))
        return functionals

    def uses_monte_carlo(self):
        data = self.cleaned_data
        if data.get('method') == 'monte_carlo':
            return True
        selectors = [data.get('functional') or ''] + list(
            data.get('functionals') or []
        )
        chains = [s for s in selectors if _is_deep_chain(s)]
        return bool(chains) and data.get('mode') != 'exact'


# Сценарии, где C(α, ρ) при q > 0 оценивается по устойчивой выборке.
SRT_SCENARIOS = ('srt_ratio', 'renewal_scan')


def _may_be_two_sided(dist_section):
    if dist_section.get('builder') in ('two_sided_counter', 'load'):
        return True
    return (
        dist_section.get('sided') == 'two_sided'
        or (dist_section.get('q') or 0) > 0
    )


def reaches_monte_carlo(scenario, dist_section):
    """Может ли прогон дойти до случайной выборки при данных секциях."""
    name = scenario.get('name')
    if name == 'lld_scan':
        # Калибровка масштаба сэмплирует устойчивый закон.
        return True
    if name in SRT_SCENARIOS:
        return (
            scenario.get('C') is None and _may_be_two_sided(dist_section)
        )
    if name == 'appendix_diag':
        return (
            (scenario.get('k') or 2) > 1
            and scenario.get('mode') != 'exact'
        )
    return False


def _is_deep_chain(selector):
    """Цепочки с k >= 2 и Ĩ₁* могут уйти в Монте-Карло."""
    if selector == 'tilde_I1_star':
        return True
    match = CHAIN_SELECTOR.match(selector)
    return match is not None and int(match['k']) > 1


class GridsForm(SectionForm):
    delta = forms.JSONField(required=False)
    x = forms.JSONField(required=False)
    n = forms.JSONField(required=False)
    eta = forms.JSONField(required=False)
    gamma = forms.JSONField(required=False)
    J = forms.JSONField(required=False)

    def clean_delta(self):
        delta = self.cleaned_data['delta']
        if delta is None:
            return delta
        values = _number_list(delta, DELTA_RANGE)
        if any(not 0 < value <= 1 for value in values):
            raise ValidationError(DELTA_RANGE)
        return values

    def clean_x(self):
        x = self.cleaned_data['x']
        if x is None:
            return x
        values = _number_list(x, X_POSITIVE, int)
        if any(value < 1 for value in values):
            raise ValidationError(X_POSITIVE)
        return values

    def clean_n(self):
        n = self.cleaned_data['n']
        if n is None:
            return n
        values = _number_list(n, N_POSITIVE, int)
        if any(value < 1 for value in values):
            raise ValidationError(N_POSITIVE)
        return values

    def clean_eta(self):
        eta = self.cleaned_data['eta']
        if eta is None:
            return eta
        values = _number_list(eta, ETA_RANGE)
        if any(not 0 < value < 1 for value in values):
            raise ValidationError(ETA_RANGE)
        return values

    def clean_gamma(self):
        gamma = self.cleaned_data['gamma']
        if gamma is None:
            return gamma
        values = _number_list(gamma, GAMMA_POSITIVE)
        if any(value <= 0 for value in values):
            raise ValidationError(GAMMA_POSITIVE)
        return values

    def clean_J(self):
        interval = self.cleaned_data['J']
        if interval is None:
            return interval
        values = _number_list(interval, J_INTERVAL, int)
        if len(values) != 2 or values[0] >= values[1]:
            raise ValidationError(J_INTERVAL)
        return tuple(values)


class TolerancesForm(SectionForm):
    conservation = forms.FloatField(required=False)
    clip_step = forms.FloatField(required=False)
    clip_abort = forms.FloatField(required=False)
    renewal_residual = forms.FloatField(required=False)
    fft_crossover = forms.IntegerField(min_value=1, required=False)
    chain_node_budget = forms.IntegerField(min_value=1, required=False)
    srt_truncation_flag = forms.FloatField(required=False)
    srt_truncation_tol = forms.FloatField(required=False)
    srt_n_cap = forms.IntegerField(min_value=1, required=False)
    two_sided_window_factor = forms.IntegerField(min_value=1, required=False)
    an_threshold = forms.FloatField(required=False)
    an_ceiling = forms.FloatField(required=False)
    tail_band = forms.FloatField(required=False)
    suff_growth_band = forms.FloatField(required=False)
    series_cancellation = forms.FloatField(required=False)
    mc_samples = forms.IntegerField(min_value=1, required=False)
    mc_sigma = forms.FloatField(required=False)

    def clean(self):
        cleaned_data = super().clean()
        for name, value in list(cleaned_data.items()):
            if value is not None and value <= 0:
                self.add_error(name, NEGATIVE_TOLERANCE)
        return cleaned_data


class OutputForm(SectionForm):
    dir = forms.CharField(required=False)
    formats = forms.JSONField(required=False)
    plots = forms.BooleanField(required=False)


SECTION_FORMS = {
    'rv_kernel': TailModelForm,
    'dist_factory': DistributionForm,
    'scenario': ScenarioForm,
    'grids': GridsForm,
    'tolerances': TolerancesForm,
    'output': OutputForm,
}


class RunConfigForm(SectionForm):
    """Весь файл конфигурации; секции проверяются своими формами."""

    rv_kernel = forms.JSONField(required=False)
    dist_factory = forms.JSONField()
    scenario = forms.JSONField()
    grids = forms.JSONField(required=False)
    tolerances = forms.JSONField(required=False)
    seed = forms.IntegerField(min_value=0, required=False)
    output = forms.JSONField(required=False)

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.sections = {}

    def _section(self, name):
        value = self.cleaned_data[name]
        if value is None:
            value = {}
        if not isinstance(value, dict):
            raise ValidationError(NOT_A_SECTION)
        form = SECTION_FORMS[name](data=value)
        if not form.is_valid():
            raise ValidationError([
                f'{field}: {message}'
                for field, messages in form.errors.items()
                for message in messages
            ])
        self.sections[name] = form
        return form.section()

    def clean_rv_kernel(self):
        if self.cleaned_data['rv_kernel'] is None:
            return None
        return self._section('rv_kernel')

    def clean_dist_factory(self):
        return self._section('dist_factory')

    def clean_scenario(self):
        return self._section('scenario')

    def clean_grids(self):
        return self._section('grids')

    def clean_tolerances(self):
        return self._section('tolerances')

    def clean_output(self):
        return self._section('output')

    def clean(self):
        cleaned_data = super().clean()
        builder = (cleaned_data.get('dist_factory') or {}).get('builder')
        if (
            builder and builder not in SELF_MODELLED
            and not cleaned_data.get('rv_kernel')
        ):
            self.add_error('rv_kernel', MODEL_REQUIRED.format(builder=builder))
        alpha = (cleaned_data.get('dist_factory') or {}).get('alpha') or (
            cleaned_data.get('rv_kernel') or {}
        ).get('alpha')
        if builder in COUNTER_BUILDERS and alpha is None:
            self.add_error(
                'dist_factory', ALPHA_REQUIRED.format(builder=builder)
            )
        scenario = self.sections.get('scenario')
        if (
            scenario is not None and 'seed' not in self.data
            and (
                scenario.uses_monte_carlo()
                or reaches_monte_carlo(
                    cleaned_data.get('scenario') or {},
                    cleaned_data.get('dist_factory') or {},
                )
            )
        ):
            self.add_error('seed', SEED_REQUIRED)
        return cleaned_data

    def config(self):
        """Нормализованная конфигурация со всеми секциями."""
        data = self.cleaned_data
        return {
            'rv_kernel': data.get('rv_kernel'),
            'dist_factory': data['dist_factory'],
            'scenario': data['scenario'],
            'grids': data.get('grids') or {},
            'tolerances': data.get('tolerances') or {},
            'seed': data.get('seed') or 0,
            'output': data.get('output') or {},
        }
