"""Статические графики по таблицам отчётов (backend Agg)."""
import logging
from pathlib import Path

import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt  # noqa: E402

logger = logging.getLogger(__name__)

# Вид отчёта -> (ось x, ось y, колонка группировки, логарифмические оси).
LAYOUTS = {
    'renewal': ('x', 'integrated_ratio', None, True),
    'srt_ratio': ('x', 'ratio', None, True),
    'an_profile': ('x', 'R', 'delta', True),
    'eta_sweep': ('x', 'R', 'eta', True),
    'suff': ('x', 'statistic', None, True),
    'lld': ('n', 'ratio', 'x', True),
    'lld_unconstrained': ('n', 'ratio', 'x', True),
    'fuk_nagaev': ('n', 'ratio', 'x', True),
    'stone_llt': ('x_over_an', 'scaled_mass', 'n', False),
    'tail': ('x', 'p_hat', None, True),
    'basic_bound': ('z', 'bound_ratio', 'n', True),
    'appendix': ('x', 'ratio_chain', None, True),
}


def plot_report(report, path):
    x_col, y_col, group, logscale = LAYOUTS[report.kind]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    try:
        table = report.table
        if group is None:
            ax.plot(table[x_col], table[y_col], 'o-', ms=3)
        else:
            for key, part in table.groupby(group):
                ax.plot(part[x_col], part[y_col], 'o-', ms=3,
                        label=f'{group}={key:g}')
            ax.legend(fontsize='small')
        if logscale:
            ax.set_xscale('log')
            if (table[y_col] > 0).all():
                ax.set_yscale('log')
        ax.set_xlabel(x_col)
        ax.set_ylabel(y_col)
        ax.set_title(report.name)
        fig.tight_layout()
        fig.savefig(path, dpi=120)
    finally:
        plt.close(fig)
    return Path(path)


def safe_plot(report, path):
    """Ошибка построения графика не прерывает численный прогон."""
    try:
        return plot_report(report, path)
    except Exception as error:
        logger.warning('график %s не построен: %s', report.name, error)
        return None
