"""Общая часть команд лаборатории: флаги, конфигурация и коды выхода."""
import json
import logging

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from renewal.exceptions import InvariantViolation, LabError
from renewal.forms import TolerancesForm
from renewal.scenarios import (
    EXIT_INVARIANT, EXIT_IO, EXIT_USAGE, run_scenario, validate_config,
)

VERBOSITY_LEVELS = {0: logging.WARNING, 1: logging.INFO}
BAD_TOLERANCE = 'Ожидается --tolerance NAME=VALUE, получено: {value}'


def parse_tolerances(items):
    """--tolerance NAME=VALUE -> проверенный словарь допусков."""
    raw = {}
    for item in items or ():
        name, sep, value = item.partition('=')
        if not sep or not name:
            raise CommandError(
                BAD_TOLERANCE.format(value=item), returncode=EXIT_USAGE
            )
        raw[name.strip()] = value.strip()
    form = TolerancesForm(data=raw)
    if not form.is_valid():
        raise CommandError(
            f'Неверные допуски: {form.errors.as_text()}',
            returncode=EXIT_USAGE,
        )
    return form.section()


class LabCommand(BaseCommand):
    """Команда, запускающая один сценарий по файлу конфигурации."""

    scenario_name = None

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True,
                            help='JSON-файл конфигурации прогона')
        parser.add_argument('--out', help='каталог результатов')
        parser.add_argument('--seed', type=int, help='зерно ГСЧ')
        parser.add_argument('--threads', type=int, help='число потоков')
        parser.add_argument(
            '--tolerance', action='append', default=[],
            metavar='NAME=VALUE', help='переопределение допуска',
        )

    def read_config(self, path):
        try:
            with open(path, encoding='utf-8') as stream:
                raw = json.load(stream)
        except OSError as error:
            raise CommandError(str(error), returncode=EXIT_IO)
        except json.JSONDecodeError as error:
            raise CommandError(
                f'{path}: не JSON ({error})', returncode=EXIT_USAGE
            )
        if self.scenario_name is not None and isinstance(raw, dict):
            scenario = raw.get('scenario') or {}
            raw['scenario'] = {**scenario, 'name': self.scenario_name}
        try:
            return validate_config(raw)
        except ValidationError as error:
            raise CommandError(
                '; '.join(error.messages), returncode=EXIT_USAGE
            )

    def handle(self, *args, **options):
        logging.getLogger('renewal').setLevel(
            VERBOSITY_LEVELS.get(options['verbosity'], logging.DEBUG)
        )
        config = self.read_config(options['config'])
        tolerances = parse_tolerances(options['tolerance'])
        try:
            outcome = run_scenario(
                config, options['out'], options['seed'], options['threads'],
                tolerances,
            )
        except InvariantViolation as error:
            raise CommandError(str(error), returncode=EXIT_INVARIANT)
        except OSError as error:
            raise CommandError(str(error), returncode=EXIT_IO)
        except LabError as error:
            raise CommandError(str(error), returncode=EXIT_USAGE)
        for report in outcome.reports:
            self.stdout.write(f'{report.name}: {len(report.table)} строк')
        for key, value in outcome.manifest['constants'].items():
            self.stdout.write(f'{key} = {value}')
        self.stdout.write(self.style.SUCCESS(
            f'Готово: {outcome.out_dir}'
        ))
