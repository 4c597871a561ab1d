from django.core.management.base import BaseCommand, CommandError

from renewal.exceptions import LabError
from renewal.reports import FORMATS, SCHEMAS, export, read_report
from renewal.scenarios import EXIT_IO, EXIT_USAGE


class Command(BaseCommand):
    help = 'Перекладывает отчёт в CSV или JSON без потери точности.'

    def add_arguments(self, parser):
        parser.add_argument('report', help='CSV или JSON отчёта')
        parser.add_argument('--out', required=True)
        parser.add_argument('--format', choices=FORMATS, default='json')
        parser.add_argument(
            '--kind', choices=sorted(SCHEMAS),
            help='вид отчёта (нужен для CSV)',
        )

    def handle(self, *args, **options):
        try:
            report = read_report(options['report'], options['kind'])
            path = export(report, options['out'], options['format'])
        except OSError as error:
            raise CommandError(str(error), returncode=EXIT_IO)
        except (LabError, KeyError, ValueError) as error:
            raise CommandError(str(error), returncode=EXIT_USAGE)
        self.stdout.write(self.style.SUCCESS(f'Записано: {path}'))
