from ._base import LabCommand


class Command(LabCommand):
    help = 'Запускает сценарий, указанный в конфигурации.'
    scenario_name = None
