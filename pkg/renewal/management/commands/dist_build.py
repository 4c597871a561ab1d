from ._base import LabCommand


class Command(LabCommand):
    help = 'Строит распределение, проверяет хвосты и сохраняет его.'
    scenario_name = 'dist_build'
