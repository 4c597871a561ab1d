from ._base import LabCommand


class Command(LabCommand):
    help = 'Парные профили для контрпримеров к SRT.'
    scenario_name = 'counterexample_demo'
