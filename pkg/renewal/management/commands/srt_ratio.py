from ._base import LabCommand


class Command(LabCommand):
    help = 'Отношение SRT U((x-h, x])·x/(h·C·A(x)) по сетке x.'
    scenario_name = 'srt_ratio'
