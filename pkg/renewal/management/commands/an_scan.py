from ._base import LabCommand


class Command(LabCommand):
    help = 'Профили a.n. функционалов и вердикты.'
    scenario_name = 'an_scan'
