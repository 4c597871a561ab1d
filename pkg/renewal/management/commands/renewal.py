from ._base import LabCommand


class Command(LabCommand):
    help = 'Мера восстановления u(x) и интегральная теорема восстановления.'
    scenario_name = 'renewal_scan'
