from ._base import LabCommand


class Command(LabCommand):
    help = 'Отношения функционалов I₁, Ĩ₁ и цепочек.'
    scenario_name = 'appendix_diag'
