from ._base import LabCommand


class Command(LabCommand):
    help = 'Локальные большие уклонения, Фук-Нагаев и ЛПТ Стоуна.'
    scenario_name = 'lld_scan'
