from django.conf import settings


def lab_setting(name):
    """Значение из settings.RENEWAL_LAB (верхний уровень или TOLERANCES)."""
    lab = settings.RENEWAL_LAB
    if name in lab:
        return lab[name]
    return lab['TOLERANCES'][name]


def tolerance(name, overrides=None):
    if overrides and name in overrides:
        return overrides[name]
    return settings.RENEWAL_LAB['TOLERANCES'][name]
