class LabError(Exception):
    """Базовое исключение лаборатории."""


class DomainError(LabError, ValueError):
    """Аргумент вне области определения операции."""


class ConstructionError(LabError):
    """Построитель не может выполнить конструкцию в заданном окне."""


class UnsupportedModeError(LabError):
    """Запрошенный режим вычисления не поддерживается."""


class SpanMismatchError(LabError):
    """Свёртка векторов на решётках с разным шагом."""


class InvariantViolation(LabError):
    """Нарушен жёсткий инвариант (сохранение массы, невязка, журнал)."""
