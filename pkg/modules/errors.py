"""Exceptions raised by the hetnet correlation toolkit."""


class HetnetError(Exception):
    """Base class of every error raised by the toolkit."""


class ModelError(HetnetError, ValueError):
    """Invalid parameter or domain violation."""


class PresetError(ModelError):
    """Unknown figure preset."""


class ModeConflictError(HetnetError, ValueError):
    """The requested quantity is undefined for the given path loss law."""


class QuadratureError(HetnetError, ArithmeticError):
    """Numerical integration did not converge."""


class ReportError(HetnetError):
    """Sweep rows lack the columns a report needs."""
