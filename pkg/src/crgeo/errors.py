"""Exception types raised by the crgeo package."""


class CrgeoError(Exception):
    """Base class for all crgeo errors."""


class ChartDomainError(CrgeoError):
    """A point lies outside the open chart box."""


class DegenerateStructureError(CrgeoError):
    """A structure input is singular where it must not be (Levi form, frame pivots, Reeb solve)."""


class ContractViolation(CrgeoError):
    """An operation received arguments outside its stated contract (e.g. non-horizontal vectors)."""


class NormalNeighborhoodError(CrgeoError):
    """log_map failed to converge; the target is outside the working normal neighborhood."""


class IntegrationDomainError(CrgeoError):
    """A curve left the chart before integration finished."""


class SpecParseError(CrgeoError):
    """A structure spec file or expression failed to parse.

    Carries a human-readable location in ``where``.
    """

    def __init__(self, message, where=None):
        super().__init__(message if where is None else f"{message} (at {where})")
        self.where = where


class ConfigError(CrgeoError):
    """A suite or CLI configuration is invalid."""
