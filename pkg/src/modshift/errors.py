"""Exception hierarchy shared by all modules."""


class ModShiftError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(ModShiftError, ValueError):
    """Malformed configuration, dimension mismatch or missing input."""


class ProtocolError(ModShiftError):
    """Round bookkeeping broken: missing/duplicate agents, mixed rounds."""


class ConstraintViolation(ModShiftError, ValueError):
    """A shift vector does not satisfy sum(gamma) == -1."""


class UsageError(ModShiftError):
    """An operation was invoked in a mode it does not support."""


class DomainError(ModShiftError, ValueError):
    """A closed form was requested outside the regime where it holds."""


class SingularBaseError(ModShiftError, ZeroDivisionError):
    """The diagonal base matrix of a determinant-lemma evaluation is singular."""


class DivergenceError(ModShiftError, ArithmeticError):
    """Non-finite weights appeared during local training."""

    def __init__(self, message, round=None, agent_id=None):
        self.round = round
        self.agent_id = agent_id
        where = []
        if round is not None:
            where.append(f"round {round}")
        if agent_id is not None:
            where.append(f"agent {agent_id}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
