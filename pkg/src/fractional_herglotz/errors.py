"""Exception types shared across the package."""


class HerglotzError(Exception):
    """Base class for every error raised by fractional_herglotz."""


class DomainError(HerglotzError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class EvaluationError(HerglotzError):
    """A Lagrangian produced a non-finite value while integrating z."""

    def __init__(self, message: str, node: int):
        super().__init__(f"{message} (node {node})")
        self.node = node


class ContractError(HerglotzError):
    """An operation was called outside its contract."""


class SolverSetupError(HerglotzError):
    """The direct method cannot start from the given initial guess."""


class ConfigError(HerglotzError):
    """A run configuration is malformed, incomplete or inconsistent.

    ``kind`` is one of ``malformed``, ``unknown_key``, ``missing_field``,
    ``domain``, ``conflict`` or ``missing_file``.
    """

    def __init__(self, kind: str, message: str):
        super().__init__(f"{kind}: {message}")
        self.kind = kind
