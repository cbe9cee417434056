"""Exception hierarchy shared across the toolkit.

Every error raised by misaudit derives from :class:`MisauditError` so callers
(and the CLI) can distinguish toolkit failures from programming errors.
"""


class MisauditError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(MisauditError):
    """Invalid registry, config file, or run setup."""


class DomainError(MisauditError):
    """An argument is outside the operation's domain (empty family, bad index, ...)."""


class IntegrityError(MisauditError):
    """Data that should be complete/consistent is not (missing subset, dangling clip, ...)."""


class IngestionError(MisauditError):
    """A source dataset file could not be parsed."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        loc = ""
        if path is not None:
            loc = f" ({path}" + (f":{line}" if line is not None else "") + ")"
        super().__init__(message + loc)
        self.path = path
        self.line = line


class AssetError(MisauditError):
    """Clip assets are unusable (e.g. no frames at all)."""


class ContractError(MisauditError):
    """A caller violated an inter-module contract (batching rules, empty choices, ...)."""


class PlanningError(MisauditError):
    """Permutation constraints cannot be satisfied."""


class AuthenticationError(MisauditError):
    """The probing backend rejected our credentials; fatal for the run."""


class ResponseParseError(MisauditError):
    """Model output could not be decoded at all (triggers the one reformat retry)."""


class UndefinedAgreementError(MisauditError):
    """Agreement statistic undefined (expected agreement equals 1)."""


class PreconditionError(MisauditError):
    """A pipeline stage precondition is unmet (missing artifact, missing API key)."""

    def __init__(self, message: str, missing_path: str | None = None):
        super().__init__(message)
        self.missing_path = missing_path
