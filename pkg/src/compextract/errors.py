"""Exception hierarchy. Each class maps to one CLI exit code."""


class CompextractError(Exception):
    exit_code = 1


class ConfigError(CompextractError):
    """Missing credential, bad flag combination, unusable endpoint config."""

    exit_code = 3


class InputFormatError(CompextractError):
    """A file on disk does not match its documented format."""

    exit_code = 4

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class CorpusError(InputFormatError):
    pass


class EndpointError(CompextractError):
    """The chat-completion endpoint failed (after retries, if transient)."""

    exit_code = 5

    def __init__(self, message, status=None, attempts=0):
        self.status = status
        self.attempts = attempts
        super().__init__(message)


class WeightParseError(ValueError):
    pass


class NormalizationError(ValueError):
    """A raw record could not be normalized and is quarantined."""

    def __init__(self, reason, message):
        self.reason = reason
        super().__init__(message)
