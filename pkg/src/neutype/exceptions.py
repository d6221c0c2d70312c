"""Exception hierarchy shared by all neutype modules.

The CLI maps :class:`ConfigError` to exit status 1 and :class:`DataError`
to exit status 2.
"""


class NeuTypeError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(NeuTypeError, ValueError):
    """Invalid settings, unknown config keys, or an unusable input mask."""


class DataError(NeuTypeError):
    """Problems with input files or the data they contain."""


class ParseError(DataError, ValueError):
    """A malformed N-Triples line.

    Recoverable: ingestion counts and skips these.
    """

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}: "
        elif where:
            where += " "
        super().__init__(where + message)


class UnknownEntityError(DataError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class UnknownTypeError(DataError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class FeatureError(DataError):
    """A requested input component cannot be built for an entity."""


class TrainingError(NeuTypeError):
    """Raised when training diverges (non-finite loss)."""


class BaselineError(DataError):
    pass


class EvaluationError(DataError):
    pass


class SamplerError(DataError):
    pass
