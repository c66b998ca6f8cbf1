class RqaError(Exception):
    """
        Base class for every error raised by the answer-understanding toolkit.
    """


class DimensionError(RqaError, ValueError):
    pass


class ShapeError(RqaError, ValueError):
    pass


class EmptySupportError(RqaError, ValueError):
    """
        Raised when a mask selects no position at all (softmax, mean pooling, encoding).
    """


class LabelIndexError(RqaError, IndexError):
    pass


class ConfigError(RqaError, ValueError):
    pass


class ValidationError(RqaError, ValueError):
    pass


class SpanResolutionError(ValidationError):
    pass


class SizeError(RqaError, ValueError):
    pass


class FormatError(RqaError, ValueError):
    pass


class ParseError(RqaError, ValueError):
    """
        Raised when a file cannot be parsed.

        Args:
            message (str): What went wrong.
            path (str, optional): The file being read.
            line (int, optional): The 1-based line number of the offending line.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line

        location = ''
        if path is not None:
            location = f'{path}'
        if line is not None:
            location = f'{location}:{line}' if location else f'line {line}'

        super().__init__(f'{location}: {message}' if location else message)


class TrainingError(RqaError, RuntimeError):
    def __init__(self, message, epoch=None):
        self.epoch = epoch
        super().__init__(message if epoch is None else f'epoch {epoch}: {message}')


class CompatibilityError(RqaError, ValueError):
    pass


class UnsupportedVersionError(RqaError, ValueError):
    pass
