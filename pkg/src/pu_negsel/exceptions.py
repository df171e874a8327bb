class DataError(ValueError):
    """Malformed or inconsistent input data."""

    def __init__(self, message, path=None, lineno=None):
        self.path = path
        self.lineno = lineno
        where = ""
        if path is not None:
            where = f"{path}:{lineno}: " if lineno is not None else f"{path}: "
        super().__init__(where + message)


class DegenerateTrainingSetError(ValueError):
    """Raised when a training set lacks one of the two classes."""

    def __init__(self, message="degenerate training set"):
        super().__init__(message)
