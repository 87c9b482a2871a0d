class InvalidArgument(ValueError):
    pass


class SamplingError(ValueError):
    """Raised when a sampled function is not finite at some grid point."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class EvaluationError(ValueError):
    pass
