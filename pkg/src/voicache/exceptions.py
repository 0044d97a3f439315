class VoiCacheError(Exception):
    """
    Base exception for all exceptions raised by voicache.
    """


class InvalidDimension(VoiCacheError):
    """
    Raised when a feature space dimension is not a positive integer.
    """


class DimensionMismatch(VoiCacheError):
    """
    Raised when a vector doesn't match the dimension of the posterior or the
    learner it is given to.
    """


class NonPositiveVariance(VoiCacheError):
    """
    Raised when moment matching is requested for a projection with zero or
    negative variance.
    """


class DuplicatePoint(VoiCacheError):
    """
    Raised when a labeled point already has a site in the posterior.
    """


class UnknownSite(VoiCacheError):
    """
    Raised when removing a site that isn't part of the posterior.
    """


class NearSingularCavity(VoiCacheError):
    """
    Raised when removing a site would require dividing by a (nearly) zero
    cavity variance. The point must be treated as non-removable for now.
    """


class EmptyBuffer(VoiCacheError):
    """
    Raised when a value of information is requested with an empty context
    buffer.
    """


class UnknownActivePoint(VoiCacheError):
    """
    Raised when a point id isn't in the active set.
    """


class UnknownCachedPoint(VoiCacheError):
    """
    Raised when a point id isn't in the cache.
    """


class OracleFailure(VoiCacheError):
    """
    Raised when a probe was attempted but the oracle didn't return a valid
    label.
    """


class InvalidConfig(VoiCacheError):
    """
    Raised when an experiment or generator configuration is invalid.
    """


class UnknownPolicy(VoiCacheError):
    """
    Raised when a probing policy name isn't known.
    """


class StreamFileNotFound(VoiCacheError, FileNotFoundError):
    """
    Raised when a CSV stream file doesn't exist.
    """


class _StreamLineError(VoiCacheError):
    def __init__(self, line_number, message):
        """
        :param int|None line_number: 1-based physical line in the stream file,
            None when the file can't be read up to a line.
        :param str message: What is wrong with that line.
        """
        if line_number is not None:
            message = "line {}: {}".format(line_number, message)
        super().__init__(message)
        self.line_number = line_number


class StreamParseError(_StreamLineError):
    """
    Raised when a CSV stream line can't be parsed.
    """


class DimensionInconsistent(_StreamLineError):
    """
    Raised when a CSV stream row doesn't have as many features as the header.
    """


class InvalidLabel(_StreamLineError):
    """
    Raised when a CSV stream row has a label other than `+1` or `-1`.
    """


class OutputError(VoiCacheError, OSError):
    """
    Raised when experiment outputs can't be written.
    """


class InvariantViolation(VoiCacheError):
    """
    Raised by debug checks (see :mod:`voicache.debug`) when an internal
    invariant doesn't hold.
    """
