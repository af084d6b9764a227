"""Exception types shared across the toolkit."""


class MetricProbeError(Exception):
    """Base class for all toolkit errors."""


# corpus
class MissingColumn(MetricProbeError):
    pass


class DuplicateId(MetricProbeError):
    pass


class EmptyField(MetricProbeError):
    pass


# metrics / lm
class EmptyText(MetricProbeError):
    pass


class DegenerateScores(MetricProbeError):
    pass


class EmptyCorpus(MetricProbeError):
    pass


# scorer protocol
class ProtocolError(MetricProbeError):
    pass


class ScorerError(MetricProbeError):
    def __init__(self, message, pair_index=None):
        super().__init__(message)
        self.pair_index = pair_index


class ScorerTimeout(MetricProbeError):
    pass


# transform
class OutOfBounds(MetricProbeError):
    pass


class WouldEmpty(MetricProbeError):
    pass


class InvalidMerge(MetricProbeError):
    pass


# attack
class NoEligibleSites(MetricProbeError):
    pass


# stats
class DegenerateInput(MetricProbeError):
    pass


class TooLarge(MetricProbeError):
    pass


class DegenerateAnnotator(MetricProbeError):
    pass


# hits
class WrongPayloadCount(MetricProbeError):
    pass


class TooShortForDegradation(MetricProbeError):
    pass


class IncompleteRatings(MetricProbeError):
    pass
