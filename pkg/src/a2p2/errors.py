"""Exception hierarchy shared across the platform."""


class A2P2Error(Exception):
    """Base class for all platform errors."""


class ParseError(A2P2Error):
    """A document could not be parsed at all (bad JSON, wrong shape)."""


class ValidationError(A2P2Error):
    """A parsed document violates an invariant; message names the first violation."""


class UnknownNode(A2P2Error):
    """A graph node id does not exist."""


class KindMismatch(A2P2Error):
    """A node id exists but is not of the kind requested."""


class UnknownStep(A2P2Error):
    """A step key is not part of the active policy."""


class UnknownAction(A2P2Error):
    """An action key is not present in the template bank."""


class MissingSlot(A2P2Error):
    """A template placeholder refers to a slot that is not filled yet."""

    def __init__(self, slot: str):
        super().__init__(f"missing slot: {slot}")
        self.slot = slot


class UnknownSession(A2P2Error):
    """No session with that id."""


class SessionClosed(A2P2Error):
    """The session has finished; no further messages accepted."""


class UnknownGoal(A2P2Error):
    """A provider selection referenced a goal id not in the graph."""


class NoTurns(A2P2Error):
    """Metrics requested for a session with no provider messages."""


class Timeout(A2P2Error):
    """The session endpoint did not respond within the configured limit."""


class ProtocolError(A2P2Error):
    """The session produced messages out of the expected order."""


class IncompleteRecord(A2P2Error):
    """A transcript is missing turns required for scoring."""


class EmptySample(A2P2Error):
    """A statistical test was handed zero pairs."""


class DegenerateTable(A2P2Error):
    """A contingency table has a zero row or column margin."""


class ZeroVariance(A2P2Error):
    """An effect size is undefined because the dispersion term is zero."""


class BadItemCount(A2P2Error):
    """A usability questionnaire did not contain exactly ten items."""


class OutOfRange(A2P2Error):
    """A questionnaire item score was outside 1..5."""


class DomainError(A2P2Error):
    """An argument is outside the mathematical domain of the operation."""


class NoData(A2P2Error):
    """A transcript directory contained nothing usable."""
