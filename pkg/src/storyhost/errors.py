"""Engine-wide exceptions with stable machine-readable codes.

The ``code`` string is what crosses process boundaries (HTTP error bodies,
CLI messages); the Python class is what callers catch.
"""
from __future__ import annotations


class EngineError(Exception):
    code = "engine-error"

    def __init__(self, message: str | None = None, *, code: str | None = None):
        if code is not None:
            self.code = code
        super().__init__(message or self.code)


class StoryFinished(EngineError):
    code = "story-finished"


class VotingClosed(EngineError):
    code = "voting-closed"


class InvalidChoice(EngineError):
    code = "invalid-choice"


class ProviderUnavailable(EngineError):
    code = "provider-unavailable"


class EmptyFact(EngineError):
    code = "empty-fact"


class InvalidVector(EngineError):
    code = "invalid-vector"


class NonMonotonicEvent(EngineError):
    code = "non-monotonic-event"


class IncompatibleLog(EngineError):
    code = "incompatible-log"


class PackageFormatError(EngineError):
    code = "package-format"


class SimulationError(EngineError):
    code = "simulation-mismatch"
