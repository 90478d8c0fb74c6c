"""Exception hierarchy shared across the package."""

from __future__ import annotations


class StackPilotError(Exception):
    """Base class for every error raised by this package."""

    @property
    def code(self) -> str:
        return type(self).__name__


# program model


class ParseError(StackPilotError):
    pass


class DuplicateFunction(ParseError):
    pass


class MissingEntry(ParseError):
    pass


# agents


class ArityMismatch(StackPilotError):
    pass


class NoPendingCall(StackPilotError):
    pass


class MalformedTrace(StackPilotError):
    pass


class InvalidValue(StackPilotError):
    pass


# snapshots


class InvalidState(StackPilotError):
    pass


class CorruptSnapshot(StackPilotError):
    pass


class DecodeError(StackPilotError):
    pass


# scheduler


class UnknownScope(StackPilotError):
    pass


class UnknownVariable(StackPilotError):
    pass


class IoError(StackPilotError):
    pass


class ExecutionFailure(StackPilotError):
    """Failure that aborts a session.

    Recorded on the session and surfaced through ExecutionResult.error
    rather than propagating out of run().
    """


class StepLimitExceeded(ExecutionFailure):
    pass


class StackDepthExceeded(ExecutionFailure):
    pass


class RuntimeFault(ExecutionFailure):
    pass


class ExecutorFailure(ExecutionFailure):
    pass


# executors


class SchemaError(StackPilotError):
    pass


class TransportError(StackPilotError):
    pass


class Timeout(TransportError):
    pass


class ScriptExhausted(StackPilotError):
    pass


class ScriptMismatch(StackPilotError):
    pass


# harness


class UnknownCase(StackPilotError):
    pass
