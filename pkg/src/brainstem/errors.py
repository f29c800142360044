"""Exception vocabulary shared across the runtime."""


class BrainstemError(Exception):
    """Base class for every error raised by this package."""


# wire protocol

class CanonicalizationError(BrainstemError):
    """A document cannot be rendered to canonical bytes (e.g. non-finite numbers)."""


class ParseError(BrainstemError):
    """Wire bytes are not a well-formed message document."""


class ChecksumMismatch(BrainstemError):
    """Stored checksum disagrees with the recomputed one; message is corrupt."""


class SchemaViolation(BrainstemError):
    """A document does not satisfy the contract registered for its kind.

    Carries the full list of problems, one entry per missing/extra/mistyped
    field, so callers can report everything at once.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


# message bus

class UnregisteredSender(BrainstemError):
    """Publish or subscription change attempted by an unknown agent id."""


class ChannelClosed(BrainstemError):
    """Publish attempted on a bus that has been shut down."""


# agent registry

class DuplicateId(BrainstemError):
    """Registration with an agent id that is already active."""


class UnknownWorker(BrainstemError):
    """A plan or request references a worker id absent from the registry."""


class DuplicateAssignment(BrainstemError):
    """A decomposition plan assigns more than one subtask to the same worker."""


class NotFailed(BrainstemError):
    """Re-initialization requested for an agent that has not failed."""


# agents / numerics

class DimensionMismatch(BrainstemError):
    """Vector or matrix shapes do not conform to the declared interface."""


class BackendError(BrainstemError):
    """Completion backend failed (timeout, malformed reply, missing script entry)."""


class NoExecutableNode(BrainstemError):
    """The plan frontier holds no executable action node."""


class UnknownModality(BrainstemError):
    """An observation names a modality with no registered embedder."""


# memory

class KeyAbsent(BrainstemError):
    """Semantic-memory lookup for a key that was never stored."""


# planner

class CycleDetected(BrainstemError):
    """Dependency annotations induce a cycle; the plan admits no topological order."""


class UnknownAction(BrainstemError):
    """An action label is absent from the available-action vocabulary."""


class EmptyActionSet(BrainstemError):
    """Action selection requested but no transitions are available."""


# simulator

class UnknownTask(BrainstemError):
    """Scenario requested for a task id outside the benchmark suite."""


class IllegalAction(BrainstemError):
    """Action preconditions are not met in the current world state."""


# harness

class ConfigError(BrainstemError):
    """Benchmark configuration is incomplete or inconsistent."""


class EmptyInput(BrainstemError):
    """Aggregation requested over an empty value list."""


class IoError(BrainstemError):
    """Report or trace file could not be written."""
