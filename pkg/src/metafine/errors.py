"""Exception types raised across the engine."""


class MetafineError(Exception):
    """Base class for all engine errors."""


# --- skill vocabulary ---

class UnknownPredicate(MetafineError):
    pass


class DuplicateSkill(MetafineError):
    pass


class MalformedSpec(MetafineError):
    """Raised with a message naming the violated invariant."""


# --- asset library ---

class SchemaViolation(MetafineError):
    def __init__(self, record_id, field, message):
        super().__init__(f"{record_id}: {field}: {message}")
        self.record_id = record_id
        self.field = field


class DuplicateObjectId(MetafineError):
    pass


class IoFailure(MetafineError):
    pass


class UnderconstrainedGeometry(MetafineError):
    pass


# --- task graph ---

class IncompatibleEdge(MetafineError):
    pass


class UnsupportedSkill(MetafineError):
    def __init__(self, object_id, skill_id, missing):
        super().__init__(
            f"asset {object_id!r} does not support {skill_id!r}: missing {sorted(missing)}"
        )
        self.object_id = object_id
        self.skill_id = skill_id
        self.missing = set(missing)


class UnboundSlot(MetafineError):
    pass


class RegionInfeasible(MetafineError):
    pass


class PlannerBudgetExhausted(MetafineError):
    def __init__(self, message, failure_histogram=None):
        super().__init__(message)
        self.failure_histogram = dict(failure_histogram or {})


class NoSubstitutableSlot(MetafineError):
    pass


# --- scene simulation ---

class CollisionAtInit(MetafineError):
    pass


class UnknownObject(MetafineError):
    pass


# --- policy harness ---

class PolicyProtocolError(MetafineError):
    pass


class SpawnFailure(MetafineError):
    pass


class HandshakeTimeout(MetafineError):
    pass


class VersionMismatch(MetafineError):
    pass


# --- diagnostics ---

class EmptyTraceSet(MetafineError):
    pass


class SingleLevel(MetafineError):
    pass


class MismatchedTraceSets(MetafineError):
    pass


class SchemaVersionMismatch(MetafineError):
    pass


class CorruptTrace(MetafineError):
    pass


# --- calibration ---

class BadSplit(MetafineError):
    pass


class EmptySet(MetafineError):
    pass


class DegenerateBounds(MetafineError):
    pass


class RealSourceUnavailable(MetafineError):
    pass


# --- adapter ---

class AdaptFailed(MetafineError):
    pass


class UnmappableTask(MetafineError):
    """Carries the adapter report explaining why no task spec was emitted."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


# --- campaigns ---

class ConfigInvalid(MetafineError):
    def __init__(self, field, reason):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason
