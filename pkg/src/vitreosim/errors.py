"""Exception types shared across the engine, session I/O, and analytics."""


class VitreoSimError(Exception):
    """Base class for all package errors."""


# --- geometry / kinematics ---

class NonFiniteInput(VitreoSimError):
    pass


class DegenerateRig(VitreoSimError):
    pass


class OriginOutsideEye(VitreoSimError):
    pass


class PointOffSurface(VitreoSimError):
    pass


# --- task engine ---

class InvalidConfig(VitreoSimError):
    pass


class SeedPlacementFailure(VitreoSimError):
    pass


class NonMonotonicTimestamp(VitreoSimError):
    pass


class TaskAlreadyComplete(VitreoSimError):
    pass


class TaskNotComplete(VitreoSimError):
    pass


# --- session I/O ---

class CorruptLog(VitreoSimError):
    def __init__(self, message, line_number=None):
        super().__init__(message if line_number is None
                         else f"line {line_number}: {message}")
        self.line_number = line_number


class VersionMismatch(VitreoSimError):
    pass


class SeedMismatch(VitreoSimError):
    pass


class IncompleteSession(VitreoSimError):
    def __init__(self, session_ids):
        super().__init__(f"incomplete sessions: {', '.join(map(str, session_ids))}")
        self.session_ids = list(session_ids)


class DuplicateSession(VitreoSimError):
    pass


# --- synthetic trainees ---

class GenerationTimeout(VitreoSimError):
    pass


# --- analytics ---

class EmptyInput(VitreoSimError):
    pass


class DegeneratePooledSD(VitreoSimError):
    pass


class SingularDesign(VitreoSimError):
    pass


class NonConvergence(VitreoSimError):
    pass


# --- service ---

class BindFailure(VitreoSimError):
    pass
