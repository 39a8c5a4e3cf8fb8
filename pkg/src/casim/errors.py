"""Exception hierarchy shared by all subsystems."""


class SimError(Exception):
    pass


# --- object store ---

class DuplicateObject(SimError):
    pass


class UnknownObject(SimError):
    pass


class NodeDown(SimError):
    pass


class NodeAlreadyDown(SimError):
    pass


class NodeAlreadyUp(SimError):
    pass


class UnknownNode(SimError):
    pass


class StaleSnapshot(SimError):
    pass


# --- transaction engine ---

class TxnNotActive(SimError):
    pass


class ParentNotActive(SimError):
    pass


class ChildrenActive(SimError):
    pass


class TxnTerminal(SimError):
    pass


class DeadlockVictim(SimError):
    """Raised to the requester chosen to die under wait-die arbitration."""
    pass


class LockDenied(SimError):
    pass


# --- action manager ---

class RoleTaken(SimError):
    pass


class NotParentParticipant(SimError):
    pass


class ModeViolation(SimError):
    pass


class EntryTimeout(SimError):
    pass


class DuplicateRole(SimError):
    pass


class UnknownSignal(SimError):
    pass


# --- mapping ---

class CyclicConstraint(SimError):
    pass


# --- traces / scenarios ---

class MalformedTrace(SimError):
    def __init__(self, msg, line=None):
        super().__init__(msg if line is None else "line %d: %s" % (line, msg))
        self.line = line


class ValidationError(SimError):
    def __init__(self, msg, line=None):
        super().__init__(msg if line is None else "line %d: %s" % (line, msg))
        self.line = line


class InconsistentFault(SimError):
    pass
