"""Named shared objects with per-node volatile and stable storage.

Each object lives at exactly one home node.  Volatile state holds the
working value (including tentative, uncommitted writes made in place by
the transaction layer); stable state holds only committed images and a
per-node log of commit-protocol records.  A crash wipes a node's volatile
side; recovery reloads it from stable.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import (DuplicateObject, NodeAlreadyDown, NodeAlreadyUp,
                     NodeDown, StaleSnapshot, UnknownNode, UnknownObject)


class ObjectId(NamedTuple):
    name: str
    home: str


def encode_value(v: int) -> bytes:
    return str(int(v)).encode("ascii")


def decode_value(b: bytes) -> int:
    return int(b.decode("ascii"))


@dataclass(frozen=True)
class Snapshot:
    """Immutable capture of volatile values; the object side of a recovery
    point."""
    label: str
    entries: tuple  # of (name, value bytes, version)


@dataclass
class LogRecord:
    """Stable-storage commit-protocol record (prepare/commit/abort/end)."""
    kind: str            # prepare | commit | abort | end
    txn: int
    coordinator: str = ""
    redo: tuple = ()     # prepare only: ((name, value, new_version), ...)


class NodeStore:
    def __init__(self, name: str):
        self.name = name
        self.up = True
        self.volatile: dict[str, bytes] = {}
        self.stable: dict[str, tuple[bytes, int]] = {}
        self.log: list[LogRecord] = []


class ObjectStore:
    def __init__(self, nodes):
        self.nodes: dict[str, NodeStore] = {}
        for n in nodes:
            self.nodes[n] = NodeStore(n)
        self.objects: dict[str, ObjectId] = {}

    # --- registration ---

    def create_object(self, oid: ObjectId, initial: bytes):
        if oid.name in self.objects:
            raise DuplicateObject(oid.name)
        if oid.home not in self.nodes:
            raise UnknownNode(oid.home)
        node = self._up_node(oid.home)
        self.objects[oid.name] = oid
        node.volatile[oid.name] = initial
        node.stable[oid.name] = (initial, 0)

    def oid(self, name: str) -> ObjectId:
        try:
            return self.objects[name]
        except KeyError:
            raise UnknownObject(name)

    def home(self, name: str) -> str:
        return self.oid(name).home

    def node_up(self, node: str) -> bool:
        if node not in self.nodes:
            raise UnknownNode(node)
        return self.nodes[node].up

    def _up_node(self, node: str) -> NodeStore:
        ns = self.nodes[node]
        if not ns.up:
            raise NodeDown(node)
        return ns

    def _node_of(self, name: str) -> NodeStore:
        return self._up_node(self.oid(name).home)

    # --- volatile access (serialized by the caller; locks live above) ---

    def read_volatile(self, name: str) -> bytes:
        return self._node_of(name).volatile[name]

    def write_volatile(self, name: str, value: bytes):
        self._node_of(name).volatile[name] = value

    def committed(self, name: str) -> tuple[bytes, int]:
        return self._node_of(name).stable[name]

    def apply_commit(self, name: str, value: bytes, version: int):
        """Phase-2 apply: idempotent on (value, version)."""
        ns = self._node_of(name)
        cur_version = ns.stable[name][1]
        if version > cur_version:
            ns.stable[name] = (value, version)
            ns.volatile[name] = value

    def append_log(self, node: str, rec: LogRecord):
        self._up_node(node).log.append(rec)

    def find_log(self, node: str, kind: str, txn: int) -> LogRecord | None:
        for rec in self.nodes[node].log:
            if rec.kind == kind and rec.txn == txn:
                return rec
        return None

    # --- snapshots ---

    def take_snapshot(self, names, label: str) -> Snapshot:
        entries = []
        for name in names:
            oid = self.oid(name)
            ns = self._up_node(oid.home)
            entries.append((name, ns.volatile[name], ns.stable[name][1]))
        return Snapshot(label, tuple(entries))

    def restore_snapshot(self, snap: Snapshot, skip_down=False):
        for name, value, version in snap.entries:
            if name not in self.objects:
                raise StaleSnapshot(name)
            ns = self.nodes[self.objects[name].home]
            if not ns.up:
                if skip_down:
                    continue
                raise NodeDown(ns.name)
            if ns.stable[name][1] != version:
                continue  # a later commit superseded this entry
            ns.volatile[name] = value

    # --- crash / recovery ---

    def crash_node(self, node: str):
        if node not in self.nodes:
            raise UnknownNode(node)
        ns = self.nodes[node]
        if not ns.up:
            raise NodeAlreadyDown(node)
        ns.up = False
        ns.volatile = {}

    def recover_node(self, node: str):
        if node not in self.nodes:
            raise UnknownNode(node)
        ns = self.nodes[node]
        if ns.up:
            raise NodeAlreadyUp(node)
        ns.up = True
        ns.volatile = {name: value for name, (value, _v) in ns.stable.items()}

    # --- dumps ---

    def dump_stable(self) -> list[str]:
        lines = []
        for ns in self.nodes.values():
            for name, (value, version) in ns.stable.items():
                lines.append("%s\t%s\t%d\t%s" %
                             (ns.name, name, version, value.hex()))
        return sorted(lines)

    def dump_volatile(self) -> list[str]:
        """Volatile image; down nodes contribute no records."""
        lines = []
        for ns in self.nodes.values():
            if not ns.up:
                continue
            for name, value in ns.volatile.items():
                version = ns.stable[name][1]
                lines.append("%s\t%s\t%d\t%s" %
                             (ns.name, name, version, value.hex()))
        return sorted(lines)
