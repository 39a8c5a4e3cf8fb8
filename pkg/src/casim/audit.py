"""Post-run trace audits.

Every audit here works from the trace alone (plus the appended state
dumps), rebuilding transaction trees, lock states and action lifecycles
independently of the live simulator structures, so a bug in the engine
cannot vouch for itself.
"""

from . import trace as trace_mod
from .errors import MalformedTrace
from .locks import WRITE, conflicts


class TxnView:
    """Transaction facts reconstructed from a trace."""

    def __init__(self, events):
        self.parents: dict[int, int | None] = {}
        self.aborted: set[int] = set()
        self.decided: dict[int, str] = {}       # top txn -> commit | abort
        self.decision_seq: dict[int, int] = {}
        self.apply_objs: dict[int, set] = {}    # top txn -> objs applied
        self.inst_outcome: dict[str, str] = {}
        for ev in events:
            if ev.kind == "begin":
                p = ev.detail.get("parent", "-")
                self.parents[ev.txn] = None if p == "-" else int(p)
            elif ev.kind == "abort":
                self.aborted.add(ev.txn)
            elif ev.kind == "commit2" and ev.detail.get("phase") == "decision":
                self.decided[ev.txn] = ev.detail["outcome"]
                self.decision_seq[ev.txn] = ev.seq
            elif ev.kind == "commit2" and ev.detail.get("phase") == "apply":
                objs = ev.detail.get("objs", "")
                self.apply_objs.setdefault(ev.txn, set()).update(
                    o for o in objs.split(",") if o)
            elif ev.kind == "outcome":
                self.inst_outcome.setdefault(ev.detail["inst"],
                                             ev.detail["outcome"])

    def top(self, txn: int) -> int:
        while self.parents.get(txn) is not None:
            txn = self.parents[txn]
        return txn

    def is_proper_ancestor(self, a: int, b: int) -> bool:
        p = self.parents.get(b)
        while p is not None:
            if p == a:
                return True
            p = self.parents.get(p)
        return False

    def committed_top(self) -> set:
        return {t for t, d in self.decided.items() if d == "commit"}

    def op_counts(self, ev) -> bool:
        """Whether a read/write event contributes effects that survived:
        its transaction never aborted and its action instance (if any)
        did not roll back."""
        if ev.txn in self.aborted:
            return False
        inst = ev.detail.get("inst")
        if inst is not None and self.inst_outcome.get(inst) == "aborted":
            return False
        return True


def audit_serializability(events):
    """Check committed top-level transactions for conflict
    serializability; returns (ok, info) where info carries either a
    serial witness order or the offending cycle."""
    view = TxnView(events)
    committed = view.committed_top()
    ops = []  # (seq, top txn, obj, is_write)
    for ev in events:
        if ev.kind not in ("read", "write"):
            continue
        if not view.op_counts(ev):
            continue
        top = view.top(ev.txn)
        if top not in committed:
            continue
        ops.append((ev.seq, top, ev.obj, ev.kind == "write"))

    edges: set = set()
    for i, (_s1, t1, o1, w1) in enumerate(ops):
        for _s2, t2, o2, w2 in ops[i + 1:]:
            if t1 != t2 and o1 == o2 and (w1 or w2):
                edges.add((t1, t2))

    succ: dict[int, set] = {t: set() for t in committed}
    indeg = {t: 0 for t in committed}
    for a, b in edges:
        if b not in succ[a]:
            succ[a].add(b)
            indeg[b] += 1
    order = []
    ready = sorted(t for t in committed if indeg[t] == 0)
    while ready:
        t = ready.pop(0)
        order.append(t)
        for s in sorted(succ[t]):
            indeg[s] -= 1
            if indeg[s] == 0:
                ready.append(s)
        ready.sort()
    if len(order) == len(committed):
        return True, {"witness": order, "edges": sorted(edges)}
    cycle = sorted(t for t in committed if t not in order)
    return False, {"cycle": cycle, "edges": sorted(edges)}


def scan_smuggling(events):
    """Flag reads of data whose writer's top-level transaction had not yet
    committed or aborted: information leaving an atomic action early."""
    view = TxnView(events)
    dirty: dict[str, set] = {}  # obj -> txns with unresolved writes
    problems = []
    for ev in events:
        if ev.kind == "write":
            dirty.setdefault(ev.obj, set()).add(ev.txn)
        elif ev.kind == "read":
            for w in dirty.get(ev.obj, ()):
                if view.top(w) != view.top(ev.txn):
                    problems.append(
                        "seq %d: txn %d read %s dirty from txn %d"
                        % (ev.seq, ev.txn, ev.obj, w))
        elif ev.kind == "abort":
            for ws in dirty.values():
                ws.discard(ev.txn)
        elif ev.kind == "commit2":
            phase = ev.detail.get("phase")
            if phase == "nested":
                # anti-inheritance: the tentative write now belongs to
                # the parent transaction
                parent = int(ev.detail["parent"])
                for ws in dirty.values():
                    if ev.txn in ws:
                        ws.discard(ev.txn)
                        ws.add(parent)
            elif phase == "decision":
                for ws in dirty.values():
                    ws.discard(ev.txn)
    return not problems, problems


BODY_KINDS = ("read", "write", "step", "sync_emit", "sync_await",
              "line_recovery", "test_line")


def scan_bracketing(events):
    """Every action-body event must fall after that instance's final
    registration and before its outcome delivery."""
    last_register: dict[str, int] = {}
    first_outcome: dict[str, int] = {}
    problems = []
    for ev in events:
        if ev.kind == "register" and ev.detail.get("ok") == "1":
            last_register[ev.detail["inst"]] = ev.seq
        elif ev.kind == "outcome":
            first_outcome.setdefault(ev.detail["inst"], ev.seq)
    for ev in events:
        if ev.kind not in BODY_KINDS:
            continue
        inst = ev.detail.get("inst")
        if inst is None:
            continue
        if inst not in last_register:
            problems.append("seq %d: body event for unregistered instance %s"
                            % (ev.seq, inst))
        elif ev.seq < last_register[inst]:
            problems.append("seq %d: %s body event before %s finished "
                            "gathering" % (ev.seq, ev.kind, inst))
        elif inst in first_outcome and ev.seq > first_outcome[inst]:
            problems.append("seq %d: %s body event after %s outcome"
                            % (ev.seq, ev.kind, inst))
    return not problems, problems


def _parse_dump_lines(lines):
    out = {}
    for ln in lines:
        node, name, version, value = ln.split("\t")
        out[(node, name)] = (int(version), value)
    return out


def scan_atomicity(events, dumps):
    """Replay the trace's committed effects over the initial dump and
    compare with the final stable dump; also require the final volatile
    image of every up node to match stable."""
    view = TxnView(events)
    problems = []
    # last surviving write value per (top txn, obj), before its decision
    final_write: dict[tuple, str] = {}
    for ev in events:
        if ev.kind != "write" or not view.op_counts(ev):
            continue
        top = view.top(ev.txn)
        if ev.seq < view.decision_seq.get(top, float("inf")):
            final_write[(top, ev.obj)] = ev.detail["val"]
    state = _parse_dump_lines(dumps.get("initial", []))
    homes = {name: node for (node, name) in state}
    for ev in events:
        if ev.kind == "commit2" and ev.detail.get("phase") == "apply":
            for obj in ev.detail.get("objs", "").split(","):
                if not obj:
                    continue
                key = (homes[obj], obj)
                version, _old = state[key]
                val = final_write.get((ev.txn, obj))
                if val is None:
                    problems.append("seq %d: apply of %s with no surviving "
                                    "write in txn %d" % (ev.seq, obj, ev.txn))
                    continue
                state[key] = (version + 1, val)
    actual = _parse_dump_lines(dumps.get("stable", []))
    for key in sorted(set(state) | set(actual)):
        if state.get(key) != actual.get(key):
            problems.append("stable mismatch at %s/%s: replay %s, dump %s"
                            % (key[0], key[1], state.get(key),
                               actual.get(key)))
    stable_by_key = actual
    for ln in dumps.get("volatile", []):
        node, name, version, value = ln.split("\t")
        if stable_by_key.get((node, name)) != (int(version), value):
            problems.append("volatile/stable divergence at %s/%s after "
                            "quiescence" % (node, name))
    return not problems, problems


def check_durability(events, up_nodes):
    """Every commit decision must be followed by an apply at each
    participant that is up at the end of the run."""
    applied: dict[int, set] = {}
    for ev in events:
        if ev.kind == "commit2" and ev.detail.get("phase") == "apply":
            applied.setdefault(ev.txn, set()).add(ev.detail["node"])
    problems = []
    for ev in events:
        if ev.kind != "commit2" or ev.detail.get("phase") != "decision" \
                or ev.detail.get("outcome") != "commit":
            continue
        parts = [p for p in ev.detail.get("parts", "-").split(",")
                 if p and p != "-"]
        for p in parts:
            if p in up_nodes and p not in applied.get(ev.txn, set()):
                problems.append("txn %d committed but never applied at "
                                "up node %s" % (ev.txn, p))
    return not problems, problems


def final_up_nodes(events, all_nodes):
    up = set(all_nodes)
    for ev in events:
        if ev.kind == "crash":
            up.discard(ev.detail["node"])
        elif ev.kind == "recover":
            up.add(ev.detail["node"])
    return up


def verify_lock_rule(events):
    """Independent re-evaluation of every grant: all conflicting holders
    at grant time must be proper ancestors of the grantee."""
    view = TxnView(events)
    # objects released only at apply time, known in advance per txn
    apply_objs = view.apply_objs
    holders: dict[str, dict[int, str]] = {}
    problems = []

    def drop(txn, objs=None):
        for obj, hs in holders.items():
            if txn in hs and (objs is None or obj in objs):
                del hs[txn]

    for ev in events:
        if ev.kind == "grant":
            hs = holders.setdefault(ev.obj, {})
            mode = ev.detail["mode"]
            for h, m in hs.items():
                if h != ev.txn and conflicts(m, mode) \
                        and not view.is_proper_ancestor(h, ev.txn):
                    problems.append(
                        "seq %d: %s lock on %s granted to txn %d while "
                        "non-ancestor txn %d holds %s"
                        % (ev.seq, mode, ev.obj, ev.txn, h, m))
            if hs.get(ev.txn) != WRITE:
                hs[ev.txn] = mode
        elif ev.kind == "abort":
            drop(ev.txn)
        elif ev.kind == "commit2":
            phase = ev.detail.get("phase")
            if phase == "nested":
                parent = int(ev.detail["parent"])
                for obj, hs in holders.items():
                    if ev.txn in hs:
                        mode = hs.pop(ev.txn)
                        if hs.get(parent) != WRITE:
                            hs[parent] = mode
            elif phase == "decision" and ev.detail["outcome"] == "commit":
                keep = apply_objs.get(ev.txn, set())
                drop(ev.txn, objs={o for o in holders if o not in keep})
            elif phase == "apply":
                objs = {o for o in ev.detail.get("objs", "").split(",") if o}
                drop(ev.txn, objs=objs)
    return not problems, problems


def audit_trace(text: str, all_nodes=None):
    """Run every audit over a rendered trace file.  Returns a dict of
    check name -> (ok, info); key "ok" aggregates.  Raises MalformedTrace
    on schema violations."""
    events, dumps = trace_mod.parse(text)
    if all_nodes is None:
        all_nodes = {ln.split("\t")[0] for ln in dumps.get("initial", [])}
    report = {
        "serializability": audit_serializability(events),
        "smuggling": scan_smuggling(events),
        "bracketing": scan_bracketing(events),
        "atomicity": scan_atomicity(events, dumps),
        "durability": check_durability(events,
                                       final_up_nodes(events, all_nodes)),
        "lock_rule": verify_lock_rule(events),
    }
    report["ok"] = all(ok for ok, _ in report.values())
    return report
