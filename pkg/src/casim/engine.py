"""Deterministic discrete-event simulator hosting virtual nodes, clients,
logical threads, message delivery, crash injection and trace recording.

One event loop owns all state.  Logical threads are scheduler records
advancing one step per scheduling event; blocking (lock waits, signal
waits, entry gathering, the exit barrier) is modeled as the thread
becoming non-runnable until an enabling event reschedules it.  Replaying
the same (scenario, seed) reproduces a byte-identical trace and dump.

Top-level commits run two-phase commit over simulated messages with
presumed abort: a prepared participant that finds no commit record at the
coordinator resolves to abort.
"""

import heapq
import random
from dataclasses import dataclass, field

from . import actions as act
from . import dag as dagmod
from .errors import (DeadlockVictim, DuplicateRole, InconsistentFault,
                     NodeDown, UnknownNode)
from .scenario import Scenario
from .store import LogRecord, ObjectId, ObjectStore, encode_value, decode_value
from .trace import Trace
from .txn import ACTIVE, TransactionManager

MSG_LATENCY = (1, 3)
TWO_PC_TIMEOUT = 20

# thread states
GATHERING = "gathering"
RUNNABLE = "runnable"
BLOCKED_LOCK = "blocked_lock"
BLOCKED_SYNC = "blocked_sync"
BLOCKED_ORDER = "blocked_order"
AT_BARRIER = "at_barrier"
DONE = "done"
DEAD = "dead"


@dataclass
class Frame:
    instance: act.CAActionInstance
    steps: list
    pc: int = 0


class LThread:
    """Scheduler-level logical thread; never a platform thread."""

    def __init__(self, tid: int, client: str, node: str):
        self.tid = tid
        self.client = client
        self.node = node
        self.frames: list[Frame] = []
        self.status = GATHERING
        self.gen = 0            # invalidates stale scheduled continuations
        self.blocked_on = None  # (parent instance, nested name) for order waits

    @property
    def frame(self) -> Frame | None:
        return self.frames[-1] if self.frames else None


@dataclass
class TwoPC:
    inst: act.CAActionInstance
    txn: int
    coordinator: str
    parts: list
    redo: dict                      # node -> {name: value}
    acks: set = field(default_factory=set)
    applied: set = field(default_factory=set)
    decided: str | None = None      # None | commit | abort


@dataclass
class RunResult:
    trace: Trace
    store: ObjectStore
    instances: dict
    outcomes: dict
    rejections: list
    crash_checks: list              # (node, time, stable_unchanged, volatile_cleared)
    initial_dump: list
    seed: int
    strategy: str | None

    def dumps(self) -> dict:
        return {"initial": self.initial_dump,
                "stable": self.store.dump_stable(),
                "volatile": self.store.dump_volatile()}

    def trace_text(self) -> str:
        return self.trace.render(self.dumps())


class Simulator:
    def __init__(self, scenario: Scenario, seed=None, strategy=None,
                 horizon=None, unsafe_early_release=False,
                 auto_recover_after=None):
        self.sc = scenario
        self.auto_recover_after = auto_recover_after
        self.seed = scenario.seed if seed is None else seed
        self.strategy_cfg = strategy if strategy is not None else scenario.strategy
        self.horizon = scenario.horizon if horizon is None else horizon
        self.rng = random.Random(self.seed)
        self.trace = Trace()
        self.trace.hook = self._on_emit
        self.store = ObjectStore(scenario.nodes)
        for name, node, value in scenario.objects:
            self.store.create_object(ObjectId(name, node), encode_value(value))
        self.txns = TransactionManager(
            self.store, self.trace, clock=lambda: self.now,
            unsafe_early_release=unsafe_early_release)
        self.now = 0
        self._q: list = []
        self._qseq = 0
        self._mid = 0
        self.threads: dict[int, LThread] = {}
        self._next_tid = 0
        self.instances: dict[str, act.CAActionInstance] = {}
        self.top_instances: dict[str, act.CAActionInstance] = {}
        self.inflight: dict[int, TwoPC] = {}
        self.outcomes: dict[str, str] = {}
        self.rejections: list = []
        self.crash_checks: list = []
        self.indexed_faults: dict[int, list] = {}
        self.initial_dump: list = []
        self._nested_only = {n for d in scenario.defs.values() for n in d.nested}
        # per-instance mapping state
        self._last_node: dict[tuple, int] = {}   # (inst key, tid) -> dag nid
        self._inst_strategy: dict[str, str] = {}  # top key -> flatten|nested

    # ------------------------------------------------------------------
    # scheduling

    def schedule(self, time, fn, prio=None):
        if prio is None:
            prio = self.rng.random()
        self._qseq += 1
        heapq.heappush(self._q, (time, prio, self._qseq, fn))

    def _on_emit(self, ev):
        for op, node in self.indexed_faults.pop(ev.seq, []):
            self.schedule(self.now, self._fault_fn(op, node), prio=-1.0)

    def _fault_fn(self, op, node):
        if op == "crash":
            return lambda: self._crash(node)
        return lambda: self._recover(node)

    def inject_fault(self, time, op, node):
        if node not in self.store.nodes:
            raise UnknownNode(node)
        if op not in ("crash", "recover"):
            raise InconsistentFault(op)
        self.schedule(time, self._fault_fn(op, node))

    # ------------------------------------------------------------------
    # run loop

    def run(self) -> RunResult:
        self.initial_dump = self.store.dump_stable()
        groups: dict[str, list] = {}
        for c in self.sc.clients:
            groups.setdefault(c.action_key, []).append(c)
        for key, contribs in groups.items():
            self.submit_joint(key, contribs)
        for f in self.sc.faults:
            if f.when_kind == "time":
                self.inject_fault(f.when, f.op, f.node)
            else:
                self.indexed_faults.setdefault(f.when, []).append((f.op, f.node))

        horizon_hit = False
        while True:
            while self._q:
                if self._q[0][0] > self.horizon:
                    horizon_hit = True
                    break
                t, _p, _s, fn = heapq.heappop(self._q)
                self.now = max(self.now, t)
                fn()
            if horizon_hit or not self._quiesce():
                break
        self._finish()
        return RunResult(self.trace, self.store, dict(self.instances),
                         dict(self.outcomes), list(self.rejections),
                         list(self.crash_checks), self.initial_dump,
                         self.seed, self.strategy_cfg)

    def _quiesce(self) -> bool:
        """Resolve stuck coordination at an empty queue; True if progress
        was made (events were scheduled or instances terminated)."""
        progress = False
        for inst in self._open_instances():
            blocked = [tid for tid in inst.registered.values()
                       if self.threads[tid].status == BLOCKED_SYNC
                       and self.threads[tid].frame
                       and self.threads[tid].frame.instance is inst]
            if blocked:
                self.coordinated_abort(inst, "unmatched_await")
                progress = True
        for inst in self._open_instances():
            stuck = [tid for tid in inst.registered.values()
                     if self.threads[tid].status == BLOCKED_ORDER]
            if stuck:
                self.coordinated_abort(inst, "constraint_wait")
                progress = True
        return progress or bool(self._q)

    def _finish(self):
        for inst in self._open_instances():
            self.coordinated_abort(inst, "horizon")

    def _open_instances(self):
        return sorted((i for i in self.instances.values() if not i.terminal),
                      key=lambda i: (-i.depth, i.key))

    # ------------------------------------------------------------------
    # submission and registration

    def submit_joint(self, action_key, contributions):
        roles = [c.role for c in contributions]
        if len(set(roles)) != len(roles):
            raise DuplicateRole(action_key)
        for c in contributions:
            if c.node not in self.store.nodes:
                raise UnknownNode(c.node)
        for c in contributions:
            self.schedule(c.time, lambda c=c: self._do_submit(c))

    def _do_submit(self, c):
        self.trace.emit(self.now, "submit", client=c.client, node=c.node,
                        action=c.action_key, role=c.role)
        if not self.store.node_up(c.node):
            return  # registration from a crashed node never occurs
        th = LThread(self._next_tid, c.client, c.node)
        self._next_tid += 1
        self.threads[th.tid] = th
        self._register_top(th, c.action_key, c.role)

    def _reject(self, key, role, th, err):
        self.rejections.append((err, key, role, th.tid))
        self.trace.emit(self.now, "register", inst=key, role=role, th=th.tid,
                        ok=0, err=err)
        th.status = DONE

    def _register_top(self, th, key, role):
        defname = key.split("#", 1)[0]
        defn = self.sc.defs[defname]
        if defname in self._nested_only:
            self._reject(key, role, th, "NotParentParticipant")
            return
        inst = self.top_instances.get(key)
        if inst is None:
            inst = act.CAActionInstance(defn, key)
            inst.origin_node = th.node
            self.top_instances[key] = inst
            self.instances[key] = inst
            self.schedule(self.now + defn.deadline,
                          lambda: self._deadline(inst))
        if inst.status != act.GATHERING or role in inst.registered:
            self._reject(key, role, th, "RoleTaken")
            return
        self._register(inst, th, role)

    def _register(self, inst, th, role):
        inst.registered[role] = th.tid
        th.frames.append(Frame(inst, inst.defn.roles[role].steps))
        th.status = GATHERING
        self.trace.emit(self.now, "register", inst=inst.key, role=role,
                        th=th.tid, node=th.node, ok=1)
        if set(inst.registered) == set(inst.defn.roles):
            self._start_instance(inst)

    def _deadline(self, inst):
        if inst.status == act.GATHERING:
            self.coordinated_abort(inst, "entry_timeout")

    # ------------------------------------------------------------------
    # instance lifecycle

    def _strategy_of(self, inst) -> str:
        return self._inst_strategy[inst.root().key]

    def _start_instance(self, inst):
        inst.status = act.RUNNING
        if inst.parent is None:
            plan = dagmod.strategy_select(bool(inst.defn.nested),
                                          self.strategy_cfg)
            self._inst_strategy[inst.key] = plan.strategy
        label = "%s@%d" % (inst.key, self.now)
        try:
            inst.snapshot = self.store.take_snapshot(inst.defn.footprint, label)
        except NodeDown:
            self.coordinated_abort(inst, "node_down")
            return
        self.trace.emit(self.now, "line_recovery", inst=inst.key, label=label)
        if inst.parent is None:
            txn = self.txns.begin(None, coordinator=inst.origin_node)
            inst.txn_id = txn.id
        elif self._strategy_of(inst) == dagmod.NESTED:
            txn = self.txns.begin(inst.parent.txn_id)
            inst.txn_id = txn.id
        else:
            inst.txn_id = inst.parent.txn_id
            inst.savepoint = self.txns.savepoint(inst.txn_id)
        inst.dag = dagmod.OperationDAG()
        if inst.parent is not None:
            self._add_boundary(inst)
        for tid in inst.registered.values():
            th = self.threads[tid]
            if th.status == GATHERING:
                th.status = RUNNABLE
                self._schedule_step(th)

    def _add_boundary(self, inst):
        parent = inst.parent
        nid = parent.dag.add_node(-1, -1, "nested", inst.defn.name).nid
        inst.boundary_nid = nid
        for tid in inst.registered.values():
            prev = self._last_node.get((parent.key, tid))
            if prev is not None:
                parent.dag.add_edge(prev, nid, dagmod.PROG)
            self._last_node[(parent.key, tid)] = nid
        for a, b in parent.defn.order:
            ia, ib = parent.nested.get(a), parent.nested.get(b)
            if ia is not None and ib is not None \
                    and ia.boundary_nid is not None \
                    and ib.boundary_nid is not None:
                edge = (ia.boundary_nid, ib.boundary_nid, dagmod.CONSTRAINT)
                if edge not in parent.dag.edges:
                    parent.dag.add_edge(*edge)

    # ------------------------------------------------------------------
    # thread stepping

    def _schedule_step(self, th, delay=1):
        th.gen += 1
        gen = th.gen
        self.schedule(self.now + delay, lambda: self._thread_step(th, gen))

    def _wake(self, th):
        if th.status in (BLOCKED_LOCK, BLOCKED_SYNC, BLOCKED_ORDER):
            th.status = RUNNABLE
            th.blocked_on = None
            self._schedule_step(th)

    def _thread_step(self, th, gen):
        if th.gen != gen or th.status != RUNNABLE or not th.frames:
            return
        frame = th.frame
        inst = frame.instance
        if inst.status != act.RUNNING:
            return
        if frame.pc >= len(frame.steps):
            self._arrive(th)
            return
        step = frame.steps[frame.pc]
        if step.kind == act.READ:
            self._step_read(th, inst, frame, step)
        elif step.kind == act.WRITE:
            self._step_write(th, inst, frame, step)
        elif step.kind == act.SYNC:
            self._step_sync(th, inst, frame, step)
        elif step.kind == act.ENTER:
            self._step_enter(th, inst, frame, step)
        elif step.kind == act.EXIT:
            self._arrive(th)
        else:
            raise AssertionError(step.kind)

    def _acquire_for(self, th, inst, wants) -> bool:
        """Acquire each (obj, mode); False if the thread blocked or its
        instance aborted along the way."""
        for obj, mode in wants:
            if not self.store.node_up(self.store.home(obj)):
                self.coordinated_abort(self._txn_owner(inst), "node_down")
                return False
            try:
                status = self.txns.acquire(inst.txn_id, obj, mode, tag=th.tid)
            except DeadlockVictim:
                self.coordinated_abort(self._txn_owner(inst), "deadlock")
                return False
            if status == "queued":
                th.status = BLOCKED_LOCK
                return False
        return True

    def _txn_owner(self, inst):
        """Outermost instance bound to the same transaction (differs from
        inst only under the flatten strategy)."""
        while inst.parent is not None and inst.parent.txn_id == inst.txn_id:
            inst = inst.parent
        return inst

    def _dag_op(self, inst, th, frame, kind, obj):
        nid = inst.dag.add_node(th.tid, frame.pc, kind, obj).nid
        prev = self._last_node.get((inst.key, th.tid))
        if prev is not None:
            inst.dag.add_edge(prev, nid, dagmod.PROG)
        self._last_node[(inst.key, th.tid)] = nid
        return nid

    def _step_read(self, th, inst, frame, step):
        if not self._acquire_for(th, inst, [(step.obj, "r")]):
            return
        self.txns.read(inst.txn_id, step.obj, th=th.tid, inst=inst.key)
        self._dag_op(inst, th, frame, "read", step.obj)
        frame.pc += 1
        self._schedule_step(th)

    def _step_write(self, th, inst, frame, step):
        refs = [n for n in step.expr.names if n != step.obj]
        wants = [(n, "r") for n in refs] + [(step.obj, "w")]
        if not self._acquire_for(th, inst, wants):
            return
        env = {}
        for name in step.expr.names:
            env[name] = decode_value(
                self.txns.read(inst.txn_id, name, th=th.tid, inst=inst.key))
        value = encode_value(step.expr.eval(env))
        granted = self.txns.write(inst.txn_id, step.obj, value,
                                  th=th.tid, inst=inst.key)
        if granted:
            self._apply_grants(granted)
        self._dag_op(inst, th, frame, "write", step.obj)
        frame.pc += 1
        self._schedule_step(th)

    def _step_sync(self, th, inst, frame, step):
        if step.sync_op == "emit":
            nid = self._dag_op(inst, th, frame, "sync_emit", None)
            inst.signals[step.signal] = nid
            self.trace.emit(self.now, "sync_emit", inst=inst.key, th=th.tid,
                            signal=step.signal)
            for tid in inst.sync_waiters.pop(step.signal, []):
                self._wake(self.threads[tid])
            frame.pc += 1
            self._schedule_step(th)
        else:
            if step.signal in inst.signals:
                nid = self._dag_op(inst, th, frame, "sync_await", None)
                inst.dag.add_edge(inst.signals[step.signal], nid, dagmod.SYNC)
                self.trace.emit(self.now, "sync_await", inst=inst.key,
                                th=th.tid, signal=step.signal)
                frame.pc += 1
                self._schedule_step(th)
            else:
                th.status = BLOCKED_SYNC
                inst.sync_waiters.setdefault(step.signal, []).append(th.tid)

    def _step_enter(self, th, inst, frame, step):
        defn = self.sc.defs[step.action]
        if inst.defn.mode == act.FLAT or (
                inst.defn.mode == act.NESTED_SAME_KIND
                and defn.multi_role != inst.defn.multi_role):
            self._reject_nested(inst, step, th, "ModeViolation")
            return
        for a, b in inst.defn.order:
            if b == step.action:
                pred = inst.nested.get(a)
                if pred is None or not pred.terminal:
                    th.status = BLOCKED_ORDER
                    th.blocked_on = (inst, a)
                    return
        sub = inst.nested.get(step.action)
        if sub is None:
            sub = act.CAActionInstance(defn, "%s/%s" % (inst.key, step.action),
                                       parent=inst)
            sub.origin_node = th.node
            inst.nested[step.action] = sub
            self.instances[sub.key] = sub
            self.schedule(self.now + defn.deadline,
                          lambda: self._deadline(sub))
        if sub.status != act.GATHERING or step.role in sub.registered:
            self._reject_nested(inst, step, th, "RoleTaken")
            return
        self.trace.emit(self.now, "step", inst=inst.key, th=th.tid,
                        op="enter", target=step.action)
        self._register(sub, th, step.role)

    def _reject_nested(self, inst, step, th, err):
        self.rejections.append((err, step.action, step.role, th.tid))
        self.trace.emit(self.now, "register", inst=step.action, role=step.role,
                        th=th.tid, ok=0, err=err)
        self.coordinated_abort(inst, err.lower())

    # ------------------------------------------------------------------
    # test line and outcomes

    def _arrive(self, th):
        inst = th.frame.instance
        if th.tid not in inst.arrived:
            self.trace.emit(self.now, "step", inst=inst.key, th=th.tid,
                            op="exit")
        th.status = AT_BARRIER
        inst.arrived.add(th.tid)
        alive = {tid for tid in inst.registered.values()
                 if self.threads[tid].status != DEAD}
        if alive and alive.issubset(inst.arrived):
            self._test_line(inst)

    def _txn_view(self, txn_id, name) -> bytes:
        t = txn_id
        while t is not None:
            txn = self.txns.get(t)
            if name in txn.writes:
                return txn.writes[name]
            t = txn.parent
        return self.store.committed(name)[0]

    def _test_line(self, inst):
        inst.status = act.TESTING
        try:
            env = {name: decode_value(self._txn_view(inst.txn_id, name))
                   for name in inst.defn.footprint}
        except NodeDown:
            self.coordinated_abort(inst, "node_down")
            return
        failed = [t.name for t in inst.defn.tests if not t.expr.eval(env)]
        self.trace.emit(self.now, "test_line", inst=inst.key,
                        result="fail" if failed else "pass",
                        failed=",".join(failed) or "-")
        if failed:
            self.coordinated_abort(inst, "acceptance_test")
            return
        if inst.parent is None:
            self._start_2pc(inst)
        else:
            if self._strategy_of(inst) == dagmod.NESTED:
                self._apply_grants(self.txns.commit_nested(inst.txn_id))
            inst.savepoint = None
            inst.status = act.COMMITTED
            inst.outcome = "committed"
            self._deliver_outcome(inst)

    def _deliver_outcome(self, inst):
        for role, tid in inst.registered.items():
            th = self.threads[tid]
            if th.status in (DEAD, DONE):
                continue
            self.trace.emit(self.now, "outcome", inst=inst.key, th=tid,
                            role=role, outcome=inst.outcome)
            while th.frames and th.frames[-1].instance is not inst:
                th.frames.pop()
            if th.frames:
                th.frames.pop()
            if th.frames:
                th.frames[-1].pc += 1
                th.status = RUNNABLE
                self._schedule_step(th)
            else:
                th.status = DONE
                th.gen += 1
        self.outcomes[inst.key] = inst.outcome
        if inst.parent is not None:
            for th in self.threads.values():
                if th.status == BLOCKED_ORDER and th.blocked_on is not None \
                        and th.blocked_on[0] is inst.parent \
                        and th.blocked_on[1] == inst.defn.name:
                    self._wake(th)

    # ------------------------------------------------------------------
    # coordinated abort

    def coordinated_abort(self, inst, cause):
        if inst.terminal:
            return
        for child in list(inst.nested.values()):
            if not child.terminal:
                self.coordinated_abort(child, "parent_abort")
        st = inst.twopc
        if st is not None:
            if st.decided == "commit":
                return
            if st.decided is None:
                st.decided = "abort"
                if self.store.node_up(st.coordinator):
                    self.store.append_log(st.coordinator,
                                          LogRecord("abort", st.txn))
                self.trace.emit(self.now, "commit2", txn=st.txn,
                                phase="decision", outcome="abort")
        if inst.txn_id is not None:
            own_txn = inst.parent is None or inst.parent.txn_id != inst.txn_id
            if own_txn:
                if self.txns.get(inst.txn_id).status == ACTIVE:
                    self._apply_grants(self.txns.abort(inst.txn_id, cause=cause))
            elif inst.savepoint is not None:
                self.txns.rollback_to(inst.savepoint)
                inst.savepoint = None
        # recovery-line state is reestablished by undo replay above; the
        # snapshot itself is only the captured record of that line
        inst.status = act.ABORTED
        inst.outcome = "aborted"
        inst.abort_cause = cause
        self._deliver_outcome(inst)
        if inst.defn.escalate and inst.parent is not None:
            self.coordinated_abort(inst.parent, "escalated")

    # ------------------------------------------------------------------
    # two-phase commit

    def _start_2pc(self, inst):
        txn = self.txns.get(inst.txn_id)
        redo = self.txns.writes_by_node(inst.txn_id)
        st = TwoPC(inst, inst.txn_id, txn.coordinator, sorted(redo), redo)
        inst.twopc = st
        self.inflight[st.txn] = st
        if not st.parts:
            self._decide_commit(st)
            return
        for p in st.parts:
            self._send(st.coordinator, p, "prepare",
                       lambda p=p: self._on_prepare(st, p))
        self.schedule(self.now + TWO_PC_TIMEOUT, lambda: self._timeout(st))

    def _timeout(self, st):
        if st.decided is None:
            self.coordinated_abort(st.inst, "2pc_timeout")

    def _on_prepare(self, st, p):
        redo = tuple((name, value, self.store.committed(name)[1] + 1)
                     for name, value in sorted(st.redo[p].items()))
        self.store.append_log(p, LogRecord("prepare", st.txn,
                                           coordinator=st.coordinator,
                                           redo=redo))
        self.trace.emit(self.now, "commit1", txn=st.txn, node=p)
        self._send(p, st.coordinator, "ack", lambda p=p: self._on_ack(st, p))

    def _on_ack(self, st, p):
        st.acks.add(p)
        if st.decided is None and set(st.parts) <= st.acks:
            self._decide_commit(st)

    def _decide_commit(self, st):
        st.decided = "commit"
        self.store.append_log(st.coordinator, LogRecord("commit", st.txn))
        self.trace.emit(self.now, "commit2", txn=st.txn, phase="decision",
                        outcome="commit", parts=",".join(st.parts) or "-")
        self.txns.mark_committed(st.txn)
        written = set(self.txns.get(st.txn).writes)
        other = [o for o, _m in self.txns.locktable.locks_of(st.txn)
                 if o not in written]
        self._apply_grants(self.txns.locktable.release_objects(st.txn, other))
        st.inst.status = act.COMMITTED
        st.inst.outcome = "committed"
        self._deliver_outcome(st.inst)
        for p in st.parts:
            self._send(st.coordinator, p, "apply",
                       lambda p=p: self._on_apply(st, p))

    def _on_apply(self, st, p):
        self._apply_at(st, p)

    def _apply_at(self, st, p):
        if p in st.applied:
            return
        rec = self.store.find_log(p, "prepare", st.txn)
        names = []
        for name, value, version in rec.redo:
            self.store.apply_commit(name, value, version)
            names.append(name)
        st.applied.add(p)
        self.trace.emit(self.now, "commit2", txn=st.txn, phase="apply",
                        node=p, objs=",".join(names))
        self._apply_grants(self.txns.locktable.release_objects(st.txn, names))
        if st.applied == set(st.parts) \
                and self.store.node_up(st.coordinator):
            self.store.append_log(st.coordinator, LogRecord("end", st.txn))

    def _apply_grants(self, granted):
        if not granted:
            return
        self.txns.emit_grants(granted)
        for req in granted:
            th = self.threads.get(req.tag)
            if th is not None and th.status == BLOCKED_LOCK:
                self._wake(th)

    # ------------------------------------------------------------------
    # messages

    def _send(self, src, dst, mkind, fn):
        if not self.store.node_up(src):
            return
        self._mid += 1
        mid = self._mid
        self.trace.emit(self.now, "msg_send", **{"from": src},
                        to=dst, mtype=mkind, mid=mid)
        latency = self.rng.randint(*MSG_LATENCY)
        self.schedule(self.now + latency,
                      lambda: self._deliver(src, dst, mkind, mid, fn))

    def _deliver(self, src, dst, mkind, mid, fn):
        if not self.store.node_up(dst):
            self.trace.emit(self.now, "drop", **{"from": src},
                            to=dst, mtype=mkind, mid=mid)
            return
        self.trace.emit(self.now, "msg_recv", **{"from": src},
                        to=dst, mtype=mkind, mid=mid)
        fn()

    # ------------------------------------------------------------------
    # crash and recovery

    def _crash(self, node):
        if not self.store.node_up(node):
            raise InconsistentFault("crash of down node %s" % node)
        before = self.store.dump_stable()
        self.store.crash_node(node)
        stable_ok = before == self.store.dump_stable()
        vol_cleared = not self.store.nodes[node].volatile
        self.crash_checks.append((node, self.now, stable_ok, vol_cleared))
        self.trace.emit(self.now, "crash", node=node)
        if self.auto_recover_after is not None:
            self.schedule(self.now + self.auto_recover_after,
                          lambda: (None if self.store.node_up(node)
                                   else self._recover(node)))
        dead = [th for th in self.threads.values()
                if th.node == node and th.status not in (DONE, DEAD)]
        for th in dead:
            th.status = DEAD
            th.gen += 1
        self.txns.locktable.drop_waiters([th.tid for th in dead])
        for inst in self._open_instances():
            if inst.terminal:
                continue
            if any(self.threads[tid].status == DEAD
                   for tid in inst.registered.values()):
                self.coordinated_abort(inst, "crash")

    def _recover(self, node):
        if self.store.node_up(node):
            raise InconsistentFault("recover of up node %s" % node)
        self.store.recover_node(node)
        self.trace.emit(self.now, "recover", node=node)
        self._resolve_participant(node)
        self._resolve_coordinator(node)
        # a recovered coordinator may also unblock other nodes' in-doubt
        # prepared records
        for other in self.store.nodes:
            if other != node and self.store.node_up(other):
                self._resolve_participant(other)

    def _resolve_participant(self, node):
        """Presumed-abort resolution of prepared-but-unresolved records."""
        for rec in self.store.nodes[node].log:
            if rec.kind != "prepare":
                continue
            st = self.inflight.get(rec.txn)
            coord = rec.coordinator
            if not self.store.node_up(coord):
                continue  # in doubt; retried when the coordinator recovers
            if self.store.find_log(coord, "commit", rec.txn) is not None:
                if st is not None and node not in st.applied:
                    self._apply_at(st, node)
            elif self.store.find_log(coord, "abort", rec.txn) is None:
                # no decision survives: presumed abort
                if st is not None and st.decided is None:
                    self.coordinated_abort(st.inst, "presumed_abort")
                elif self.store.node_up(coord):
                    self.store.append_log(coord, LogRecord("abort", rec.txn))

    def _resolve_coordinator(self, node):
        for st in self.inflight.values():
            if st.coordinator != node:
                continue
            if st.decided is None:
                self.coordinated_abort(st.inst, "coordinator_recovery")
            elif st.decided == "abort" \
                    and self.store.find_log(node, "abort", st.txn) is None \
                    and self.store.find_log(node, "commit", st.txn) is None:
                self.store.append_log(node, LogRecord("abort", st.txn))
            elif st.decided == "commit":
                for p in st.parts:
                    if p not in st.applied and self.store.node_up(p):
                        self._apply_at(st, p)


def run_scenario(scenario: Scenario, seed=None, strategy=None, horizon=None,
                 unsafe_early_release=False) -> RunResult:
    return Simulator(scenario, seed=seed, strategy=strategy, horizon=horizon,
                     unsafe_early_release=unsafe_early_release).run()
