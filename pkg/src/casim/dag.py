"""Operation DAGs and the two strategies for mapping a joint action onto
transactions.

The DAG captures the partial order over operation invocations of one
action instance: per-thread program order, cross-thread synchronization
edges from completed emit/await pairs, and declared ordering constraints
between nested-action boundary nodes.  `flatten` linearizes the DAG into
one sequence bound to a single transaction; `to_nested` binds each
nested-action region to a child transaction instead.
"""

from dataclasses import dataclass, field

from .errors import CyclicConstraint

PROG = "prog"
SYNC = "sync"
CONSTRAINT = "constraint"

FLATTEN = "flatten"
NESTED = "nested"


@dataclass
class OpNode:
    nid: int
    thread: int       # thread ordinal; -1 for a collapsed nested boundary
    step: int
    kind: str         # read | write | sync_emit | sync_await | nested
    obj: str | None = None


class OperationDAG:
    def __init__(self):
        self.nodes: list[OpNode] = []
        self.edges: list[tuple[int, int, str]] = []
        self._succ: dict[int, list[int]] = {}

    def add_node(self, thread, step, kind, obj=None) -> OpNode:
        node = OpNode(len(self.nodes), thread, step, kind, obj)
        self.nodes.append(node)
        return node

    def add_edge(self, src: int, dst: int, etype: str):
        assert src != dst
        self.edges.append((src, dst, etype))
        self._succ.setdefault(src, []).append(dst)

    def successors(self, nid: int):
        return self._succ.get(nid, [])

    def predecessors_count(self) -> dict[int, int]:
        indeg = {n.nid: 0 for n in self.nodes}
        for _s, d, _t in self.edges:
            indeg[d] += 1
        return indeg

    def is_acyclic(self) -> bool:
        return len(self.topological_order()) == len(self.nodes)

    def check_acyclic(self):
        if not self.is_acyclic():
            raise CyclicConstraint("operation DAG has a cycle")

    def topological_order(self, tie_break=None) -> list[int]:
        """Kahn's algorithm; tie_break keys the ready set (default: lowest
        (thread ordinal, step index) first)."""
        if tie_break is None:
            tie_break = lambda n: (n.thread, n.step)
        indeg = self.predecessors_count()
        ready = sorted((n.nid for n in self.nodes if indeg[n.nid] == 0),
                       key=lambda nid: tie_break(self.nodes[nid]))
        order = []
        while ready:
            nid = ready.pop(0)
            order.append(nid)
            for succ in self.successors(nid):
                indeg[succ] -= 1
                if indeg[succ] == 0:
                    ready.append(succ)
            ready.sort(key=lambda i: tie_break(self.nodes[i]))
        return order

    def all_topological_orders(self, limit=100000):
        """Exhaustive enumeration; only sensible for small DAGs."""
        indeg = self.predecessors_count()
        out = []
        order = []

        def rec():
            if len(out) >= limit:
                return
            ready = [nid for nid in indeg if indeg[nid] == 0
                     and nid not in placed]
            if not ready:
                if len(order) == len(self.nodes):
                    out.append(list(order))
                return
            for nid in ready:
                placed.add(nid)
                order.append(nid)
                for s in self.successors(nid):
                    indeg[s] -= 1
                rec()
                for s in self.successors(nid):
                    indeg[s] += 1
                order.pop()
                placed.discard(nid)

        placed = set()
        rec()
        return out

    def count_linear_extensions(self) -> int:
        indeg = self.predecessors_count()
        placed = set()

        def rec():
            ready = [nid for nid in indeg if indeg[nid] == 0
                     and nid not in placed]
            if not ready:
                return 1 if len(placed) == len(self.nodes) else 0
            total = 0
            for nid in ready:
                placed.add(nid)
                for s in self.successors(nid):
                    indeg[s] -= 1
                total += rec()
                for s in self.successors(nid):
                    indeg[s] += 1
                placed.discard(nid)
            return total

        return rec()

    def dump_lines(self) -> list[str]:
        out = []
        for n in self.nodes:
            out.append("%d\t%d\t%d\t%s\t%s" %
                       (n.nid, n.thread, n.step, n.kind, n.obj or "-"))
        for s, d, t in self.edges:
            out.append("edge\t%d\t%d\t%s" % (s, d, t))
        return out


@dataclass
class MappingPlan:
    strategy: str                       # FLATTEN or NESTED
    binding: dict = field(default_factory=dict)  # region key -> txn id


def strategy_select(has_nested: bool, configured: str | None) -> MappingPlan:
    """Configured strategy wins; otherwise nested for defs with nested
    actions, flatten for leaf defs."""
    if configured in (FLATTEN, NESTED):
        return MappingPlan(configured)
    return MappingPlan(NESTED if has_nested else FLATTEN)


def flatten(dag: OperationDAG) -> list[int]:
    """Deterministic topological linearization of the finalized DAG."""
    dag.check_acyclic()
    return dag.topological_order()


def to_nested(instance_tree, dag: OperationDAG) -> MappingPlan:
    """Bind each nested-action region to its instance's child transaction.

    instance_tree is an iterable of (region_key, txn_id, parent_txn_id);
    the root region binds the parent's own non-nested operations.
    """
    dag.check_acyclic()
    plan = MappingPlan(NESTED)
    for region, txn_id, _parent in instance_tree:
        plan.binding[region] = txn_id
    return plan


def count_admissible_orders(dag: OperationDAG, strategy: str) -> int:
    """Distinct execution orders the scheduler could produce under each
    strategy.  Flatten executes the single tie-broken linearization;
    nested leaves every linear extension of the DAG available."""
    dag.check_acyclic()
    if strategy == FLATTEN:
        return 1
    return dag.count_linear_extensions()
