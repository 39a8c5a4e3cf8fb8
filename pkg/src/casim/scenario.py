"""Line-oriented scenario files.

A scenario declares the simulated cluster (nodes, objects with home node
and initial integer value), the action definitions with role bodies, the
client contributions that jointly submit actions, a fault script, and run
configuration.  Grammar by example:

    node n1
    object x n1 0
    action transfer mode=general deadline=40
      footprint x y
      role debit
        read x
        write x x - 1
        sync moved emit
        enter audit checker
        exit
      role credit
        write y y + 1
        exit
      test balanced x + y == 10
      nested audit
      order audit < cleanup
    end
    client c1 n1 0 transfer debit
    client c2 n2 0 transfer credit
    fault at 20 crash n2
    fault index 5 recover n2
    seed 7
    strategy nested
    horizon 1000

Client lines may suffix the action with `#key` to distinguish several
instances of one definition.  `fault index K` fires right after the K-th
trace event instead of at a fixed virtual time.
"""

from dataclasses import dataclass, field

from .actions import (CAActionDef, AcceptanceTest, Role, Step,
                      DEFAULT_DEADLINE, MODES, validate_defs,
                      READ, WRITE, SYNC, ENTER, EXIT)
from .errors import ValidationError
from .exprs import Expr


@dataclass
class Contribution:
    client: str
    node: str
    time: int
    action_key: str   # definition name, optionally suffixed `#key`
    role: str

    @property
    def defname(self) -> str:
        return self.action_key.split("#", 1)[0]


@dataclass
class Fault:
    when_kind: str    # "time" | "index"
    when: int
    op: str           # "crash" | "recover"
    node: str


@dataclass
class Scenario:
    nodes: list = field(default_factory=list)
    objects: list = field(default_factory=list)   # (name, node, int value)
    defs: dict = field(default_factory=dict)
    clients: list = field(default_factory=list)
    faults: list = field(default_factory=list)
    seed: int = 0
    strategy: str | None = None
    horizon: int = 10000


def _int(tok, lineno, what):
    try:
        return int(tok)
    except ValueError:
        raise ValidationError("expected integer %s, got %r" % (what, tok),
                              lineno)


def parse_scenario(text: str) -> Scenario:
    sc = Scenario()
    cur_action = None
    cur_role = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip() if not raw.lstrip().startswith("#") \
            else ""
        # `#` introduces comments except inside the action#key suffix on
        # client lines, which never start a line
        if raw.lstrip().startswith("#") or not raw.strip():
            continue
        stripped = raw.strip()
        toks = stripped.split()
        head = toks[0]

        if cur_role is not None and head not in ("role", "test", "footprint",
                                                 "nested", "order", "end"):
            cur_role.steps.append(_parse_step(toks, lineno))
            continue

        if head == "node":
            if len(toks) != 2:
                raise ValidationError("usage: node NAME", lineno)
            sc.nodes.append(toks[1])
        elif head == "object":
            if len(toks) != 4:
                raise ValidationError("usage: object NAME NODE VALUE", lineno)
            sc.objects.append((toks[1], toks[2],
                               _int(toks[3], lineno, "initial value")))
        elif head == "action":
            if cur_action is not None:
                raise ValidationError("nested `action` block (missing `end`?)",
                                      lineno)
            cur_action = _parse_action_header(toks, lineno)
        elif head == "role":
            if cur_action is None:
                raise ValidationError("`role` outside action block", lineno)
            if len(toks) != 2:
                raise ValidationError("usage: role NAME", lineno)
            if toks[1] in cur_action.roles:
                raise ValidationError("duplicate role %s" % toks[1], lineno)
            cur_role = Role(toks[1], [])
            cur_action.roles[toks[1]] = cur_role
        elif head == "footprint":
            _need_action(cur_action, head, lineno)
            cur_action.footprint.extend(toks[1:])
            cur_role = None
        elif head == "test":
            _need_action(cur_action, head, lineno)
            if len(toks) < 3:
                raise ValidationError("usage: test NAME EXPR", lineno)
            try:
                expr = Expr(" ".join(toks[2:]))
            except ValidationError as e:
                raise ValidationError(str(e), lineno)
            cur_action.tests.append(AcceptanceTest(toks[1], expr))
            cur_role = None
        elif head == "nested":
            _need_action(cur_action, head, lineno)
            cur_action.nested.extend(toks[1:])
            cur_role = None
        elif head == "order":
            _need_action(cur_action, head, lineno)
            if len(toks) != 4 or toks[2] != "<":
                raise ValidationError("usage: order A < B", lineno)
            cur_action.order.append((toks[1], toks[3]))
            cur_role = None
        elif head == "end":
            if cur_action is None:
                raise ValidationError("`end` without action block", lineno)
            if cur_action.name in sc.defs:
                raise ValidationError("duplicate action %s" % cur_action.name,
                                      lineno)
            sc.defs[cur_action.name] = cur_action
            cur_action = None
            cur_role = None
        elif head == "client":
            if len(toks) != 6:
                raise ValidationError(
                    "usage: client NAME NODE TIME ACTION ROLE", lineno)
            sc.clients.append(Contribution(toks[1], toks[2],
                                           _int(toks[3], lineno, "time"),
                                           toks[4], toks[5]))
        elif head == "fault":
            sc.faults.append(_parse_fault(toks, lineno))
        elif head == "seed":
            sc.seed = _int(toks[1], lineno, "seed")
        elif head == "strategy":
            if len(toks) != 2 or toks[1] not in ("flatten", "nested"):
                raise ValidationError("usage: strategy flatten|nested", lineno)
            sc.strategy = toks[1]
        elif head == "horizon":
            sc.horizon = _int(toks[1], lineno, "horizon")
        else:
            raise ValidationError("unknown directive %r" % head, lineno)

    if cur_action is not None:
        raise ValidationError("unterminated action block %r" % cur_action.name)
    validate_scenario(sc)
    return sc


def _need_action(cur_action, head, lineno):
    if cur_action is None:
        raise ValidationError("`%s` outside action block" % head, lineno)


def _parse_action_header(toks, lineno) -> CAActionDef:
    if len(toks) < 2:
        raise ValidationError("usage: action NAME [mode=..] [deadline=..] "
                              "[escalate]", lineno)
    d = CAActionDef(toks[1], {})
    for tok in toks[2:]:
        if tok == "escalate":
            d.escalate = True
        elif tok.startswith("mode="):
            d.mode = tok[5:]
            if d.mode not in MODES:
                raise ValidationError("unknown mode %r" % d.mode, lineno)
        elif tok.startswith("deadline="):
            d.deadline = _int(tok[9:], lineno, "deadline")
        else:
            raise ValidationError("unknown action option %r" % tok, lineno)
    return d


def _parse_step(toks, lineno) -> Step:
    head = toks[0]
    if head == "read":
        if len(toks) != 2:
            raise ValidationError("usage: read OBJECT", lineno)
        return Step(READ, obj=toks[1])
    if head == "write":
        if len(toks) < 3:
            raise ValidationError("usage: write OBJECT EXPR", lineno)
        try:
            expr = Expr(" ".join(toks[2:]))
        except ValidationError as e:
            raise ValidationError(str(e), lineno)
        return Step(WRITE, obj=toks[1], expr=expr)
    if head == "sync":
        if len(toks) != 3 or toks[2] not in ("emit", "await"):
            raise ValidationError("usage: sync SIGNAL emit|await", lineno)
        return Step(SYNC, signal=toks[1], sync_op=toks[2])
    if head == "enter":
        if len(toks) != 3:
            raise ValidationError("usage: enter ACTION ROLE", lineno)
        return Step(ENTER, action=toks[1], role=toks[2])
    if head == "exit":
        return Step(EXIT)
    raise ValidationError("unknown step %r" % head, lineno)


def validate_scenario(sc: Scenario):
    if len(set(sc.nodes)) != len(sc.nodes):
        raise ValidationError("duplicate node declaration")
    names = set()
    for name, node, _v in sc.objects:
        if node not in sc.nodes:
            raise ValidationError("object %s homed at unknown node %s"
                                  % (name, node))
        if name in names:
            raise ValidationError("duplicate object %s" % name)
        names.add(name)
    validate_defs(sc.defs, known_objects=names)
    for c in sc.clients:
        if c.node not in sc.nodes:
            raise ValidationError("client %s at unknown node %s"
                                  % (c.client, c.node))
        if c.defname not in sc.defs:
            raise ValidationError("client %s submits unknown action %s"
                                  % (c.client, c.defname))
        if c.role not in sc.defs[c.defname].roles:
            raise ValidationError("client %s: action %s has no role %s"
                                  % (c.client, c.defname, c.role))
    for f in sc.faults:
        if f.node not in sc.nodes:
            raise ValidationError("fault targets unknown node %s" % f.node)
        if f.when_kind == "time" and f.when > sc.horizon:
            raise ValidationError("fault at time %d beyond horizon %d"
                                  % (f.when, sc.horizon))


def _parse_fault(toks, lineno) -> Fault:
    if len(toks) != 5 or toks[1] not in ("at", "index") \
            or toks[3] not in ("crash", "recover"):
        raise ValidationError("usage: fault at|index N crash|recover NODE",
                              lineno)
    return Fault("time" if toks[1] == "at" else "index",
                 _int(toks[2], lineno, "fault position"), toks[3], toks[4])


def load_scenario(path: str) -> Scenario:
    with open(path) as f:
        return parse_scenario(f.read())
