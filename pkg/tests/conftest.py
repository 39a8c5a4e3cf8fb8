import random

import pytest

from casim.engine import Simulator
from casim.scenario import parse_scenario


def run_text(text, **kw):
    return Simulator(parse_scenario(text), **kw).run()


TRANSFER = """
node alpha
node beta
object acct_a alpha 100
object acct_b beta 40
action transfer
  footprint acct_a acct_b
  role debit
    read acct_a
    write acct_a acct_a - 30
    sync moved emit
    exit
  role credit
    sync moved await
    write acct_b acct_b + 30
    exit
  test conserved acct_a + acct_b == 140
end
client c1 alpha 0 transfer debit
client c2 beta 0 transfer credit
seed 3
horizon 500
"""


@pytest.fixture
def transfer_scenario():
    return parse_scenario(TRANSFER)


def random_competitive_scenario(seed):
    """2-5 single-threaded actions over 2-3 shared objects; used by the
    serializability and smuggling checks."""
    rng = random.Random(seed)
    n_objs = rng.randint(2, 3)
    objs = ["o%d" % i for i in range(n_objs)]
    lines = ["node n1", "node n2"]
    for i, o in enumerate(objs):
        lines.append("object %s n%d %d" % (o, i % 2 + 1, rng.randint(0, 9)))
    n_actions = rng.randint(2, 5)
    for i in range(n_actions):
        lines.append("action act%d" % i)
        lines.append("  footprint %s" % " ".join(objs))
        lines.append("  role solo")
        for _ in range(rng.randint(1, 4)):
            o = rng.choice(objs)
            if rng.random() < 0.5:
                lines.append("    read %s" % o)
            else:
                src = rng.choice(objs)
                lines.append("    write %s %s + %d" % (o, src,
                                                       rng.randint(1, 5)))
        lines.append("    exit")
        lines.append("end")
    for i in range(n_actions):
        lines.append("client c%d n%d %d act%d solo"
                     % (i, i % 2 + 1, rng.randint(0, 6), i))
    lines.append("seed %d" % seed)
    lines.append("horizon 2000")
    return parse_scenario("\n".join(lines))
