import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

TOY_RUNS = """\
1 Q0 d1 1 3.0 A
1 Q0 d2 2 2.0 A
1 Q0 d3 3 1.0 A
2 Q0 d4 1 2.0 A
2 Q0 d5 2 1.0 A
1 Q0 d3 1 3.0 B
1 Q0 d1 2 2.0 B
1 Q0 d9 3 1.0 B
2 Q0 d5 1 2.0 B
2 Q0 d4 2 1.0 B
1 Q0 d2 1 3.0 C
1 Q0 d9 2 2.0 C
1 Q0 d1 3 1.0 C
2 Q0 d6 1 2.0 C
2 Q0 d4 2 1.0 C
"""

TOY_QRELS = """\
1 0 d1 1
1 0 d2 0
1 0 d3 2
2 0 d4 1
2 0 d5 0
"""


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def toy_runs():
    from lowcost_ir.collection import parse_runs
    return parse_runs(TOY_RUNS)


@pytest.fixture
def toy_qrels():
    from lowcost_ir.collection import parse_qrels
    return parse_qrels(TOY_QRELS)


def random_runset(rng, m=6, n=4, docs=30, depth=15):
    """Random runs over a shared document universe, distinct scores per list."""
    from lowcost_ir.collection import parse_runs
    lines = []
    for s in range(m):
        for t in range(n):
            chosen = rng.choice(docs, size=depth, replace=False)
            for r, d in enumerate(chosen, 1):
                lines.append(f"t{t + 1} Q0 d{d} {r} {depth - r + 1}.0 s{s + 1}")
    return parse_runs("\n".join(lines))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
