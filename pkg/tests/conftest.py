import numpy as np
import pytest

from xor_arena.games import BinaryGame

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_binary_game(rng, max_q=3, zeros=False):
    ns, nt = (int(k) for k in rng.integers(1, max_q + 1, 2))
    pi = rng.random((ns, nt))
    if zeros:
        pi[rng.random((ns, nt)) < 0.3] = 0.0
        if pi.sum() == 0:
            pi[0, 0] = 1.0
    return BinaryGame(pi / pi.sum(), rng.integers(0, 2, (2, 2, ns, nt)))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
