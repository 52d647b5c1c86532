import itertools
import math

import numpy as np
import pytest

from rebel_degroot.topology import AgentTypes, generate_random, validate


def uniform_rows(support):
    """Row-stochastic matrix spreading each row's weight evenly over its support."""
    m = np.array(support, dtype=float)
    return m / m.sum(axis=1, keepdims=True)


def reachability(weights):
    """Transitive closure by repeated boolean squaring; independent of BFS."""
    n = len(weights)
    r = (np.asarray(weights) > 0) | np.eye(n, dtype=bool)
    for _ in range(max(1, math.ceil(math.log2(n)))):
        r = (r.astype(int) @ r.astype(int)) > 0
    return r


def sc_supports(n):
    """Every strongly connected zero-diagonal support on n nodes."""
    slots = [(j, k) for j in range(n) for k in range(n) if j != k]
    for bits in itertools.product((0, 1), repeat=len(slots)):
        m = np.zeros((n, n), dtype=int)
        for (j, k), b in zip(slots, bits):
            m[j, k] = b
        if m.sum(axis=1).min() == 0:
            continue
        if reachability(m).all():
            yield m


def all_type_assignments(n):
    for bits in itertools.product((False, True), repeat=n):
        yield AgentTypes(np.array(bits))


@pytest.fixture
def swap():
    return validate([[0, 1], [1, 0]])


@pytest.fixture
def cycle3():
    return validate([[0, 1, 0], [0, 0, 1], [1, 0, 0]])


@pytest.fixture
def cycle4():
    return validate(np.roll(np.eye(4), 1, axis=1))


@pytest.fixture
def chord3():
    # 3-cycle 0->1->2->0 plus chord 0->2
    return validate([[0, 0.5, 0.5], [0, 0, 1], [1, 0, 0]])


@pytest.fixture
def two_swaps():
    return validate([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])


def random_instances(count, seed, n_range=(2, 6), require_sc=True):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        d = int(rng.integers(1, n))
        t = generate_random(n, d, int(rng.integers(2**32)), require_sc)
        types = AgentTypes(rng.random(n) < 0.5)
        yield t, types, rng


ACCEPTANCE_LINES = []


def acceptance_line(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
