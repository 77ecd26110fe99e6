import math

import numpy as np
import pytest

from tomoforge import QuantumState, synthesize

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_line("")
        terminalreporter.write_line("=== acceptance criteria ===")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)

ALPHAS = [0.0, math.sqrt(0.1), math.sqrt(0.3), math.sqrt(0.5), 1.0]


def paper_states():
    """The eleven training states: six Fock, five coherent."""
    return [QuantumState.fock(n) for n in range(6)] + \
           [QuantumState.coherent(a) for a in ALPHAS]


def pacs_states():
    return [QuantumState.photon_added_cs(a) for a in ALPHAS]


@pytest.fixture(scope="session")
def eleven_states():
    return paper_states()


@pytest.fixture(scope="session")
def canonical_tomograms(eleven_states):
    return {s.label(): synthesize(s) for s in eleven_states}


def fine_grid(lo=-5.0, hi=5.0, n=4001):
    return np.linspace(lo, hi, n)
