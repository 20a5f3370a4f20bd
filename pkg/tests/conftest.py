import numpy as np
import pytest
from hypothesis import strategies as st

finite = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False, allow_infinity=False)


@st.composite
def hermitian_2x2(draw, scale=1.0):
    a, d, re, im = (draw(finite) for _ in range(4))
    return scale * np.array([[a, re - 1j * im], [re + 1j * im, d]], dtype=complex)


@st.composite
def traceless_hermitian(draw):
    z, re, im = (draw(finite) for _ in range(3))
    return np.array([[z, re - 1j * im], [re + 1j * im, -z]], dtype=complex)


@st.composite
def normalized_states(draw):
    v = np.array([complex(draw(finite), draw(finite)) for _ in range(2)])
    n = np.linalg.norm(v)
    if n < 1e-3:
        v, n = np.array([1.0 + 0j, 0.0]), 1.0
    return v / n


@st.composite
def density_matrices(draw):
    psi = draw(normalized_states())
    phi = draw(normalized_states())
    w = draw(st.floats(min_value=0.0, max_value=1.0))
    return w * np.outer(psi, psi.conj()) + (1 - w) * np.outer(phi, phi.conj())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
