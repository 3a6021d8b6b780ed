import numpy as np
import pytest

from tubalg import Tensor3, build_transform, dct, dft, identity, random_valid, scaled

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def rand_tensor(rng, m, p, n):
    return Tensor3(rng.standard_normal((m, p, n)))


def pair_transform():
    """The 2x2 conjugate-pair transform [[m1, m2], [conj m1, conj m2]]."""
    return build_transform([[1 + 1j, 2 - 0.5j], [1 - 1j, 2 + 0.5j]])


def valid_transforms():
    return [
        identity(4),
        dft(4),
        dct(5),
        random_valid(6, 7),
        scaled(dct(4), (2.0, 1.0, 0.5, 3.0)),
        scaled(dft(4), (0.5, 2.0, 1.5)),
    ]


def rel(a, b):
    """Relative Frobenius distance of two arrays or tensors."""
    a = a.values if isinstance(a, Tensor3) else np.asarray(a)
    b = b.values if isinstance(b, Tensor3) else np.asarray(b)
    return np.linalg.norm((a - b).ravel()) / max(np.linalg.norm(b.ravel()), 1e-300)
