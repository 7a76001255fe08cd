import numpy as np
import pytest

from unistochastic import _kernels


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=["compiled", "python"])
def backend(request, monkeypatch):
    """Run the solver against each kernel backend in turn."""
    if request.param == "compiled":
        if _kernels.BACKEND != "compiled":
            pytest.skip("compiled kernel not built")
        return "compiled"
    monkeypatch.setattr(_kernels, "lm_multistart", _kernels._lm_py.lm_multistart)
    monkeypatch.setattr(_kernels, "residual_jacobian", _kernels._lm_py.residual_jacobian)
    monkeypatch.setattr(_kernels, "RELEASES_GIL", False)
    return "python"


def dft(n):
    k = np.arange(n)
    return np.exp(2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
CYCLIC_HALF = 0.5 * np.array([[1, 1, 0], [0, 1, 1], [1, 0, 1]], dtype=float)
