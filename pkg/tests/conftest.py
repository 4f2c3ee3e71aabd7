from pathlib import Path

import numpy as np
import pytest

from canonstat.basis import gram_schmidt_finite, make_cosine_basis
from canonstat.kernels import CanonicalKernel, CoefficientTensor

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def cosine():
    return make_cosine_basis(5)


@pytest.fixture
def fair_coin():
    return gram_schmidt_finite([0.5, 0.5])


def random_kernel(basis, m, rng, entries=4, symmetric=False):
    coefs = {}
    for _ in range(entries):
        idx = tuple(int(i) for i in rng.integers(1, basis.max_index + 1, size=m))
        coefs[idx] = float(rng.normal())
    if symmetric:
        import itertools
        sym = {}
        for idx, v in coefs.items():
            for p in set(itertools.permutations(idx)):
                sym[p] = v
        coefs = sym
    return CanonicalKernel(basis, CoefficientTensor(m, coefs))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
