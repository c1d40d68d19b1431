import numpy as np
import pytest

from rdregion.bt import BtSourceModel
from rdregion.ceo import CeoSourceModel, EncoderKernels


@pytest.fixture
def sym_model():
    return CeoSourceModel.bern_bsc(0.5, 0.25, 0.25)


@pytest.fixture
def asym_model():
    return CeoSourceModel.bern_bsc(0.5, 0.25, 0.1)


@pytest.fixture
def dsbs():
    return BtSourceModel.dsbs(0.1)


def random_rows(rng, n, m):
    return rng.dirichlet(np.ones(m), size=n)


def random_ceo(rng, nx=2, n1=2, n2=2):
    return CeoSourceModel.from_arrays(
        rng.dirichlet(np.ones(nx)), random_rows(rng, nx, n1), random_rows(rng, nx, n2)
    )


def random_bt(rng, n1=2, n2=2):
    return BtSourceModel.from_array(rng.dirichlet(np.ones(n1 * n2)).reshape(n1, n2))


def random_kernels(rng, n1=2, n2=2, u1=None, u2=None):
    return EncoderKernels.from_arrays(random_rows(rng, n1, u1 or n1), random_rows(rng, n2, u2 or n2))
