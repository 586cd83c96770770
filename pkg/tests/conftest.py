import numpy as np
import pytest

import diracsym as ds
from diracsym.symbols import _StageEngine, dirac_system, kernel_basis
from diracsym.transport import PolarizationState


@pytest.fixture(scope="session")
def mink4():
    return ds.minkowski(4)


@pytest.fixture(scope="session")
def mink2():
    return ds.minkowski(2)


@pytest.fixture(scope="session")
def schw():
    return ds.schwarzschild(1.0)


@pytest.fixture(scope="session")
def schw_iso():
    return ds.schwarzschild_isotropic(1.0)


@pytest.fixture(scope="session")
def rep_mink4(mink4):
    return ds.build_canonical_module(mink4)


@pytest.fixture(scope="session")
def rep_schw(schw):
    return ds.build_canonical_module(schw)


@pytest.fixture(scope="session")
def sys_mink4(rep_mink4, mink4):
    return dirac_system(rep_mink4, mink4)


@pytest.fixture(scope="session")
def sys_schw(rep_schw, schw):
    return dirac_system(rep_schw, schw)


SCHW_X0 = np.array([0.0, 10.0, 1.2, 0.3])


def null_state(m, rep, x, seed):
    """Random future null covector at x plus the first kernel vector."""
    rng = np.random.default_rng(seed)
    xi = ds.random_null_covector(m, x, rng)
    eng = _StageEngine(rep, m)
    vecs, dim = kernel_basis(eng(x, xi).sigma1)
    assert dim >= 1
    return PolarizationState(ds.PhasePoint(np.asarray(x, float), xi), vecs[0])
