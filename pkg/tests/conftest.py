"""Shared fixtures: small operator pairs reused across test modules.

Everything here runs at deliberately coarse meshes (n = 128..256); the
acceptance suite re-verifies the headline numbers at the production sizes.
"""

import numpy as np
import pytest

from locdiff import (
    Coefficient,
    ProblemConfig,
    assemble,
    build_mesh,
    build_pair,
    default_config,
    make_profile,
)


def classic_operator(n=256, lam=1.0, p_const=1.0, f=None, m0=None):
    """Constant-coefficient Neumann operator: p constant via a flat table.

    The spectrum is lam + p*k^2*pi^2 with cosine modes, the workhorse
    analytic oracle.  m0 defaults to just below lam so the coercivity
    check passes.
    """
    cfg = ProblemConfig(lam=lam, c=Coefficient(0.0),
                        m0=m0 if m0 is not None else min(0.3, 0.9 * lam),
                        **({"f": f} if f is not None else {}))
    profile = make_profile(cfg, 0.05, kind="custom-table",
                           table=[[0.0, p_const], [1.0, p_const]])
    mesh = build_mesh(cfg, profile, n)
    return assemble(mesh, cfg, profile, "perturbed")


@pytest.fixture(scope="session")
def cfg():
    return default_config()


@pytest.fixture(scope="session")
def cfg_const():
    """lam + c identically 0.5: the cubic's equilibria are the constants
    0 and +-sqrt(0.5)."""
    return ProblemConfig(lam=0.5, c=Coefficient(0.0))


@pytest.fixture(scope="session")
def pair256(cfg):
    """Default (nonconstant c) ramp pair at eps=0.05, n=256."""
    profile = make_profile(cfg, 0.05)
    op_eps, op_lim = build_pair(cfg, profile, 256)
    return profile, op_eps, op_lim


@pytest.fixture(scope="session")
def pair_const128(cfg_const):
    """Constant-coefficient ramp pair at eps=0.05, n=128."""
    profile = make_profile(cfg_const, 0.05)
    op_eps, op_lim = build_pair(cfg_const, profile, 128)
    return profile, op_eps, op_lim


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
