"""Shared fixtures: the heavy rectangle scans are session-scoped so the
module tests and the acceptance gate reuse one computation."""
import numpy as np
import pytest

from scatterlab.lap import SpectralRect, rect_scan
from scatterlab.opcore import build_grid
from scatterlab.potential import Bump, SparsePotential, gen_sparse_centers


def weak_potential():
    """Single weak ball bump: sup ||F|| over the standard rectangle stays
    below 1/2, putting every scanned z in the decaying regime."""
    return SparsePotential(
        dim=3,
        bumps=(Bump("ball", 0.9, 1.0),),
        centers=np.zeros((1, 3)),
        sparsity_C=1.0,
        gamma=2.0,
        big_r=1.0,
    )


def doubling_potential(count):
    """Alternating-sign small balls on a tight d=3 sparse geometry; used at
    count=8 and count=16 for the bump-doubling stability comparison."""
    centers = gen_sparse_centers(3, 1.0, 2.0, count, seed=7)
    bumps = tuple(Bump("ball", 2.0 if i % 2 == 0 else -2.0, 0.5) for i in range(count))
    return SparsePotential(dim=3, bumps=bumps, centers=centers, sparsity_C=1.0,
                           gamma=2.0, big_r=0.5)


@pytest.fixture(scope="session")
def weak_pg():
    p = weak_potential()
    return p, build_grid(p, 0.35)


@pytest.fixture(scope="session")
def weak_scan(weak_pg):
    p, g = weak_pg
    return rect_scan(p, g, SpectralRect(a=1.0, b=4.0))


@pytest.fixture(scope="session")
def doubling_scans():
    out = {}
    for count in (8, 16):
        p = doubling_potential(count)
        g = build_grid(p, 0.4)
        out[count] = rect_scan(p, g, SpectralRect(a=1.0, b=4.0))
    return out


@pytest.fixture(scope="session")
def deep_well_oracle():
    """Radial-shooting ground state of the depth-20 unit ball well (d=3),
    fully independent of the kernel machinery."""
    from oracles import shooting_ground_state

    return float(shooting_ground_state(20.0))


@pytest.fixture(scope="session")
def deep_well_ground():
    """Ground state of the depth-20 ball well from the sandwich machinery,
    on a grid fine enough for the 1% comparison against the oracle."""
    from scatterlab.spectra import discrete_spectrum

    return discrete_spectrum(Bump("ball", -20.0, 1.0), dim=3, h=0.1,
                             tol=1e-5, max_branches=1)[0]


@pytest.fixture(scope="session")
def beta_family():
    """Coupling family with rational ground-state targets: the multipliers,
    the merged spectral report of the resulting 12-bump potential, and the
    tracked energy window over the coupling range (all on one grid scale)."""
    from scatterlab.spectra import (coupling_family, feynman_hellmann_check,
                                    klaus_set)

    well = Bump("ball", -5.0, 1.0)
    betas = coupling_family(well, 0.1, 12, dim=3, h=0.25)
    bumps = tuple(Bump("ball", b * -5.0, 1.0) for b in betas)
    centers = gen_sparse_centers(3, 2.0, 3.0, 12, seed=23)
    p = SparsePotential(dim=3, bumps=bumps, centers=centers, sparsity_C=2.0,
                        gamma=3.0, big_r=1.0)
    report = klaus_set(p, resolution=0.1, h=0.25)
    window_record = feynman_hellmann_check(well, (0.9, 1.1), samples=5,
                                           dim=3, h=0.25, tol=1e-6)
    return betas, report, window_record
