"""scatterlab: numerical laboratory for scattering by sparse potentials.

Submodules
----------
specfun    free-resolvent kernels and envelope bounds
potential  sparse bump potentials and their geometry
opcore     Nystrom discretization of the sandwiched resolvent operators
lap        limiting-absorption scans and Fredholm solves
spectra    negative-energy (Birman-Schwinger) spectral diagnostics
waveop     split-step propagators and wave-operator diagnostics
cli        config-driven batch commands
"""
from __future__ import annotations

__version__ = "0.1.0"

from .specfun import KernelSpec, SpectralPoint, free_kernel, kernel_envelope, macdonald_k
from .potential import (
    Bump,
    SparsePotential,
    choose_truncation_N,
    eval_potential,
    gen_sparse_centers,
    split_sqrt,
)
from .opcore import (
    AssemblyContext,
    NystromGrid,
    OperatorMatrix,
    assemble_free_sandwich,
    block_split,
    build_grid,
    hs_norm,
    load_matrix,
    op_norm,
    positivity_check,
    save_matrix,
)
from .lap import (
    ScanReport,
    SpectralRect,
    approx_inverse_certificate,
    boundary_limit,
    inverse_norm,
    rect_scan,
    solve_P,
)
from .spectra import (
    BSOperator,
    CouplingRecord,
    EigenvalueLostError,
    SpectrumReport,
    binding_threshold,
    bs_eigs,
    bs_operator,
    coupling_family,
    discrete_spectrum,
    feynman_hellmann_check,
    klaus_set,
    report_to_json,
    well_grid,
)

__all__ = [
    "AssemblyContext",
    "BSOperator",
    "Bump",
    "CouplingRecord",
    "EigenvalueLostError",
    "KernelSpec",
    "NystromGrid",
    "OperatorMatrix",
    "ScanReport",
    "SparsePotential",
    "SpectralPoint",
    "SpectralRect",
    "SpectrumReport",
    "approx_inverse_certificate",
    "assemble_free_sandwich",
    "binding_threshold",
    "block_split",
    "boundary_limit",
    "bs_eigs",
    "bs_operator",
    "build_grid",
    "choose_truncation_N",
    "coupling_family",
    "discrete_spectrum",
    "eval_potential",
    "feynman_hellmann_check",
    "free_kernel",
    "gen_sparse_centers",
    "hs_norm",
    "inverse_norm",
    "kernel_envelope",
    "klaus_set",
    "load_matrix",
    "macdonald_k",
    "op_norm",
    "positivity_check",
    "rect_scan",
    "report_to_json",
    "save_matrix",
    "solve_P",
    "split_sqrt",
    "well_grid",
    "__version__",
]
