"""Quadratic spline wavelets with homogeneous Dirichlet conditions and
wavelet Galerkin solvers for the Helmholtz-type problem
``-eps Lap u + a u = f`` on the unit cube.

Names are loaded lazily so that ``wavhelm.cli`` can configure thread
limits before numpy is imported.
"""

from importlib import import_module

__version__ = "0.1.0"

_EXPORTS = {
    "PiecewisePoly": "spline_kernel",
    "mother_scaling": "spline_kernel",
    "boundary_scaling": "spline_kernel",
    "mother_wavelet": "spline_kernel",
    "boundary_wavelet": "spline_kernel",
    "BasisSpec1D": "basis1d",
    "FunctionIndex": "basis1d",
    "primal_matrices": "refinement",
    "dual_pair": "refinement",
    "verify_norm_lemmas": "refinement",
    "mass_matrix": "gram1d",
    "stiffness_matrix": "gram1d",
    "wavelet_gram": "gram1d",
    "HelmholtzOperator": "tensor_operator",
    "cg": "solver",
    "condition_number": "solver",
    "extreme_eigenvalues": "solver",
    "multilevel_galerkin": "solver",
    "ManufacturedProblem": "problems",
    "rhs_load_vector": "problems",
    "error_norms": "problems",
    "AdaptiveOperator": "adaptive",
    "TensorIndex": "adaptive",
    "adaptive_solve": "adaptive",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name):
    if name in _EXPORTS:
        return getattr(import_module(f".{_EXPORTS[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
