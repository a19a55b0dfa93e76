"""chflow: stability analysis of complex hyperbolic space under normalized Ricci flow.

Layers:
    frame_algebra        exact curvature algebra on an adapted orthonormal frame
    chart_geometry       ball-model metric, geodesics, distance, grid caches
    tensor_calculus      discrete covariant calculus and the stability operator
    stability_analysis   integral identities, spectral bounds, linearized flow
    flow_engine          nonlinear normalized Ricci / Ricci-DeTurck flow
    holder_interpolation weighted Holder norms, K-functionals, interpolation
    cli                  command-line interface and report writers
"""

__version__ = "0.1.0"

from .frame_algebra import (
    assemble_R_gamma_bruteforce,
    block_R_gamma,
    build_gamma_basis,
    einstein_constants,
    j_action,
    riemann_component,
    sectional_curvature,
    spectrum_R_gamma,
)

__all__ = [
    "__version__",
    "j_action",
    "riemann_component",
    "sectional_curvature",
    "build_gamma_basis",
    "assemble_R_gamma_bruteforce",
    "block_R_gamma",
    "spectrum_R_gamma",
    "einstein_constants",
]
