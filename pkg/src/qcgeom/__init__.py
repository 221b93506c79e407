"""Quaternionic contact hypersurfaces of H^{n+1}: induced qc-structures,
qc-Einstein calibration, the parallel form Delta and the reduction of a
qc-hypersurface to one of three model hyperquadrics."""

__version__ = "0.1.0"

from .calibration import CalibratedFrame, calibrate, compute_mu, mu_determinant_oracle
from .classify import Classification, DeltaForm, classify, delta_constancy, signature
from .errors import GeometricRejection, InputError, QCGeomError
from .frame import HatFrame, diagnose, hat_structure, recover_conformal_pair
from .quat import AffineMap, Quaternion, random_affine_map
from .surface import SurfaceSpec, load_surface, parse_surface, sample_points

__all__ = [
    "AffineMap",
    "CalibratedFrame",
    "Classification",
    "DeltaForm",
    "GeometricRejection",
    "HatFrame",
    "InputError",
    "QCGeomError",
    "Quaternion",
    "SurfaceSpec",
    "calibrate",
    "classify",
    "compute_mu",
    "delta_constancy",
    "diagnose",
    "hat_structure",
    "load_surface",
    "mu_determinant_oracle",
    "parse_surface",
    "random_affine_map",
    "recover_conformal_pair",
    "sample_points",
    "signature",
]
