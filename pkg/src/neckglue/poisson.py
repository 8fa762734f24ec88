"""Interior/exterior harmonic extensions of sphere data, mode by mode.

On the eigenmode of degree i the interior extension from the sphere of
radius r scales by (|x|/r)^i and the exterior extension by (|x|/r)^{2-n-i};
both are harmonic away from the sphere and reproduce the data on it,
and the exterior one tends to 0 at infinity.  The boundary operator

    Z = d/dr (interior - exterior) at r = 1

is therefore diagonal with positive multiplier 2i + n - 2 on degree i,
hence an isomorphism on the high eigenmode.

Operators are represented diagonally over the harmonic basis; nothing here
solves a grid PDE.  All functions are pure and trivially parallel over modes.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .harmonics import BoundaryData
from .params import as_dimension

__all__ = [
    "BoundaryData",
    "interior_extend",
    "exterior_extend",
    "z_multiplier",
    "z_apply",
    "z_inverse",
]


def z_multiplier(dim, degree: int) -> int:
    """Diagonal multiplier of the boundary operator on degree i: 2i + n - 2."""
    dim = as_dimension(dim)
    if degree < 0:
        raise ParameterError("degree must be nonnegative")
    return 2 * degree + dim.n - 2


def _split(data: BoundaryData, x):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[-1] != data.dim.n:
        raise ParameterError(f"points must have {data.dim.n} components")
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0.0):
        raise ParameterError("extension values at x = 0 are not defined mode-wise")
    return x, r


def interior_extend(data: BoundaryData, x) -> np.ndarray:
    """Harmonic extension into the ball of high-mode data on S_r.

    Value sum_j c_j (|x|/r)^{deg_j} e_j(x/|x|); a polynomial, so its ambient
    Laplacian vanishes identically.
    """
    data.require_high_mode()
    x, r = _split(data, x)
    theta = x / r[:, None]
    out = np.zeros(len(x))
    for (deg, idx), c in data.coeffs.items():
        if c == 0.0:
            continue
        out += c * (r / data.r) ** deg * data.basis.mode(deg, idx).poly(theta)
    return out


def exterior_extend(data: BoundaryData, x) -> np.ndarray:
    """Harmonic extension outside the ball, decaying at infinity.

    Requires data orthogonal to constants (degree >= 1); degree i scales as
    (|x|/r)^{2-n-i}.
    """
    data.require_no_constant()
    x, r = _split(data, x)
    theta = x / r[:, None]
    n = data.dim.n
    out = np.zeros(len(x))
    for (deg, idx), c in data.coeffs.items():
        if c == 0.0:
            continue
        out += c * (r / data.r) ** (2 - n - deg) * data.basis.mode(deg, idx).poly(theta)
    return out


def z_apply(data: BoundaryData) -> BoundaryData:
    """Apply the boundary operator: multiply degree-i coefficients by 2i+n-2."""
    data.require_high_mode()
    return data.map_coeffs(lambda deg, c: z_multiplier(data.dim, deg) * c)


def z_inverse(data: BoundaryData) -> BoundaryData:
    """Invert the boundary operator; the multipliers 2i+n-2 are positive."""
    data.require_high_mode()
    return data.map_coeffs(lambda deg, c: c / z_multiplier(data.dim, deg))
