"""The translated family u_{eps,R,a} of singular radial solutions.

Built on a DelaunayOrbit through

    u_eps(x)      = |x|^{(2-n)/2} v(-log|x|),
    u_{eps,R}(x)  = R^{(2-n)/2} u_eps(x/R) = |x|^{(2-n)/2} v(-log|x| + log R),
    u_{eps,R,a}(x)= |x - a|x|^2|^{(2-n)/2} v(-2 log|x| + log|x - a|x|^2| + log R).

Radial derivatives are analytic through (v, v', v''):

    r du/dr   = r^{(2-n)/2} [ (2-n)/2 v - v' ],
    r^2 d2u/dr2 = r^{(2-n)/2} [ n(n-2)/4 v + (n-1) v' + v'' ],

with v evaluated at -log r + log R.  The module also hosts the small-eps
model comparisons: u_eps is eps/2 (1 + r^{2-n}) up to O(eps^{(n+2)/(n-2)} r^{-n}),
with matching expansions for the first two radial derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .delaunay import DelaunayOrbit
from .errors import ParameterError, SingularPointError
from .params import as_dimension

DEFAULT_R0 = 0.5


@dataclass(frozen=True)
class FamilyParams:
    """Delaunay translation R, point-at-infinity translation a, optional neck offset b.

    When b is given, R is pinned by R^{(2-n)/2} = 2(1+b)/eps with |b| <= 1/2.
    The a-translation is only valid while |a| |x| < r0.
    """

    orbit: DelaunayOrbit
    R: float
    a: np.ndarray = None
    b: float | None = None
    r0: float = DEFAULT_R0

    def __post_init__(self):
        if self.R <= 0:
            raise ParameterError(f"R={self.R} must be positive")
        n = self.orbit.dim.n
        a = np.zeros(n) if self.a is None else np.atleast_1d(np.asarray(self.a, dtype=float))
        if a.shape != (n,):
            raise ParameterError(f"a must be a vector of {n} reals, got shape {a.shape}")
        object.__setattr__(self, "a", a)
        if self.b is not None:
            if abs(self.b) > 0.5:
                raise ParameterError(f"|b|={abs(self.b)} exceeds 1/2")
            want = neck_radius_from_b(self.orbit.dim, self.orbit.epsilon, self.b)
            if not np.isclose(self.R, want, rtol=1e-12, atol=0):
                raise ParameterError(
                    f"R={self.R} inconsistent with b={self.b}: expected {want}"
                )

    @classmethod
    def from_b(cls, orbit: DelaunayOrbit, b: float = 0.0, a=None, r0: float = DEFAULT_R0):
        R = neck_radius_from_b(orbit.dim, orbit.epsilon, b)
        return cls(orbit=orbit, R=R, a=a, b=b, r0=r0)


def neck_radius_from_b(dim, epsilon: float, b: float) -> float:
    """Solve R^{(2-n)/2} = 2(1+b)/eps for R."""
    dim = as_dimension(dim)
    if abs(b) > 0.5:
        raise ParameterError(f"|b|={abs(b)} exceeds 1/2")
    if epsilon <= 0 or epsilon >= dim.cylinder_value:
        raise ParameterError(f"epsilon={epsilon} not admissible for n={dim.n}")
    return (2.0 * (1.0 + b) / epsilon) ** (2.0 / (2.0 - dim.n))


def _radii(x, n):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != n:
        raise ParameterError(f"points must have {n} components, got shape {x.shape}")
    r = np.linalg.norm(x, axis=-1)
    if np.any(r == 0.0):
        raise SingularPointError("evaluation at the puncture x = 0")
    return x, r


def u_eps_radial(orbit: DelaunayOrbit, r, R: float = 1.0):
    """(u, r du/dr, r^2 d2u/dr2) of u_{eps,R} at radii r > 0."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise SingularPointError("radius must be positive")
    dim = orbit.dim
    n = dim.n
    t = -np.log(r) + np.log(R)
    v, vp, vpp = orbit.evaluate(t)
    pref = r ** ((2.0 - n) / 2.0)
    u = pref * v
    ru_r = pref * ((2.0 - n) / 2.0 * v - vp)
    r2u_rr = pref * (n * (n - 2) / 4.0 * v + (n - 1) * vp + vpp)
    return u, ru_r, r2u_rr


def u_eps(orbit: DelaunayOrbit, x) -> np.ndarray:
    """The rotationally invariant solution at points x != 0."""
    _, r = _radii(x, orbit.dim.n)
    return u_eps_radial(orbit, r)[0]


def u_eps_R(params: FamilyParams, r):
    """(u, r du/dr, r^2 d2u/dr2) for the R-translated solution, analytic via v."""
    return u_eps_radial(params.orbit, r, R=params.R)


def u_eps_R_a(params: FamilyParams, x) -> np.ndarray:
    """The fully translated solution at points x; a = 0 reduces to u_eps_R."""
    orbit, R, a = params.orbit, params.R, params.a
    n = orbit.dim.n
    x, r = _radii(x, n)
    if np.any(np.linalg.norm(a) * r >= params.r0):
        raise ParameterError(
            f"|a| |x| >= r0={params.r0}: the a-translation expansion leaves its validity range"
        )
    y = x - a * (r**2)[..., None]
    q = np.linalg.norm(y, axis=-1)
    t = -2.0 * np.log(r) + np.log(q) + np.log(R)
    v, _, _ = orbit.evaluate(t)
    return q ** ((2.0 - n) / 2.0) * v


def u_eps_R_a_radial_derivative(params: FamilyParams, x) -> np.ndarray:
    """Radial directional derivative (x/|x|) . grad u_{eps,R,a}, analytic chain rule."""
    orbit, R, a = params.orbit, params.R, params.a
    n = orbit.dim.n
    a2 = (n - 2) / 2.0
    x, r = _radii(x, n)
    xhat = x / r[..., None]
    y = x - a * (r**2)[..., None]
    q = np.linalg.norm(y, axis=-1)
    # dq along x-hat: (y . (xhat - 2(a.xhat)|x| ... )) / q with Jacobian dy_i/dx_j = delta - 2 a_i x_j
    ay = y @ a
    dq = (np.einsum("...i,...i->...", y, xhat) - 2.0 * ay * r) / q
    t = -2.0 * np.log(r) + np.log(q) + np.log(R)
    dt = -2.0 / r + dq / q
    v, vp, _ = orbit.evaluate(t)
    return q ** (-a2) * (-a2 * dq / q * v + vp * dt)


def a_expansion_remainder(params: FamilyParams, x) -> np.ndarray:
    """Remainder of the first-order a-expansion

        u_{eps,R,a} - u_{eps,R} - ((n-2) u_{eps,R} + r du/dr) a.x,

    expected O(|a|^2 |x|^{(6-n)/2}); halving |a| should reduce it ~4x.
    """
    x, r = _radii(x, params.orbit.dim.n)
    n = params.orbit.dim.n
    u, ru_r, _ = u_eps_R(params, r)
    lin = ((n - 2) * u + ru_r) * (x @ params.a)
    return u_eps_R_a(params, x) - u - lin


def a_expansion_remainder_neck(params: FamilyParams, x) -> np.ndarray:
    """Same remainder, judged against the neck-side bound O(|a|^2 eps R^{(2-n)/2} |x|^2).

    Meaningful when R <= |x|; implemented as a separate check because the
    two remainder forms have different sharpness regimes.
    """
    rem = a_expansion_remainder(params, x)
    _, r = _radii(x, params.orbit.dim.n)
    n = params.orbit.dim.n
    anorm = float(np.linalg.norm(params.a))
    scale = anorm**2 * params.orbit.epsilon * params.R ** ((2.0 - n) / 2.0) * r**2
    return rem / scale


@dataclass
class AsymptoticModelReport:
    """Sup over a radius grid of the three model-comparison ratios.

    Each deviation is normalized by eps^{(n+2)/(n-2)} |x|^{-n}; the model is
    eps/2 (1 + r^{2-n}) and its radial derivatives.
    """

    epsilon: float
    radii: np.ndarray
    ratio_value: np.ndarray
    ratio_deriv1: np.ndarray
    ratio_deriv2: np.ndarray

    @property
    def sups(self):
        return (
            float(np.max(self.ratio_value)),
            float(np.max(self.ratio_deriv1)),
            float(np.max(self.ratio_deriv2)),
        )


def check_asymptotic_model(orbit: DelaunayOrbit, radii) -> AsymptoticModelReport:
    """Normalized deviation of u_eps and its radial derivatives from the model.

    The second-derivative model coefficient is (n-1)(n-2)/2, the second radial
    derivative of eps/2 |x|^{2-n}.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0) or np.any(radii > 1):
        raise ParameterError("radii must lie in (0, 1]")
    n = orbit.dim.n
    eps = orbit.epsilon
    u, ru_r, r2u_rr = u_eps_radial(orbit, radii)
    scale = eps**orbit.dim.critical_power * radii ** (-float(n))
    model_u = eps / 2.0 * (1.0 + radii ** (2.0 - n))
    model_d1 = -(n - 2) / 2.0 * eps * radii ** (2.0 - n)
    model_d2 = (n - 1) * (n - 2) / 2.0 * eps * radii ** (2.0 - n)
    return AsymptoticModelReport(
        epsilon=eps,
        radii=radii,
        ratio_value=np.abs(u - model_u) / scale,
        ratio_deriv1=np.abs(ru_r - model_d1) / scale,
        ratio_deriv2=np.abs(r2u_rr - model_d2) / scale,
    )


def bracketing_constants(params: FamilyParams, x):
    """Empirical (C1, C2) with C1 eps |x|^{(2-n)/2} <= u_{eps,R,a} <= C2 |x|^{(2-n)/2}."""
    x, r = _radii(x, params.orbit.dim.n)
    u = u_eps_R_a(params, x)
    ratio = u * r ** ((params.orbit.dim.n - 2) / 2.0)
    return float(np.min(ratio) / params.orbit.epsilon), float(np.max(ratio))


def conformal_power_gap(params: FamilyParams, x) -> np.ndarray:
    """|u_{eps,R,a}^{4/(n-2)} - u_{eps,R}^{4/(n-2)}| |x| / |a|, expected bounded."""
    x, r = _radii(x, params.orbit.dim.n)
    p = params.orbit.dim.conformal_power
    ua = u_eps_R_a(params, x)
    u = u_eps_R(params, r)[0]
    anorm = float(np.linalg.norm(params.a))
    if anorm == 0:
        raise ParameterError("a must be nonzero for the conformal-exponent gap")
    return np.abs(ua**p - u**p) * r / anorm
