"""Periodic orbits of the cylindrical conformal-factor ODE.

Radial singular solutions of  Delta u + n(n-2)/4 u^{(n+2)/(n-2)} = 0  on the
punctured ball correspond, via u(x) = |x|^{(2-n)/2} v(-log|x|), to bounded
orbits of the autonomous equation

    v'' = (n-2)^2/4 v - n(n-2)/4 v^{(n+2)/(n-2)},

a Hamiltonian system in (v, w = v') with conserved energy

    H(v, w) = w^2 - (n-2)^2/4 v^2 + (n-2)^2/4 v^{2n/(n-2)}.

Bounded orbits with H < 0 are periodic, take values in (0, 1) and are indexed
by their minimum eps = v(0) in (0, ((n-2)/n)^((n-2)/4)).  The right endpoint
is the constant (cylinder) orbit; H = 0 carries the explicit homoclinic
cosh(t)^{(2-n)/2}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import make_interp_spline

from .errors import IntegrationError, ParameterError
from .params import Dimension, as_dimension

DEFAULT_TOL_H = 1e-10
DEFAULT_TOL_PERIOD = 1e-8


def _check_nonnegative(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ParameterError("v must be nonnegative (fractional power of v)")
    return v


def ode_rhs(dim, v, w):
    """Right-hand side (v', w') of the first-order system at (v, w)."""
    dim = as_dimension(dim)
    v = _check_nonnegative(v)
    n = dim.n
    dw = (n - 2) ** 2 / 4.0 * v - n * (n - 2) / 4.0 * v**dim.critical_power
    return np.asarray(w, dtype=float) + 0.0, dw


def hamiltonian(dim, v, w):
    """Conserved energy H(v, w); constant along orbits."""
    dim = as_dimension(dim)
    v = _check_nonnegative(v)
    n = dim.n
    c = (n - 2) ** 2 / 4.0
    return np.asarray(w, dtype=float) ** 2 - c * v**2 + c * v ** (2.0 * n / (n - 2))


def energy_at_minimum(dim, epsilon: float) -> float:
    """H evaluated at (eps, 0): (n-2)^2/4 eps^2 (eps^{4/(n-2)} - 1)."""
    dim = as_dimension(dim)
    c = (dim.n - 2) ** 2 / 4.0
    return c * epsilon**2 * (epsilon**dim.conformal_power - 1.0)


def homoclinic_value(dim, t):
    """The explicit H=0 orbit cosh(t)^{(2-n)/2}."""
    dim = as_dimension(dim)
    return np.cosh(np.asarray(t, dtype=float)) ** ((2 - dim.n) / 2.0)


@dataclass
class DelaunayOrbit:
    """One period of (v, v') with dense periodic evaluation.

    `t_samples` covers [0, period] uniformly; quintic splines of the stored
    samples provide dense output, and v'' is recovered from the ODE rather
    than by differencing.  Orbits are immutable after construction and safe
    to share across threads.
    """

    dim: Dimension
    epsilon: float
    period: float
    h0: float
    t_samples: np.ndarray
    v_samples: np.ndarray
    w_samples: np.ndarray
    tol_H: float = DEFAULT_TOL_H
    tol_period: float = DEFAULT_TOL_PERIOD
    _v_spline: object = field(default=None, repr=False)
    _w_spline: object = field(default=None, repr=False)

    def __post_init__(self):
        if self._v_spline is None:
            object.__setattr__(self, "_v_spline", make_interp_spline(self.t_samples, self.v_samples, k=5))
            object.__setattr__(self, "_w_spline", make_interp_spline(self.t_samples, self.w_samples, k=5))

    @property
    def v_max(self) -> float:
        return float(np.max(self.v_samples))

    def evaluate(self, t):
        """Return (v, v', v'') at t, reduced modulo the period.

        v'' comes from the ODE evaluated at (v, v'), not from differencing.
        """
        tm = np.mod(np.asarray(t, dtype=float), self.period)
        v = self._v_spline(tm)
        w = self._w_spline(tm)
        _, dw = ode_rhs(self.dim, np.clip(v, 0.0, None), w)
        return v, w, dw

    def hamiltonian_drift(self) -> float:
        """max |H - h0| over the stored samples."""
        h = hamiltonian(self.dim, self.v_samples, self.w_samples)
        return float(np.max(np.abs(h - self.h0)))

    def derivative_domination_constant(self) -> float:
        """Smallest c with |v'| <= c v and |v''| <= c v on the samples."""
        v, w, dw = self.v_samples, self.w_samples, ode_rhs(self.dim, self.v_samples, self.w_samples)[1]
        return float(max(np.max(np.abs(w) / v), np.max(np.abs(dw) / v)))


def eval_orbit(orbit: DelaunayOrbit, t):
    """Functional alias for orbit.evaluate."""
    return orbit.evaluate(t)


def _integrate(dim, y0, t_span, rtol, atol, events=None, t_eval=None):
    n = dim.n
    p = dim.critical_power
    c1 = (n - 2) ** 2 / 4.0
    c2 = n * (n - 2) / 4.0

    def rhs(t, y):
        v = max(y[0], 0.0)
        return (y[1], c1 * y[0] - c2 * v**p)

    sol = solve_ivp(
        rhs, t_span, y0, method="DOP853", rtol=rtol, atol=atol, events=events,
        t_eval=t_eval, dense_output=False,
    )
    if not sol.success:
        raise IntegrationError(f"ODE integration failed: {sol.message}")
    return sol


def integrate_trajectory(dim, v0, w0, t_final, rtol=1e-12, atol=1e-14, num=2001):
    """Integrate from (v0, w0) over [0, t_final]; returns (t, v, w) arrays.

    Utility for the closed-form orbit checks (cylinder, homoclinic); makes no
    periodicity assumption.
    """
    dim = as_dimension(dim)
    t_eval = np.linspace(0.0, t_final, num)
    sol = _integrate(dim, (v0, w0), (0.0, t_final), rtol, atol, t_eval=t_eval)
    return sol.t, sol.y[0], sol.y[1]


def integrate_orbit(dim, epsilon: float, tol: float = DEFAULT_TOL_H,
                    samples_per_period: int = 8192) -> DelaunayOrbit:
    """Integrate one period from the minimum (eps, 0).

    The period is fixed by event detection on the w = 0 return: the first
    crossing after t = 0 is the maximum of v, the second is the minimum
    return.  Energy drift beyond `tol` triggers tolerance refinement.
    """
    dim = as_dimension(dim)
    if tol <= 0:
        raise ParameterError("tol must be positive")
    v_cyl = dim.cylinder_value
    if not 0.0 < epsilon < v_cyl:
        raise ParameterError(
            f"epsilon={epsilon} outside the open interval (0, {v_cyl:.6g}) for n={dim.n}"
        )

    horizon = 40.0 + 10.0 * abs(np.log(epsilon))
    rtol, atol = 1e-12, 1e-14
    h0 = float(energy_at_minimum(dim, epsilon))

    for _ in range(3):
        # leg 1: to the first maximum (w crosses + -> -, v > v_cyl there)
        def at_max(t, y):
            return y[1]

        at_max.terminal = True
        at_max.direction = -1
        sol1 = _integrate(dim, (epsilon, 0.0), (0.0, horizon), rtol, atol, events=at_max)
        if len(sol1.t_events[0]) == 0:
            raise IntegrationError(
                f"no w=0 maximum crossing within horizon {horizon} for eps={epsilon}"
            )
        t_half = float(sol1.t_events[0][0])
        y_half = sol1.y_events[0][0]

        # leg 2: from the maximum to the minimum return (w crosses - -> +)
        def at_min(t, y):
            return y[1]

        at_min.terminal = True
        at_min.direction = 1
        sol2 = _integrate(dim, tuple(y_half), (0.0, horizon), rtol, atol, events=at_min)
        if len(sol2.t_events[0]) == 0:
            raise IntegrationError(
                f"no minimum return within horizon {horizon} for eps={epsilon}"
            )
        period = t_half + float(sol2.t_events[0][0])

        t_eval = np.linspace(0.0, period, samples_per_period + 1)
        sol = _integrate(dim, (epsilon, 0.0), (0.0, period), rtol, atol, t_eval=t_eval)
        v, w = sol.y[0], sol.y[1]

        drift = float(np.max(np.abs(hamiltonian(dim, np.clip(v, 0, None), w) - h0)))
        closure = abs(v[-1] - epsilon) + abs(w[-1])
        if drift <= tol and closure <= DEFAULT_TOL_PERIOD:
            orbit = DelaunayOrbit(
                dim=dim, epsilon=epsilon, period=period, h0=h0,
                t_samples=t_eval, v_samples=v, w_samples=w, tol_H=tol,
            )
            return orbit
        rtol, atol = rtol / 10.0, atol / 10.0
        rtol = max(rtol, 3e-14)
        atol = max(atol, 1e-16)

    raise IntegrationError(
        f"energy drift {drift:.3e} or period closure {closure:.3e} above tolerance "
        f"after refinement for eps={epsilon}"
    )


def energy_drift_over(dim, epsilon: float, periods: int = 10,
                      rtol: float = 1e-13, atol: float = 1e-15) -> float:
    """Relative sup drift of H over `periods` periods (integrator quality gate)."""
    orbit = integrate_orbit(dim, epsilon)
    t_final = periods * orbit.period
    t, v, w = integrate_trajectory(dim, epsilon, 0.0, t_final, rtol=rtol, atol=atol,
                                   num=4096 * periods)
    h = hamiltonian(orbit.dim, np.clip(v, 0, None), w)
    return float(np.max(np.abs(h - orbit.h0)) / abs(orbit.h0))
