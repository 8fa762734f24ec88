"""Cauchy-data matching: the finite-dimensional gluing systems.

Matching the interior (neck) and exterior conformal factors to first order
on the sphere of radius r_eps splits into three blocks:

  * the constant mode, the 2x2 system
        b + (eps^2/(4(1+b)) - lambda) r^{2-n} = H0(a, b, lambda, omega)
        (2-n)(eps^2/(4(1+b)) - lambda) r^{2-n} = r d_r H0(a, b, lambda, omega)
    solved through the fixed-point map
        G(b, lambda) = ( r/(n-2) d_rH0 + H0,
                         eps^2/(4(1+b)) + r^{n-1}/(n-2) d_rH0 );

  * the coordinate modes, n independent 2x2 systems
        F r a_i - omega_i         = Hi(a, omega)
        G r a_i - (1-n) omega_i   = r d_r Hi(a, omega)
    with F = (n-2)u + r u_r and G = (n-2)u + n r u_r + r^2 u_rr evaluated on
    the matching sphere (both tend to (n-2)(1+b), and G+(n-1)F to
    n(n-2)(1+b), as eps -> 0), solved through the map that inverts the
    2x2 matrix exactly;

  * the high eigenmode, theta = -Z^{-1}( S(a, b, lambda, omega, theta) ),
    diagonal over harmonic degrees through the boundary operator Z.

Exterior contributions enter only through the DataFunctionals callbacks,
which must return magnitudes O(r_eps^{2+d-n/2}); a synthetic preset supplies
admissible random data and the faithful preset wires the interior quantities
to the actual flat-model Picard solve with synthetic exterior terms.

Brouwer arguments are replaced by damped fixed-point iteration with a Newton
fallback on the 2x2 blocks when the iteration stalls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .delaunay import DelaunayOrbit
from .errors import DivergenceError, DomainViolationError, ParameterError
from .family import FamilyParams, neck_radius_from_b, u_eps_R, u_eps_R_a, \
    u_eps_R_a_radial_derivative
from .harmonics import BoundaryData, HarmonicBasis, sphere_quadrature
from .linearized import HOELDER_ALPHA, picard_interior
from .params import Dimension, ParameterBudget
from .poisson import z_multiplier

MAGNITUDE_GATE = 1.0


@dataclass
class MatchingState:
    """The finite-dimensional unknowns (b, lambda, a, omega, theta)."""

    dim: Dimension
    epsilon: float
    budget: ParameterBudget
    b: float
    lam: float
    a: np.ndarray
    omega: np.ndarray
    theta: BoundaryData

    def __post_init__(self):
        n = self.dim.n
        self.a = np.atleast_1d(np.asarray(self.a, dtype=float))
        self.omega = np.atleast_1d(np.asarray(self.omega, dtype=float))
        if self.a.shape != (n,) or self.omega.shape != (n,):
            raise ParameterError(f"a and omega must be vectors of {n} reals")

    @property
    def r_eps(self) -> float:
        return self.budget.r_eps(self.epsilon)

    @property
    def R(self) -> float:
        return neck_radius_from_b(self.dim, self.epsilon, self.b)

    def omega_data(self) -> BoundaryData:
        return BoundaryData(self.theta.basis, self.theta.r,
                            {(1, i): self.omega[i] for i in range(self.dim.n)})

    def constraint_violations(self, norm_samples: int = 120) -> list:
        """All violated admissibility bounds, as human-readable strings."""
        n, d = self.dim.n, self.dim.d
        r = self.r_eps
        out = []
        if abs(self.b) > 0.5:
            out.append(f"|b|={abs(self.b):.3e} > 1/2")
        lam_bound = r ** (d - 2 + 1.5 * n)
        if self.lam**2 > lam_bound:
            out.append(f"|lambda|^2={self.lam**2:.3e} > r^(d-2+3n/2)={lam_bound:.3e}")
        a_bound = r ** (d - n / 2.0)
        if float(self.a @ self.a) > a_bound:
            out.append(f"|a|^2={float(self.a @ self.a):.3e} > r^(d-n/2)={a_bound:.3e}")
        data_bound = r ** (2 + d - n / 2.0 - self.budget.delta1)
        om = self.omega_data().c2a_norm(alpha=HOELDER_ALPHA, samples=norm_samples)
        if om > data_bound:
            out.append(f"||omega||={om:.3e} > {data_bound:.3e}")
        th = self.theta.c2a_norm(alpha=HOELDER_ALPHA, samples=norm_samples)
        if th > data_bound:
            out.append(f"||theta||={th:.3e} > {data_bound:.3e}")
        return out


class DataFunctionals:
    """Callback registry for the exterior/interior data entering the systems.

    h0(a, b, lam, omega) -> (value, r d_r value)
    hi[i](a, omega)      -> (value, r d_r value)         for i = 0..n-1
    s(a, b, lam, omega, theta) -> high-mode BoundaryData

    All callbacks must return magnitudes O(r_eps^{2+d-n/2}); a sample call at
    the zero state enforces this at registration.  `bind_state` lets nested
    solvers expose the current outer state to callbacks that need it.
    """

    def __init__(self, basis: HarmonicBasis, h0, hi, s, name="custom"):
        self.basis = basis
        self.h0 = h0
        self.hi = list(hi)
        self.s = s
        self.name = name
        self.bound_state = None
        if len(self.hi) != basis.dim.n:
            raise ParameterError(f"need {basis.dim.n} coordinate callbacks")

    def __getitem__(self, block: str):
        """Registry access by block name: 'h0', 'hi', or 's'."""
        try:
            return {"h0": self.h0, "hi": self.hi, "s": self.s}[block]
        except KeyError:
            raise ParameterError(f"unknown block {block!r}; use h0, hi or s") from None

    def bind_state(self, state: MatchingState):
        self.bound_state = state

    def validate(self, state: MatchingState, gate: float = MAGNITUDE_GATE):
        """Magnitude check with a sample call at the given (usually zero) state."""
        n, d = state.dim.n, state.dim.d
        bound = gate * state.r_eps ** (2 + d - n / 2.0)
        self.bind_state(state)
        vals = list(self.h0(state.a, state.b, state.lam, state.omega))
        for h in self.hi:
            vals.extend(h(state.a, state.omega))
        worst = max(abs(v) for v in vals)
        if worst > bound:
            raise DomainViolationError(
                f"registered callbacks return magnitude {worst:.3e}, above the "
                f"admissible O(r^(2+d-n/2)) gate {bound:.3e}")
        sdata = self.s(state.a, state.b, state.lam, state.omega, state.theta)
        sdata.require_high_mode()
        if sdata.max_abs() > bound:
            raise DomainViolationError(
                f"high-mode source magnitude {sdata.max_abs():.3e} above gate "
                f"{bound:.3e}")


def zero_theta(basis: HarmonicBasis, r: float) -> BoundaryData:
    return BoundaryData(basis, r, {})


def f_g_coefficients(orbit: DelaunayOrbit, R: float, r: float):
    """(F, G) of the coordinate-mode systems, analytic through (v, v', v'')."""
    if r <= R:
        raise ParameterError(f"matching radius r={r} must exceed the neck scale R={R}")
    n = orbit.dim.n
    params = FamilyParams(orbit=orbit, R=R)
    u, ru_r, r2u_rr = u_eps_R(params, r)
    F = (n - 2) * u + ru_r
    G = (n - 2) * u + n * ru_r + r2u_rr
    return float(F), float(G)


def _fixed_point_2x2(step, residual, x0, domain_check, tol, max_iter, label):
    """Damped iteration with Newton fallback; returns the converged pair."""
    x = np.asarray(x0, dtype=float)
    history = []
    res = np.asarray(residual(x), dtype=float)
    best = float(np.max(np.abs(res)))
    stall = 0
    for it in range(max_iter):
        if best <= tol:
            return tuple(x), history
        if stall >= 3:
            # Newton on the residual with a forward-difference Jacobian
            J = np.empty((2, 2))
            h = 1e-8 * (1.0 + np.abs(x))
            for j in range(2):
                xp = x.copy()
                xp[j] += h[j]
                J[:, j] = (np.asarray(residual(xp)) - res) / h[j]
            try:
                x = x - np.linalg.solve(J, res)
            except np.linalg.LinAlgError:
                raise DivergenceError(f"{label}: singular Newton system", history)
        else:
            x = np.asarray(step(x), dtype=float)
        bad = domain_check(x)
        if bad:
            raise DomainViolationError(f"{label}: iterate left its domain: {bad}")
        res = np.asarray(residual(x), dtype=float)
        new = float(np.max(np.abs(res)))
        history.append(new)
        stall = stall + 1 if new > 0.9 * best else 0
        best = min(best, new)
    if best <= tol:
        return tuple(x), history
    raise DivergenceError(f"{label}: no convergence in {max_iter} iterations "
                          f"(residual {best:.3e})", history)


def solve_b_lambda(state: MatchingState, funcs: DataFunctionals,
                   tol: float = 1e-12, max_iter: int = 60):
    """Fixed point of the constant-mode map inside |b| <= 1/2, |lambda| small."""
    dim, budget = state.dim, state.budget
    n, d = dim.n, dim.d
    r = state.r_eps
    eps = state.epsilon
    lam_cap = r ** (d / 2.0 - 1 + 0.75 * n)
    funcs.bind_state(state)

    def h0(b, lam):
        return funcs.h0(state.a, b, lam, state.omega)

    def step(x):
        b, lam = x
        v, dv = h0(b, lam)
        # dv is r d_r H0, so r^{n-1}/(n-2) d_r H0 = r^{n-2} dv / (n-2)
        return (dv / (n - 2) + v,
                eps**2 / (4.0 * (1.0 + b)) + r ** (n - 2) * dv / (n - 2))

    def residual(x):
        b, lam = x
        v, dv = h0(b, lam)
        blob = (eps**2 / (4.0 * (1.0 + b)) - lam) * r ** (2.0 - n)
        return (b + blob - v, (2.0 - n) * blob - dv)

    def domain_check(x):
        b, lam = x
        out = []
        if abs(b) > 0.5:
            out.append(f"|b|={abs(b):.3e} > 1/2")
        if abs(lam) > lam_cap:
            out.append(f"|lambda|={abs(lam):.3e} > r^(d/2-1+3n/4)={lam_cap:.3e}")
        return out

    (b, lam), _ = _fixed_point_2x2(step, residual, (state.b, state.lam),
                                   domain_check, tol, max_iter, "b-lambda block")
    return b, lam


def solve_a_omega(state: MatchingState, funcs: DataFunctionals, F: float, G: float,
                  tol: float = 1e-12, max_iter: int = 60):
    """Fixed points of the n coordinate-mode systems; returns (a, omega)."""
    dim, budget = state.dim, state.budget
    n, d = dim.n, dim.d
    r = state.r_eps
    GG = G + (n - 1) * F
    if abs(GG) < 0.05 * n * (n - 2):
        raise ParameterError(
            f"G + (n-1)F = {GG:.3e} too close to 0 (expected near n(n-2)(1+b))")
    funcs.bind_state(state)

    a_cap = math.sqrt(r ** (d - n / 2.0) / n)
    k_norms = [BoundaryData(funcs.basis, r, {(1, i): 1.0}).c2a_norm(alpha=HOELDER_ALPHA)
               for i in range(n)]
    om_caps = [r ** (2 + d - n / 2.0 - budget.delta1) / (n * k) for k in k_norms]

    a = state.a.copy()
    omega = state.omega.copy()
    for i in range(n):
        def step(x, i=i):
            ai, omi = x
            av, omv = a.copy(), omega.copy()
            av[i], omv[i] = ai, omi
            v, dv = funcs.hi[i](av, omv)
            rhs = dv + (n - 1) * v
            return (rhs / (GG * r), F * rhs / GG - v)

        def residual(x, i=i):
            ai, omi = x
            av, omv = a.copy(), omega.copy()
            av[i], omv[i] = ai, omi
            v, dv = funcs.hi[i](av, omv)
            return (F * r * ai - omi - v, G * r * ai - (1 - n) * omi - dv)

        def domain_check(x, i=i):
            ai, omi = x
            out = []
            if abs(ai) > a_cap:
                out.append(f"|a_{i}|={abs(ai):.3e} > {a_cap:.3e}")
            if abs(omi) > om_caps[i]:
                out.append(f"|omega_{i}|={abs(omi):.3e} > {om_caps[i]:.3e}")
            return out

        (a[i], omega[i]), _ = _fixed_point_2x2(
            step, residual, (a[i], omega[i]), domain_check, tol, max_iter,
            f"a-omega block {i}")
    return a, omega


def solve_high_mode(state: MatchingState, funcs: DataFunctionals,
                    tol: float = 1e-12, max_iter: int = 60) -> BoundaryData:
    """Fixed point of theta = -Z^{-1} S(..., theta) on the high eigenmode."""
    dim, budget = state.dim, state.budget
    n, d = dim.n, dim.d
    r = state.r_eps
    bound = r ** (2 + d - n / 2.0 - budget.delta1)
    funcs.bind_state(state)
    theta = state.theta
    history = []
    for it in range(max_iter):
        sdata = funcs.s(state.a, state.b, state.lam, state.omega, theta)
        sdata.require_high_mode()
        new = sdata.map_coeffs(lambda deg, c: -c / z_multiplier(dim, deg))
        keys = set(theta.coeffs) | set(new.coeffs)
        change = max((abs(new.coeffs.get(k, 0.0) - theta.coeffs.get(k, 0.0))
                      for k in keys), default=0.0)
        theta = BoundaryData(funcs.basis, r, {k: new.coeffs.get(k, 0.0) for k in keys})
        history.append(change)
        if change <= tol:
            if theta.c2a_norm(alpha=HOELDER_ALPHA) > bound * MAGNITUDE_GATE:
                raise DomainViolationError(
                    "high-mode fixed point exceeds its admissible ball")
            return theta
    raise DivergenceError(
        f"high-mode block: no convergence in {max_iter} iterations", history)


def high_mode_residual(state: MatchingState, funcs: DataFunctionals) -> float:
    """Sup over modes of the matched high-mode equation Z theta + S = 0."""
    funcs.bind_state(state)
    sdata = funcs.s(state.a, state.b, state.lam, state.omega, state.theta)
    keys = set(state.theta.coeffs) | set(sdata.coeffs)
    return max((abs(z_multiplier(state.dim, k[0]) * state.theta.coeffs.get(k, 0.0)
                    + sdata.coeffs.get(k, 0.0)) for k in keys), default=0.0)


@dataclass
class MatchRecord:
    """One outer iteration of the joint solve."""

    iteration: int
    b: float
    lam: float
    a_norm: float
    omega_norm: float
    theta_norm: float
    residual: float


@dataclass
class MatchResult:
    state: MatchingState
    history: list
    joint_residual: float
    converged: bool


def _joint_residual(state, funcs, orbit):
    dim = state.dim
    n = dim.n
    r = state.r_eps
    eps = state.epsilon
    funcs.bind_state(state)
    v, dv = funcs.h0(state.a, state.b, state.lam, state.omega)
    blob = (eps**2 / (4.0 * (1.0 + state.b)) - state.lam) * r ** (2.0 - n)
    res = [abs(state.b + blob - v), abs((2.0 - n) * blob - dv)]
    F, G = f_g_coefficients(orbit, state.R, r)
    for i in range(n):
        vi, dvi = funcs.hi[i](state.a, state.omega)
        res.append(abs(F * r * state.a[i] - state.omega[i] - vi))
        res.append(abs(G * r * state.a[i] - (1 - n) * state.omega[i] - dvi))
    res.append(high_mode_residual(state, funcs))
    return max(res)


def assemble_match(orbit: DelaunayOrbit, budget: ParameterBudget,
                   funcs: DataFunctionals, tol: float = 1e-12,
                   max_outer: int = 50, block_tol: float = None,
                   validate: bool = True) -> MatchResult:
    """Run the nested fixed points to joint convergence.

    Order per outer sweep: high mode, then (b, lambda), then (a, omega); the
    outer loop repeats until the joint residual of all projected equations
    drops below `tol`.  Each block failure raises with the block named.
    """
    dim = orbit.dim
    n = dim.n
    eps = orbit.epsilon
    r = budget.r_eps(eps)
    block_tol = tol if block_tol is None else block_tol
    state = MatchingState(dim=dim, epsilon=eps, budget=budget, b=0.0, lam=eps**2 / 4.0,
                          a=np.zeros(n), omega=np.zeros(n),
                          theta=zero_theta(funcs.basis, r))
    if validate:
        zero_state = MatchingState(dim=dim, epsilon=eps, budget=budget, b=0.0,
                                   lam=0.0, a=np.zeros(n), omega=np.zeros(n),
                                   theta=zero_theta(funcs.basis, r))
        funcs.validate(zero_state)

    history = []
    residual = math.inf
    for it in range(1, max_outer + 1):
        theta = solve_high_mode(state, funcs, tol=block_tol)
        state = MatchingState(dim=dim, epsilon=eps, budget=budget, b=state.b,
                              lam=state.lam, a=state.a, omega=state.omega, theta=theta)
        b, lam = solve_b_lambda(state, funcs, tol=block_tol)
        state = MatchingState(dim=dim, epsilon=eps, budget=budget, b=b, lam=lam,
                              a=state.a, omega=state.omega, theta=theta)
        F, G = f_g_coefficients(orbit, state.R, r)
        a, omega = solve_a_omega(state, funcs, F, G, tol=block_tol)
        state = MatchingState(dim=dim, epsilon=eps, budget=budget, b=b, lam=lam,
                              a=a, omega=omega, theta=theta)
        residual = _joint_residual(state, funcs, orbit)
        history.append(MatchRecord(
            iteration=it, b=state.b, lam=state.lam,
            a_norm=float(np.linalg.norm(state.a)),
            omega_norm=float(np.linalg.norm(state.omega)),
            theta_norm=state.theta.max_abs(), residual=residual))
        if residual <= tol:
            return MatchResult(state=state, history=history,
                               joint_residual=residual, converged=True)
    raise DivergenceError(
        f"outer matching loop: joint residual {residual:.3e} above {tol:.1e} "
        f"after {max_outer} sweeps", [h.residual for h in history])


# ---------------------------------------------------------------------------
# presets

def zero_functionals(basis: HarmonicBasis, r: float) -> DataFunctionals:
    """All data identically zero: the matched state is (0, eps^2/4, 0, 0, 0)."""
    n = basis.dim.n

    def h0(a, b, lam, omega):
        return 0.0, 0.0

    def hi(a, omega):
        return 0.0, 0.0

    def s(a, b, lam, omega, theta):
        return BoundaryData(basis, r, {})

    return DataFunctionals(basis, h0, [hi] * n, s, name="zero")


def constant_functionals(basis: HarmonicBasis, r: float, h0_value: float = 0.0,
                         h0_slope: float = 0.0, hi_value: float = 0.0,
                         hi_slope: float = 0.0, s_coeffs: dict | None = None
                         ) -> DataFunctionals:
    """State-independent data; the blocks then solve in closed form."""
    n = basis.dim.n

    def h0(a, b, lam, omega):
        return h0_value, h0_slope

    def hi(a, omega):
        return hi_value, hi_slope

    def s(a, b, lam, omega, theta):
        return BoundaryData(basis, r, dict(s_coeffs or {}))

    return DataFunctionals(basis, h0, [hi] * n, s, name="constant")


def synthetic_functionals(basis: HarmonicBasis, budget: ParameterBudget,
                          epsilon: float, seed: int = 0, scale: float = 0.12,
                          lipschitz: float = 0.1, h0_scale: float = 1.0,
                          theta_fill: float = 0.3) -> DataFunctionals:
    """Seeded admissible-magnitude data with weak Lipschitz state coupling.

    Constant/coordinate magnitudes sit at scale * r^{2+d-n/2}; the high-mode
    source is rescaled so the implied fixed point fills `theta_fill` of its
    admissible ball.  The state dependence is bounded with Lipschitz constant
    ~`lipschitz`, so the nested iteration contracts.  `h0_scale` deliberately
    inflates the constant-mode data (for gate tests).
    """
    dim = basis.dim
    n, d = dim.n, dim.d
    r = budget.r_eps(epsilon)
    mag = scale * r ** (2 + d - n / 2.0)
    rng = np.random.default_rng(seed)
    # magnitude-normalized draws (random signs, fixed size) keep the gate
    # and the constraint checks deterministic across seeds
    c0 = rng.choice((-1.0, 1.0), size=2) * mag * h0_scale
    ci = rng.choice((-1.0, 1.0), size=(n, 2)) * mag
    high_keys = [k for k in basis.keys() if k[0] >= 2]
    raw = dict(zip(high_keys, rng.uniform(-1, 1, size=len(high_keys))))
    implied = BoundaryData(basis, r, {k: -v / z_multiplier(dim, k[0])
                                      for k, v in raw.items()})
    ball = r ** (2 + d - n / 2.0 - budget.delta1)
    rescale = theta_fill * ball / implied.c2a_norm(alpha=HOELDER_ALPHA)
    cs = {k: v * rescale for k, v in raw.items()}
    direction = rng.normal(size=n)
    direction /= np.linalg.norm(direction)

    def wobble(*xs):
        return 1.0 + lipschitz * math.tanh(float(sum(xs)))

    def h0(a, b, lam, omega):
        w = wobble(b, lam / max(mag, 1e-300), float(a @ direction))
        return c0[0] * w, c0[1] * wobble(b)

    def make_hi(i):
        def hi(a, omega):
            w = wobble(float(a @ direction), omega[i] / max(mag, 1e-300) * 0.01)
            return ci[i, 0] * w, ci[i, 1] * w
        return hi

    def s(a, b, lam, omega, theta):
        out = {}
        for k, c in cs.items():
            tc = theta.coeffs.get(k, 0.0)
            out[k] = c * (1.0 + lipschitz * math.tanh(tc / max(mag, 1e-300)))
        return BoundaryData(basis, r, out)

    return DataFunctionals(basis, h0, [make_hi(i) for i in range(n)], s,
                           name="synthetic")


class FaithfulFunctionals(DataFunctionals):
    """Interior data computed from the flat-model Picard solve.

    The constant-mode data absorbs the true deviation of the Delaunay family
    from its two-term model on the matching sphere plus the interior
    correction; the coordinate-mode data absorbs the quadratic remainder of
    the a-translation; the high-mode source carries the radial derivative of
    the interior correction's high modes.  Exterior contributions are
    synthetic at their proved magnitude O(r^{2+d-n/2}).
    """

    def __init__(self, orbit: DelaunayOrbit, budget: ParameterBudget,
                 basis: HarmonicBasis, seed: int = 0, exterior_scale: float = 0.05,
                 picard_kwargs: dict | None = None):
        self.orbit = orbit
        self.budget = budget
        dim = orbit.dim
        n, d = dim.n, dim.d
        eps = orbit.epsilon
        r = budget.r_eps(eps)
        self.r = r
        self.rule = sphere_quadrature(dim, 2 * basis.max_degree + 4,
                                      method="product" if n <= 6 else "auto")
        self.E = basis.eval_matrix(self.rule.points)
        self.keys = basis.keys()
        self.picard_kwargs = dict(n_radial=300, m_periods=2, quad_degree=None,
                                  max_iter=12, tol=1e-11)
        self.picard_kwargs.update(picard_kwargs or {})
        mag = exterior_scale * r ** (2 + d - n / 2.0)
        rng = np.random.default_rng(seed)
        self._ext0 = rng.choice((-1.0, 1.0), size=2) * mag
        self._exti = rng.choice((-1.0, 1.0), size=(n, 2)) * mag
        hk = [k for k in basis.keys() if k[0] >= 2]
        raw = dict(zip(hk, rng.uniform(-1, 1, len(hk))))
        implied = BoundaryData(basis, r, {k: -v / z_multiplier(dim, k[0])
                                          for k, v in raw.items()})
        ball = r ** (2 + d - n / 2.0 - budget.delta1)
        rescale = 0.2 * ball / implied.c2a_norm(alpha=HOELDER_ALPHA)
        self._exts = {k: float(v) * rescale for k, v in raw.items()}
        self._cache = {}
        super().__init__(basis, self._h0, [self._make_hi(i) for i in range(n)],
                         self._s, name="faithful")

    # -- interior solve, lagged to the outer-sweep state --------------------
    # Each block's fixed-point solve treats the other blocks as frozen
    # parameters, so the interior quantities are computed at the bound outer
    # state rather than at every inner iterate (which would re-run the
    # Picard solve dozens of times per sweep).
    def _interior(self):
        st = self.bound_state
        if st is None:
            a, b = np.zeros(self.orbit.dim.n), 0.0
            theta = BoundaryData(self.basis, self.r, {})
        else:
            a, b, theta = st.a, st.b, st.theta
        key = (round(float(b), 13), tuple(np.round(np.asarray(a, float), 13)),
               tuple(sorted((k, round(c, 15)) for k, c in theta.coeffs.items())))
        if key not in self._cache:
            R = neck_radius_from_b(self.orbit.dim, self.orbit.epsilon, b)
            phi = BoundaryData(self.basis, self.r,
                               {k: c for k, c in theta.coeffs.items()})
            res = picard_interior(self.orbit, R, np.asarray(a, float), phi,
                                  self.budget, basis=self.basis,
                                  **self.picard_kwargs)
            if len(self._cache) > 8:
                self._cache.clear()
            self._cache[key] = res
        return self._cache[key]

    def _family(self, a, b):
        R = neck_radius_from_b(self.orbit.dim, self.orbit.epsilon, b)
        return FamilyParams(orbit=self.orbit, R=R, a=np.asarray(a, dtype=float))

    def _sphere_projection(self, values):
        return self.E @ (self.rule.weights * values)

    def _mode_profile_at_r(self, res, key):
        """(w(r), r w'(r)) of one interior mode profile at the matching sphere."""
        from scipy.interpolate import make_interp_spline

        j = res.expansion.keys.index(key)
        t0 = -math.log(self.r)
        t = -np.log(res.expansion.radii)
        spl = make_interp_spline(t, res.expansion.profiles[j], k=5)
        return float(spl(t0)), float(-spl.derivative(1)(t0))

    def _h0(self, a, b, lam, omega):
        dim = self.orbit.dim
        n = dim.n
        eps = self.orbit.epsilon
        r = self.r
        params = self._family(a, b)
        pts = r * self.rule.points
        u_vals = u_eps_R_a(params, pts)
        du_vals = u_eps_R_a_radial_derivative(params, pts)
        area = float(np.sum(self.rule.weights))
        mean_u = float(self.rule.weights @ u_vals) / area
        mean_du = float(self.rule.weights @ du_vals) / area * r
        model = 1.0 + b + eps**2 / (4.0 * (1.0 + b)) * r ** (2.0 - n)
        dmodel = (2.0 - n) * eps**2 / (4.0 * (1.0 + b)) * r ** (2.0 - n)
        res = self._interior()
        w0, dw0 = self._mode_profile_at_r(res, (0, 0))
        e0 = 1.0 / math.sqrt(area)
        ext = self._ext0 * (1.0 + 0.1 * math.tanh(lam / max(eps**2, 1e-300)))
        return (-(mean_u - model) - w0 * e0 + ext[0],
                -(mean_du - dmodel) - dw0 * e0 + ext[1])

    def _make_hi(self, i):
        def hi(a, omega):
            b = self.bound_state.b if self.bound_state is not None else 0.0
            dim = self.orbit.dim
            n = dim.n
            r = self.r
            params = self._family(a, b)
            pts = r * self.rule.points
            from .family import u_eps_R as _uer
            u, ru_r, _ = _uer(params, r)
            Fr = (n - 2) * u + ru_r
            lin = Fr * r * (self.rule.points @ np.asarray(a, float))
            rem = u_eps_R_a(params, pts) - u - lin
            drem = (u_eps_R_a_radial_derivative(params, pts) * r
                    - ru_r - 2.0 * lin)
            ei = self.E[self.keys.index((1, i))]
            ci = float((self.rule.weights * ei) @ rem)
            dci = float((self.rule.weights * ei) @ drem)
            res = self._interior()
            w1, dw1 = self._mode_profile_at_r(res, (1, i))
            return (-ci - w1 + self._exti[i, 0], -dci - dw1 + self._exti[i, 1])
        return hi

    def _s(self, a, b, lam, omega, theta):
        res = self._interior()
        out = {}
        for k in self.keys:
            if k[0] < 2:
                continue
            _, dwk = self._mode_profile_at_r(res, k)
            val = dwk + self._exts.get(k, 0.0)
            if val != 0.0:
                out[k] = val
        # the translated family contributes its own high-mode trace
        params = self._family(a, b)
        pts = self.r * self.rule.points
        du = u_eps_R_a_radial_derivative(params, pts) * self.r
        proj = self._sphere_projection(du)
        for j, k in enumerate(self.keys):
            if k[0] >= 2 and abs(proj[j]) > 0:
                out[k] = out.get(k, 0.0) + proj[j]
        return BoundaryData(self.basis, self.r, out)


def faithful_functionals(orbit: DelaunayOrbit, budget: ParameterBudget,
                         basis: HarmonicBasis, seed: int = 0,
                         exterior_scale: float = 0.05,
                         picard_kwargs: dict | None = None) -> FaithfulFunctionals:
    return FaithfulFunctionals(orbit, budget, basis, seed=seed,
                               exterior_scale=exterior_scale,
                               picard_kwargs=picard_kwargs)
