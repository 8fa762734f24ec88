"""Spherical harmonics as homogeneous harmonic polynomials.

Degree-i eigenfunctions of the sphere Laplacian are restrictions to S^{n-1}
of homogeneous harmonic polynomials; the eigenvalue counted without
multiplicity is i(i+n-2).  The low eigenmode is spanned by the constants and
the coordinate functions; everything of degree >= 2 is the high eigenmode.

Bases are orthonormalized against the exact sphere inner product: monomial
integrals come from the Gamma-function formula

    int_{S^{n-1}} x^alpha dS = 2 prod_j Gamma(beta_j) / Gamma(sum_j beta_j),
    beta_j = (alpha_j + 1)/2,

zero whenever any alpha_j is odd, so polynomial projections carry no
quadrature noise.  Non-polynomial sphere data is integrated by a nested
Gauss-Jacobi product rule (exact to a requested polynomial degree) for
n <= 5 and by symmetrized Monte Carlo with variance reporting for n > 5.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .errors import AccuracyError, ContractViolationError, ParameterError
from .params import Dimension, as_dimension

DEFAULT_MAX_DEGREE = 4


def eigenvalue(dim, i: int) -> int:
    """i-th sphere-Laplacian eigenvalue counted without multiplicity: i(i+n-2)."""
    dim = as_dimension(dim)
    if i < 0:
        raise ParameterError("degree must be nonnegative")
    return i * (i + dim.n - 2)


def surface_area(n: int) -> float:
    """|S^{n-1}| = 2 pi^{n/2} / Gamma(n/2)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def harmonic_dimension(n: int, degree: int) -> int:
    """Dimension of degree-`degree` harmonic homogeneous polynomials in n variables."""
    if degree < 0:
        raise ParameterError("degree must be nonnegative")
    if degree < 2:
        return 1 if degree == 0 else n
    return math.comb(n + degree - 1, degree) - math.comb(n + degree - 3, degree - 2)


def integrate_monomial_sphere(dim, alpha) -> float:
    """Exact integral of x^alpha over the unit sphere; zero for any odd exponent."""
    dim = as_dimension(dim)
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != dim.n:
        raise ParameterError(f"multi-index must have {dim.n} entries")
    if any(a < 0 for a in alpha):
        raise ParameterError("exponents must be nonnegative")
    return _monomial_integral(dim.n, alpha)


@lru_cache(maxsize=None)
def _monomial_integral(n: int, alpha: tuple) -> float:
    if any(a % 2 for a in alpha):
        return 0.0
    betas = [(a + 1) / 2.0 for a in alpha]
    log_val = math.log(2.0) + sum(math.lgamma(b) for b in betas) - math.lgamma(sum(betas))
    return math.exp(log_val)


# ---------------------------------------------------------------------------
# polynomial helpers (sparse dict of exponent-tuple -> coefficient)

class Poly:
    """Sparse polynomial in n variables; exponent tuples map to coefficients."""

    __slots__ = ("n", "coeffs")

    def __init__(self, n: int, coeffs=None):
        self.n = n
        self.coeffs = {}
        if coeffs:
            for exps, c in coeffs.items():
                if c != 0.0:
                    self.coeffs[tuple(int(e) for e in exps)] = float(c)

    @classmethod
    def constant(cls, n, c=1.0):
        return cls(n, {(0,) * n: c})

    @classmethod
    def coordinate(cls, n, i, c=1.0):
        exps = [0] * n
        exps[i] = 1
        return cls(n, {tuple(exps): c})

    @classmethod
    def monomial(cls, n, exps, c=1.0):
        return cls(n, {tuple(exps): c})

    def copy(self):
        return Poly(self.n, dict(self.coeffs))

    def __add__(self, other):
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, 0.0) + c
        return Poly(self.n, out)

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, s):
        return Poly(self.n, {e: c * s for e, c in self.coeffs.items()})

    def __mul__(self, other):
        out = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0.0) + c1 * c2
        return Poly(self.n, out)

    def degree(self) -> int:
        return max((sum(e) for e in self.coeffs), default=0)

    def laplacian(self):
        out = {}
        for e, c in self.coeffs.items():
            for i, a in enumerate(e):
                if a >= 2:
                    e2 = list(e)
                    e2[i] -= 2
                    e2 = tuple(e2)
                    out[e2] = out.get(e2, 0.0) + c * a * (a - 1)
        return Poly(self.n, out)

    def derivative(self, i: int):
        out = {}
        for e, c in self.coeffs.items():
            if e[i] >= 1:
                e2 = list(e)
                e2[i] -= 1
                out[tuple(e2)] = out.get(tuple(e2), 0.0) + c * e[i]
        return Poly(self.n, out)

    def _arrays(self):
        exps = np.array(list(self.coeffs.keys()), dtype=np.int64).reshape(-1, self.n)
        cs = np.array(list(self.coeffs.values()), dtype=float)
        return exps, cs

    def __call__(self, x):
        """Evaluate at points x of shape (..., n)."""
        x = np.asarray(x, dtype=float)
        if not self.coeffs:
            return np.zeros(x.shape[:-1])
        exps, cs = self._arrays()
        # (..., terms) power products
        powers = np.prod(x[..., None, :] ** exps[None, :, :], axis=-1)
        return powers @ cs

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for i in range(self.n):
            out[..., i] = self.derivative(i)(x)
        return out

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (self.n, self.n))
        for i in range(self.n):
            di = self.derivative(i)
            for j in range(i, self.n):
                val = di.derivative(j)(x)
                out[..., i, j] = val
                out[..., j, i] = val
        return out

    def sphere_integral(self) -> float:
        """Exact integral over the unit sphere."""
        return sum(c * _monomial_integral(self.n, e) for e, c in self.coeffs.items())

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.coeffs.values()), default=0.0)


def sphere_inner(p: Poly, q: Poly) -> float:
    """Exact L^2(S^{n-1}) inner product of two polynomials."""
    return (p * q).sphere_integral()


# ---------------------------------------------------------------------------
# basis construction

@dataclass(frozen=True)
class HarmonicMode:
    """One orthonormal eigenfunction: degree, within-degree index, polynomial."""

    dim: Dimension
    degree: int
    index: int
    poly: Poly

    @property
    def eigenvalue(self) -> int:
        return eigenvalue(self.dim, self.degree)

    @property
    def key(self):
        return (self.degree, self.index)

    def __call__(self, theta):
        return self.poly(theta)


def _monomial_list(n: int, degree: int):
    out = []
    for exps in itertools.product(range(degree + 1), repeat=n):
        if sum(exps) == degree:
            out.append(exps)
    out.sort()
    return out


def _harmonic_subspace(n: int, degree: int):
    """Orthonormal (sphere L^2) harmonic polynomials of one degree."""
    if degree == 0:
        return [Poly.constant(n, 1.0 / math.sqrt(surface_area(n)))]
    if degree == 1:
        scale = math.sqrt(n / surface_area(n))
        return [Poly.coordinate(n, i, scale) for i in range(n)]
    mons = _monomial_list(n, degree)
    lowers = _monomial_list(n, degree - 2)
    low_index = {e: k for k, e in enumerate(lowers)}
    m = len(mons)
    lap = np.zeros((len(lowers), m))
    for j, e in enumerate(mons):
        for i, a in enumerate(e):
            if a >= 2:
                e2 = list(e)
                e2[i] -= 2
                lap[low_index[tuple(e2)], j] += a * (a - 1)
    # nullspace of the Laplacian on homogeneous degree-d coefficients
    _, sv, vt = np.linalg.svd(lap)
    k_expected = harmonic_dimension(n, degree)
    rank = int(np.sum(sv > 1e-10 * sv[0])) if sv.size else 0
    null = vt[rank:].T
    if null.shape[1] != k_expected:
        raise RuntimeError(
            f"harmonic nullspace dimension {null.shape[1]} != expected {k_expected}"
        )
    # Gram matrix in the sphere inner product, via exact monomial integrals
    exps = np.asarray(mons, dtype=np.int64)
    gram_mon = np.empty((m, m))
    for i in range(m):
        row_exps = exps[i][None, :] + exps
        gram_mon[i] = [_monomial_integral(n, tuple(e)) for e in row_exps]
    gram = null.T @ gram_mon @ null
    chol = np.linalg.cholesky(gram)
    coeff_mat = null @ np.linalg.inv(chol).T
    polys = []
    for k in range(k_expected):
        polys.append(Poly(n, {e: c for e, c in zip(mons, coeff_mat[:, k]) if abs(c) > 1e-14}))
    return polys


@dataclass
class HarmonicBasis:
    """Orthonormal basis of sphere harmonics up to a maximum degree.

    Immutable after construction and shareable across threads; all
    projections through it are pure functions.
    """

    dim: Dimension
    max_degree: int
    modes: list = field(default_factory=list)

    def __post_init__(self):
        if not self.modes:
            modes = []
            for d in range(self.max_degree + 1):
                for idx, p in enumerate(_harmonic_subspace(self.dim.n, d)):
                    modes.append(HarmonicMode(self.dim, d, idx, p))
            self.modes = modes
        self._by_key = {m.key: m for m in self.modes}

    def __iter__(self):
        return iter(self.modes)

    def __len__(self):
        return len(self.modes)

    def mode(self, degree: int, index: int) -> HarmonicMode:
        return self._by_key[(degree, index)]

    def degree_modes(self, degree: int):
        return [m for m in self.modes if m.degree == degree]

    def keys(self):
        return [m.key for m in self.modes]

    def eval_matrix(self, theta) -> np.ndarray:
        """Matrix of mode values at unit vectors theta, shape (n_modes, len(theta))."""
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        return np.stack([m.poly(theta) for m in self.modes])

    def project_poly(self, p: Poly) -> dict:
        """Exact coefficients {(degree, index): c} of a polynomial restricted to S^{n-1}."""
        if p.degree() > self.max_degree:
            raise ParameterError(
                f"polynomial degree {p.degree()} exceeds basis max_degree {self.max_degree}"
            )
        return {m.key: sphere_inner(p, m.poly) for m in self.modes}

    def project_samples(self, values, rule) -> dict:
        """Quadrature coefficients of sphere samples taken at rule.points."""
        values = np.asarray(values, dtype=float)
        E = self.eval_matrix(rule.points)
        return dict(zip(self.keys(), E @ (rule.weights * values)))


def build_basis(dim, max_degree: int = DEFAULT_MAX_DEGREE) -> HarmonicBasis:
    """Orthonormal harmonic basis for degrees 0..max_degree (max_degree <= 6)."""
    dim = as_dimension(dim)
    if not 0 <= max_degree <= 6:
        raise ParameterError("max_degree must lie in [0, 6] (desk scale)")
    return HarmonicBasis(dim=dim, max_degree=max_degree)


# ---------------------------------------------------------------------------
# sphere quadrature

@dataclass(frozen=True)
class SphereRule:
    """Quadrature nodes/weights on S^{n-1}; exact through `degree` when exact=True."""

    n: int
    degree: int
    points: np.ndarray
    weights: np.ndarray
    exact: bool
    mc_stderr_scale: float = 0.0

    def integrate(self, values) -> float:
        return float(self.weights @ np.asarray(values, dtype=float))

    def error_estimate(self, values) -> float:
        """Crude integration-error estimate for sampled data.

        Exact rules report 0 for polynomial-degree data; Monte Carlo rules
        report the standard error of the mean.
        """
        values = np.asarray(values, dtype=float)
        if self.exact:
            return 0.0
        mean = self.integrate(values) / surface_area(self.n)
        var = float(np.mean((values - mean) ** 2))
        return self.mc_stderr_scale * math.sqrt(var)


def _circle_rule(degree: int):
    m = max(degree + 2, 4)
    ang = 2.0 * math.pi * np.arange(m) / m
    pts = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    wts = np.full(m, 2.0 * math.pi / m)
    return pts, wts


@lru_cache(maxsize=None)
def _product_rule_arrays(n: int, degree: int):
    if n == 2:
        return _circle_rule(degree)
    m = (degree + 2) // 2 + 1
    beta = (n - 3) / 2.0
    t, wt = roots_jacobi(m, beta, beta)
    sub_pts, sub_wts = _product_rule_arrays(n - 1, degree)
    s = np.sqrt(1.0 - t**2)
    pts = np.empty((m * len(sub_pts), n))
    wts = np.empty(m * len(sub_pts))
    for i in range(m):
        sl = slice(i * len(sub_pts), (i + 1) * len(sub_pts))
        pts[sl, 0] = t[i]
        pts[sl, 1:] = s[i] * sub_pts
        wts[sl] = wt[i] * sub_wts
    return pts, wts


def sphere_quadrature(dim, degree: int, mc_samples: int = 20000, seed: int = 0,
                      method: str = "auto") -> SphereRule:
    """Quadrature on S^{n-1}: exact product rule for n <= 5, symmetrized MC above.

    `method` overrides the dispatch: "product" builds the exact nested
    Gauss-Jacobi rule in any dimension (node count grows like (degree/2)^{n-2},
    affordable when the integrand degree is small), "mc" forces Monte Carlo.
    """
    dim = as_dimension(dim)
    n = dim.n
    if method not in ("auto", "product", "mc"):
        raise ParameterError(f"unknown quadrature method {method!r}")
    if method == "product" or (method == "auto" and n <= 5):
        pts, wts = _product_rule_arrays(n, int(degree))
        return SphereRule(n=n, degree=int(degree), points=pts, weights=wts, exact=True)
    rng = np.random.default_rng(seed)
    half = mc_samples // 2
    g = rng.normal(size=(half, n))
    g /= np.linalg.norm(g, axis=1)[:, None]
    pts = np.concatenate([g, -g])
    wts = np.full(2 * half, surface_area(n) / (2 * half))
    return SphereRule(n=n, degree=int(degree), points=pts, weights=wts, exact=False,
                      mc_stderr_scale=surface_area(n) / math.sqrt(2 * half))


# ---------------------------------------------------------------------------
# projections and mode expansions

@dataclass
class ModeExpansion:
    """Radial profiles per harmonic mode: phi(r theta) = sum_j phi_j(r) e_j(theta).

    `profiles` has shape (n_modes, len(radii)) and is keyed by `keys`
    (degree, within-degree index) in basis order.
    """

    dim: Dimension
    radii: np.ndarray
    keys: list
    profiles: np.ndarray
    basis: HarmonicBasis

    def __post_init__(self):
        self.radii = np.atleast_1d(np.asarray(self.radii, dtype=float))
        self.profiles = np.atleast_2d(np.asarray(self.profiles, dtype=float))
        if self.profiles.shape != (len(self.keys), len(self.radii)):
            raise ParameterError("profiles must have shape (n_modes, n_radii)")
        if not np.all(np.isfinite(self.profiles)):
            raise ParameterError("mode profiles must be finite")

    def coefficients_at(self, r: float) -> dict:
        """Coefficients at one stored radius."""
        idx = int(np.argmin(np.abs(self.radii - r)))
        if not np.isclose(self.radii[idx], r, rtol=1e-9, atol=0):
            raise ParameterError(f"radius {r} not on the stored grid")
        return {k: float(self.profiles[j, idx]) for j, k in enumerate(self.keys)}

    def values(self, theta) -> np.ndarray:
        """Field values on the (radius x direction) grid, shape (n_radii, len(theta))."""
        modes = [self.basis.mode(*k) for k in self.keys]
        E = np.stack([m.poly(np.atleast_2d(theta)) for m in modes])
        return self.profiles.T @ E

    def max_degree_energy_fraction(self) -> float:
        """Fraction of total profile energy carried by the top retained degree."""
        top = max(k[0] for k in self.keys)
        total = float(np.sum(self.profiles**2))
        if total == 0.0:
            return 0.0
        sel = [j for j, k in enumerate(self.keys) if k[0] == top]
        return float(np.sum(self.profiles[sel] ** 2)) / total


def _coeffs_on_sphere(data, basis: HarmonicBasis, r: float, rule=None, quad_tol=1e-9):
    """All mode coefficients of `data` on the sphere of radius r."""
    if isinstance(data, Poly):
        # restrict to S_r: substitute x = r theta, i.e. scale degree-m terms by r^m
        scaled = Poly(data.n, {e: c * r ** sum(e) for e, c in data.coeffs.items()})
        return basis.project_poly(scaled), 0.0
    if callable(data):
        if rule is None:
            rule = sphere_quadrature(basis.dim, 2 * basis.max_degree + 6)
        vals = np.asarray(data(rule.points * r), dtype=float)
        coeffs = basis.project_samples(vals, rule)
        if rule.exact:
            # refinement comparison as the reported error estimate
            rule2 = sphere_quadrature(basis.dim, rule.degree + 6)
            vals2 = np.asarray(data(rule2.points * r), dtype=float)
            coeffs2 = basis.project_samples(vals2, rule2)
            err = max(abs(coeffs[k] - coeffs2[k]) for k in coeffs)
            coeffs = coeffs2
        else:
            err = max(rule.error_estimate(vals * basis.mode(*k).poly(rule.points))
                      for k in coeffs)
        if err > quad_tol:
            raise AccuracyError(
                f"sphere quadrature error estimate {err:.3e} exceeds {quad_tol:.1e}"
            )
        return coeffs, err
    raise ParameterError(f"unsupported sphere data type {type(data)!r}")


def project_high(data, basis: HarmonicBasis, r: float, rule=None, quad_tol=1e-9) -> ModeExpansion:
    """High-eigenmode projection: modes of degree >= 2 of `data` on S_r."""
    coeffs, _ = _coeffs_on_sphere(data, basis, r, rule, quad_tol)
    keys = [k for k in basis.keys() if k[0] >= 2]
    prof = np.array([[coeffs[k]] for k in keys])
    return ModeExpansion(dim=basis.dim, radii=[r], keys=keys, profiles=prof, basis=basis)


def project_low(data, basis: HarmonicBasis, r: float, rule=None, quad_tol=1e-9):
    """Low-eigenmode coefficients: (constant coefficient, n linear coefficients).

    Coefficients are with respect to the orthonormal modes, so a constant c
    projects to c |S^{n-1}|^{1/2} and a . theta recovers a up to the fixed
    normalization sqrt(|S^{n-1}|/n).
    """
    coeffs, _ = _coeffs_on_sphere(data, basis, r, rule, quad_tol)
    const = coeffs[(0, 0)]
    linear = np.array([coeffs[(1, i)] for i in range(basis.dim.n)])
    return const, linear


def high_mode_field(expansion: ModeExpansion):
    """Callable theta -> values for a single-radius expansion (reconstruction)."""
    if len(expansion.radii) != 1:
        raise ParameterError("reconstruction requires a single-radius expansion")

    def fn(theta):
        return expansion.values(np.atleast_2d(theta))[0]

    return fn


# ---------------------------------------------------------------------------
# boundary data on a sphere (mode coefficients), used by the extension
# operators and the matching systems

@dataclass
class BoundaryData:
    """Mode coefficients of a function on the sphere of radius r.

    `coeffs` maps (degree, index) to the coefficient of the orthonormal mode.
    High-mode data (degree >= 2 only) is what the interior extension and the
    boundary operator act on; exterior extension allows degree >= 1.
    """

    basis: HarmonicBasis
    r: float
    coeffs: dict

    def __post_init__(self):
        if self.r <= 0:
            raise ParameterError("radius must be positive")
        clean = {}
        for k, c in self.coeffs.items():
            key = (int(k[0]), int(k[1]))
            if key not in dict.fromkeys(self.basis.keys()):
                raise ParameterError(f"mode {key} not in basis")
            clean[key] = float(c)
        self.coeffs = clean

    @property
    def dim(self) -> Dimension:
        return self.basis.dim

    def min_degree(self) -> int:
        live = [k[0] for k, c in self.coeffs.items() if c != 0.0]
        return min(live) if live else self.basis.max_degree

    def require_high_mode(self):
        if self.min_degree() < 2:
            raise ContractViolationError("low-mode coefficients present in high-mode data")

    def require_no_constant(self):
        if any(k[0] == 0 and c != 0.0 for k, c in self.coeffs.items()):
            raise ContractViolationError("constant-mode coefficient present")

    def values(self, theta) -> np.ndarray:
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        out = np.zeros(theta.shape[0])
        for k, c in self.coeffs.items():
            out += c * self.basis.mode(*k).poly(theta)
        return out

    def map_coeffs(self, fn) -> "BoundaryData":
        return BoundaryData(self.basis, self.r,
                            {k: fn(k[0], c) for k, c in self.coeffs.items()})

    def scaled(self, s: float) -> "BoundaryData":
        return self.map_coeffs(lambda d, c: s * c)

    def __sub__(self, other: "BoundaryData") -> "BoundaryData":
        keys = set(self.coeffs) | set(other.coeffs)
        return BoundaryData(self.basis, self.r,
                            {k: self.coeffs.get(k, 0.0) - other.coeffs.get(k, 0.0)
                             for k in keys})

    def max_abs(self) -> float:
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    def sup_norm_bound(self) -> float:
        """sum_j |c_j| sup |e_j|, a cheap upper bound used in gates."""
        tot = 0.0
        for k, c in self.coeffs.items():
            rule = sphere_quadrature(self.dim, 2)
            tot += abs(c) * float(np.max(np.abs(self.basis.mode(*k).poly(rule.points))))
        return tot

    def sphere_field(self):
        """Unit-sphere field with exact derivatives of the degree-0 extension.

        Each mode contributes p(x) |x|^{-deg}; gradients and Hessians follow
        from the product rule, so the discrete C^{k,alpha} norms carry no
        differencing noise.
        """
        from .norms import SphereField

        terms = [(self.basis.mode(*k), c) for k, c in self.coeffs.items() if c != 0.0]

        def val(theta):
            return self.values(theta)

        def grad(x):
            x = np.atleast_2d(np.asarray(x, dtype=float))
            rho = np.linalg.norm(x, axis=-1)
            out = np.zeros(x.shape)
            for m, c in terms:
                d = m.degree
                p = m.poly(x)
                out += c * (m.poly.gradient(x) * (rho ** (-d))[:, None]
                            - d * (p * rho ** (-d - 2))[:, None] * x)
            return out

        def hess(x):
            x = np.atleast_2d(np.asarray(x, dtype=float))
            nn = x.shape[-1]
            rho = np.linalg.norm(x, axis=-1)
            eye = np.eye(nn)
            xx = x[:, :, None] * x[:, None, :]
            out = np.zeros(x.shape[:-1] + (nn, nn))
            for m, c in terms:
                d = m.degree
                p = m.poly(x)
                gp = m.poly.gradient(x)
                hp = m.poly.hessian(x)
                s = rho ** (-d)
                gs = -d * (rho ** (-d - 2))[:, None] * x
                hs = (-d * (rho ** (-d - 2))[:, None, None] * eye
                      + d * (d + 2) * (rho ** (-d - 4))[:, None, None] * xx)
                cross = gs[:, :, None] * gp[:, None, :] + gp[:, :, None] * gs[:, None, :]
                out += c * (p[:, None, None] * hs + s[:, None, None] * hp + cross)
            return out

        return SphereField(val, grad=grad, hess=hess)

    def c2a_norm(self, alpha: float = 0.5, samples: int = 160) -> float:
        """Discrete C^{2,alpha}(S^{n-1}) norm of the mode sum."""
        from .norms import norm_sphere

        return norm_sphere(self.sphere_field(), 2, alpha, self.dim.n, samples=samples)
