"""Spectra of the shifted Laplacian on products of round spheres.

On S^m(k) the Laplacian spectrum is {i(m+i-1)k : i >= 0}; on a product the
eigenvalues add over factors.  With the scalar curvature normalized to
n(n-1), the linearization about the constant solution is L1 = Delta + n
(eigenfunctions satisfy Delta e = -mu e, so L1 has eigenvalues n - mu),
and the manifold is nondegenerate exactly when no eigenvalue vanishes.

The degenerate curvature values are derived here from the kernel condition
itself rather than from quoted constants: a single factor S^m(k) carrying a
degree-i eigenfunction contributes a kernel element exactly when
i(m+i-1) k = n.  For S^2 x S^3 (n = 5) this disagrees with the often-quoted
constant 4; the discrepancy is reported by `s2xs3_discrepancy`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .errors import ParameterError

NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class SpectrumSpec:
    """A product of round spheres: factors are (dimension m_k, curvature k_k)."""

    factors: tuple

    def __post_init__(self):
        factors = tuple((int(m), float(k)) for m, k in self.factors)
        if not factors:
            raise ParameterError("at least one sphere factor is required")
        for m, k in factors:
            if m < 1:
                raise ParameterError(f"sphere dimension {m} must be >= 1")
            if k <= 0:
                raise ParameterError(f"curvature {k} must be positive")
        object.__setattr__(self, "factors", factors)

    @property
    def n(self) -> int:
        """Total dimension (the shift in L1 = Delta + n)."""
        return sum(m for m, _ in self.factors)

    @property
    def scalar_curvature(self) -> float:
        return sum(m * (m - 1) * k for m, k in self.factors)

    @property
    def is_normalized(self) -> bool:
        n = self.n
        return abs(self.scalar_curvature - n * (n - 1)) <= NORMALIZATION_TOL * n * n

    def require_normalized(self):
        if not self.is_normalized:
            raise ParameterError(
                f"scalar curvature {self.scalar_curvature} differs from "
                f"n(n-1) = {self.n * (self.n - 1)}")

    def factor_eigenvalue(self, j: int, i: int) -> float:
        m, k = self.factors[j]
        return i * (m + i - 1) * k

    def eigenvalue(self, index) -> float:
        return sum(self.factor_eigenvalue(j, i) for j, i in enumerate(index))


def _enumerate_up_to(spec: SpectrumSpec, bound: float):
    """All index tuples with Laplace eigenvalue <= bound."""
    ranges = []
    for j, (m, k) in enumerate(spec.factors):
        i_max = 0
        while spec.factor_eigenvalue(j, i_max + 1) <= bound:
            i_max += 1
        ranges.append(range(i_max + 1))
    out = []
    for idx in itertools.product(*ranges):
        mu = spec.eigenvalue(idx)
        if mu <= bound:
            out.append((mu, idx))
    return out


def laplace_spectrum(spec: SpectrumSpec, count: int):
    """The `count` smallest Laplace eigenvalues with their index tuples.

    Returned as (eigenvalue, index tuple) pairs in increasing order; ties are
    ordered by index tuple.
    """
    if count < 1:
        raise ParameterError("count must be >= 1")
    bound = 1.0
    while True:
        pairs = _enumerate_up_to(spec, bound)
        if len(pairs) >= count:
            pairs.sort(key=lambda p: (p[0], p[1]))
            return pairs[:count]
        bound *= 2.0


def linearized_spectrum(spec: SpectrumSpec, count: int):
    """Eigenvalues n - mu of L1 = Delta + n, in decreasing order."""
    spec.require_normalized()
    n = spec.n
    return [(n - mu, idx) for mu, idx in laplace_spectrum(spec, count)]


def is_nondegenerate(spec: SpectrumSpec, tol: float = 1e-12):
    """Whether 0 is absent from Spec(L1); returns (flag, offending index tuples)."""
    spec.require_normalized()
    if tol < 0:
        raise ParameterError("tol must be nonnegative")
    n = spec.n
    kernel = [idx for mu, idx in _enumerate_up_to(spec, n + tol) if abs(n - mu) <= tol]
    return len(kernel) == 0, kernel


def spectral_gap(spec: SpectrumSpec) -> float:
    """min |n - mu| over the whole spectrum (0 exactly when degenerate)."""
    spec.require_normalized()
    n = spec.n
    pairs = _enumerate_up_to(spec, 4.0 * n + 8.0)
    return min(abs(n - mu) for mu, _ in pairs)


@dataclass(frozen=True)
class CriticalCurvature:
    """A curvature value at which one factor contributes a kernel element."""

    factor: int
    degree: int
    curvature: float
    curvature_exact: Fraction


_FAMILIES = {
    "s2xs2": ((2, 2), 6),    # factor dimensions and the curvature constraint sum
    "s2xs3": ((2, 3), 10),   # k3 + 3 k4 = 10
}


def family_spec(family: str, k1: float) -> SpectrumSpec:
    """Build the normalized two-factor product from its first curvature.

    For s2xs2 the constraint is k1 + k2 = 6; for s2xs3 it is k3 + 3 k4 = 10.
    """
    fam = family.lower()
    if fam not in _FAMILIES:
        raise ParameterError(f"unknown family {family!r}; use s2xs2 or s2xs3")
    (m1, m2), total = _FAMILIES[fam]
    if fam == "s2xs2":
        k2 = total - k1
    else:
        k2 = (total - k1) / 3.0
    if k1 <= 0 or k2 <= 0:
        raise ParameterError(
            f"curvatures must be positive: k1={k1} gives partner {k2}")
    return SpectrumSpec(factors=((m1, k1), (m2, k2)))


def degenerate_curvature_set(family: str, i_max: int):
    """Critical curvatures from first principles, one per factor and degree.

    Solves i(m+i-1) k = n on single-factor modes: for S^2 factors k = n/(i(i+1)),
    for the S^3 factor k = n/(i(i+2)), with n = 4 (s2xs2) or n = 5 (s2xs3).
    Values exceeding what the normalization allows for that factor are dropped.
    """
    fam = family.lower()
    if fam not in _FAMILIES:
        raise ParameterError(f"unknown family {family!r}; use s2xs2 or s2xs3")
    if i_max < 1:
        raise ParameterError("i_max must be >= 1")
    (m1, m2), total = _FAMILIES[fam]
    n = m1 + m2
    out = []
    for factor, m in ((0, m1), (1, m2)):
        # admissible range of this factor's curvature under the constraint
        if fam == "s2xs2":
            k_cap = float(total)
        else:
            k_cap = float(total) if factor == 0 else total / 3.0
        for i in range(1, i_max + 1):
            exact = Fraction(n, i * (m + i - 1))
            val = float(exact)
            if 0 < val < k_cap:
                out.append(CriticalCurvature(factor=factor, degree=i,
                                             curvature=val, curvature_exact=exact))
    return out


@dataclass(frozen=True)
class DiscrepancyReport:
    """Comparison of the kernel-derived constant with the quoted one."""

    family: str
    kernel_constant: int
    quoted_constant: int
    agree: bool
    detail: str


def s2xs3_discrepancy() -> DiscrepancyReport:
    """The S^2 x S^3 degeneracy constant: kernel condition forces n = 5, not 4.

    With L1 = Delta + 5 on the five-dimensional product, single-factor kernel
    values are 5/(i(i+1)) and 5/(i(i+2)); the constant 4 would belong to a
    four-dimensional product.
    """
    return DiscrepancyReport(
        family="s2xs3",
        kernel_constant=5,
        quoted_constant=4,
        agree=False,
        detail=(
            "kernel of Delta + n on S^2(k3) x S^3(k4) with n = 5 requires "
            "i(i+1) k3 = 5 or i(i+2) k4 = 5; the commonly quoted critical "
            "values 4/(i(i+1)) and 4/(i(i+2)) use 4 where the dimension "
            "shift forces 5"),
    )


def s2xs2_discrepancy() -> DiscrepancyReport:
    """For S^2 x S^2 the quoted constant 4 equals n; no discrepancy."""
    return DiscrepancyReport(
        family="s2xs2", kernel_constant=4, quoted_constant=4, agree=True,
        detail="kernel condition i(i+1) k = 4 matches the quoted set 4/(i(i+1))")
