"""Dimension bookkeeping and the admissibility budget for all fixed-point arguments."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ParameterError


@dataclass(frozen=True)
class Dimension:
    """Ambient dimension n of the punctured-ball model.

    Only 3 <= n <= 10 is supported.  Derived quantities used throughout:
    d = [(n-2)/2], the half-exponent a = (n-2)/2, the critical power
    (n+2)/(n-2) and the conformal power 4/(n-2).
    """

    n: int

    def __post_init__(self):
        if not isinstance(self.n, int) or isinstance(self.n, bool):
            raise ParameterError(f"dimension must be an integer, got {self.n!r}")
        if not 3 <= self.n <= 10:
            raise ParameterError(f"dimension n={self.n} outside supported range [3, 10]")

    @property
    def d(self) -> int:
        return (self.n - 2) // 2

    @property
    def a(self) -> float:
        """Half-exponent (n-2)/2 of the cylindrical change of variables."""
        return (self.n - 2) / 2.0

    @property
    def critical_power(self) -> float:
        """(n+2)/(n-2), exponent of the nonlinearity."""
        return (self.n + 2) / (self.n - 2)

    @property
    def conformal_power(self) -> float:
        """4/(n-2), exponent of the conformal factor in the linearization."""
        return 4.0 / (self.n - 2)

    @property
    def cylinder_value(self) -> float:
        """Value ((n-2)/n)^((n-2)/4) of the constant orbit."""
        return ((self.n - 2) / self.n) ** ((self.n - 2) / 4.0)

    @property
    def cylinder_energy(self) -> float:
        """Energy -((n-2)/n)^(n/2) (n-2)/2 of the constant orbit."""
        return -(((self.n - 2) / self.n) ** (self.n / 2.0)) * (self.n - 2) / 2.0


def as_dimension(n) -> Dimension:
    """Coerce an int (or Dimension) to a validated Dimension."""
    if isinstance(n, Dimension):
        return n
    return Dimension(n)


def _default_delta1(n: int) -> float:
    # the worked parameter choice delta1 = 1/(8n), inside (0, 1/(8n-16))
    return 1.0 / (8 * n)


def _default_s(n: int) -> float:
    # s = 2/(n - 1 - 1/(2n)), inside the admissible band for every supported n
    return 2.0 / (n - 1 - 1.0 / (2 * n))


@dataclass(frozen=True)
class ParameterBudget:
    """The constant zoo (s, delta1, delta2, delta4, mu, nu, tau, kappa, beta, gamma).

    Admissibility is enforced at construction:

      * delta1 in (0, 1/(8n-16)) and delta2 > delta1, delta4 in (0, 1/2),
      * 1/(d+1-delta1) < s < 4/(d-2+3n/2),
      * mu in (1, 5/4), nu in (3/2-n, 2-n),
      * tau, kappa, beta, gamma > 0.

    The gluing radius is r_eps = eps**s.
    """

    dim: Dimension
    s: float
    delta1: float
    delta2: float
    delta4: float = 0.25
    mu: float = 1.125
    nu: float | None = None
    tau: float = 1.0
    kappa: float = 1.0
    beta: float = 2.0
    gamma: float = 1.0

    def __post_init__(self):
        n, d = self.dim.n, self.dim.d
        if not 0 < self.delta1 < 1.0 / (8 * n - 16):
            raise ParameterError(
                f"delta1={self.delta1} outside (0, {1.0 / (8 * n - 16):.6g}) for n={n}"
            )
        s_lo = 1.0 / (d + 1 - self.delta1)
        s_hi = 4.0 / (d - 2 + 1.5 * n)
        if not s_lo < self.s < s_hi:
            raise ParameterError(f"s={self.s} outside ({s_lo:.6g}, {s_hi:.6g}) for n={n}")
        if not self.delta2 > self.delta1:
            raise ParameterError(f"delta2={self.delta2} must exceed delta1={self.delta1}")
        if not 0 < self.delta4 < 0.5:
            raise ParameterError(f"delta4={self.delta4} outside (0, 1/2)")
        if not 1.0 < self.mu < 1.25:
            raise ParameterError(f"mu={self.mu} outside (1, 5/4)")
        nu = self.nu if self.nu is not None else (1.75 - n)
        if not 1.5 - n < nu < 2 - n:
            raise ParameterError(f"nu={nu} outside ({1.5 - n}, {2 - n}) for n={n}")
        object.__setattr__(self, "nu", nu)
        for name in ("tau", "kappa", "beta", "gamma"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive")

    @classmethod
    def defaults(cls, dim, **overrides) -> "ParameterBudget":
        """Budget with the worked default choices for dimension n."""
        dim = as_dimension(dim)
        kw = dict(
            s=_default_s(dim.n),
            delta1=_default_delta1(dim.n),
            delta2=0.125,
        )
        kw.update(overrides)
        return cls(dim=dim, **kw)

    def r_eps(self, epsilon: float) -> float:
        """Gluing radius r_eps = eps**s."""
        if epsilon <= 0:
            raise ParameterError(f"epsilon={epsilon} must be positive")
        return epsilon**self.s

    def phi_bound(self, epsilon: float) -> float:
        """Admissible high-mode boundary norm kappa * r_eps^(2+d-n/2-delta1)."""
        r = self.r_eps(epsilon)
        return self.kappa * r ** (2 + self.dim.d - self.dim.n / 2 - self.delta1)
