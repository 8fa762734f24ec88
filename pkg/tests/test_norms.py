import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neckglue import (Field, NormSpec, ParameterError, norm_annulus, norm_sphere,
                      norm_weighted, norm_weighted_exterior, norm_weighted_report,
                      radial_field)


def power_field(mu):
    return radial_field(lambda rho: rho**mu,
                        fp=lambda rho: mu * rho ** (mu - 1),
                        fpp=lambda rho: mu * (mu - 1) * rho ** (mu - 2))


def test_spec_validation():
    with pytest.raises(ParameterError):
        NormSpec(n=4, k=3, alpha=0.5, mu=1.0, r=0.2)
    with pytest.raises(ParameterError):
        NormSpec(n=4, k=0, alpha=1.0, mu=1.0, r=0.2)
    with pytest.raises(ParameterError):
        NormSpec(n=4, k=0, alpha=0.5, mu=1.0, r=0.2, levels=0)


def test_constant_field():
    spec = NormSpec(n=4, k=0, alpha=0.5, mu=0.0, r=0.4)
    f = Field(lambda x: 3.0 * np.ones(len(x)))
    assert norm_annulus(f, spec, 0.1) == pytest.approx(3.0, abs=1e-14)


def test_absolute_value_field():
    # sup part on [1, 2] is 2; the Hoelder part adds a positive amount
    spec = NormSpec(n=4, k=0, alpha=0.5, mu=0.0, r=4.0)
    f = Field(lambda x: np.linalg.norm(x, axis=-1))
    val = norm_annulus(f, spec, 1.0)
    assert val >= 2.0
    assert val <= 4.0


def test_homogeneity_oracle():
    mu = 1.4
    f = power_field(mu)
    spec = NormSpec(n=4, k=2, alpha=0.5, mu=mu, r=0.4)
    vals = [s ** (-mu) * norm_annulus(f, spec, s) for s in (0.2, 0.1, 0.02)]
    assert np.allclose(vals, vals[0], rtol=1e-10)


def test_weighted_norm_r_stability():
    mu = 1.4
    f = power_field(mu)
    vals = [norm_weighted(f, NormSpec(n=4, k=0, alpha=0.5, mu=mu, r=r))
            for r in (0.2, 0.1, 0.05)]
    assert max(vals) <= 1.01 * min(vals)


def test_weight_mismatch_growth():
    mu = 1.4
    f = power_field(mu - 1.0)
    rep = norm_weighted_report(f, NormSpec(n=4, k=0, alpha=0.5, mu=mu, r=0.2,
                                           levels=8))
    assert np.all(np.diff(rep.values) > 0)


def test_inclusion_between_weights():
    # for mu >= delta the delta-weighted norm is controlled by the mu norm
    mu, delta = 1.5, 1.0
    f = power_field(mu)
    base = NormSpec(n=4, k=0, alpha=0.5, mu=mu, r=0.2)
    weaker = NormSpec(n=4, k=0, alpha=0.5, mu=delta, r=0.2)
    C = (0.1) ** (mu - delta)  # sigma^{mu-delta} <= (r/2)^{mu-delta}
    assert norm_weighted(f, weaker) <= norm_weighted(f, base) * C * (1 + 1e-12)


@given(st.floats(min_value=0.05, max_value=5.0),
       st.floats(min_value=-2.0, max_value=2.0))
@settings(max_examples=25, deadline=None)
def test_norm_axioms(scale, shift):
    # absolute homogeneity and the triangle inequality hold exactly on the
    # shared sample pattern
    spec = NormSpec(n=3, k=1, alpha=0.5, mu=0.7, r=0.3, levels=3, samples=32)
    f = Field(lambda x: np.sin(2 * x[..., 0]) + shift * x[..., 1],
              grad=lambda x: np.stack(
                  [2 * np.cos(2 * x[..., 0]), shift * np.ones(len(x)),
                   np.zeros(len(x))], axis=-1))
    g = Field(lambda x: np.linalg.norm(x, axis=-1),
              grad=lambda x: x / np.linalg.norm(x, axis=-1)[..., None])
    nf = norm_weighted(f, spec)
    assert norm_weighted(Field(lambda x: scale * f(x),
                               grad=lambda x: scale * f.gradient(x, 0)), spec) == \
        pytest.approx(abs(scale) * nf, rel=1e-12)
    fg = Field(lambda x: f(x) + g(x),
               grad=lambda x: f.gradient(x, 0) + g.gradient(x, 0))
    assert norm_weighted(fg, spec) <= nf + norm_weighted(g, spec) + 1e-12


def test_rescaling_inequality_constant():
    # the scaling law: w_r(x) = w(x/r), g(x) = r^{-2} f(x/r) keeps the ratio
    # of the two weighted norms exactly r-independent
    def w_fn(x):
        return np.sin(3 * np.linalg.norm(x, axis=-1)) * (1 + x[..., 0])

    def f_fn(x):
        return np.cos(2 * np.linalg.norm(x, axis=-1)) + x[..., 1] ** 2

    ratios = []
    for r in (1.0, 0.5, 0.25):
        wr = Field(lambda x, r=r: w_fn(x / r))
        g = Field(lambda x, r=r: f_fn(x / r) / r**2)
        s_w = NormSpec(n=4, k=2, alpha=0.5, mu=1.1, r=r, levels=5)
        s_g = NormSpec(n=4, k=0, alpha=0.5, mu=-0.9, r=r, levels=5)
        ratios.append(norm_weighted(wr, s_w) / norm_weighted(g, s_g))
    assert np.allclose(ratios, ratios[0], rtol=1e-9)


def test_refinement_report_converges():
    f = power_field(1.2)
    rep = norm_weighted_report(f, NormSpec(n=4, k=0, alpha=0.5, mu=1.2, r=0.2))
    assert rep.converged


def test_exterior_weighted_norm():
    # |x|^{1-n} decay measured with weight 1-n is r-stable
    n = 4
    f = power_field(1 - n)
    vals = [norm_weighted_exterior(f, NormSpec(n=n, k=0, alpha=0.5, mu=1 - n, r=r,
                                               levels=5))
            for r in (0.5, 1.0, 2.0)]
    assert max(vals) <= 1.01 * min(vals)


def test_sphere_norm_constants_and_scaling():
    assert norm_sphere(lambda th: 5.0 * np.ones(len(th)), 0, 0.5, 4) == \
        pytest.approx(5.0, abs=1e-14)
    v1 = norm_sphere(lambda th: th[:, 0], 2, 0.5, 4)
    v2 = norm_sphere(lambda th: 0.3 * th[:, 0], 2, 0.5, 4)
    assert v2 == pytest.approx(0.3 * v1, rel=1e-7)


def test_fd_fallback_matches_analytic():
    mu = 1.3
    f_exact = power_field(mu)
    f_fd = Field(lambda x: np.linalg.norm(x, axis=-1) ** mu)
    spec = NormSpec(n=4, k=2, alpha=0.5, mu=mu, r=0.2, levels=3, samples=32)
    assert norm_weighted(f_fd, spec) == pytest.approx(
        norm_weighted(f_exact, spec), rel=1e-4)
