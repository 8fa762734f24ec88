from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neckglue import (ParameterError, SpectrumSpec, degenerate_curvature_set,
                      family_spec, is_nondegenerate, laplace_spectrum,
                      linearized_spectrum, s2xs2_discrepancy, s2xs3_discrepancy,
                      spectral_gap)


def test_spec_validation():
    with pytest.raises(ParameterError):
        SpectrumSpec(factors=())
    with pytest.raises(ParameterError):
        SpectrumSpec(factors=((2, -1.0),))
    with pytest.raises(ParameterError):
        SpectrumSpec(factors=((0, 1.0),))


def test_constant_mode_is_zero():
    spec = SpectrumSpec(factors=((2, 3.0), (2, 3.0)))
    assert laplace_spectrum(spec, 1)[0] == (0.0, (0, 0))


def test_single_sphere_formula():
    # S^2(k): i = 1 eigenvalue is i(n+i-1)k = 2k
    spec = SpectrumSpec(factors=((2, 7.0),))
    assert laplace_spectrum(spec, 2)[1][0] == pytest.approx(14.0)


@given(st.integers(min_value=1, max_value=5), st.integers(min_value=0, max_value=6),
       st.floats(min_value=0.1, max_value=9.0))
@settings(max_examples=40, deadline=None)
def test_factor_eigenvalue_formula(m, i, k):
    spec = SpectrumSpec(factors=((m, k),))
    assert spec.factor_eigenvalue(0, i) == pytest.approx(i * (m + i - 1) * k)


def test_product_eigenvalue():
    spec = SpectrumSpec(factors=((2, 3.0), (2, 3.0)))
    pairs = dict((idx, mu) for mu, idx in laplace_spectrum(spec, 8))
    assert pairs[(1, 0)] == pytest.approx(6.0)
    assert pairs[(1, 1)] == pytest.approx(12.0)


def test_linearized_values():
    spec = SpectrumSpec(factors=((2, 3.0), (2, 3.0)))
    vals = dict((idx, v) for v, idx in linearized_spectrum(spec, 6))
    assert vals[(0, 0)] == pytest.approx(4.0)
    assert vals[(1, 0)] == pytest.approx(-2.0)


def test_linearized_requires_normalization():
    spec = SpectrumSpec(factors=((2, 1.0), (2, 1.0)))  # scalar curvature 4 != 12
    with pytest.raises(ParameterError):
        linearized_spectrum(spec, 3)


def test_degenerate_s2_2_s2_4():
    ok, kernel = is_nondegenerate(SpectrumSpec(factors=((2, 2.0), (2, 4.0))))
    assert not ok
    assert kernel == [(1, 0)]


def test_nondegenerate_s2_3_s2_3():
    spec = SpectrumSpec(factors=((2, 3.0), (2, 3.0)))
    ok, kernel = is_nondegenerate(spec)
    assert ok and kernel == []
    assert spectral_gap(spec) == pytest.approx(2.0, abs=1e-14)


def test_round_sphere_degenerate():
    # S^4 with scalar curvature 12 has the degree-1 kernel
    ok, kernel = is_nondegenerate(SpectrumSpec(factors=((4, 1.0),)))
    assert not ok
    assert kernel == [(1,)]


def test_family_constructor():
    assert family_spec("s2xs2", 2.0).factors == ((2, 2.0), (2, 4.0))
    assert family_spec("s2xs3", 2.5).factors == ((2, 2.5), (3, 2.5))
    with pytest.raises(ParameterError):
        family_spec("s2xs2", 7.0)
    with pytest.raises(ParameterError):
        family_spec("sNxsM", 1.0)


def test_family_normalization():
    for fam, k1 in (("s2xs2", 1.7), ("s2xs3", 2.2)):
        assert family_spec(fam, k1).is_normalized


def test_degenerate_set_s2xs2():
    crit = degenerate_curvature_set("s2xs2", 10)
    vals = sorted({c.curvature_exact for c in crit}, reverse=True)
    expected = [Fraction(4, i * (i + 1)) for i in range(1, 11)]
    assert vals == expected
    # strictly decreasing in the degree
    per_factor = [c.curvature for c in crit if c.factor == 0]
    assert all(a > b for a, b in zip(per_factor, per_factor[1:]))


def test_degenerate_set_consistency_with_kernel():
    # every listed value really is degenerate; midpoints between them are not
    crit = degenerate_curvature_set("s2xs2", 4)
    for c in crit:
        if c.factor == 0:
            ok, _ = is_nondegenerate(family_spec("s2xs2", c.curvature))
            assert not ok
    ok, _ = is_nondegenerate(family_spec("s2xs2", 1.3))
    assert ok


def test_degenerate_set_s2xs3_uses_kernel_constant():
    crit = degenerate_curvature_set("s2xs3", 3)
    s2_vals = {c.curvature_exact for c in crit if c.factor == 0}
    s3_vals = {c.curvature_exact for c in crit if c.factor == 1}
    assert Fraction(5, 2) in s2_vals       # i=1: 5/(1*2)
    assert Fraction(5, 3) in s3_vals       # i=1: 5/(1*3)
    # confirmed degenerate from first principles
    ok, kern = is_nondegenerate(family_spec("s2xs3", 2.5))
    assert not ok and (1, 0) in kern


def test_no_mixed_kernels_s2xs2():
    # under k1 + k2 = 6 mixed modes have eigenvalue >= 2k1 + 2k2 = 12 > 4
    for k1 in (1.0, 2.0, 3.0, 5.0):
        spec = family_spec("s2xs2", k1)
        _, kernel = is_nondegenerate(spec)
        for idx in kernel:
            assert min(idx) == 0


def test_countable_degeneracy_in_interval():
    # only finitely many degenerate values in a curvature interval away from 0
    crit = degenerate_curvature_set("s2xs2", 50)
    inside = [c for c in crit if 0.5 <= c.curvature <= 6.0]
    assert 0 < len(inside) < 20


def test_discrepancy_reports():
    rep = s2xs3_discrepancy()
    assert not rep.agree
    assert rep.kernel_constant == 5 and rep.quoted_constant == 4
    rep2 = s2xs2_discrepancy()
    assert rep2.agree and rep2.kernel_constant == 4
