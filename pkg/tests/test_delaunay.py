import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neckglue import (Dimension, IntegrationError, ParameterError, energy_at_minimum,
                      eval_orbit, hamiltonian, homoclinic_value, integrate_orbit,
                      integrate_trajectory, ode_rhs)


def test_dimension_range():
    Dimension(3)
    Dimension(10)
    for bad in (2, 11, 0):
        with pytest.raises(ParameterError):
            Dimension(bad)


def test_rhs_cylinder_equilibrium():
    dim = Dimension(4)
    v_cyl = dim.cylinder_value
    dv, dw = ode_rhs(dim, v_cyl, 0.0)
    assert dv == 0.0
    assert abs(dw) < 1e-15


def test_rhs_at_one():
    # n=4: (n-2)^2/4 = 1, n(n-2)/4 = 2, power 3: w' = 1 - 2 = -1
    dv, dw = ode_rhs(4, 1.0, 0.0)
    assert dv == 0.0
    assert dw == pytest.approx(-1.0, abs=1e-15)


def test_rhs_rejects_negative_v():
    with pytest.raises(ParameterError):
        ode_rhs(4, -0.1, 0.0)
    with pytest.raises(ParameterError):
        hamiltonian(5, -1e-9, 0.3)


def test_hamiltonian_values():
    assert hamiltonian(7, 0.0, 0.0) == 0.0
    dim = Dimension(4)
    assert hamiltonian(dim, dim.cylinder_value, 0.0) == pytest.approx(-0.25, abs=1e-14)
    assert hamiltonian(dim, 0.5, 0.0) == pytest.approx(-0.1875, abs=1e-15)
    # cylinder energy formula agrees for every supported n
    for n in range(3, 11):
        d = Dimension(n)
        assert hamiltonian(d, d.cylinder_value, 0.0) == pytest.approx(
            d.cylinder_energy, rel=1e-13)


def test_energy_at_minimum_matches_hamiltonian():
    # (2.8) at (eps, 0); n=4, eps=0.3 gives -0.0819
    assert energy_at_minimum(4, 0.3) == pytest.approx(-0.0819, abs=1e-15)
    assert energy_at_minimum(4, 0.3) == pytest.approx(hamiltonian(4, 0.3, 0.0))


@given(st.integers(min_value=3, max_value=10),
       st.floats(min_value=0.01, max_value=0.4),
       st.floats(min_value=-0.5, max_value=0.5))
@settings(max_examples=40, deadline=None)
def test_hamiltonian_energy_derivative_consistency(n, v, w):
    # d/dt H(v, w) along the vector field vanishes identically
    dim = Dimension(n)
    dv, dw = ode_rhs(dim, v, w)
    h = 1e-6
    dH = (hamiltonian(dim, v + h * dv, w + h * dw)
          - hamiltonian(dim, v - h * dv, w - h * dw)) / (2 * h)
    scale = max(1.0, abs(hamiltonian(dim, v, w)))
    assert abs(dH) < 1e-8 * scale


def test_integrate_orbit_rejects_bad_epsilon():
    dim = Dimension(4)
    with pytest.raises(ParameterError):
        integrate_orbit(dim, dim.cylinder_value)
    with pytest.raises(ParameterError):
        integrate_orbit(dim, 0.0)
    with pytest.raises(ParameterError):
        integrate_orbit(dim, -0.1)


def test_orbit_basic_properties(orbit4_03):
    orb = orbit4_03
    assert orb.epsilon == 0.3
    assert orb.h0 == pytest.approx(-0.0819, abs=1e-15)
    # v stays in (0, 1) and the minimum is eps
    assert orb.v_max < 1.0
    assert np.min(orb.v_samples) == pytest.approx(0.3, abs=1e-10)
    assert orb.hamiltonian_drift() <= orb.tol_H
    # periodicity
    v0, w0, _ = orb.evaluate(0.0)
    vT, wT, _ = orb.evaluate(orb.period)
    assert abs(vT - v0) + abs(wT - w0) <= orb.tol_period


def test_eval_orbit_endpoints(orbit4_03):
    v, w, vpp = eval_orbit(orbit4_03, 0.0)
    assert v == pytest.approx(0.3, abs=1e-12)
    assert abs(w) < 1e-12
    assert vpp > 0.0


def test_orbit_exponential_bound(orbit4_03):
    # v(t) <= eps e^{(n-2)/2 |t|} on sampled t
    orb = orbit4_03
    t = np.linspace(-3 * orb.period, 3 * orb.period, 500)
    v = orb.evaluate(t)[0]
    assert np.all(v <= 0.3 * np.exp(np.abs(t)) * (1 + 1e-12))


def test_derivative_domination(orbit_cache):
    # |v'| <= c_n v and |v''| <= c_n v with a finite reported constant
    for n in (3, 4, 5, 6):
        orb = orbit_cache(n, 0.1 if n != 3 else 0.2)
        c = orb.derivative_domination_constant()
        assert np.isfinite(c)
        # n(n-2)/4 dominates both bounds analytically
        assert c <= n * (n - 2) / 4.0 + 0.5


def test_monotone_energy_sweep():
    # h0 is strictly decreasing in eps toward the cylinder value
    dim = Dimension(4)
    eps = np.linspace(0.05, 0.65, 13)
    h = [energy_at_minimum(dim, e) for e in eps]
    assert all(h[i] > h[i + 1] for i in range(len(h) - 1))
    assert h[-1] > dim.cylinder_energy


def test_homoclinic_residual_small():
    # the cosh orbit satisfies the ODE; numeric residual of the integrated
    # trajectory against it stays tiny on t in [0, 3]
    dim = Dimension(4)
    t, v, w = integrate_trajectory(dim, 1.0, 0.0, 3.0)
    ref = homoclinic_value(dim, t)
    assert np.max(np.abs(v - ref)) < 1e-10


def test_period_detection_failure_horizon():
    # the homoclinic start (1, 0) never returns to a minimum: H = 0 exactly
    dim = Dimension(4)
    with pytest.raises((IntegrationError, ParameterError)):
        integrate_orbit(dim, dim.cylinder_value * (1 + 1e-12))
