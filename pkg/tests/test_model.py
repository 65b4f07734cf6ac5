import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracnehari.grid import Field, GridError, make_grid
from fracnehari.model import (
    ASYMPTOTIC,
    BumpParams,
    NonlinearitySpec,
    OverflowGuardError,
    PeriodicParams,
    PotentialError,
    PotentialSet,
    F_eval,
    f_eval,
    fprime_eval,
    make_asymptotic_potentials,
    make_periodic_potentials,
    periodic_potentials,
    phi_eval,
    theta0,
    validate_nonlinearity,
    validate_potentials,
)

CRIT = NonlinearitySpec(q=4.0, mu=3.0, theta=60.0, alpha0=1.0)
specs = st.builds(
    NonlinearitySpec,
    q=st.floats(2.5, 6.0),
    mu=st.floats(2.1, 2.5),
    theta=st.floats(0.1, 100.0),
    alpha0=st.floats(0.1, 3.0),
)


@settings(max_examples=80, deadline=None)
@given(spec=specs, s=st.floats(0.05, 3.0))
def test_f_is_derivative_of_F(spec, s):
    if spec.alpha0 * (s * 1.001) ** 2 > 600:
        return
    h = 1e-6 * s
    fd = (F_eval(spec, s + h) - F_eval(spec, s - h)) / (2 * h)
    assert fd == pytest.approx(float(f_eval(spec, s)), rel=1e-6)


@settings(max_examples=80, deadline=None)
@given(spec=specs, s=st.floats(0.05, 3.0))
def test_fprime_is_derivative_of_f(spec, s):
    if spec.alpha0 * (s * 1.001) ** 2 > 600:
        return
    h = 1e-6 * s
    fd = (f_eval(spec, s + h) - f_eval(spec, s - h)) / (2 * h)
    assert fd == pytest.approx(float(fprime_eval(spec, s)), rel=1e-6)


@settings(max_examples=50, deadline=None)
@given(spec=specs, s=st.floats(1e-3, 3.0))
def test_odd_even_and_ar(spec, s):
    assert f_eval(spec, -s) == -f_eval(spec, s)
    assert F_eval(spec, -s) == F_eval(spec, s)
    assert fprime_eval(spec, -s) == fprime_eval(spec, s)
    # mu < q here, so the AR inequality mu F <= f s holds
    assert spec.mu * F_eval(spec, s) <= f_eval(spec, s) * s
    assert F_eval(spec, s) >= spec.theta * s**spec.q * (1 - 1e-14)
    assert phi_eval(spec, s) > 0


def test_closed_form_values():
    s = 0.7
    e = math.exp(s * s)
    assert F_eval(CRIT, s) == pytest.approx(60 * s**4 + s**4 * (e - 1), rel=1e-14)
    expected = 60 * 4 * s**3 + 4 * s**3 * (e - 1) + 2 * s**5 * e
    assert f_eval(CRIT, s) == pytest.approx(expected, rel=1e-14)


def test_pure_power_mode_drops_exponential():
    pp = NonlinearitySpec(q=4.0, mu=3.0, theta=2.0, alpha0=1.0, mode="pure_power")
    assert f_eval(pp, 1.5) == pytest.approx(2 * 4 * 1.5**3)
    assert F_eval(pp, 1.5) == pytest.approx(2 * 1.5**4)
    assert pp.is_oracle and not CRIT.is_oracle


def test_overflow_guard():
    with pytest.raises(OverflowGuardError):
        f_eval(CRIT, 30.0)
    # below the exponent guard but the product still overflows
    with pytest.raises(OverflowGuardError):
        f_eval(NonlinearitySpec(q=60.0, mu=3.0, theta=1.0, alpha0=1.0), 26.0)


@pytest.mark.parametrize("kwargs", [dict(q=2.0), dict(mu=2.0), dict(theta=0.0), dict(alpha0=-1.0), dict(mode="cubic")])
def test_spec_rejects_bad_parameters(kwargs):
    base = dict(q=4.0, mu=3.0, theta=1.0, alpha0=1.0)
    base.update(kwargs)
    with pytest.raises(ValueError):
        NonlinearitySpec(**base)


def test_default_specs_pass_all_checks():
    for spec in (CRIT, NonlinearitySpec(q=4.0, mu=3.5, theta=60.0, alpha0=1.25)):
        rep = validate_nonlinearity(spec)
        assert rep.passed, rep.lines()
        names = {e.name for e in rep.entries}
        assert {"H1_odd", "H1_limit", "H1_convex", "H2_monotone_quotient", "H3_AR", "H4_lower_bound", "CG_f", "CG_fprime_s"} <= names


def test_ar_violation_is_named():
    rep = validate_nonlinearity(NonlinearitySpec(q=4.0, mu=5.0, theta=1.0, alpha0=1.0))
    assert "H3_AR" in rep.failures()


def test_oracle_mode_skips_growth_checks():
    rep = validate_nonlinearity(NonlinearitySpec(q=4.0, mu=3.0, theta=1.0, alpha0=1.0, mode="pure_power"))
    assert rep.passed
    assert rep["CG_f"].status == "skipped"


def test_periodic_potentials_validate(pot):
    rep = validate_potentials(pot)
    assert rep.passed, rep.lines()


def test_delta_out_of_range_is_named(grid):
    pot = periodic_potentials(grid, PeriodicParams(delta=1.2))
    rep = validate_potentials(pot)
    assert rep["V3_delta_range"].status == "fail"
    assert rep["V3_delta_range"].detail == "(V3): delta must lie in (0,1)"
    with pytest.raises(PotentialError):
        make_periodic_potentials(grid, PeriodicParams(delta=1.0))


def test_non_periodic_potential_is_named(grid):
    V1 = Field(grid, 1.0 + 0.5 * np.sin(0.7 * np.pi * grid.x) ** 2)
    V2 = Field(grid, np.full(grid.N, 1.5))
    lam = Field(grid, np.full(grid.N, 0.2))
    rep = validate_potentials(PotentialSet(V1, V2, lam, 0.6))
    assert rep.failures() == ["V1_periodic"]


def test_strong_coupling_is_named(grid):
    rep = validate_potentials(periodic_potentials(grid, PeriodicParams(coupling=0.7)))
    assert rep.failures() == ["V3_coupling"]


def test_negative_potential_is_named(grid):
    V1 = Field(grid, -0.2 + np.sin(np.pi * grid.x) ** 2)
    V2 = Field(grid, np.full(grid.N, 1.5))
    rep = validate_potentials(PotentialSet(V1, V2, Field(grid, np.zeros(grid.N)), 0.6))
    assert rep.failures() == ["V2_nonnegative"]


def test_periodic_builder_needs_whole_periods():
    with pytest.raises(GridError):
        make_periodic_potentials(make_grid(16.5, 1024))


def test_asymptotic_bumps(grid, pot, apot):
    assert apot.flavor == ASYMPTOTIC
    rep = validate_potentials(apot)
    assert rep.passed, rep.lines()
    V1, V2, lam = apot.active()
    assert np.all(V1 < pot.V1.values) and np.all(lam > pot.lam.values)
    assert apot.periodic_limit().is_periodic


def test_zero_bump_violates_strict_order(grid, pot):
    with pytest.raises(PotentialError, match="V4_strict_order"):
        make_asymptotic_potentials(grid, pot, BumpParams(0.0, 0.0, 0.0))


def test_slow_edge_decay_is_named(grid, pot):
    with pytest.raises(PotentialError, match="V4_edge_decay"):
        make_asymptotic_potentials(grid, pot, BumpParams(0.5, 0.05, 0.01))


def test_theta0_hand_computation():
    # q = 4 makes the outer exponent 1: theta0 = S^4/4 * 1/(1-d) * mu/(mu-2) * 1/2 * a0/(kappa*omega)
    d, mu, a0, om, ka, S = 0.6, 3.0, 1.25, math.pi / 4, 0.16, 1.47
    by_hand = S**4 / 4 * (1 / (1 - d)) * (mu / (mu - 2)) * 0.5 * a0 / (ka * om)
    got = theta0(d, [3.0, 3.5], 4.0, [1.0, 1.25], om, [0.17, 0.16], S)
    assert got == pytest.approx(by_hand, rel=1e-14)
    with pytest.raises(ValueError):
        theta0(1.2, 3.0, 4.0, 1.0, om, 0.16, S)
