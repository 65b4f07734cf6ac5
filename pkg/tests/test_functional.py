import math

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_states
from fracnehari.functional import (
    KAPPA_CEILING,
    coercivity_margin,
    energy,
    estimate_kappa,
    estimate_nu,
    estimate_Sq,
    gradient,
    half_laplacian,
    kinetic_sq,
    lq_norm_pair,
    nehari_residual,
    norm_E_sq,
    pairing,
    quadratic_part,
    sq_quotient,
)
from fracnehari.grid import Field, StatePair, gagliardo_seminorm_sq
from fracnehari.model import NonlinearitySpec


def test_energy_parts_reconstruct(grid, pot, nl):
    for st_ in random_states(grid, 5, 1):
        rep = energy(st_, pot, nl)
        assert rep.reconstructed() == pytest.approx(rep.total, rel=1e-14)
        assert rep.quadratic == pytest.approx(quadratic_part(st_, pot), rel=1e-13)
        assert rep.norm_E_sq == pytest.approx(norm_E_sq(st_, pot), rel=1e-13)


def test_kinetic_matches_gagliardo(grid):
    f = Field.from_function(grid, lambda x: 1.0 / np.cosh(x))
    assert 2 * math.pi * kinetic_sq(grid, f.values) == pytest.approx(gagliardo_seminorm_sq(f), rel=1e-3)


def test_kinetic_is_pairing_with_half_laplacian(grid):
    w = random_states(grid, 1, 2)[0].stacked()
    lhs = kinetic_sq(grid, w)
    rhs = np.sum(w * half_laplacian(grid, w), axis=1) * grid.dx
    np.testing.assert_allclose(lhs, rhs, rtol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_gradient_directional_derivative(grid, pot, nl, seed):
    st_, d = random_states(grid, 2, 100 + seed)
    h = 1e-5
    fd = (energy(st_ + d * h, pot, nl).total - energy(st_ - d * h, pot, nl).total) / (2 * h)
    assert pairing(gradient(st_, pot, nl), d) == pytest.approx(fd, rel=1e-6)


def test_residual_is_pairing_of_gradient_with_state(grid, pot, nl):
    for st_ in random_states(grid, 3, 3):
        assert nehari_residual(st_, pot, nl) == pytest.approx(pairing(gradient(st_, pot, nl), st_), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), flip=st.booleans(), noise=st.floats(0.0, 1.0))
def test_coercivity_on_random_states(grid, pot, apot, seed, flip, noise):
    rng = np.random.default_rng(seed)
    w = random_states(grid, 1, seed)[0].stacked()
    if flip:
        w[1] *= -1
    w = w + noise * rng.standard_normal(w.shape)
    st_ = StatePair.from_stacked(grid, w)
    for p in (pot, apot):
        assert coercivity_margin(st_, p) >= -1e-12 * norm_E_sq(st_, p)


def test_sq_quotient_is_zero_homogeneous(grid, pot):
    st_ = random_states(grid, 1, 4)[0]
    assert sq_quotient(st_ * 3.7, pot, 4) == pytest.approx(sq_quotient(st_, pot, 4), rel=1e-13)
    assert lq_norm_pair(st_ * 2, 4) == pytest.approx(2 * lq_norm_pair(st_, 4))
    with pytest.raises(ValueError):
        sq_quotient(st_ * 0.0, pot, 4)


def _dense_operator(grid, V):
    D = half_laplacian(grid, np.eye(grid.N)) * grid.dx
    A = D + np.diag(V) * grid.dx
    return (A + A.T) / 2, (D + D.T) / 2


def test_nu_and_kappa_against_dense_eigensolver(grid, pot):
    M = np.eye(grid.N) * grid.dx
    for V in (pot.V1, pot.V2):
        A, D = _dense_operator(grid, V.values)
        nu_ref = sla.eigh(A, M, eigvals_only=True, subset_by_index=[0, 0])[0]
        kappa_ref = sla.eigh(A, 2 * math.pi * D + M, eigvals_only=True, subset_by_index=[0, 0])[0]
        nu = estimate_nu(V, n_starts=4)
        kappa = estimate_kappa(V, n_starts=4)
        # estimates are upper bounds on the grid infima
        assert nu.value >= nu_ref * (1 - 1e-12)
        assert nu.value == pytest.approx(nu_ref, rel=1e-8)
        assert kappa.value >= kappa_ref * (1 - 1e-12)
        assert kappa.value == pytest.approx(kappa_ref, rel=5e-3)


def test_kappa_ceiling_is_high_frequency_limit(grid, pot):
    # the quotient of a plane wave tends to 1/(2 pi) as the frequency grows
    k = np.abs(grid.k).max()
    V = pot.V1.values.mean()
    assert (k + V) / (2 * math.pi * k + 1) > KAPPA_CEILING
    assert KAPPA_CEILING == pytest.approx(1 / (2 * math.pi))


def test_sq_estimate_bounds_random_quotients(grid, pot):
    est = estimate_Sq(pot, 4.0, n_starts=16, seed=0)
    assert est.value == pytest.approx(1.4745539400636283, rel=1e-6)  # frozen regression
    for st_ in random_states(grid, 20, 5):
        assert est.value <= sq_quotient(st_, pot, 4.0)


def test_pure_power_gradient_uses_theta_only(grid, pot):
    pp = NonlinearitySpec(q=4.0, mu=3.0, theta=2.0, alpha0=1.0, mode="pure_power")
    st_ = random_states(grid, 1, 6)[0]
    g = gradient(st_, pot, pp)
    u, v = st_.u.values, st_.v.values
    V1, V2, lam = pot.active()
    expected_u = half_laplacian(grid, u) + V1 * u - 8.0 * u**3 - lam * v
    np.testing.assert_allclose(g.u.values, expected_u, atol=1e-12)
