"""Energy functional, its L^2 gradient, the Nehari residual and the S_q quotient.

All integrals are rectangle-rule sums on the grid; the quadratic part uses the
Fourier symbol |k| of (-Delta)^{1/2}, i.e. ||(-Delta)^{1/4}u||^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .grid import Field, Grid1D, GridError, StatePair, apply_multiplier
from .model import F_eval, PotentialSet, as_pair, f_eval


@dataclass(frozen=True)
class EnergyReport:
    total: float
    kinetic_u: float
    kinetic_v: float
    potential_u: float
    potential_v: float
    coupling: float
    F1_integral: float
    F2_integral: float

    def reconstructed(self) -> float:
        quad = self.kinetic_u + self.potential_u + self.kinetic_v + self.potential_v - 2.0 * self.coupling
        return 0.5 * quad - self.F1_integral - self.F2_integral

    @property
    def quadratic(self) -> float:
        """||(u,v)||_E^2 - 2 int lambda u v."""
        return self.kinetic_u + self.potential_u + self.kinetic_v + self.potential_v - 2.0 * self.coupling

    @property
    def norm_E_sq(self) -> float:
        return self.kinetic_u + self.potential_u + self.kinetic_v + self.potential_v


def kinetic_sq(grid: Grid1D, values: np.ndarray) -> np.ndarray | float:
    """||(-Delta)^{1/4} w||^2 along the last axis, via Parseval."""
    wh = np.fft.fft(values, axis=-1)
    return grid.dx / grid.N * np.sum(np.abs(grid.k) * (wh.real**2 + wh.imag**2), axis=-1)


def half_laplacian(grid: Grid1D, values: np.ndarray) -> np.ndarray:
    return apply_multiplier(values, np.abs(grid.k))


def _check(state: StatePair, pot: PotentialSet) -> None:
    if state.grid != pot.grid:
        raise GridError("state and potentials live on different grids")


def norm_Ei_sq(f: Field, Vi: Field) -> float:
    if f.grid != Vi.grid:
        raise GridError("grid mismatch")
    dx = f.grid.dx
    return float(kinetic_sq(f.grid, f.values) + np.dot(Vi.values, f.values**2) * dx)


def energy(state: StatePair, pot: PotentialSet, nl) -> EnergyReport:
    _check(state, pot)
    nl1, nl2 = as_pair(nl)
    grid = state.grid
    dx = grid.dx
    u, v = state.u.values, state.v.values
    V1, V2, lam = pot.active()
    ku, kv = kinetic_sq(grid, np.stack([u, v]))
    pu = float(np.dot(V1, u * u) * dx)
    pv = float(np.dot(V2, v * v) * dx)
    cp = float(np.dot(lam, u * v) * dx)
    F1 = float(np.sum(F_eval(nl1, u)) * dx)
    F2 = float(np.sum(F_eval(nl2, v)) * dx)
    total = 0.5 * (ku + pu + kv + pv - 2.0 * cp) - F1 - F2
    return EnergyReport(float(total), float(ku), float(kv), pu, pv, cp, F1, F2)


def gradient(state: StatePair, pot: PotentialSet, nl) -> StatePair:
    """L^2 Riesz representative of I'(u, v)."""
    _check(state, pot)
    nl1, nl2 = as_pair(nl)
    u, v = state.u.values, state.v.values
    V1, V2, lam = pot.active()
    Du, Dv = half_laplacian(state.grid, np.stack([u, v]))
    gu = Du + V1 * u - f_eval(nl1, u) - lam * v
    gv = Dv + V2 * v - f_eval(nl2, v) - lam * u
    return StatePair.from_arrays(state.grid, gu, gv)


def pairing(a: StatePair, b: StatePair) -> float:
    """L^2 pairing of two state pairs: int (a_u b_u + a_v b_v)."""
    dx = a.grid.dx
    return float((np.dot(a.u.values, b.u.values) + np.dot(a.v.values, b.v.values)) * dx)


def quadratic_part(state: StatePair, pot: PotentialSet) -> float:
    """||(u,v)||_E^2 - 2 int lambda u v."""
    _check(state, pot)
    grid = state.grid
    u, v = state.u.values, state.v.values
    V1, V2, lam = pot.active()
    kin = float(np.sum(kinetic_sq(grid, np.stack([u, v]))))
    return kin + float((np.dot(V1, u * u) + np.dot(V2, v * v) - 2.0 * np.dot(lam, u * v)) * grid.dx)


def norm_E_sq(state: StatePair, pot: PotentialSet) -> float:
    V1, V2, _ = pot.active()
    return norm_Ei_sq(state.u, Field(state.grid, V1)) + norm_Ei_sq(state.v, Field(state.grid, V2))


def coercivity_margin(state: StatePair, pot: PotentialSet) -> float:
    """(quadratic part) - (1 - delta)||(u,v)||_E^2; nonnegative for admissible potentials."""
    return quadratic_part(state, pot) - (1.0 - pot.delta) * norm_E_sq(state, pot)


def nehari_residual(state: StatePair, pot: PotentialSet, nl) -> float:
    """J(u,v) = <I'(u,v), (u,v)>."""
    nl1, nl2 = as_pair(nl)
    u, v = state.u.values, state.v.values
    nonlin = (np.dot(f_eval(nl1, u), u) + np.dot(f_eval(nl2, v), v)) * state.grid.dx
    return quadratic_part(state, pot) - float(nonlin)


def lq_norm_pair(state: StatePair, q: float) -> float:
    dx = state.grid.dx
    return float((np.sum(np.abs(state.u.values) ** q) * dx + np.sum(np.abs(state.v.values) ** q) * dx) ** (1.0 / q))


def sq_quotient(state: StatePair, pot: PotentialSet, q: float) -> float:
    if state.is_zero():
        raise ValueError("S_q quotient undefined for the zero state")
    return math.sqrt(quadratic_part(state, pot)) / lq_norm_pair(state, q)


# ---------------------------------------------------------------------------
# estimators for the infima S_q, kappa_i, nu_i


@dataclass(frozen=True)
class QuotientEstimate:
    """Best (smallest) quotient value over the starts; an upper bound on the infimum."""

    value: float
    spread: float
    samples: tuple[float, ...]
    n_converged: int


def random_bumps(grid: Grid1D, rng: np.random.Generator, n_components: int = 2) -> np.ndarray:
    """Smooth random initial data: one Gaussian per component near a shared random centre."""
    L = grid.L
    centre = rng.uniform(-0.25 * L, 0.25 * L)
    out = np.empty((n_components, grid.N))
    for c in range(n_components):
        c_i = centre + rng.uniform(-0.5, 0.5)
        width = rng.uniform(0.5, 3.0)
        amp = rng.uniform(0.5, 1.5)
        out[c] = amp * np.exp(-((grid.x - c_i) ** 2) / (2.0 * width**2))
    return out


def _precond_sqrt_inv(grid: Grid1D, mean_v: np.ndarray) -> np.ndarray:
    """Per-component symbol (|k| + mean V_i)^{-1/2}, shape (n_components, N)."""
    absk = np.abs(grid.k)
    return 1.0 / np.sqrt(absk[None, :] + np.asarray(mean_v, dtype=float)[:, None])


def _minimize_log_quotient(grid, objective, mean_v, starts, gtol=1e-10, maxiter=3000):
    """Minimise a 0-homogeneous log-quotient with L-BFGS in preconditioned variables.

    ``objective(w) -> (value, grad)`` acts on arrays of shape (n_components, N).
    The change of variables u = P^{-1/2} w keeps the problem well conditioned.
    """
    psym = _precond_sqrt_inv(grid, mean_v)
    shape = starts[0].shape

    def fun(z):
        u = apply_multiplier(z.reshape(shape), psym)
        val, g = objective(u)
        return val, apply_multiplier(g, psym).ravel()

    values, converged = [], 0
    for w0 in starts:
        # invert the change of variables for the start
        z0 = apply_multiplier(w0, 1.0 / psym).ravel()
        res = minimize(fun, z0, jac=True, method="L-BFGS-B", options={"gtol": gtol, "ftol": 1e-15, "maxiter": maxiter})
        values.append(float(np.exp(res.fun)))
        converged += bool(res.success)
    vals = np.array(values)
    return QuotientEstimate(float(vals.min()), float(vals.max() - vals.min()), tuple(vals), converged)


def estimate_Sq(pot: PotentialSet, q: float, n_starts: int = 16, seed: int = 0) -> QuotientEstimate:
    """Upper bound on S_q = inf S_q(u,v) from multi-start minimisation."""
    grid = pot.grid
    V1, V2, lam = pot.active()
    dx = grid.dx

    def objective(w):
        u, v = w
        Du, Dv = half_laplacian(grid, w)
        Au = Du + V1 * u - lam * v
        Av = Dv + V2 * v - lam * u
        A = (np.dot(u, Au) + np.dot(v, Av)) * dx
        B = (np.sum(np.abs(u) ** q) + np.sum(np.abs(v) ** q)) * dx
        val = 0.5 * math.log(A) - math.log(B) / q
        gA = 2.0 * dx * np.stack([Au, Av])
        gB = q * dx * np.abs(w) ** (q - 2) * w
        return val, gA / (2.0 * A) - gB / (q * B)

    rng = np.random.default_rng(seed)
    starts = [random_bumps(grid, rng) for _ in range(n_starts)]
    return _minimize_log_quotient(grid, objective, [V1.mean(), V2.mean()], starts)


def _rayleigh_estimate(grid: Grid1D, Vi: np.ndarray, den_kin: float, n_starts: int, seed: int) -> QuotientEstimate:
    """min of (K(u) + int V u^2) / (den_kin*K(u) + int u^2)."""
    dx = grid.dx

    def objective(w):
        u = w[0]
        Du = half_laplacian(grid, u)
        num = (np.dot(u, Du) + np.dot(Vi * u, u)) * dx
        den = (den_kin * np.dot(u, Du) + np.dot(u, u)) * dx
        g = 2.0 * dx * ((Du + Vi * u) / num - (den_kin * Du + u) / den)
        return math.log(num) - math.log(den), g[None, :]

    rng = np.random.default_rng(seed)
    starts = [random_bumps(grid, rng, 1) for _ in range(n_starts)]
    return _minimize_log_quotient(grid, objective, [max(Vi.mean(), 1e-3)], starts)


def estimate_nu(Vi: Field, n_starts: int = 16, seed: int = 0) -> QuotientEstimate:
    """Upper bound on nu_i = inf { (1/2pi)[u]^2 + int V_i u^2 : ||u||_2 = 1 }."""
    return _rayleigh_estimate(Vi.grid, Vi.values, 0.0, n_starts, seed)


#: High-frequency limit of the kappa quotient; every kappa_i is at most this.
KAPPA_CEILING = 1.0 / (2.0 * math.pi)


def estimate_kappa(Vi: Field, n_starts: int = 16, seed: int = 0) -> QuotientEstimate:
    """Upper bound on kappa_i, the best constant with kappa_i ||u||_{1/2}^2 <= (1/2pi)[u]^2 + int V_i u^2.

    Uses [u]^2 = 2 pi ||(-Delta)^{1/4} u||^2 and ||u||_{1/2}^2 = [u]^2 + ||u||_2^2.
    """
    return _rayleigh_estimate(Vi.grid, Vi.values, 2.0 * math.pi, n_starts, seed)
