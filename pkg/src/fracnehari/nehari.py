"""Fibering maps g(t) = I(t u, t v) and projection onto the Nehari manifold."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .functional import lq_norm_pair, norm_E_sq, quadratic_part
from .grid import StatePair
from .model import F_eval, OverflowGuardError, as_pair, f_eval, fprime_eval, overflow_guarded


class BracketError(RuntimeError):
    """The zero of g' on a ray could not be bracketed or resolved."""


class Ray:
    """The map t -> I(t u, t v) for a fixed nonzero state.

    The quadratic part is computed once, so evaluating g and its derivatives
    needs only pointwise work.
    """

    def __init__(self, u: np.ndarray, v: np.ndarray, dx: float, nl, quad: float):
        self.nl1, self.nl2 = as_pair(nl)
        self.u = u
        self.v = v
        self.dx = dx
        self.A = quad

    @classmethod
    def for_state(cls, state: StatePair, pot, nl) -> Ray:
        if state.is_zero():
            raise ValueError("fibering map undefined for the zero state")
        return cls(state.u.values, state.v.values, state.grid.dx, nl, quadratic_part(state, pot))

    @overflow_guarded
    def g(self, t: float) -> float:
        F = np.sum(F_eval(self.nl1, t * self.u)) + np.sum(F_eval(self.nl2, t * self.v))
        return 0.5 * t * t * self.A - float(F) * self.dx

    @overflow_guarded
    def _nonlin(self, t: float) -> float:
        """int (f1(t u) u + f2(t v) v)."""
        return float(np.dot(f_eval(self.nl1, t * self.u), self.u) + np.dot(f_eval(self.nl2, t * self.v), self.v)) * self.dx

    def gprime(self, t: float) -> float:
        return t * self.A - self._nonlin(t)

    def reduced(self, t: float) -> float:
        """g'(t)/t = A - int f(tu)u/t: strictly decreasing in t."""
        return self.A - self._nonlin(t) / t

    @overflow_guarded
    def reduced_slope(self, t: float) -> float:
        tu, tv = t * self.u, t * self.v
        w1 = np.dot(fprime_eval(self.nl1, tu) * tu - f_eval(self.nl1, tu), self.u)
        w2 = np.dot(fprime_eval(self.nl2, tv) * tv - f_eval(self.nl2, tv), self.v)
        return -float(w1 + w2) * self.dx / (t * t)

    def reduced_sign(self, t: float) -> float:
        """Sign-safe g'(t)/t: past the exponential guard the nonlinear term dominates."""
        try:
            return self.reduced(t)
        except OverflowGuardError:
            return -math.inf


@dataclass(frozen=True)
class FiberingResult:
    t0: float
    projected: StatePair
    residual_at_t0: float
    bracket: tuple[float, float]
    iterations: int
    initial_residual: float


def fibering(state: StatePair, pot, nl, t: float) -> tuple[float, float]:
    """(g(t), g'(t)) with g(t) = I(t*state)."""
    if t <= 0:
        raise ValueError("t must be positive")
    ray = Ray.for_state(state, pot, nl)
    return ray.g(t), ray.gprime(t)


def find_root(ray: Ray, tol: float = 1e-10, max_doublings: int = 60, max_iter: int = 100):
    """Unique positive zero of g'(t)/t.

    Brackets from t=1 by factors of 2, then runs Newton on log(int f(tu)u / t) - log A
    as a function of log t (exact in one step for pure powers), falling back to
    geometric bisection whenever a step leaves the bracket.
    """
    h1 = ray.reduced_sign(1.0)
    if h1 == 0.0:
        return 1.0, (1.0, 1.0), 0
    lo, hi = 1.0, 1.0
    for _ in range(max_doublings):
        if h1 > 0:
            hi *= 2.0
            if ray.reduced_sign(hi) < 0:
                break
            lo = hi
        else:
            lo *= 0.5
            if ray.reduced_sign(lo) > 0:
                break
            hi = lo
    else:
        raise BracketError(f"no sign change of g' within 2^{max_doublings} of t=1 (A={ray.A:.3g})")
    bracket = (lo, hi)

    t = math.sqrt(lo * hi)
    log_A = math.log(ray.A)
    for it in range(1, max_iter + 1):
        h = ray.reduced_sign(t)
        if h == 0.0:
            return t, bracket, it
        if h > 0:
            lo = t
        else:
            hi = t
        log_t_new = None
        nonlin = ray.A - h  # int f(tu)u / t
        if math.isfinite(h) and nonlin > 0:
            try:
                dphi = -t * ray.reduced_slope(t) / nonlin
            except OverflowGuardError:
                dphi = 0.0
            if dphi > 0:
                log_t_new = math.log(t) - (math.log(nonlin) - log_A) / dphi
        if log_t_new is None or not math.log(lo) < log_t_new < math.log(hi):
            t_new = math.sqrt(lo * hi)
        else:
            t_new = math.exp(log_t_new)
        if abs(t_new - t) <= tol * t:
            return t_new, bracket, it
        t = t_new
    raise BracketError(f"root of g' not resolved to {tol:g} in {max_iter} iterations (bracket {lo:.17g}, {hi:.17g})")


def project(state: StatePair, pot, nl, tol: float = 1e-10) -> FiberingResult:
    """Scale ``state`` onto the Nehari manifold: the unique t0 > 0 with g'(t0) = 0."""
    ray = Ray.for_state(state, pot, nl)
    t0, bracket, iters = find_root(ray, tol)
    initial = ray.gprime(1.0) if math.isfinite(ray.reduced_sign(1.0)) else -math.inf
    projected = state * t0
    return FiberingResult(t0, projected, t0 * ray.gprime(t0), bracket, iters, initial)


def max_on_ray_check(state: StatePair, pot, nl, t0: float, n: int = 200, span: float = 50.0) -> float:
    """max over a log grid on [t0/span, span*t0] of g, minus g(t0).

    Points beyond the exponential guard are skipped: there g is hugely negative.
    """
    if t0 <= 0:
        raise ValueError("t0 must be positive")
    ray = Ray.for_state(state, pot, nl)
    g0 = ray.g(t0)
    best = -math.inf
    for t in t0 * np.geomspace(1.0 / span, span, n):
        try:
            best = max(best, ray.g(float(t)))
        except OverflowGuardError:
            break
    return best - g0


def sign_changes(state: StatePair, pot, nl, t0: float, decades: float = 3.0, n: int = 200) -> int:
    """Number of sign changes of g' on a log grid over [t0 10^-decades, t0 10^decades]."""
    ray = Ray.for_state(state, pot, nl)
    vals = np.array([ray.reduced_sign(float(t)) for t in t0 * np.logspace(-decades, decades, n)])
    signs = np.sign(vals[vals != 0])
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def pure_power_ray_peak(state: StatePair, pot, q: float, theta: float) -> tuple[float, float]:
    """Numeric max of h(t) = t^2/2 S^2 ||.||_q^2 - theta t^q ||.||_q^q against its closed form."""
    A = quadratic_part(state, pot)
    nq = lq_norm_pair(state, q)
    S = math.sqrt(A) / nq
    closed = (0.5 - 1.0 / q) * S ** (2 * q / (q - 2)) / (q * theta) ** (2 / (q - 2))

    def h(t):
        return 0.5 * t * t * S * S * nq * nq - theta * t**q * nq**q

    # coarse log scan for the bracket, then Brent in log t
    ts = np.logspace(-8, 8, 321)
    hv = np.array([h(t) for t in ts])
    i = int(np.argmax(hv))
    lo, hi = math.log(ts[max(i - 1, 0)]), math.log(ts[min(i + 1, len(ts) - 1)])
    res = minimize_scalar(lambda s: -h(math.exp(s)), bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
    return float(-res.fun), float(closed)


def energy_lower_bound(state: StatePair, pot, mu: float) -> float:
    """(1/2 - 1/mu)(1 - delta)||(u,v)||_E^2: a lower bound for I on the manifold."""
    return (0.5 - 1.0 / mu) * (1.0 - pot.delta) * norm_E_sq(state, pot)
