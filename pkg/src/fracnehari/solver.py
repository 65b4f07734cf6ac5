"""Ground states: minimise the energy over the Nehari manifold.

Each iterate is kept on the manifold by radial reprojection.  The search
direction is the gradient preconditioned by (|k| + mean V_i)^{-1}; step sizes
come from a Barzilai-Borwein guess followed by Armijo backtracking, where every
trial point is reprojected before its energy is compared.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analysis import window_masses
from .functional import KAPPA_CEILING, energy, estimate_kappa, estimate_Sq, half_laplacian, random_bumps
from .grid import Field, Grid1D, GridError, StatePair, tail_mass
from .model import ValidationReport, as_pair, f_eval, theta0, validate_potentials
from .nehari import Ray, find_root, project

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 3000
    grad_tol: float = 1e-6
    step_init: float = 1.0
    shrink: float = 0.5
    c_armijo: float = 1e-4
    recenter_every: int = 25
    n_starts: int = 16
    rng_seed: int = 0
    t_tol: float = 1e-10
    polish_iters: int = 50
    window_R: float = 1.0
    tail_threshold: float = 1e-2
    allow_oracle: bool = False

    def __post_init__(self) -> None:
        positive = ("max_iters", "grad_tol", "step_init", "c_armijo", "recenter_every", "n_starts", "t_tol", "window_R", "tail_threshold")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0 < self.shrink < 1:
            raise ValueError(f"shrink must lie in (0,1), got {self.shrink}")
        if not 0 < self.c_armijo < 1:
            raise ValueError(f"c_armijo must lie in (0,1), got {self.c_armijo}")
        if self.polish_iters < 0 or self.rng_seed < 0:
            raise ValueError("polish_iters and rng_seed must be nonnegative")


@dataclass(frozen=True)
class StartSummary:
    index: int
    energy: float
    grad_norm: float
    iterations: int
    converged: bool
    min_bound_margin: float


@dataclass(frozen=True)
class GroundStateResult:
    state: StatePair
    energy: float
    grad_norm: float
    nehari_residual: float
    lagrange_multiplier_est: float
    iterations: int
    start_index: int
    tail_mass: float
    recenter_shifts: list[int]
    converged: bool
    domain_too_small: bool
    trace: np.ndarray  # energy per recorded iterate of the winning start
    min_bound_margin: float  # min over iterates of I - (1/2-1/mu)(1-delta)||.||_E^2
    abs_energy_increase: float  # I(after |.| + reprojection) - I(before)
    starts: tuple[StartSummary, ...] = field(default_factory=tuple)

    @property
    def n_converged(self) -> int:
        return sum(s.converged for s in self.starts)


class _Problem:
    """Array-level energy, gradient and projection for one potential set."""

    def __init__(self, grid: Grid1D, pot, nl, t_tol: float):
        self.grid = grid
        self.dx = grid.dx
        self.nl = as_pair(nl)
        V1, V2, lam = pot.active()
        self.V = np.stack([V1, V2])
        self.lam = lam
        self.t_tol = t_tol
        self.precond = 1.0 / (np.abs(grid.k)[None, :] + self.V.mean(axis=1)[:, None])
        mu = min(s.mu for s in self.nl)
        self.bound_coef = (0.5 - 1.0 / mu) * (1.0 - pot.delta)

    def quad(self, w, Dw) -> float:
        lin = Dw + self.V * w
        return float((np.vdot(w, lin) - 2.0 * np.dot(self.lam, w[0] * w[1])) * self.dx)

    def norm_E_sq(self, w, Dw) -> float:
        return float(np.vdot(w, Dw + self.V * w) * self.dx)

    def project(self, w):
        """(t0 w, D(t0 w), energy at t0 w)."""
        Dw = half_laplacian(self.grid, w)
        ray = Ray(w[0], w[1], self.dx, self.nl, self.quad(w, Dw))
        t0, _, _ = find_root(ray, self.t_tol)
        return t0 * w, t0 * Dw, ray.g(t0)

    def gradient(self, w, Dw):
        g = Dw + self.V * w
        g[0] -= f_eval(self.nl[0], w[0]) + self.lam * w[1]
        g[1] -= f_eval(self.nl[1], w[1]) + self.lam * w[0]
        return g

    def apply_precond(self, g):
        return np.fft.ifft(self.precond * np.fft.fft(g, axis=-1), axis=-1).real


@dataclass
class _Run:
    w: np.ndarray
    Dw: np.ndarray
    E: float
    g: np.ndarray
    grad_norm: float = math.inf
    iterations: int = 0
    trace: list = field(default_factory=list)
    shifts: list = field(default_factory=list)
    min_margin: float = math.inf


def _recenter_shift(grid: Grid1D, w: np.ndarray, R: float, period: float) -> int:
    """Whole-period cyclic shift (in nodes) moving the heaviest window toward the origin."""
    masses = window_masses(grid, w[0], w[1], R)
    j = int(np.argmax(masses))
    p = grid.nodes_per_length(period)
    return p * int(round((grid.origin_index - j) / p))


def recenter_state(state: StatePair, R: float = 1.0, period: float = 1.0) -> tuple[StatePair, int]:
    """Shift by whole periods so the heaviest window of radius R sits nearest the origin."""
    z = _recenter_shift(state.grid, state.stacked(), R, period)
    return StatePair.from_stacked(state.grid, np.roll(state.stacked(), z, axis=-1)), z


def _descend(prob: _Problem, run: _Run, cfg: SolverConfig, n_iters: int, recenter: bool, period: float) -> _Run:
    grid = prob.grid
    step = cfg.step_init
    for _ in range(n_iters + 1):
        Pg = prob.apply_precond(run.g)
        gg = float(np.vdot(Pg, run.g) * prob.dx)
        nE = prob.norm_E_sq(run.w, run.Dw)
        run.grad_norm = math.sqrt(max(gg, 0.0) / nE)
        run.trace.append(run.E)
        run.min_margin = min(run.min_margin, run.E - prob.bound_coef * nE)
        if run.grad_norm <= cfg.grad_tol or _ >= n_iters:
            break
        a = step
        while True:
            y, Dy, Ey = prob.project(run.w - a * Pg)
            if Ey <= run.E - cfg.c_armijo * a * gg:
                break
            a *= cfg.shrink
            if a < 1e-14 * cfg.step_init:
                # no decrease representable in floating point: stationary to round-off
                return run
        gy = prob.gradient(y, Dy)
        s = y - run.w
        sy = float(np.vdot(s, gy - run.g))
        sPs = float(np.vdot(s, np.fft.ifft(np.fft.fft(s, axis=-1) / prob.precond, axis=-1).real))
        step = min(max(sPs / sy, 1e-4), 1e4) * cfg.step_init if sy > 0 else 2.0 * a
        run.w, run.Dw, run.E, run.g = y, Dy, Ey, gy
        run.iterations += 1
        if recenter and run.iterations % cfg.recenter_every == 0:
            z = _recenter_shift(grid, run.w, cfg.window_R, period)
            if z:
                run.w, run.Dw, run.g = (np.roll(a_, z, axis=-1) for a_ in (run.w, run.Dw, run.g))
                run.shifts.append(z)
    return run


def _start_run(prob: _Problem, w0: np.ndarray) -> _Run:
    w, Dw, E = prob.project(w0)
    return _Run(w, Dw, E, prob.gradient(w, Dw))


def _solve_from(prob: _Problem, w0: np.ndarray, cfg: SolverConfig, periodic: bool, period: float):
    z = _recenter_shift(prob.grid, w0, cfg.window_R, period)
    run = _start_run(prob, np.roll(w0, z, axis=-1))
    if z:
        run.shifts.append(z)
    _descend(prob, run, cfg, cfg.max_iters, periodic, period)

    # nonnegativity: replace by (|u|, |v|), reproject, polish
    before = run.E
    absrun = _start_run(prob, np.abs(run.w))
    abs_increase = absrun.E - before
    absrun.trace, absrun.shifts = run.trace, run.shifts
    absrun.iterations, absrun.min_margin = run.iterations, run.min_margin
    run = _descend(prob, absrun, cfg, cfg.polish_iters, False, period)
    if np.any(run.w < 0):
        final = _start_run(prob, np.abs(run.w))
        final.trace, final.shifts = run.trace, run.shifts
        final.iterations, final.min_margin = run.iterations, run.min_margin
        run = _descend(prob, final, cfg, 0, False, period)
    return run, abs_increase


def _warn_theta(nl, pot, omega: float, seed: int) -> None:
    n1, n2 = as_pair(nl)
    if n1.q != n2.q or n1.theta != n2.theta:
        return
    V1, V2, _ = pot.active()
    grid = pot.grid
    k = [min(estimate_kappa(Field(grid, V), n_starts=4, seed=seed).value, KAPPA_CEILING) for V in (V1, V2)]
    Sq = estimate_Sq(pot, n1.q, n_starts=4, seed=seed).value
    th0 = theta0(pot.delta, [n1.mu, n2.mu], n1.q, [n1.alpha0, n2.alpha0], omega, k, Sq)
    if n1.theta <= th0:
        log.warning("theta = %g does not exceed the estimated threshold theta0 = %g", n1.theta, th0)


def _check_inputs(grid: Grid1D, pot, nl, cfg: SolverConfig) -> ValidationReport:
    if pot.grid != grid:
        raise GridError("potentials live on a different grid")
    report = validate_potentials(pot)
    if not report.passed:
        raise ValueError("potentials failed validation: " + ", ".join(report.failures()))
    if any(s.is_oracle for s in as_pair(nl)) and not cfg.allow_oracle:
        raise ValueError("pure_power nonlinearity requires SolverConfig(allow_oracle=True)")
    if not grid.admits_period(pot.period):
        raise GridError(f"period {pot.period} is not a whole number of cells on {grid}")
    return report


def initial_states_for(grid: Grid1D, cfg: SolverConfig) -> list[np.ndarray]:
    """The seeded random starts used by minimize_ground_state."""
    children = np.random.SeedSequence(cfg.rng_seed).spawn(cfg.n_starts)
    return [random_bumps(grid, np.random.default_rng(c)) for c in children]


def minimize_ground_state(
    grid: Grid1D,
    pot,
    nl,
    config: SolverConfig = SolverConfig(),
    initial_states: list[np.ndarray] | None = None,
    threads: int = 1,
    omega: float | None = None,
) -> GroundStateResult:
    """Least-energy state on the Nehari manifold from a batch of starts.

    ``initial_states`` overrides the seeded random Gaussian starts.  When
    ``omega`` is given, theta is compared against the estimated threshold and a
    warning is logged if it does not exceed it.
    """
    cfg = config
    _check_inputs(grid, pot, nl, cfg)
    if omega is not None:
        _warn_theta(nl, pot, omega, cfg.rng_seed)
    starts = initial_states_for(grid, cfg) if initial_states is None else [np.asarray(s, float) for s in initial_states]
    if not starts:
        raise ValueError("need at least one initial state")
    prob = _Problem(grid, pot, nl, cfg.t_tol)
    periodic = pot.is_periodic

    def job(w0):
        return _solve_from(prob, np.array(w0, dtype=float), cfg, periodic, pot.period)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            runs = list(ex.map(job, starts))
    else:
        runs = [job(w0) for w0 in starts]

    summaries = tuple(
        StartSummary(i, r.E, r.grad_norm, r.iterations, r.grad_norm <= cfg.grad_tol, r.min_margin) for i, (r, _) in enumerate(runs)
    )
    pool = [s for s in summaries if s.converged] or list(summaries)
    best = min(pool, key=lambda s: (s.energy, s.grad_norm, s.index))
    run, abs_increase = runs[best.index]

    state = StatePair.from_stacked(grid, run.w)
    nE = prob.norm_E_sq(run.w, run.Dw)
    residual = prob.quad(run.w, run.Dw) - float(
        sum(np.dot(f_eval(prob.nl[i], run.w[i]), run.w[i]) for i in range(2)) * prob.dx
    )
    lagrange = float(np.vdot(run.g, run.w) * prob.dx) / nE
    tm = tail_mass(state)
    total = float(np.sum(run.w**2) * grid.dx)
    too_small = tm > cfg.tail_threshold * total
    if too_small:
        log.warning("tail mass %.3g exceeds %.3g of the total: domain may be too small", tm, cfg.tail_threshold)
    if not best.converged:
        log.warning("no start reached grad_tol=%g; best grad_norm=%.3g", cfg.grad_tol, best.grad_norm)
    return GroundStateResult(
        state=state,
        energy=run.E,
        grad_norm=run.grad_norm,
        nehari_residual=residual,
        lagrange_multiplier_est=lagrange,
        iterations=run.iterations,
        start_index=best.index,
        tail_mass=tm,
        recenter_shifts=list(run.shifts),
        converged=best.converged,
        domain_too_small=too_small,
        trace=np.array(run.trace),
        min_bound_margin=run.min_margin,
        abs_energy_increase=abs_increase,
        starts=summaries,
    )


def upper_bound_cN(grid: Grid1D, pot, nl, trials) -> float:
    """min over trial states of the energy at their Nehari projection."""
    trials = list(trials)
    if not trials:
        raise ValueError("need at least one trial state")
    best = math.inf
    for tr in trials:
        if tr.grid != grid:
            raise GridError("trial state on a different grid")
        best = min(best, energy(project(tr, pot, nl).projected, pot, nl).total)
    return best


@dataclass(frozen=True)
class ComparisonReport:
    c_periodic: float
    c_asymptotic: float
    certificate: float  # energy of the tilde system at the projected periodic ground state
    certificate_t0: float
    periodic: GroundStateResult
    asymptotic: GroundStateResult

    @property
    def margin(self) -> float:
        return self.c_periodic - self.c_asymptotic

    @property
    def certificate_margin(self) -> float:
        return self.c_periodic - self.certificate

    @property
    def converged(self) -> bool:
        return self.periodic.converged and self.asymptotic.converged

    def passed(self, threshold: float) -> bool:
        return self.margin > threshold and self.certificate_margin > 0


def level_certificate(periodic_state: StatePair, asymptotic_pot, nl) -> tuple[float, float]:
    """(t0, energy) of ``periodic_state`` projected onto the manifold of the tilde system."""
    res = project(periodic_state, asymptotic_pot, nl)
    return res.t0, energy(res.projected, asymptotic_pot, nl).total


def compare_levels(
    grid: Grid1D,
    periodic_pot,
    asymptotic_pot,
    nl,
    config: SolverConfig = SolverConfig(),
    threads: int = 1,
) -> ComparisonReport:
    if asymptotic_pot.is_periodic:
        raise ValueError("compare_levels needs an asymptotically periodic potential set")
    per = minimize_ground_state(grid, periodic_pot, nl, config, threads=threads)
    asy = minimize_ground_state(grid, asymptotic_pot, nl, config, threads=threads)
    t0, cert = level_certificate(per.state, asymptotic_pot, nl)
    if not (per.converged and asy.converged):
        log.warning("a ground-state solve did not converge; levels are best-effort")
    return ComparisonReport(per.energy, asy.energy, cert, t0, per, asy)
