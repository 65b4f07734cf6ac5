"""Registered property checks run by ``fracnehari checks``."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import CheckReport, brezis_lieb_check, exp_power_check, heaviest_window, tm_ratio_sweep
from .functional import coercivity_margin, energy, gradient, half_laplacian, kinetic_sq, norm_E_sq, pairing, random_bumps
from .grid import Field, Grid1D, StatePair, apply_multiplier, gagliardo_seminorm_sq, shift_state
from .model import PotentialSet, as_pair, validate_nonlinearity, validate_potentials
from .nehari import max_on_ray_check, project, sign_changes


@dataclass(frozen=True)
class Context:
    grid: Grid1D
    pot: PotentialSet
    nl: tuple
    omega: float
    family: object
    seed: int


def _random_states(ctx: Context, n: int, salt: int) -> list[StatePair]:
    rng = np.random.default_rng([ctx.seed, salt])
    return [StatePair.from_stacked(ctx.grid, random_bumps(ctx.grid, rng)) for _ in range(n)]


def check_validators(ctx: Context) -> CheckReport:
    reports = [validate_nonlinearity(s) for s in ctx.nl] + [validate_potentials(ctx.pot)]
    failures = [(r.subject, name) for r in reports for name in r.failures()]
    return CheckReport("validators", len(reports), 0.0 if not failures else -1.0, 0.0, failures, float(len(failures)))


def check_spectral_exactness(ctx: Context, tol: float = 1e-10) -> CheckReport:
    g = ctx.grid
    m = np.arange(g.N // 2 + 1)[:, None]
    phase = np.pi * m * (g.x[None, :] + g.L) / g.L
    worst = 0.0
    for waves, mm in ((np.cos(phase), m), (np.sin(phase[1:-1]), m[1:-1])):
        k = np.pi * mm / g.L
        for s in (0.25, 0.5):
            out = apply_multiplier(waves, np.abs(g.k) ** (2 * s))
            err = np.linalg.norm(out - k ** (2 * s) * waves, axis=1) / np.maximum(np.linalg.norm(k ** (2 * s) * waves, axis=1), np.linalg.norm(waves, axis=1))
            worst = max(worst, float(err.max()))
    fields = np.stack([s.stacked()[0] for s in _random_states(ctx, 4, 1)])
    quarter = np.abs(g.k) ** 0.5
    twice = apply_multiplier(apply_multiplier(fields, quarter), quarter)
    half = half_laplacian(g, fields)
    comp = float(np.max(np.linalg.norm(twice - half, axis=1) / np.linalg.norm(half, axis=1)))
    return CheckReport("spectral_exactness", g.N + 4, tol - max(worst, comp), 0.0, [("plane_waves", worst), ("composition", comp)], max(worst, comp))


def check_seminorm_identity(ctx: Context, tol: float = 0.02) -> CheckReport:
    g = ctx.grid
    rows = []
    for width in (0.5, 1.0, 2.0):
        f = Field.from_function(g, lambda x, w=width: np.exp(-(x**2) / (2 * w * w)))
        gag = gagliardo_seminorm_sq(f)
        spec = 2 * math.pi * float(kinetic_sq(g, f.values))
        rows.append((width, abs(gag / spec - 1.0)))
    worst = max(r[1] for r in rows)
    return CheckReport("seminorm_identity", len(rows), tol - worst, 0.0, rows, worst)


def check_coercivity(ctx: Context, n: int = 200, tol: float = 1e-12) -> CheckReport:
    rng = np.random.default_rng([ctx.seed, 2])
    worst = math.inf
    for st in _random_states(ctx, n, 3):
        # sign flips and noise make the coupling term bite
        w = st.stacked() * rng.choice([-1.0, 1.0], size=(2, 1)) + 0.1 * rng.standard_normal((2, ctx.grid.N))
        st = StatePair.from_stacked(ctx.grid, w)
        worst = min(worst, coercivity_margin(st, ctx.pot) / norm_E_sq(st, ctx.pot))
    return CheckReport("coercivity", n, worst, tol, [], worst)


def check_gradient_fd(ctx: Context, n: int = 20, h: float = 1e-5, tol: float = 1e-5) -> CheckReport:
    states = _random_states(ctx, 2 * n, 4)
    worst = 0.0
    for st, d in zip(states[::2], states[1::2]):
        ep = energy(st + d * h, ctx.pot, ctx.nl).total
        em = energy(st - d * h, ctx.pot, ctx.nl).total
        fd = (ep - em) / (2 * h)
        an = pairing(gradient(st, ctx.pot, ctx.nl), d)
        worst = max(worst, abs(fd - an) / max(abs(an), 1e-300))
    return CheckReport("gradient_fd", n, tol - worst, 0.0, [], worst)


def check_projection(ctx: Context, n: int = 20) -> CheckReport:
    worst = math.inf
    rows = []
    for st in _random_states(ctx, n, 5):
        res = project(st, ctx.pot, ctx.nl)
        changes = sign_changes(st, ctx.pot, ctx.nl, res.t0)
        g0 = energy(res.projected, ctx.pot, ctx.nl).total
        defect = max_on_ray_check(st, ctx.pot, ctx.nl, res.t0)
        sign_ok = not (res.initial_residual < 0 and res.t0 >= 1) and not (res.initial_residual > 0 and res.t0 <= 1)
        margin = min(1e-8 * abs(g0) + 1e-12 - defect, 0.0 if changes == 1 and sign_ok else -1.0)
        worst = min(worst, margin)
        rows.append((res.t0, changes, defect))
    return CheckReport("projection", n, worst, 0.0, rows, float(n))


def check_tm_ratio(ctx: Context) -> CheckReport:
    return tm_ratio_sweep(ctx.grid, ctx.family, ctx.omega, omega=ctx.omega)


def check_exp_power(ctx: Context) -> CheckReport:
    return exp_power_check(1.0, 1.5, 2.0)


def check_brezis_lieb(ctx: Context) -> CheckReport:
    g = ctx.grid
    u = Field.from_function(g, lambda x: np.exp(-8.0 * x**2))
    w = Field.from_function(g, lambda x: 0.8 * np.exp(-4.0 * x**2))
    seps = [max(1.0, round(g.L / k)) for k in (16, 8, 4)]
    seps = sorted(set(seps))
    return brezis_lieb_check(g, u, w, seps, as_pair(ctx.nl)[0])


def check_vanishing(ctx: Context, R: float = 1.0) -> CheckReport:
    g = ctx.grid
    const = StatePair.from_arrays(g, np.full(g.N, 0.7), np.full(g.N, 0.7))
    _, mass = heaviest_window(const, R)
    err_const = abs(mass - 4 * R * 0.49) / (4 * R * 0.49)
    st = _random_states(ctx, 1, 6)[0]
    j, m0 = heaviest_window(st, R)
    z = g.N // 8
    j2, m2 = heaviest_window(shift_state(st, z), R)
    equiv = (j2 - j - z) % g.N == 0 and abs(m2 - m0) <= 1e-14 * m0
    worst = min(1e-12 - err_const, 0.0 if equiv else -1.0)
    return CheckReport("vanishing_diagnostic", 2, worst, 0.0, [("constant_rel_err", err_const), ("shift_equivariant", equiv)], m0)


REGISTRY = {
    "validators": check_validators,
    "spectral_exactness": check_spectral_exactness,
    "seminorm_identity": check_seminorm_identity,
    "coercivity": check_coercivity,
    "gradient_fd": check_gradient_fd,
    "projection": check_projection,
    "tm_ratio_sweep": check_tm_ratio,
    "exp_power_check": check_exp_power,
    "brezis_lieb_check": check_brezis_lieb,
    "vanishing_diagnostic": check_vanishing,
}
