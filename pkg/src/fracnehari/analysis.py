"""Empirical checks of the inequality toolkit behind the existence theory.

Each check returns a :class:`CheckReport`; ``passed`` holds exactly when the
worst margin is at least ``-tolerance``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .functional import kinetic_sq
from .grid import Field, Grid1D, GridError, StatePair
from .model import EXP_GUARD, F_eval, OverflowGuardError, as_pair, f_eval


@dataclass(frozen=True)
class CheckReport:
    name: str
    samples: int
    worst_margin: float
    tolerance: float = 0.0
    details: list[tuple] = field(default_factory=list)
    value: float = math.nan  # headline number (empirical constant, last defect, ...)

    @property
    def passed(self) -> bool:
        return bool(self.worst_margin >= -self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: samples={self.samples} worst_margin={self.worst_margin:.6g} value={self.value:.10g}"


# ---------------------------------------------------------------------------
# windowed mass


def _hat_antiderivative(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, -1.0, 1.0)
    return np.where(t <= 0, 0.5 * (t + 1.0) ** 2, 1.0 - 0.5 * (1.0 - t) ** 2)


def window_weights(grid: Grid1D, R: float) -> tuple[np.ndarray, np.ndarray]:
    """Node offsets and weights integrating the piecewise-linear interpolant over [-R, R].

    For R a whole number of cells this is the trapezoid rule.
    """
    if R < grid.dx:
        raise ValueError(f"window radius R={R} is below the grid spacing {grid.dx}")
    if 2 * R >= 2 * grid.L:
        raise ValueError("window wider than the domain")
    r = R / grid.dx
    m = int(math.ceil(r))
    d = np.arange(-m, m + 1)
    w = _hat_antiderivative(r - d) - _hat_antiderivative(-r - d)
    keep = w > 0
    return d[keep], w[keep] * grid.dx


def window_masses(grid: Grid1D, u: np.ndarray, v: np.ndarray, R: float) -> np.ndarray:
    """int_{x_j - R}^{x_j + R} (u^2 + v^2) for every node x_j (cyclic)."""
    dens = np.asarray(u) ** 2 + np.asarray(v) ** 2
    offsets, weights = window_weights(grid, R)
    out = np.zeros_like(dens)
    for d, wt in zip(offsets, weights):
        out += wt * np.roll(dens, -int(d))
    return out


def heaviest_window(state: StatePair, R: float) -> tuple[int, float]:
    """(node index, mass) of the window of radius R holding the most L^2 mass."""
    masses = window_masses(state.grid, state.u.values, state.v.values, R)
    j = int(np.argmax(masses))
    return j, float(masses[j])


def vanishing_diagnostic(state: StatePair, R: float) -> float:
    """sup over window centres of the L^2 mass of u^2 + v^2 in a window of radius R."""
    return heaviest_window(state, R)[1]


# ---------------------------------------------------------------------------
# Trudinger-Moser ratio sweep


@dataclass(frozen=True)
class FamilyConfig:
    """Random test fields for the Trudinger-Moser sweep."""

    size: int = 200
    seed: int = 0
    min_width_cells: float = 4.0  # smallest feature, in grid cells

    def __post_init__(self) -> None:
        if self.size < 2:
            raise ValueError("family size must be at least 2")


def _family_member(grid: Grid1D, kind: int, rng: np.random.Generator, small: float) -> np.ndarray:
    x = grid.x
    c = rng.uniform(-0.25 * grid.L, 0.25 * grid.L)
    if kind == 0:  # Gaussian
        s = math.exp(rng.uniform(math.log(max(small, 0.2)), math.log(4.0)))
        return np.exp(-((x - c) ** 2) / (2 * s * s))
    if kind == 1:  # two bumps
        s1, s2 = rng.uniform(0.3, 2.0, size=2)
        sep = rng.uniform(0.5, 6.0)
        return np.exp(-((x - c) ** 2) / (2 * s1 * s1)) + rng.uniform(0.2, 1.0) * np.exp(-((x - c - sep) ** 2) / (2 * s2 * s2))
    if kind == 2:  # wave packet with a wide envelope
        s = rng.uniform(1.0, 4.0)
        k0 = rng.uniform(0.5, 5.0)
        return np.cos(k0 * x + rng.uniform(0, 2 * math.pi)) * np.exp(-((x - c) ** 2) / (2 * s * s))
    # Moser-type logarithmic spike: log(rho / max(|x-c|, eps)), cut at |x-c| = rho
    rho = rng.uniform(0.5, 2.0)
    eps = math.exp(rng.uniform(math.log(small), math.log(0.3 * rho)))
    r = np.maximum(np.abs(x - c), eps)
    return np.maximum(np.log(rho / r), 0.0)


def tm_family(grid: Grid1D, family: FamilyConfig = FamilyConfig()) -> np.ndarray:
    """(size, N) array of fields normalised to ||(-Delta)^{1/4} u||^2 = 1."""
    rng = np.random.default_rng(family.seed)
    out = np.empty((family.size, grid.N))
    for i in range(family.size):
        u = _family_member(grid, i % 4, rng, family.min_width_cells * grid.dx)
        out[i] = u / math.sqrt(kinetic_sq(grid, u))
    return out


def tm_ratios(grid: Grid1D, fields: np.ndarray, alpha: float) -> np.ndarray:
    """int (e^{alpha u^2} - 1) / ||u||_2^2 for each row."""
    arg = alpha * fields**2
    if np.max(arg) > EXP_GUARD:
        raise OverflowGuardError(f"alpha*u^2 = {np.max(arg):.4g} exceeds the exponential guard")
    return np.sum(np.expm1(arg), axis=-1) / np.sum(fields**2, axis=-1)


def tm_ratio_sweep(
    grid: Grid1D, family: FamilyConfig, alpha: float, omega: float = math.pi / 4, growth_tol: float = 0.05
) -> CheckReport:
    """Empirical H_alpha = sup of the Trudinger-Moser ratio over a normalised family.

    The check passes when the sup is finite and the family's second half raises
    it by at most ``growth_tol`` (relative).
    """
    if not 0 < alpha <= omega:
        raise ValueError(f"alpha must lie in (0, omega={omega}], got {alpha}")
    ratios = tm_ratios(grid, tm_family(grid, family), alpha)
    running = np.maximum.accumulate(ratios)
    half = running[family.size // 2 - 1]
    sup = float(running[-1])
    growth = (sup - half) / half if math.isfinite(sup) else math.inf
    sizes = sorted({max(1, family.size // 8), family.size // 4, family.size // 2, family.size})
    details = [("family_size", "running_sup")] + [(n, float(running[n - 1])) for n in sizes]
    return CheckReport("tm_ratio_sweep", family.size, growth_tol - growth, 0.0, details, sup)


# ---------------------------------------------------------------------------
# exponential power inequality


def exp_power_check(alpha: float, l: float, r: float, s_max: float = 50.0, n: int = 20001) -> CheckReport:
    """sup over s in [1e-6, s_max] of (e^{alpha s^2} - 1)^l / (e^{r alpha s^2} - 1).

    ``s_max`` is capped so the denominator stays below the exponential guard.
    The margin is how far the sup sits above both endpoint values, i.e. the
    ratio decays at both ends and the sup is attained inside.
    """
    if not (r > l > 1 and alpha > 0):
        raise ValueError("need r > l > 1 and alpha > 0")
    s_cap = math.sqrt(EXP_GUARD / (r * alpha))
    s_hi = min(s_max, s_cap)
    s = np.geomspace(1e-6, s_hi, n)
    a = alpha * s * s
    # logs avoid overflow in the numerator power
    ratio = np.exp(l * np.log(np.expm1(a)) - np.log(np.expm1(r * a)))
    i = int(np.argmax(ratio))
    sup = float(ratio[i])
    margin = sup - max(ratio[0], ratio[-1]) if math.isfinite(sup) else -math.inf
    details = [("s_at_sup", float(s[i])), ("s_max_used", s_hi), ("ratio_at_ends", (float(ratio[0]), float(ratio[-1])))]
    return CheckReport("exp_power_check", n, margin, 0.0, details, sup)


# ---------------------------------------------------------------------------
# Brezis-Lieb splitting


def _integrals(nl, vals: np.ndarray, dx: float) -> tuple[float, float]:
    return float(np.dot(f_eval(nl, vals), vals) * dx), float(np.sum(F_eval(nl, vals)) * dx)


def brezis_lieb_check(
    grid: Grid1D,
    u: Field,
    w: Field,
    shift_distances,
    nl,
    defect_tol: float = 1e-6,
    seam_tol: float = 1e-12,
) -> CheckReport:
    """Split defect of int f(u_n)u_n and int F(u_n) for u_n = u + w shifted by each distance.

    The defect must decrease with the separation and end below ``defect_tol``.
    Raises GridError when a shifted bump carries mass within one period of the seam.
    """
    spec = as_pair(nl)[0]
    dists = [float(d) for d in shift_distances]
    if any(b <= a for a, b in zip(dists, dists[1:])):
        raise ValueError("shift distances must be strictly increasing")
    dx = grid.dx
    seam = np.abs(grid.x) >= grid.L - 1.0
    fu, Fu = _integrals(spec, u.values, dx)
    defects = []
    for d in dists:
        wn = np.roll(w.values, grid.nodes_per_length(d))
        for part in (u.values, wn):
            total = np.sum(part**2)
            if total > 0 and np.sum(part[seam] ** 2) > seam_tol * total:
                raise GridError(f"bump within one period of the wrap seam at separation {d}; enlarge L")
        un = u.values + wn
        fn, Fn = _integrals(spec, un, dx)
        fw, Fw = _integrals(spec, wn, dx)
        scale = max(abs(fn), abs(Fn), 1e-300)
        defects.append(max(abs(fn - fw - fu), abs(Fn - Fw - Fu)) / scale)
    floor = 1e-14
    margins = [defect_tol - defects[-1]]
    for a, b in zip(defects, defects[1:]):
        # strict decrease, unless both sit at round-off level
        margins.append(a - b if max(a, b) > floor else 0.0)
    worst = min(margins)
    details = [("separation", "defect")] + list(zip(dists, defects))
    return CheckReport("brezis_lieb_check", len(dists), worst, 0.0, details, defects[-1])
