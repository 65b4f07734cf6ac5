"""Potentials and nonlinearities, and validators for the structural assumptions.

The built-in critical nonlinearity is

    f(s) = th*q|s|^{q-2}s + q|s|^{q-2}s(e^{a s^2}-1) + 2a|s|^q s e^{a s^2}
    F(s) = th*|s|^q + |s|^q (e^{a s^2}-1)

with a = alpha0.  ``pure_power`` mode keeps only the th-terms; it has no
exponential growth and exists only as a closed-form test oracle.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .grid import Field, Grid1D, GridError

#: Largest alpha0*s^2 evaluated before raising instead of overflowing.
EXP_GUARD = 700.0

CRITICAL = "critical"
PURE_POWER = "pure_power"


class OverflowGuardError(FloatingPointError):
    """alpha0*s^2 exceeded EXP_GUARD."""


class PotentialError(ValueError):
    """A constructed potential set failed validation."""


@dataclass(frozen=True)
class NonlinearitySpec:
    q: float
    mu: float
    theta: float
    alpha0: float
    mode: str = CRITICAL

    def __post_init__(self) -> None:
        if self.mode not in (CRITICAL, PURE_POWER):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not self.q > 2:
            raise ValueError(f"q must exceed 2, got {self.q}")
        if not self.mu > 2:
            raise ValueError(f"mu must exceed 2, got {self.mu}")
        if not (self.theta > 0 and self.alpha0 > 0):
            raise ValueError("theta and alpha0 must be positive")

    @property
    def is_oracle(self) -> bool:
        return self.mode == PURE_POWER

    def with_theta(self, theta: float) -> NonlinearitySpec:
        return NonlinearitySpec(self.q, self.mu, theta, self.alpha0, self.mode)


def as_pair(nl) -> tuple[NonlinearitySpec, NonlinearitySpec]:
    """Accept one spec (used for both components) or a pair."""
    if isinstance(nl, NonlinearitySpec):
        return nl, nl
    nl1, nl2 = nl
    return nl1, nl2


def overflow_guarded(fn):
    """Turn floating-point overflow inside ``fn`` into OverflowGuardError."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            with np.errstate(over="raise"):
                return fn(*args, **kwargs)
        except OverflowGuardError:
            raise
        except FloatingPointError as exc:
            raise OverflowGuardError(f"overflow in {fn.__name__}: {exc}") from exc

    return wrapper


def _exp_parts(spec: NonlinearitySpec, s: np.ndarray):
    arg = spec.alpha0 * s * s
    if np.any(arg > EXP_GUARD):
        raise OverflowGuardError(
            f"alpha0*s^2 = {np.max(arg):.4g} exceeds guard {EXP_GUARD} (|s| = {np.max(np.abs(s)):.4g})"
        )
    return np.expm1(arg), np.exp(arg)


@overflow_guarded
def f_eval(spec: NonlinearitySpec, s):
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    base = spec.q * a ** (spec.q - 2) * s
    if spec.mode == PURE_POWER:
        return spec.theta * base
    em1, e = _exp_parts(spec, s)
    return spec.theta * base + base * em1 + 2.0 * spec.alpha0 * a**spec.q * s * e


@overflow_guarded
def F_eval(spec: NonlinearitySpec, s):
    s = np.asarray(s, dtype=float)
    aq = np.abs(s) ** spec.q
    if spec.mode == PURE_POWER:
        return spec.theta * aq
    em1, _ = _exp_parts(spec, s)
    return spec.theta * aq + aq * em1


@overflow_guarded
def fprime_eval(spec: NonlinearitySpec, s):
    """Analytic derivative of f_eval (an even function of s)."""
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    q = spec.q
    lead = q * (q - 1) * a ** (q - 2)
    if spec.mode == PURE_POWER:
        return spec.theta * lead
    em1, e = _exp_parts(spec, s)
    al = spec.alpha0
    return lead * (spec.theta + em1) + 2 * al * (2 * q + 1) * a**q * e + 4 * al * al * a ** (q + 2) * e


def phi_eval(spec: NonlinearitySpec, s):
    s = np.asarray(s, dtype=float)
    return f_eval(spec, s) * s - 2.0 * F_eval(spec, s)


# ---------------------------------------------------------------------------
# validation reports


@dataclass
class CheckEntry:
    name: str
    status: str  # "pass" | "fail" | "skipped"
    margin: float | None = None
    detail: str = ""


@dataclass
class ValidationReport:
    subject: str
    entries: list[CheckEntry] = field(default_factory=list)

    def add(self, name: str, ok: bool, margin: float | None = None, detail: str = "") -> None:
        self.entries.append(CheckEntry(name, "pass" if ok else "fail", margin, detail))

    def skip(self, name: str, detail: str) -> None:
        self.entries.append(CheckEntry(name, "skipped", None, detail))

    @property
    def passed(self) -> bool:
        return all(e.status != "fail" for e in self.entries)

    def failures(self) -> list[str]:
        return [e.name for e in self.entries if e.status == "fail"]

    def __getitem__(self, name: str) -> CheckEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def lines(self) -> list[str]:
        out = []
        for e in self.entries:
            margin = "" if e.margin is None else f"  margin={e.margin:.6g}"
            detail = f"  {e.detail}" if e.detail else ""
            out.append(f"[{e.status.upper():7s}] {self.subject}:{e.name}{margin}{detail}")
        return out


def _strictly_increasing(y: np.ndarray) -> tuple[bool, float]:
    d = np.diff(y)
    scale = np.maximum(np.abs(y[1:]), np.abs(y[:-1]))
    rel = d / np.where(scale > 0, scale, 1.0)
    return bool(np.all(d > 0)), float(np.min(rel))


def validate_nonlinearity(
    spec: NonlinearitySpec,
    sample_range: tuple[float, float] = (1e-6, 10.0),
    n_samples: int = 400,
    limit_tol: float = 1e-6,
) -> ValidationReport:
    """Check H1-H4 and (CG) on log-spaced samples.

    Entry names: H1_odd, H1_limit, H1_convex, H2_monotone_quotient, H3_AR,
    H4_lower_bound, fibering_monotone, CG_f, CG_fprime_s.
    """
    lo, hi = sample_range
    if not 0 < lo < hi:
        raise ValueError(f"bad sample range {sample_range}")
    if spec.mode == CRITICAL and spec.alpha0 * hi * hi > EXP_GUARD:
        raise ValueError(f"sample range upper end {hi} trips the overflow guard")

    rep = ValidationReport(f"nonlinearity(q={spec.q:g},mu={spec.mu:g},theta={spec.theta:g},alpha0={spec.alpha0:g},{spec.mode})")
    s = np.geomspace(lo, hi, n_samples)
    f = f_eval(spec, s)
    F = F_eval(spec, s)
    fp = fprime_eval(spec, s)

    fneg = f_eval(spec, -s)
    rep.add("H1_odd", bool(np.all(fneg == -f)), float(np.max(np.abs(fneg + f))))

    ref = abs(float(f_eval(spec, 1.0)))
    small = abs(f[0] / s[0])
    rep.add("H1_limit", small <= limit_tol * max(ref, 1.0), small, f"|f(s)/s| at s={lo:g}")

    ok, m = _strictly_increasing(fp)
    rep.add("H1_convex", ok, m, "f' increasing on s>0")

    ok, m = _strictly_increasing(f / s)
    rep.add("H2_monotone_quotient", ok, m)

    ar = (f * s - spec.mu * F) / (f * s)
    rep.add("H3_AR", bool(np.all(ar >= 0) and np.all(F > 0)), float(np.min(ar)), f"mu={spec.mu:g}")

    h4 = (F - spec.theta * s**spec.q) / (spec.theta * s**spec.q)
    rep.add("H4_lower_bound", bool(np.all(h4 >= -1e-14)), float(np.min(h4)))

    fib = (fp * s * s - f * s) / (fp * s * s)
    rep.add("fibering_monotone", bool(np.all(fib > 0)), float(np.min(fib)), "f'(s)s^2 > f(s)s")

    if spec.is_oracle:
        rep.skip("CG_f", "skipped: oracle mode")
        rep.skip("CG_fprime_s", "skipped: oracle mode")
        return rep

    for name, fn in (("CG_f", lambda t: f_eval(spec, t)), ("CG_fprime_s", lambda t: fprime_eval(spec, t) * t)):
        ok, detail = _critical_growth(spec, fn)
        rep.add(name, ok, None, detail)
    return rep


def _critical_growth(spec: NonlinearitySpec, fn) -> tuple[bool, str]:
    """Tail trend of |g(s)|/(e^{a s^2}-1): decaying for a = 1.05*alpha0, growing for 0.95*alpha0."""
    a_hi, a_lo = 1.05 * spec.alpha0, 0.95 * spec.alpha0
    s_top = math.sqrt(0.98 * EXP_GUARD / a_hi)
    s = np.linspace(0.8 * s_top, s_top, 64)
    g = np.abs(fn(s))
    r_hi = g / np.expm1(a_hi * s * s)
    r_lo = g / np.expm1(a_lo * s * s)
    dec = bool(np.all(np.diff(r_hi) < 0)) and r_hi[-1] < r_hi[0]
    inc = bool(np.all(np.diff(r_lo) > 0)) and r_lo[-1] > r_lo[0]
    detail = f"ratio(1.05a0)={r_hi[-1]:.3g} decreasing={dec}; ratio(0.95a0)={r_lo[-1]:.3g} increasing={inc}"
    return dec and inc, detail


# ---------------------------------------------------------------------------
# potentials

PERIODIC = "periodic"
ASYMPTOTIC = "asymptotically_periodic"


@dataclass(frozen=True, eq=False)
class PotentialSet:
    """V1, V2, lambda on a grid; for the asymptotic flavor also the tilde potentials.

    In the asymptotic flavor V1, V2, lam hold the periodic limits and Vt1,
    Vt2, lamt the potentials the system actually sees.
    """

    V1: Field
    V2: Field
    lam: Field
    delta: float
    flavor: str = PERIODIC
    Vt1: Field | None = None
    Vt2: Field | None = None
    lamt: Field | None = None
    period: float = 1.0
    edge_tol: float = 1e-3

    def __post_init__(self) -> None:
        if self.flavor not in (PERIODIC, ASYMPTOTIC):
            raise ValueError(f"unknown flavor {self.flavor!r}")
        fields = [self.V1, self.V2, self.lam]
        if self.flavor == ASYMPTOTIC:
            if self.Vt1 is None or self.Vt2 is None or self.lamt is None:
                raise ValueError("asymptotic flavor needs Vt1, Vt2, lamt")
            fields += [self.Vt1, self.Vt2, self.lamt]
        for f in fields[1:]:
            if f.grid != fields[0].grid:
                raise GridError("all potentials must share one grid")

    @property
    def grid(self) -> Grid1D:
        return self.V1.grid

    def active(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(V1, V2, lambda) sample arrays of the system this set describes."""
        if self.flavor == ASYMPTOTIC:
            return self.Vt1.values, self.Vt2.values, self.lamt.values
        return self.V1.values, self.V2.values, self.lam.values

    def periodic_limit(self) -> PotentialSet:
        return PotentialSet(self.V1, self.V2, self.lam, self.delta, PERIODIC, period=self.period)

    @property
    def is_periodic(self) -> bool:
        return self.flavor == PERIODIC


def validate_potentials(pot: PotentialSet, periodic_tol: float = 1e-12) -> ValidationReport:
    """Pointwise checks of (V1)-(V6); entries are named after the assumptions."""
    rep = ValidationReport(f"potentials({pot.flavor})")
    d = pot.delta
    rep.add("V3_delta_range", 0 < d < 1, d, "" if 0 < d < 1 else "(V3): delta must lie in (0,1)")

    V1, V2, lam = pot.V1.values, pot.V2.values, pot.lam.values
    vmin = float(min(V1.min(), V2.min()))
    rep.add("V2_nonnegative", vmin >= 0, vmin)
    bound = d * np.sqrt(np.clip(V1, 0, None) * np.clip(V2, 0, None)) - lam
    rep.add("V3_coupling", bool(np.all(bound >= 0)), float(bound.min()), "min delta*sqrt(V1V2) - lambda")

    grid = pot.grid
    if grid.admits_period(pot.period):
        p = grid.nodes_per_length(pot.period)
        worst = 0.0
        for arr in (V1, V2, lam):
            scale = max(1.0, float(np.max(np.abs(arr))))
            worst = max(worst, float(np.max(np.abs(np.roll(arr, p) - arr))) / scale)
        rep.add("V1_periodic", worst <= periodic_tol, periodic_tol - worst, f"shift by {p} nodes")
    else:
        rep.add("V1_periodic", False, None, f"grid does not admit period {pot.period}")

    if pot.flavor == ASYMPTOTIC:
        Vt1, Vt2, lamt = pot.Vt1.values, pot.Vt2.values, pot.lamt.values
        m4 = float(min((V1 - Vt1).min(), (V2 - Vt2).min(), (lamt - lam).min()))
        rep.add("V4_strict_order", m4 > 0, m4, "min of V_i - Vt_i and lamt - lam")
        edge = np.abs(grid.x) >= 0.9 * grid.L
        gap = float(max(np.abs(V1 - Vt1)[edge].max(), np.abs(V2 - Vt2)[edge].max(), np.abs(lamt - lam)[edge].max()))
        rep.add("V4_edge_decay", gap <= pot.edge_tol, pot.edge_tol - gap, f"max gap on |x|>=0.9L is {gap:.3g}")
        vtmin = float(min(Vt1.min(), Vt2.min()))
        rep.add("V5_nonnegative", vtmin >= 0, vtmin)
        b6 = d * np.sqrt(np.clip(Vt1, 0, None) * np.clip(Vt2, 0, None)) - lamt
        rep.add("V6_coupling", bool(np.all(b6 >= 0)), float(b6.min()))
    return rep


@dataclass(frozen=True)
class PeriodicParams:
    """V1 = v1_base + v1_amp*sin^2(pi x), V2 = v2_base + v2_amp*cos^2(pi x), lambda = coupling*sqrt(V1 V2)."""

    v1_base: float = 1.0
    v1_amp: float = 0.5
    v2_base: float = 1.5
    v2_amp: float = 0.5
    coupling: float = 0.5
    delta: float = 0.6


@dataclass(frozen=True)
class BumpParams:
    """Vt_i = V_i - a_i/(1+x^2), lamt = lambda + b/(1+x^2)."""

    a1: float = 0.05
    a2: float = 0.05
    b: float = 0.01


def periodic_potentials(grid: Grid1D, params: PeriodicParams = PeriodicParams()) -> PotentialSet:
    """Build the sin/cos family without validating it."""
    x = grid.x
    V1 = params.v1_base + params.v1_amp * np.sin(np.pi * x) ** 2
    V2 = params.v2_base + params.v2_amp * np.cos(np.pi * x) ** 2
    lam = params.coupling * np.sqrt(V1 * V2)
    return PotentialSet(Field(grid, V1), Field(grid, V2), Field(grid, lam), params.delta)


def make_periodic_potentials(grid: Grid1D, params: PeriodicParams = PeriodicParams()) -> PotentialSet:
    if not grid.admits_period(1.0):
        raise GridError(f"grid {grid} does not admit integer translations (need 1/dx and 2L integers)")
    pot = periodic_potentials(grid, params)
    rep = validate_potentials(pot)
    if not rep.passed:
        raise PotentialError(f"periodic potentials invalid: {rep.failures()}")
    return pot


def asymptotic_potentials(
    grid: Grid1D, periodic: PotentialSet, bump: BumpParams = BumpParams(), edge_tol: float = 1e-3
) -> PotentialSet:
    """Bump-perturbed potentials over ``periodic``, without validation."""
    if periodic.grid != grid:
        raise GridError("periodic set lives on a different grid")
    bell = 1.0 / (1.0 + grid.x**2)
    return PotentialSet(
        periodic.V1,
        periodic.V2,
        periodic.lam,
        periodic.delta,
        ASYMPTOTIC,
        Vt1=periodic.V1 - bump.a1 * bell,
        Vt2=periodic.V2 - bump.a2 * bell,
        lamt=periodic.lam + bump.b * bell,
        period=periodic.period,
        edge_tol=edge_tol,
    )


def make_asymptotic_potentials(
    grid: Grid1D, periodic: PotentialSet, bump: BumpParams = BumpParams(), edge_tol: float = 1e-3
) -> PotentialSet:
    pot = asymptotic_potentials(grid, periodic, bump, edge_tol)
    rep = validate_potentials(pot)
    if not rep.passed:
        raise PotentialError(f"asymptotic potentials invalid: {rep.failures()}")
    return pot


def _combine(values, pick):
    if isinstance(values, (int, float)):
        return float(values)
    return float(pick(values))


def theta0(
    delta: float,
    mu: float | Sequence[float],
    q: float,
    alpha0: float | Sequence[float],
    omega: float,
    kappa: float | Sequence[float],
    Sq: float,
) -> float:
    """Threshold on theta above which the existence argument applies.

    Per-component inputs are combined as mu = min mu_i, alpha0 = max alpha0_i and
    1/kappa = max 1/kappa_i.
    """
    mu_ = _combine(mu, min)
    a0 = _combine(alpha0, max)
    kinv = _combine([1.0 / k for k in kappa] if not isinstance(kappa, (int, float)) else 1.0 / kappa, max)
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0,1), got {delta}")
    if not (mu_ > 2 and q > 2):
        raise ValueError("need mu > 2 and q > 2")
    if min(a0, omega, kinv, Sq) <= 0:
        raise ValueError("alpha0, omega, kappa and S_q must be positive")
    inner = (1.0 / (1.0 - delta)) * (mu_ / (mu_ - 2.0)) * ((q - 2.0) / q) * (a0 * kinv / omega)
    return Sq**q / q * inner ** ((q - 2.0) / 2.0)
