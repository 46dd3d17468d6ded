"""Explicit time integration of the homogeneous collision dynamics with
trajectory diagnostics and envelope verdicts.

The integrator is deliberately plain: forward Euler or explicit midpoint
on the strong-form operator, negative values clipped to zero after each
accepted step with the removed mass logged, and an automatic step-size
halving retry when a step produces non-finite values.  Everything else
in this module consumes the recorded trajectory: per-record Lebesgue and
dissipation norms, the space-time accumulator driving the propagation
criteria, and the Gronwall / appearance / stability envelopes.  Envelope
constants are fitted on the first half of the records and judged on all
of them, so a passing verdict means the fitted inequality transferred to
data it never saw.

The strong-form evaluation interpolates post-collisional values, so its
raw output does not integrate to zero on the grid even though the weak
form conserves mass exactly.  Stepping with the raw values would leak
mass at the interpolation-error rate, swamping the clipping signal the
record keeps.  Each evaluation therefore gets a conservative moment
projection before it is used: the minimal state-weighted correction
(a quadratic polynomial times |f|) that restores the exact zero moments
of mass, momentum and energy.  The correction is the same order as the
interpolation error it repairs, and afterwards the only mass drift left
is the logged clipping.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .angular import CollisionKernel
from .collision import default_class_bounds, q_strong
from .functionals import (
    c_alpha,
    eta_exponent,
    lp_norm,
    moment,
    prodi_serrin_from_q,
    sobolev_norm,
)
from .grid import GridFunction, VelocityGrid, weight
from .reports import InequalityVerdict

__all__ = [
    "STEPPERS",
    "SolverConfig",
    "DiagnosticsRecord",
    "Trajectory",
    "SolverRunError",
    "EnvelopeResult",
    "StabilityTrace",
    "evolve",
    "lp_evolution_check",
    "gronwall_envelope",
    "appearance_envelope",
    "appearance_ode_check",
    "endpoint_r1_check",
    "stability_run",
    "trajectory_csv_columns",
    "write_trajectory_csv",
]

STEPPERS = ("forward-euler", "midpoint")

_MAX_DT_HALVINGS = 8
_CLIP_ABORT_FRACTION = 1e-3


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters for the explicit collision integrator.

    p, k and q fix which norms the diagnostics track: the weighted
    Lebesgue norm with exponents (p, k), and the space-time norm with
    Lebesgue leg q whose (nu, r) resolution must be admissible for the
    kernel, so invalid combinations are rejected here rather than after
    an expensive run.
    """

    kernel: CollisionKernel
    grid: VelocityGrid
    dt: float
    horizon: float
    p: float
    k: float
    q: float
    stepper: str = "forward-euler"

    def __post_init__(self) -> None:
        failures = []
        if self.kernel.d != self.grid.d:
            failures.append(
                f"kernel dimension {self.kernel.d} does not match grid dimension {self.grid.d}"
            )
        if not self.dt > 0.0:
            failures.append(f"dt must be positive, got {self.dt}")
        elif not self.horizon >= self.dt:
            failures.append(f"horizon {self.horizon} must be at least one step dt = {self.dt}")
        if not self.p > 1.0:
            failures.append(f"Lebesgue exponent p must exceed 1, got {self.p}")
        if self.k < 0.0:
            failures.append(f"weight exponent k must be nonnegative, got {self.k}")
        if self.stepper not in STEPPERS:
            failures.append(f"stepper must be one of {STEPPERS}, got {self.stepper!r}")
        try:
            prodi_serrin_from_q(self.grid.d, self.kernel.gamma, self.kernel.s, self.q)
        except ValueError as exc:
            failures.append(str(exc))
        if failures:
            raise ValueError("; ".join(failures))

    @property
    def prodi_serrin(self):
        return prodi_serrin_from_q(self.grid.d, self.kernel.gamma, self.kernel.s, self.q)

    @property
    def eta(self) -> float:
        return eta_exponent(self.grid.d, self.kernel.gamma, self.kernel.s, self.p, self.k)


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One trajectory sample.

    clipped_mass is the negative mass removed when the step that
    produced this state was clipped (zero on the initial record), which
    is the same number as the negativity mass of the raw update.
    ps_accum is the trapezoid accumulation of ps_norm**r from t = 0.
    """

    t: float
    m_kp: float
    d_skp: float
    ps_norm: float
    ps_accum: float
    m_eta: float
    mass: float
    momentum: tuple[float, ...]
    energy: float
    clipped_mass: float

    def finite(self) -> bool:
        scalars = (
            self.m_kp, self.d_skp, self.ps_norm, self.ps_accum,
            self.m_eta, self.mass, self.energy,
        )
        return all(math.isfinite(x) for x in scalars) and all(
            math.isfinite(x) for x in self.momentum
        )


@dataclass(frozen=True)
class Trajectory:
    """Immutable result of one run: a snapshot and a record per step."""

    config: SolverConfig
    snapshots: tuple[GridFunction, ...]
    records: tuple[DiagnosticsRecord, ...]
    final_dt: float

    def __len__(self) -> int:
        return len(self.records)

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])


class SolverRunError(RuntimeError):
    """Run aborted: blow-up (non-finite values that halving retries could
    not cure) or a clipping fraction beyond the per-step budget.  Carries
    everything recorded up to the last valid step."""

    def __init__(self, reason: str, message: str, records, snapshots):
        super().__init__(message)
        self.reason = reason
        self.records = tuple(records)
        self.snapshots = tuple(snapshots)

    @property
    def last_record(self) -> DiagnosticsRecord:
        return self.records[-1]


def _conservative_projection(
    q: np.ndarray, fvals: np.ndarray, grid: VelocityGrid
) -> np.ndarray:
    """Remove the spurious collision-invariant moments of a strong-form
    evaluation.

    Subtracts |f| times the quadratic polynomial in v that zeroes the
    grid moments of q against 1, each velocity component, and |v|^2 (the
    functionals the weak form conserves exactly).  The weighting keeps
    the correction supported where the state lives, so it cannot push
    far-field cells negative, and the Gram system it solves is positive
    definite whenever the state has mass.
    """
    w = np.abs(fvals).ravel()
    if float(w.sum()) <= 0.0:
        return q
    pts = grid.nodes()
    basis = np.concatenate(
        [np.ones((1, pts.shape[0])), pts.T, (pts**2).sum(axis=1)[None, :]]
    )
    gram = (basis * w) @ basis.T
    rhs = basis @ q.ravel()
    try:
        coeffs = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        coeffs = np.linalg.lstsq(gram, rhs, rcond=None)[0]
    return q - ((coeffs @ basis) * w).reshape(grid.shape)


def _q_values(values: np.ndarray, config: SolverConfig) -> np.ndarray:
    f = GridFunction(config.grid, values)
    q = q_strong(f, f, config.kernel, with_residuals=False).result.values
    return _conservative_projection(q, values, config.grid)


def _advance(values: np.ndarray, dt: float, config: SolverConfig) -> np.ndarray:
    """One raw explicit step; the caller owns clipping and acceptance."""
    k1 = _q_values(values, config)
    if config.stepper == "forward-euler":
        return values + dt * k1
    half = values + 0.5 * dt * k1
    if not np.all(np.isfinite(half)):
        return half
    return values + dt * _q_values(half, config)


class _StateStepper:
    """Shared stepping loop for evolve and the twin stability runs.

    Keeps one current dt for all states it advances: when any state in a
    step goes non-finite, the step is retried at half the size for every
    state, so twin trajectories stay sampled at identical times.
    """

    def __init__(self, config: SolverConfig):
        self.config = config
        self.dt = config.dt
        self.t = 0.0

    @property
    def done(self) -> bool:
        return self.t >= self.config.horizon * (1.0 - 1e-12)

    def advance(self, states: list[np.ndarray]) -> tuple[float, list[np.ndarray], list[float]]:
        """Advance all states by one accepted step; returns (t, states, clipped)."""
        cv = self.config.grid.cell_volume
        step = min(self.dt, self.config.horizon - self.t)
        for _ in range(_MAX_DT_HALVINGS + 1):
            cands = [_advance(v, step, self.config) for v in states]
            if all(np.all(np.isfinite(c)) for c in cands):
                break
            step *= 0.5
            self.dt *= 0.5
        else:
            raise _NonFinite()
        new_states: list[np.ndarray] = []
        clipped: list[float] = []
        for v, cand in zip(states, cands):
            neg = cand < 0.0
            removed = -float(cand[neg].sum()) * cv + 0.0
            total = float(v.sum()) * cv
            if removed > _CLIP_ABORT_FRACTION * total:
                raise _ClipBudget(removed, total)
            cand[neg] = 0.0
            new_states.append(cand)
            clipped.append(removed)
        self.t += step
        return self.t, new_states, clipped


class _NonFinite(Exception):
    pass


class _ClipBudget(Exception):
    def __init__(self, removed: float, total: float):
        super().__init__()
        self.removed = removed
        self.total = total


def _check_initial(f0: GridFunction, config: SolverConfig, label: str) -> None:
    if f0.grid != config.grid:
        raise ValueError(f"{label} lives on a different grid than the configuration")
    if not np.all(f0.values >= 0.0):
        raise ValueError(f"{label} must be nonnegative")
    rep = default_class_bounds().report(GridFunction(f0.grid, f0.values, nonneg=True))
    if not rep["member"]:
        raise ValueError(f"{label} escapes the admissible class: {rep}")


def _record(
    f: GridFunction,
    config: SolverConfig,
    t: float,
    ps_accum: float,
    clipped: float,
) -> DiagnosticsRecord:
    grid = config.grid
    p, k = config.p, config.k
    gamma = config.kernel.gamma
    wk2 = weight(grid, k / 2.0).values if k != 0.0 else None
    fp2 = f.values ** (p / 2.0)
    half = GridFunction(grid, fp2 if wk2 is None else fp2 * wk2)
    pts = grid.nodes()
    fr = f.values.ravel()
    cv = grid.cell_volume
    return DiagnosticsRecord(
        t=t,
        m_kp=lp_norm(f, p, k) ** p,
        d_skp=sobolev_norm(half, config.kernel.s, homogeneous=True) ** 2,
        ps_norm=lp_norm(f, config.q, config.q * abs(gamma)),
        ps_accum=ps_accum,
        m_eta=moment(f, config.eta),
        mass=float(fr.sum()) * cv,
        momentum=tuple(float(x) for x in (fr[:, None] * pts).sum(axis=0) * cv),
        energy=float((fr * (pts**2).sum(axis=1)).sum()) * cv,
        clipped_mass=clipped,
    )


def evolve(f0: GridFunction, config: SolverConfig) -> Trajectory:
    """Integrate the collision dynamics from f0 over the configured horizon.

    Steps with the configured explicit stepper, clipping negative values
    after each step (the clipped mass is logged per record) and halving
    the step size when an update goes non-finite.  Aborts with
    SolverRunError when halving retries run out or the per-step clipped
    mass exceeds the abort fraction of the current mass; the exception
    carries the records of every accepted step.
    """
    _check_initial(f0, config, "initial state")
    stepper = _StateStepper(config)
    r = config.prodi_serrin.r
    state = np.array(f0.values, dtype=float)
    snap = GridFunction(config.grid, state.copy(), nonneg=True)
    records = [_record(snap, config, 0.0, 0.0, 0.0)]
    snapshots = [snap]
    prev_psr = records[0].ps_norm**r
    prev_t = 0.0
    while not stepper.done:
        try:
            t, (state,), (clipped,) = stepper.advance([state])
        except _NonFinite:
            raise SolverRunError(
                "blow-up",
                f"non-finite state at t = {stepper.t + stepper.dt:.6g} after "
                f"{_MAX_DT_HALVINGS} step halvings",
                records,
                snapshots,
            ) from None
        except _ClipBudget as exc:
            raise SolverRunError(
                "clipping",
                f"clipped mass {exc.removed:.3e} exceeds {_CLIP_ABORT_FRACTION:.0e} "
                f"of total mass {exc.total:.3e} in one step",
                records,
                snapshots,
            ) from None
        snap = GridFunction(config.grid, state.copy(), nonneg=True)
        psr = lp_norm(snap, config.q, config.q * abs(config.kernel.gamma)) ** r
        accum = records[-1].ps_accum + 0.5 * (prev_psr + psr) * (t - prev_t)
        rec = _record(snap, config, t, accum, clipped)
        if not rec.finite():
            raise SolverRunError(
                "blow-up",
                f"non-finite diagnostics at t = {t:.6g}",
                records,
                snapshots,
            )
        records.append(rec)
        snapshots.append(snap)
        prev_psr, prev_t = psr, t
    return Trajectory(config, tuple(snapshots), tuple(records), stepper.dt)


# ---------------------------------------------------------------------------
# trajectory-level checks


def _cumtrapz(y: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def _fit_count(n: int) -> int:
    return max(2, n // 2)


def lp_evolution_check(
    trajectory: Trajectory,
    constants: dict | None = None,
    *,
    slack: float = 0.05,
) -> list[InequalityVerdict]:
    """Per-record differential inequality for the weighted p-th power norm.

    Checks d/dt M_{k,p} + c_p D_{s,k+gamma,p} against the two quadrature
    terms that bound it: the singular-convolution integral and the
    lower-weight norm.  When constants are not supplied they are fitted
    on the first half of the records: the dissipation coefficient c_p is
    half the smallest observed ratio of structural right side to
    dissipation (so the dissipation term carries real weight and the fit
    can never go degenerate), and one shared prefactor scales both right
    side terms to cover the fit records.  The finite-difference time
    derivative uses centered differences inside and one-sided stencils
    at the ends.
    """
    records = trajectory.records
    if len(records) < 3:
        raise ValueError(
            f"lp_evolution_check needs at least 3 records, got {len(records)}"
        )
    config = trajectory.config
    p, k = config.p, config.k
    gamma, s = config.kernel.gamma, config.kernel.s
    grid = config.grid
    times = trajectory.times
    m_kp = np.array([r.m_kp for r in records])
    wk = weight(grid, (k + gamma) / 2.0).values
    wk_full = weight(grid, k).values if k != 0.0 else None
    diss = np.empty(len(records))
    conv_term = np.empty(len(records))
    m_low = np.empty(len(records))
    cv = grid.cell_volume
    for i, f in enumerate(trajectory.snapshots):
        fp2 = f.values ** (p / 2.0)
        diss[i] = sobolev_norm(GridFunction(grid, fp2 * wk), s, homogeneous=True) ** 2
        cg = c_alpha(f, gamma).values
        fp = fp2**2
        if wk_full is not None:
            fp = fp * wk_full
        conv_term[i] = (p - 1.0) * float((cg * fp).sum()) * cv
        m_low[i] = lp_norm(f, p, k + gamma) ** p
    dm = np.gradient(m_kp, times)
    rhs_struct = conv_term + m_low
    if constants is None:
        nf = _fit_count(len(records))
        with np.errstate(divide="ignore"):
            budget = np.where(diss[:nf] > 0.0, rhs_struct[:nf] / diss[:nf], np.inf)
        c_p = 0.5 * float(budget.min())
        if not math.isfinite(c_p):
            c_p = 0.0
        scale = float(np.max((dm[:nf] + c_p * diss[:nf]) / rhs_struct[:nf]))
        scale = max(scale, 0.0)
        constants = {"c_p": c_p, "C_B": scale, "C_p": scale}
    c_p = constants["c_p"]
    rhs = constants["C_B"] * conv_term + constants["C_p"] * m_low
    verdicts = []
    for i in range(len(records)):
        verdicts.append(
            InequalityVerdict(
                name="lp_evolution",
                lhs=float(dm[i] + c_p * diss[i]),
                rhs=float(rhs[i]),
                slack=slack,
                fitted_constants=dict(constants),
                provenance={"t": float(times[i]), "index": i, "p": p, "k": k},
            )
        )
    return verdicts


@dataclass(frozen=True)
class EnvelopeResult:
    """An envelope curve over the record times plus its single verdict."""

    times: tuple[float, ...]
    values: tuple[float, ...]
    verdict: InequalityVerdict


def gronwall_envelope(
    trajectory: Trajectory,
    *,
    C1: float | None = None,
    slack: float = 0.05,
) -> EnvelopeResult:
    """Exponential propagation envelope for the weighted Lebesgue norm.

    The envelope integrand is 1 + ps_norm**r, extended by the moment of
    order 2k/p + |gamma| + 1 when k > 0 (the weighted version needs that
    extra moment to close).  With C1 unset, the smallest constant making
    the envelope hold on the first half of the records is fitted, and
    the verdict reports the worst norm-to-envelope ratio over the whole
    run.  The envelope is nondecreasing since the integrand is >= 1.
    """
    config = trajectory.config
    records = trajectory.records
    times = trajectory.times
    r = config.prodi_serrin.r
    p, k = config.p, config.k
    integrand = 1.0 + np.array([rec.ps_norm**r for rec in records])
    if k > 0.0:
        ell = 2.0 * k / p + abs(config.kernel.gamma) + 1.0
        integrand = integrand + np.array(
            [moment(f, ell) for f in trajectory.snapshots]
        )
    accum = _cumtrapz(integrand, times)
    norms = np.array([rec.m_kp for rec in records]) ** (1.0 / p)
    norm0 = norms[0]
    if C1 is None:
        nf = _fit_count(len(records))
        ratios = [
            p * math.log(norms[i] / norm0) / accum[i]
            for i in range(1, nf)
            if accum[i] > 0.0 and norms[i] > 0.0
        ]
        C1 = max(max(ratios, default=0.0), 0.0)
    envelope = norm0 * np.exp(C1 * accum / p)
    worst = float(np.max(norms / envelope)) if norm0 > 0.0 else float(np.max(norms) > 0.0)
    verdict = InequalityVerdict(
        name="gronwall_envelope",
        lhs=worst,
        rhs=1.0,
        slack=slack,
        fitted_constants={"C1": float(C1)},
        provenance={"p": p, "k": k, "q": config.q, "r": r},
    )
    return EnvelopeResult(tuple(times), tuple(float(x) for x in envelope), verdict)


def appearance_envelope(
    trajectory: Trajectory,
    *,
    K: float | None = None,
    slack: float = 0.05,
) -> EnvelopeResult:
    """Algebraic-in-time appearance envelope for the weighted norm.

    envelope(t) = K * t**(-(d/2s)(1 - 1/p)) * sup_tau m_eta(tau), with K
    fitted on the first half of the positive-time records when not
    supplied.  The t = 0 record is reported as an infinite envelope
    value and never constrains the verdict.
    """
    config = trajectory.config
    records = trajectory.records
    times = trajectory.times
    d, s, p = config.grid.d, config.kernel.s, config.p
    exponent = d / (2.0 * s) * (1.0 - 1.0 / p)
    sup_m = max(rec.m_eta for rec in records)
    norms = np.array([rec.m_kp for rec in records]) ** (1.0 / p)
    if K is None:
        nf = _fit_count(len(records))
        cands = [
            norms[i] * times[i] ** exponent / sup_m for i in range(1, nf) if sup_m > 0.0
        ]
        K = max(cands, default=0.0)
    envelope = np.full(len(records), math.inf)
    pos = times > 0.0
    envelope[pos] = K * times[pos] ** (-exponent) * sup_m
    with np.errstate(invalid="ignore"):
        ratios = np.where(np.isfinite(envelope), norms / envelope, 0.0)
    worst = float(np.max(ratios)) if np.any(pos) else 0.0
    verdict = InequalityVerdict(
        name="appearance_envelope",
        lhs=worst,
        rhs=1.0,
        slack=slack,
        fitted_constants={"K": float(K), "exponent": float(exponent)},
        provenance={"sup_m_eta": float(sup_m), "eta": float(config.eta)},
    )
    return EnvelopeResult(tuple(times), tuple(float(x) for x in envelope), verdict)


def appearance_ode_check(
    K: float,
    beta: float,
    *,
    y0: float = 1e6,
    t_min: float = 1e-3,
    horizon: float = 1.0,
    tol: float = 0.01,
) -> InequalityVerdict:
    """Pure ODE leg of the appearance machinery: integrate y' = -K y^(1+beta)
    numerically and compare with the closed-form solution
    (y0^-beta + K beta t)^(-1/beta).

    The asymptotic shorthand (K beta t)^(-1/beta) drops the initial-value
    term; it is always an upper bound for y, but for some (K, beta) it is
    far from the solution at small times even with y0 = 1e6, so the
    two-sided comparison here targets the full closed form and the
    shorthand deviation is reported in the provenance.
    """
    if K <= 0.0 or beta <= 0.0 or y0 <= 0.0:
        raise ValueError(f"K, beta, y0 must be positive, got {(K, beta, y0)}")
    t_eval = np.geomspace(t_min, horizon, 200)
    sol = solve_ivp(
        lambda _t, y: -K * y ** (1.0 + beta),
        (0.0, horizon),
        [y0],
        method="LSODA",
        t_eval=t_eval,
        rtol=1e-10,
        atol=1e-300,
    )
    if not sol.success:
        raise RuntimeError(f"ODE integration failed: {sol.message}")
    numeric = sol.y[0]
    exact = (y0 ** (-beta) + K * beta * t_eval) ** (-1.0 / beta)
    shorthand = (K * beta * t_eval) ** (-1.0 / beta)
    rel = float(np.max(np.abs(numeric - exact) / exact))
    return InequalityVerdict(
        name="appearance_ode",
        lhs=rel,
        rhs=tol,
        slack=0.0,
        provenance={
            "K": K,
            "beta": beta,
            "y0": y0,
            "shorthand_max_rel": float(np.max(np.abs(numeric - shorthand) / shorthand)),
            "shorthand_upper_bound": bool(np.all(numeric <= shorthand * (1.0 + 1e-9))),
        },
    )


def endpoint_r1_check(
    trajectory: Trajectory,
    p: float,
    *,
    C0: float | None = None,
    slack: float = 0.05,
) -> InequalityVerdict:
    """Endpoint propagation envelope driven by the plain L^{q0} norm,
    q0 = d/(d+gamma), valid only on the stated band of exponents."""
    config = trajectory.config
    d, gamma = config.grid.d, config.kernel.gamma
    q0 = d / (d + gamma)
    if not 1.0 < p < q0:
        raise ValueError(
            f"endpoint exponent p must lie in (1, d/(d+gamma)) = (1, {q0:g}), got {p}"
        )
    times = trajectory.times
    norms = np.array([lp_norm(f, p) for f in trajectory.snapshots])
    q0_norms = np.array([lp_norm(f, q0) for f in trajectory.snapshots])
    accum = _cumtrapz(q0_norms, times)
    norm0 = norms[0]
    if C0 is None:
        nf = _fit_count(len(trajectory.records))
        ratios = [
            p * math.log(norms[i] / norm0) / accum[i]
            for i in range(1, nf)
            if accum[i] > 0.0 and norms[i] > 0.0
        ]
        C0 = max(max(ratios, default=0.0), 0.0)
    envelope = norm0 * np.exp(C0 * accum / p)
    worst = float(np.max(norms / envelope)) if norm0 > 0.0 else float(np.max(norms) > 0.0)
    return InequalityVerdict(
        name="endpoint_r1",
        lhs=worst,
        rhs=1.0,
        slack=slack,
        fitted_constants={"C0": float(C0)},
        provenance={"p": p, "q0": q0},
    )


# ---------------------------------------------------------------------------
# twin-run stability


@dataclass(frozen=True)
class StabilityTrace:
    """Twin-run distance and the recorded Gronwall integrand components.

    theta_raw is the unit-constant integrand: 1 + the two collision
    growth functionals + the strong-norm term of the first run + the
    space-time term of the second; the fitted prefactor lives in the
    verdict next to it.
    """

    times: tuple[float, ...]
    n_vals: tuple[float, ...]
    lambda_h: tuple[float, ...]
    lambda_g: tuple[float, ...]
    hs_h: tuple[float, ...]
    ps_g: tuple[float, ...]
    theta_raw: tuple[float, ...]


def _lambda_raw(f: GridFunction, config: SolverConfig, nu_lam: float) -> float:
    """Unit-constant growth functional entering the stability integrand."""
    gamma, s, k = config.kernel.gamma, config.kernel.s, config.k
    grid = config.grid
    head = 1.0 + math.sqrt(moment(f, gamma + 3.0 + 2.0 * s))
    wk2 = weight(grid, k / 2.0).values
    hs = sobolev_norm(GridFunction(grid, wk2 * f.values), s, homogeneous=False) ** 2
    tail = (
        moment(f, 4.0 + abs(gamma))
        + hs
        + lp_norm(f, 2.0, 2.0 * (4.0 + abs(gamma))) ** (s / (s - nu_lam))
    )
    return head * tail


def stability_run(
    h0: GridFunction,
    g0: GridFunction,
    config: SolverConfig,
    *,
    slack: float = 0.05,
) -> tuple[StabilityTrace, InequalityVerdict]:
    """Evolve two initial states side by side and check the weighted-L2
    distance against its Gronwall cone.

    Both runs share one stepping loop and one step-size sequence, so
    identical inputs produce bitwise identical states and an exactly
    zero trace.  The cone constant is fitted on the first half of the
    records; the verdict reports the worst distance-to-cone ratio over
    the full horizon.
    """
    failures = []
    if config.grid.d != 3:
        failures.append(f"stability runs are fixed to d = 3, got d = {config.grid.d}")
    s, gamma, k = config.kernel.s, config.kernel.gamma, config.k
    if not config.k > 11.0 + 4.0 * s:
        failures.append(f"weight exponent k must exceed 11 + 4s = {11.0 + 4.0 * s}, got {k}")
    if not -1.5 < gamma + 2.0 * s < 0.0:
        failures.append(
            f"stability needs -3/2 < gamma + 2s < 0, got gamma + 2s = {gamma + 2.0 * s}"
        )
    nu_lam = -(3.0 + 2.0 * gamma) / 4.0
    if not 0.0 < nu_lam < s:
        failures.append(
            f"growth functional exponent -(3 + 2 gamma)/4 = {nu_lam} must lie in (0, s)"
        )
    if failures:
        raise ValueError("; ".join(failures))
    _check_initial(h0, config, "first initial state")
    _check_initial(g0, config, "second initial state")

    r = config.prodi_serrin.r
    qg = config.q * abs(gamma)
    wkg2 = weight(config.grid, (k - gamma) / 2.0).values

    def observe(hv: np.ndarray, gv: np.ndarray):
        h = GridFunction(config.grid, hv)
        g = GridFunction(config.grid, gv)
        diff = GridFunction(config.grid, hv - gv)
        nval = lp_norm(diff, 2.0, k) ** 2
        lam_h = _lambda_raw(h, config, nu_lam)
        lam_g = _lambda_raw(g, config, nu_lam)
        hs_h = sobolev_norm(
            GridFunction(config.grid, wkg2 * hv), s, homogeneous=False
        ) ** 2
        ps_g = lp_norm(g, config.q, qg) ** r
        return nval, lam_h, lam_g, hs_h, ps_g

    stepper = _StateStepper(config)
    hv = np.array(h0.values, dtype=float)
    gv = np.array(g0.values, dtype=float)
    rows = [observe(hv, gv)]
    times = [0.0]
    while not stepper.done:
        try:
            t, (hv, gv), _clipped = stepper.advance([hv, gv])
        except _NonFinite:
            raise SolverRunError(
                "blow-up",
                f"non-finite state at t = {stepper.t + stepper.dt:.6g} in twin run",
                [],
                [],
            ) from None
        except _ClipBudget as exc:
            raise SolverRunError(
                "clipping",
                f"clipped mass {exc.removed:.3e} exceeds the per-step budget in twin run",
                [],
                [],
            ) from None
        times.append(t)
        rows.append(observe(hv, gv))
    n_vals, lam_h, lam_g, hs_h, ps_g = (np.array(col) for col in zip(*rows))
    theta_raw = 1.0 + lam_h + lam_g + hs_h + ps_g
    t_arr = np.array(times)
    accum = _cumtrapz(theta_raw, t_arr)
    n0 = float(n_vals[0])
    nf = _fit_count(len(times))
    if n0 > 0.0:
        ratios = [
            math.log(n_vals[i] / n0) / (2.0 * accum[i])
            for i in range(1, nf)
            if accum[i] > 0.0 and n_vals[i] > 0.0
        ]
        c_fit = max(max(ratios, default=0.0), 0.0)
        cone = n0 * np.exp(2.0 * c_fit * accum)
        worst = float(np.max(n_vals / cone))
    else:
        c_fit = 0.0
        worst = 0.0 if float(np.max(n_vals)) == 0.0 else math.inf
    verdict = InequalityVerdict(
        name="stability_cone",
        lhs=worst,
        rhs=1.0,
        slack=slack,
        fitted_constants={"C": float(c_fit)},
        provenance={"k": k, "s": s, "gamma": gamma, "q": config.q, "n0": n0},
    )
    trace = StabilityTrace(
        times=tuple(times),
        n_vals=tuple(float(x) for x in n_vals),
        lambda_h=tuple(float(x) for x in lam_h),
        lambda_g=tuple(float(x) for x in lam_g),
        hs_h=tuple(float(x) for x in hs_h),
        ps_g=tuple(float(x) for x in ps_g),
        theta_raw=tuple(float(x) for x in theta_raw),
    )
    return trace, verdict


# ---------------------------------------------------------------------------
# trajectory serialization


def trajectory_csv_columns(d: int) -> list[str]:
    axes = "xyz"[:d]
    return (
        ["t", "M_kp", "D_skp", "ps_norm", "ps_accum"]
        + ["mass"]
        + [f"momentum_{a}" for a in axes]
        + ["energy", "clipped_mass"]
    )


def write_trajectory_csv(fp, trajectory: Trajectory) -> None:
    """One row per record, full repr precision so reruns compare bytewise."""
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(trajectory_csv_columns(trajectory.config.grid.d))
    for rec in trajectory.records:
        row = [rec.t, rec.m_kp, rec.d_skp, rec.ps_norm, rec.ps_accum, rec.mass]
        row += list(rec.momentum)
        row += [rec.energy, rec.clipped_mass]
        writer.writerow([repr(float(x)) for x in row])
