"""Norm tracking, decay-rate fitting, smallness conditions, and run reports.

The three smallness evaluators compute the left-hand sides of the global
existence conditions exactly as closed formulas of the initial norms, the
damping coefficient, and the tunable surrogate constant K. Exponentials are
evaluated in log space first so that wildly violated conditions report an
infinite left-hand side instead of overflowing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import ScalarField, grad_inf, lp_norm
from .littlewood_paley import BesovIndex, besov_norm

LOG_HUGE = 700.0  # exp threshold before float overflow


def _safe_exp(x: float) -> float:
    return math.inf if x > LOG_HUGE else math.exp(x)


# ---------------------------------------------------------------------------
# per-step records


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    l2_u: float
    besov_u: tuple[float, ...]
    l2_grad_pi: float
    besov_grad_pi: tuple[float, ...]
    besov_rho_minus_1: float
    rho_min: float
    rho_max: float
    energy: float
    grad_u_inf: float
    bkm_running: float


def make_record(state, config, bank, prev: DiagnosticsRecord | None) -> DiagnosticsRecord:
    """Evaluate one diagnostics row; the BKM integral extends the previous
    row by the trapezoid rule."""
    u = state.u
    grad_pi = state.grad_pi
    rho = state.rho
    rho_m1 = rho + ScalarField.constant(rho.grid, -1.0)
    g_inf = grad_inf(u)
    if prev is None:
        bkm = 0.0
    else:
        bkm = prev.bkm_running + 0.5 * (state.t - prev.t) * (g_inf + prev.grad_u_inf)
    return DiagnosticsRecord(
        t=state.t,
        l2_u=lp_norm(u, 2),
        besov_u=tuple(besov_norm(bank, u, idx) for idx in config.besov_indices),
        l2_grad_pi=lp_norm(grad_pi, 2),
        besov_grad_pi=tuple(besov_norm(bank, grad_pi, idx) for idx in config.besov_indices),
        besov_rho_minus_1=besov_norm(bank, rho_m1, BesovIndex(1.0, math.inf, 1.0)),
        rho_min=float(rho.values.min()),
        rho_max=float(rho.values.max()),
        energy=0.5 * float(np.mean(rho.values * u.magnitude() ** 2)),
        grad_u_inf=g_inf,
        bkm_running=bkm,
    )


# ---------------------------------------------------------------------------
# decay fitting


@dataclass(frozen=True)
class DecayFit:
    rate: float
    intercept: float
    r_squared: float
    window: tuple[float, float]


def fit_decay_rate(series, window=None) -> DecayFit:
    """Least-squares exponential rate from a (t, value) series.

    Fits a line to (t, log value) inside the window (default: trailing half)
    and returns minus its slope. Requires at least five strictly positive
    points in the window.
    """
    ts = np.asarray([t for t, _ in series], dtype=float)
    vs = np.asarray([v for _, v in series], dtype=float)
    if window is None:
        t_end = ts[-1] if len(ts) else 0.0
        window = (0.5 * t_end, t_end)
    lo, hi = window
    mask = (ts >= lo) & (ts <= hi)
    ts, vs = ts[mask], vs[mask]
    if len(ts) < 5:
        raise ValueError(f"need at least 5 points in window, got {len(ts)}")
    if np.any(vs <= 0.0):
        raise ValueError("series has nonpositive values in the fit window")
    logv = np.log(vs)
    slope, intercept = np.polyfit(ts, logv, 1)
    fitted = slope * ts + intercept
    ss_res = float(np.sum((logv - fitted) ** 2))
    ss_tot = float(np.sum((logv - logv.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    return DecayFit(rate=-float(slope), intercept=float(intercept),
                    r_squared=r_squared, window=(float(lo), float(hi)))


# ---------------------------------------------------------------------------
# smallness conditions


@dataclass(frozen=True)
class SmallnessParams:
    """Tunable surrogates for the existential constants in the conditions.

    K stands in for the absolute constant; eta is the heterogeneity exponent
    (must exceed 5 in the planar gamma = 1 condition, where any value
    arbitrarily close to 5 is admissible); delta is the interpolation slack.
    """

    K: float = 1.0
    eta: float = 2.0
    eta_2d: float = 5.01
    delta: float = 0.01

    def __post_init__(self):
        if self.K <= 0 or self.eta <= 0 or self.delta <= 0:
            raise ValueError("K, eta, delta must be positive")


@dataclass(frozen=True)
class InitialNorms:
    """The low-regularity norms of the initial data that the conditions use."""

    u_besov1: float       # ||u0||_{B^1_{inf,1}}
    u_l2: float           # ||u0||_{L^2}
    rho_besov1: float     # ||rho0 - 1||_{B^1_{inf,1}}

    @property
    def u_intersection(self) -> float:
        return self.u_l2 + self.u_besov1


@dataclass(frozen=True)
class ConditionReport:
    theorem_id: str
    lhs: tuple[float, ...]
    thresholds: tuple[float, ...]
    satisfied: bool
    inputs: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "theorem_id": self.theorem_id,
            "lhs": list(self.lhs),
            "thresholds": list(self.thresholds),
            "satisfied": self.satisfied,
            "inputs": dict(self.inputs),
        }


def _echo(norms: InitialNorms, alpha: float, params: SmallnessParams) -> dict:
    return {
        "alpha": alpha,
        "u_besov1": norms.u_besov1,
        "u_l2": norms.u_l2,
        "rho_besov1": norms.rho_besov1,
        "K": params.K,
    }


def smallness_gamma1_general(
    norms: InitialNorms, alpha: float, params: SmallnessParams | None = None
) -> ConditionReport:
    """Condition for gamma = 1 in general dimension:

        (1/alpha) ||u0||_B1 * exp((1 + ||rho0-1||_B1^eta) e^K (||u0||_L2/alpha + 1)) < 2
    """
    params = params or SmallnessParams()
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if norms.u_besov1 == 0.0:
        lhs = 0.0
    else:
        exponent = (1.0 + norms.rho_besov1**params.eta) * math.exp(params.K) * (
            norms.u_l2 / alpha + 1.0
        )
        lhs = norms.u_besov1 / alpha * _safe_exp(exponent)
    return ConditionReport(
        "gamma1_general", (lhs,), (2.0,), lhs < 2.0,
        inputs=_echo(norms, alpha, params) | {"eta": params.eta},
    )


def smallness_gamma0_general(
    norms: InitialNorms, alpha: float, params: SmallnessParams | None = None
) -> ConditionReport:
    """Condition pair for gamma = 0, with R = 1 + ||rho0-1||_B1^eta:

        K R e^{K R} ||u0||_{L2 and B1} / alpha < 2
        K R^3 e^{K R} ||u0||_{L2 and B1}^2 / alpha < 4
    """
    params = params or SmallnessParams()
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    big_r = 1.0 + norms.rho_besov1**params.eta
    u = norms.u_intersection
    expkr = _safe_exp(params.K * big_r)
    lhs1 = params.K * big_r * expkr * u / alpha
    lhs2 = params.K * big_r**3 * expkr * u**2 / alpha
    return ConditionReport(
        "gamma0_general", (lhs1, lhs2), (2.0, 4.0), lhs1 < 2.0 and lhs2 < 4.0,
        inputs=_echo(norms, alpha, params) | {"eta": params.eta, "R": big_r},
    )


def smallness_gamma1_2d(
    norms: InitialNorms, alpha: float, params: SmallnessParams | None = None
) -> ConditionReport:
    """Planar gamma = 1 condition, small heterogeneity but arbitrary velocity:

        ||rho0-1||_B1 (1 + ||rho0-1||_B1^eta) ||u0||_{L2 and B1}
            * Phi_K(||u0||_{L2 and B1}) < 4

    with Phi_K(z) = exp(2 K z / alpha) * exp(K exp(K z / alpha)); eta > 5.
    """
    params = params or SmallnessParams()
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    eta = params.eta_2d
    if eta <= 5.0:
        raise ValueError("the planar condition requires eta > 5")
    u = norms.u_intersection
    if norms.rho_besov1 == 0.0:
        lhs = 0.0
    else:
        log_phi = 2.0 * params.K * u / alpha + params.K * _safe_exp(params.K * u / alpha)
        log_lhs = (
            math.log(norms.rho_besov1)
            + math.log1p(norms.rho_besov1**eta)
            + (math.log(u) if u > 0 else -math.inf)
            + log_phi
        )
        lhs = _safe_exp(log_lhs) if log_lhs > -math.inf else 0.0
    return ConditionReport(
        "gamma1_2d", (lhs,), (4.0,), lhs < 4.0,
        inputs=_echo(norms, alpha, params) | {"eta": eta},
    )


def beta0(alpha: float, rho_upper: float, s: float, d: int = 2, delta: float = 0.01) -> float:
    """Guaranteed decay rate for gamma = 0 in the high-regularity norms.

    With sigma = d/2 + delta and the interpolation exponent
    theta0 = 1/(s + sigma), returns theta0/(1 + theta0) * alpha/rho_upper,
    which always lies strictly between 0 and alpha/rho_upper.
    """
    if alpha <= 0 or rho_upper <= 0:
        raise ValueError("alpha and rho_upper must be positive")
    if s < 1:
        raise ValueError("s must be >= 1")
    if delta <= 0:
        raise ValueError("delta must be positive")
    sigma = d / 2.0 + delta
    theta0 = 1.0 / (s + sigma)
    return theta0 / (1.0 + theta0) * alpha / rho_upper


# ---------------------------------------------------------------------------
# run-level reports


def bkm_report(records) -> tuple[float, list[float]]:
    """Running continuation integral of ||grad u||_inf and its per-interval
    increments; geometric tail decay of the increments is the numerical hint
    of global regularity."""
    if len(records) < 2:
        raise ValueError("need at least two records")
    increments = [
        records[i].bkm_running - records[i - 1].bkm_running
        for i in range(1, len(records))
    ]
    return records[-1].bkm_running, increments


def bkm_tail_geometric(increments, tail: int = 5) -> bool:
    """Advisory verdict: do the last `tail` increments decay geometrically?"""
    if len(increments) < tail + 1:
        return False
    window = increments[-(tail + 1):]
    return all(b < a or b == 0.0 for a, b in zip(window, window[1:]))


def energy_balance_residual(records, gamma: int, alpha: float) -> float:
    """Max relative defect of the kinetic energy balance across the records.

    Uses centered differencing of the recorded energy against the damping
    dissipation alpha * avg(rho^gamma |u|^2), normalized by alpha * energy(0).
    Requires at least three uniformly spaced records.
    """
    if len(records) < 3:
        raise ValueError("need at least three records")
    ts = np.array([r.t for r in records])
    gaps = np.diff(ts)
    if np.max(np.abs(gaps - gaps[0])) > 1e-9 * max(gaps[0], 1e-300):
        raise ValueError("records are not uniformly spaced")
    dt = gaps[0]
    energy = np.array([r.energy for r in records])
    if gamma == 1:
        dissipation = 2.0 * energy
    else:
        dissipation = np.array([r.l2_u**2 for r in records])
    dedt = (energy[2:] - energy[:-2]) / (2.0 * dt)
    resid = np.abs(dedt + alpha * dissipation[1:-1])
    scale = alpha * energy[0]
    if scale == 0.0:
        return float(np.max(resid))
    return float(np.max(resid) / scale)
