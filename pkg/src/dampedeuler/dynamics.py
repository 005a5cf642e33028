"""Time integration of the damped variable-density incompressible system.

The state (rho, u) evolves under

    d_t rho + u . grad rho = 0
    d_t u + u . grad u + (1/rho) grad Pi + alpha rho^(gamma-1) u = 0
    div u = 0

with the pressure gradient recovered each stage from the elliptic solve that
keeps the tendency divergence-free. Stepping is explicit RK4 with a Leray
projection after each accepted step; damping is integrated inside the
tendency (it is not stiff for the coefficient sizes of interest).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .elliptic import PressureSolveError, PressureSolveParams, solve_pressure
from .fields import (
    GridSpec,
    ScalarField,
    VectorField,
    advect,
    advect_vector,
    dealias,
    dealias_vector,
    divergence,
    leray_project,
    lp_norm,
    perp_gradient,
    scale_vector,
)
from .littlewood_paley import BesovIndex

DENSITY_DRIFT_TOL = 1e-6
DIV_DRIFT_TOL = 1e-10


class InvariantViolation(RuntimeError):
    """A state invariant (density bounds, incompressibility) drifted too far."""


@dataclass(frozen=True)
class ICRecipe:
    """Initial-condition recipe: preset names plus their parameters."""

    u_preset: str = "taylor_green"
    u_params: dict | None = None
    rho_preset: str = "constant"
    rho_params: dict | None = None
    seed: int = 0


@dataclass(frozen=True)
class SimConfig:
    alpha: float
    gamma: int
    grid: GridSpec
    dt: float
    t_end: float
    ic: ICRecipe
    pressure: PressureSolveParams = PressureSolveParams()
    besov_indices: tuple[BesovIndex, ...] = (BesovIndex(1.0, math.inf, 1.0),)
    record_every: int = 1

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.gamma not in (0, 1):
            raise ValueError("gamma must be 0 or 1")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass(frozen=True)
class FluidState:
    """Snapshot (t, rho, u) with an optional cached pressure gradient.

    rho_bounds holds the initial density range; the transport equation
    preserves it up to spectral truncation drift, which step_rk4 asserts.
    """

    t: float
    rho: ScalarField
    u: VectorField
    grad_pi: VectorField | None = None
    rho_bounds: tuple[float, float] | None = None


# ---------------------------------------------------------------------------
# initial-condition presets


def taylor_green(grid: GridSpec, amplitude: float = 1.0) -> VectorField:
    """Cellular steady Euler flow (sin x cos y, -cos x sin y), scaled."""
    x, y = grid.nodes()
    return VectorField.from_arrays(
        grid,
        amplitude * np.sin(x) * np.cos(y),
        -amplitude * np.cos(x) * np.sin(y),
        divergence_free=True,
    )


def random_shell(grid: GridSpec, j: int = 2, amplitude: float = 1.0, seed: int = 0) -> VectorField:
    """Divergence-free random field spectrally confined to dyadic shell j."""
    from .littlewood_paley import build_filter_bank

    bank = build_filter_bank(grid)
    if not 0 <= j <= bank.j_max:
        raise ValueError(f"shell index {j} outside [0, {bank.j_max}]")
    rng = np.random.default_rng(seed)
    prof = bank.phi_profiles[j]
    comps = []
    for _ in range(2):
        white = np.fft.fftn(rng.standard_normal(grid.shape))
        comps.append(ScalarField.from_spectrum(grid, white * prof))
    v = leray_project(VectorField(tuple(comps)))
    norm = lp_norm(v, 2)
    if norm == 0.0:
        raise ValueError("degenerate random shell draw")
    return v * (amplitude / norm)


def swirl(grid: GridSpec, amplitude: float = 1.0) -> VectorField:
    """Grid-periodic swirl (-sin y, sin x): rigid rotation near the origin,
    hyperbolic stagnation points at (0, pi) and (pi, 0)."""
    x, y = grid.nodes()
    return VectorField.from_arrays(
        grid, -amplitude * np.sin(y), amplitude * np.sin(x), divergence_free=True
    )


def rho_constant(grid: GridSpec, value: float = 1.0) -> ScalarField:
    if value <= 0:
        raise ValueError("density must be positive")
    return ScalarField.constant(grid, value)


def rho_single_mode(grid: GridSpec, k: int = 1, amplitude: float = 0.1) -> ScalarField:
    """1 + amplitude * cos(k x); requires |amplitude| < 1 to avoid vacuum."""
    if abs(amplitude) >= 1.0:
        raise ValueError("|amplitude| must be < 1 to keep the density positive")
    x, _ = grid.nodes()
    return ScalarField.from_values(grid, 1.0 + amplitude * np.cos(k * x))


def rho_gaussian_bump(grid: GridSpec, width: float = 0.5, amplitude: float = 0.2) -> ScalarField:
    """1 + amplitude * smooth periodic bump centered at (pi, pi)."""
    if amplitude <= -1.0:
        raise ValueError("amplitude must exceed -1 to keep the density positive")
    if width <= 0:
        raise ValueError("width must be positive")
    x, y = grid.nodes()
    # chordal distance keeps the bump smooth and periodic
    dsq = 4.0 * np.sin((x - np.pi) / 2) ** 2 + 4.0 * np.sin((y - np.pi) / 2) ** 2
    return ScalarField.from_values(grid, 1.0 + amplitude * np.exp(-dsq / (2.0 * width**2)))


U_PRESETS = {"taylor_green": taylor_green, "random_shell": random_shell, "swirl": swirl}
RHO_PRESETS = {
    "constant": rho_constant,
    "single_mode": rho_single_mode,
    "gaussian_bump": rho_gaussian_bump,
}


def initial_state(config: SimConfig) -> FluidState:
    """Build the t = 0 state from the config's preset recipe."""
    ic = config.ic
    u_params = dict(ic.u_params or {})
    if ic.u_preset == "random_shell":
        u_params.setdefault("seed", ic.seed)
    try:
        u_factory = U_PRESETS[ic.u_preset]
        rho_factory = RHO_PRESETS[ic.rho_preset]
    except KeyError as exc:
        raise ValueError(f"unknown preset {exc.args[0]!r}") from None
    u = dealias_vector(u_factory(config.grid, **u_params))
    u = leray_project(u)
    rho = dealias(rho_factory(config.grid, **(ic.rho_params or {})))
    rho_min = float(rho.values.min())
    if rho_min <= 0.0:
        raise ValueError(f"initial density not positive: min = {rho_min:.3e}")

    cfl = config.dt * lp_norm(u, math.inf) * config.grid.n / config.grid.length
    if cfl > 0.5:
        warnings.warn(
            f"advisory: CFL number {cfl:.2f} exceeds 0.5; consider a smaller dt",
            stacklevel=2,
        )
    return FluidState(
        t=0.0,
        rho=rho,
        u=u,
        grad_pi=None,
        rho_bounds=(rho_min, float(rho.values.max())),
    )


# ---------------------------------------------------------------------------
# tendencies


def _damping_coefficient(rho: ScalarField, gamma: int) -> ScalarField | None:
    """rho^(gamma-1), or None when it is constant (gamma = 1 or uniform rho)."""
    if gamma == 1:
        return None
    return ScalarField.from_values(rho.grid, 1.0 / rho.values)


def momentum_forcing(state: FluidState, config: SimConfig) -> VectorField:
    """F = u . grad u + alpha rho^(gamma-1) u, dealiased; div(d_t u) = 0 holds
    because the pressure solve uses div F as its source."""
    adv = advect_vector(state.u, state.u)
    coeff = _damping_coefficient(state.rho, config.gamma)
    damp = dealias_vector(state.u) if coeff is None else scale_vector(state.u, coeff)
    return adv + config.alpha * damp


def pressure_gradient(state: FluidState, config: SimConfig) -> VectorField:
    """Pressure gradient consistent with the current state."""
    return solve_pressure(state.rho, momentum_forcing(state, config), config.pressure).grad_pi


def _velocity_tendency(
    state: FluidState, config: SimConfig, pi_guess: ScalarField | None = None
) -> tuple[VectorField, ScalarField]:
    forcing = momentum_forcing(state, config)
    sol = solve_pressure(state.rho, forcing, config.pressure, initial_guess=pi_guess)
    rv = state.rho.values
    rho_max = float(rv.max())
    if rho_max - float(rv.min()) <= 1e-14 * rho_max:  # uniform density
        return -(forcing + sol.grad_pi * (1.0 / rho_max)), sol.pi
    inv_rho = ScalarField.from_values(state.rho.grid, 1.0 / rv)
    return -(forcing + scale_vector(sol.grad_pi, inv_rho)), sol.pi


def momentum_rhs(state: FluidState, config: SimConfig) -> VectorField:
    """Velocity tendency -u . grad u - (1/rho) grad Pi - alpha rho^(gamma-1) u."""
    return _velocity_tendency(state, config)[0]


def density_rhs(state: FluidState) -> ScalarField:
    """Density tendency -u . grad rho."""
    return -advect(state.u, state.rho)


def vorticity_forcing(state: FluidState, config: SimConfig) -> ScalarField:
    """Source term of the planar vorticity equation in rescaled variables.

    Returns -perp_grad(1/rho) . exp(alpha t) grad Pi, which vanishes
    identically for constant density; the vorticity is then purely
    transported.
    """
    grad_pi = state.grad_pi
    if grad_pi is None:
        grad_pi = pressure_gradient(state, config)
    inv_rho = ScalarField.from_values(state.rho.grid, 1.0 / state.rho.values)
    pg = perp_gradient(inv_rho)
    factor = math.exp(config.alpha * state.t)
    dot = (
        pg.components[0].values * grad_pi.components[0].values
        + pg.components[1].values * grad_pi.components[1].values
    )
    return dealias(ScalarField.from_values(state.rho.grid, -factor * dot))


def rescaled_view(state: FluidState, beta: float) -> tuple[VectorField, VectorField]:
    """Exponentially compensated fields (e^{beta t} u, e^{beta t} grad Pi)."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if state.grad_pi is None:
        raise ValueError("state carries no pressure-gradient cache")
    factor = math.exp(beta * state.t)
    return state.u * factor, state.grad_pi * factor


# ---------------------------------------------------------------------------
# stepping


def _check_invariants(state: FluidState) -> None:
    lo, hi = state.rho_bounds
    rho_min = float(state.rho.values.min())
    rho_max = float(state.rho.values.max())
    if rho_min < lo * (1.0 - DENSITY_DRIFT_TOL) - DENSITY_DRIFT_TOL * hi:
        raise InvariantViolation(
            f"density minimum drifted below its initial bound: "
            f"{rho_min:.12g} < {lo:.12g} at t = {state.t:.6g}"
        )
    if rho_max > hi * (1.0 + DENSITY_DRIFT_TOL) + DENSITY_DRIFT_TOL * hi:
        raise InvariantViolation(
            f"density maximum drifted above its initial bound: "
            f"{rho_max:.12g} > {hi:.12g} at t = {state.t:.6g}"
        )
    u_norm = lp_norm(state.u, 2)
    div_norm = lp_norm(divergence(state.u), 2)
    if div_norm > DIV_DRIFT_TOL * max(u_norm, 1e-300):
        raise InvariantViolation(
            f"divergence drift {div_norm:.3e} exceeds {DIV_DRIFT_TOL:.0e} * |u| "
            f"at t = {state.t:.6g}"
        )


def step_rk4(state: FluidState, config: SimConfig) -> FluidState:
    """Advance one RK4 step with per-stage pressure solves.

    The updated velocity is Leray-projected to absorb the O(dt^5) divergence
    drift, and the density/velocity stay truncated to retained modes. State
    invariants are asserted on the result.
    """
    if state.rho_bounds is None:
        state = replace(
            state,
            rho_bounds=(float(state.rho.values.min()), float(state.rho.values.max())),
        )
    dt = config.dt
    pi_cache: list[ScalarField | None] = [None]

    def stage(s: FluidState) -> tuple[ScalarField, VectorField]:
        # warm-start each stage's pressure solve from the previous stage:
        # the converged potential is guess-independent
        tendency, pi = _velocity_tendency(s, config, pi_cache[0])
        pi_cache[0] = pi
        return density_rhs(s), tendency

    k1r, k1u = stage(state)
    s2 = FluidState(state.t + dt / 2, state.rho + 0.5 * dt * k1r,
                    state.u + 0.5 * dt * k1u, rho_bounds=state.rho_bounds)
    k2r, k2u = stage(s2)
    s3 = FluidState(state.t + dt / 2, state.rho + 0.5 * dt * k2r,
                    state.u + 0.5 * dt * k2u, rho_bounds=state.rho_bounds)
    k3r, k3u = stage(s3)
    s4 = FluidState(state.t + dt, state.rho + dt * k3r,
                    state.u + dt * k3u, rho_bounds=state.rho_bounds)
    k4r, k4u = stage(s4)

    rho_new = dealias(
        state.rho + (dt / 6.0) * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
    )
    u_new = leray_project(
        dealias_vector(state.u + (dt / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u))
    )
    new = FluidState(
        t=state.t + dt,
        rho=rho_new,
        u=u_new,
        grad_pi=None,
        rho_bounds=state.rho_bounds,
    )
    _check_invariants(new)
    return new


# ---------------------------------------------------------------------------
# simulation driver


@dataclass(frozen=True)
class SimulationResult:
    records: list  # DiagnosticsRecord rows, in time order
    final_state: FluidState | None
    failed: bool = False
    failure: str | None = None


def run_simulation(config: SimConfig) -> SimulationResult:
    """Integrate to t_end, emitting one diagnostics row every record_every
    steps (plus the final step). Deterministic for a fixed config and seed.

    On an invariant or solver failure the rows collected so far are returned
    with the failure recorded.
    """
    from .diagnostics import make_record
    from .littlewood_paley import build_filter_bank

    bank = build_filter_bank(config.grid)
    state = initial_state(config)
    n_steps = int(round(config.t_end / config.dt))

    records = []

    def record(s: FluidState) -> FluidState:
        s = replace(s, grad_pi=pressure_gradient(s, config))
        prev = records[-1] if records else None
        records.append(make_record(s, config, bank, prev))
        return s

    try:
        state = record(state)
        for step in range(1, n_steps + 1):
            state = step_rk4(state, config)
            if step % config.record_every == 0 or step == n_steps:
                state = record(state)
    except (InvariantViolation, PressureSolveError) as exc:
        return SimulationResult(records, state, failed=True, failure=str(exc))
    return SimulationResult(records, state, failed=False, failure=None)


def solve_linear_transport(
    velocity,
    f0: ScalarField,
    forcing=None,
    t_end: float = 1.0,
    dt: float = 1e-2,
    record_every: int = 1,
) -> list[tuple[float, ScalarField]]:
    """Integrate the passive transport equation d_t f + v . grad f = g.

    velocity maps t to a divergence-free VectorField; forcing maps t to a
    ScalarField (or is None). Returns [(t, f)] sampled every record_every
    steps. With g = 0 the L^2 norm is conserved up to the RK4 error.
    """
    grid = f0.grid

    def rhs(t: float, f: ScalarField) -> ScalarField:
        out = -advect(velocity(t), f)
        if forcing is not None:
            out = out + forcing(t)
        return out

    n_steps = int(round(t_end / dt))
    f = dealias(f0)
    trajectory = [(0.0, f)]
    t = 0.0
    for step in range(1, n_steps + 1):
        k1 = rhs(t, f)
        k2 = rhs(t + dt / 2, f + 0.5 * dt * k1)
        k3 = rhs(t + dt / 2, f + 0.5 * dt * k2)
        k4 = rhs(t + dt, f + dt * k3)
        f = dealias(f + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        t = step * dt
        if step % record_every == 0 or step == n_steps:
            trajectory.append((t, f))
    return trajectory
