"""Explicit integrator for the transformed column model.

Prognostic equations, with xi constant in z and kappa the pressure
stiffness:

    d_t xi + div_x(xi ubar) = 0
    d_t(xi u) + div_x(xi u x u) + d_z(xi u w) + kappa grad_x(xi)
        = 2 nu div_x(xi D_x(u)) + nu d2_zz(xi u) - r xi |u| u

The vertical velocity is not prognostic: it is diagnosed from the column
compatibility integral

    xi w(z) = int_0^z div_x( xi (ubar - u) ) dz'

which vanishes at the bottom face by construction and at the top face by
discrete telescoping. Time stepping is two-stage strong-stability-
preserving Runge-Kutta (Heun) under an advective/diffusive CFL bound.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import diagnostics
from .grid import (
    FaceFieldZ,
    Field2D,
    Field3D,
    GridSpec,
    d2dz2,
    div_x,
    field_values,
    grad_x,
)
from .states import ModelState

log = logging.getLogger(__name__)

# Source term provider for manufactured-solution runs: maps the stage time
# to (mass tendency (nx1, nx2), momentum tendencies (nx1, nx2, nz) pair).
SourceFn = Callable[[float], Tuple[np.ndarray, Tuple[np.ndarray, np.ndarray]]]


class NumericalError(RuntimeError):
    """Raised when the state degenerates (NaN/Inf) during a run."""

    def __init__(self, message: str, partial: Optional["RunResult"] = None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class Params:
    """Physical parameters of the model problem.

    nu        viscosity scale (> 0)
    r         quadratic friction coefficient (>= 0)
    kappa     pressure stiffness in front of grad_x(xi) (> 0)
    xi_floor  positivity floor applied after each stage
    """

    nu: float
    r: float = 0.0
    kappa: float = 1.0
    xi_floor: float = 1e-10

    def __post_init__(self):
        if not (self.nu > 0.0 and math.isfinite(self.nu)):
            raise ValueError(f"nu must be positive, got {self.nu!r}")
        if not (self.r >= 0.0 and math.isfinite(self.r)):
            raise ValueError(f"r must be nonnegative, got {self.r!r}")
        if not (self.kappa > 0.0 and math.isfinite(self.kappa)):
            raise ValueError(f"kappa must be positive, got {self.kappa!r}")
        if not (self.xi_floor > 0.0 and math.isfinite(self.xi_floor)):
            raise ValueError(f"xi_floor must be positive, got {self.xi_floor!r}")


@dataclass(frozen=True)
class SolverConfig:
    """Run controls.

    cfl         safety factor in (0, 1] for the stability bound
    t_end       final time (>= 0)
    integrator  time scheme name; only "ssp-rk2" is implemented
    dump_every  snapshot cadence in steps (the initial and final states
                are always captured)
    dt_fixed    optional fixed step overriding the adaptive bound, used by
                convergence and twin-run studies that need a shared time
                grid
    """

    t_end: float
    cfl: float = 0.4
    integrator: str = "ssp-rk2"
    dump_every: int = 1
    dt_fixed: Optional[float] = None

    def __post_init__(self):
        if not (0.0 < self.cfl <= 1.0):
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl!r}")
        if not (self.t_end >= 0.0 and math.isfinite(self.t_end)):
            raise ValueError(f"t_end must be nonnegative, got {self.t_end!r}")
        if self.integrator != "ssp-rk2":
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if not isinstance(self.dump_every, int) or self.dump_every < 1:
            raise ValueError(f"dump_every must be a positive integer")
        if self.dt_fixed is not None and not (
            self.dt_fixed > 0.0 and math.isfinite(self.dt_fixed)
        ):
            raise ValueError(f"dt_fixed must be positive, got {self.dt_fixed!r}")


def vertical_mean(grid: GridSpec, f) -> np.ndarray:
    """Column mean with the uniform dz weights of the z-grid."""
    a = field_values(f)
    if a.shape[-1] != grid.nz:
        raise ValueError(f"vertical_mean expects {grid.nz} levels, got {a.shape[-1]}")
    return np.mean(a, axis=-1)


def rhs_xi(grid: GridSpec, xi, u1, u2) -> np.ndarray:
    """Plan-density tendency -div_x(xi ubar) in flux form.

    The flux form makes the grid sum of the tendency telescope to zero, so
    the discrete mass integral is conserved to round-off.
    """
    xv = field_values(xi)
    ub1 = vertical_mean(grid, u1)
    ub2 = vertical_mean(grid, u2)
    return -div_x(grid, xv * ub1, xv * ub2)


def diagnostic_w(
    grid: GridSpec, xi, u1, u2, xi_floor: float
) -> Tuple[np.ndarray, bool]:
    """Vertical velocity from the column compatibility integral.

    Returns the face values (bottom face exactly zero, top face zero up to
    the round-off of the telescoping sum) and a vacuum-contact flag set
    when xi dips below the floor anywhere; the floor is then used in the
    division so w is still defined.
    """
    xv = field_values(xi)
    a1 = field_values(u1)
    a2 = field_values(u2)
    ub1 = vertical_mean(grid, a1)
    ub2 = vertical_mean(grid, a2)
    defect = div_x(
        grid,
        xv[:, :, None] * (ub1[:, :, None] - a1),
        xv[:, :, None] * (ub2[:, :, None] - a2),
    )
    w = np.zeros(defect.shape[:-1] + (grid.nz + 1,))
    np.cumsum(defect, axis=-1, out=w[..., 1:])
    vacuum = bool(np.any(xv < xi_floor))
    w[..., 1:] *= grid.dz / np.maximum(xv, xi_floor)[:, :, None]
    return w, vacuum


def rhs_momentum(grid: GridSpec, state: ModelState, p: Params) -> Tuple[np.ndarray, np.ndarray]:
    """Tendency of the momentum density xi u.

    Advective and viscous divergences are flux form; the vertical
    advective flux lives on faces and is exactly zero on the boundary
    faces. The vertical diffusion uses xi d2_zz(u), valid because xi does
    not depend on z, with mirrored ghost cells for the no-stress ends.
    """
    g = grid
    xi = state.xi.values
    u1 = state.u1.values
    u2 = state.u2.values
    w = state.w.values
    xi3 = xi[:, :, None]

    m1 = xi3 * u1
    m2 = xi3 * u2

    out1 = -div_x(g, m1 * u1, m1 * u2)
    out2 = -div_x(g, m2 * u1, m2 * u2)

    # vertical advection: face flux w * (xi u at face), boundary faces zero
    for m, out in ((m1, out1), (m2, out2)):
        flux = np.zeros_like(w)
        flux[:, :, 1:-1] = w[:, :, 1:-1] * 0.5 * (m[:, :, 1:] + m[:, :, :-1])
        out -= (flux[:, :, 1:] - flux[:, :, :-1]) / g.dz

    gxi1, gxi2 = grad_x(g, xi)
    out1 -= p.kappa * gxi1[:, :, None]
    out2 -= p.kappa * gxi2[:, :, None]

    d11, d12, d22 = diagnostics.strain_tensor(g, u1, u2)
    out1 += 2.0 * p.nu * div_x(g, xi3 * d11, xi3 * d12)
    out2 += 2.0 * p.nu * div_x(g, xi3 * d12, xi3 * d22)

    out1 += p.nu * xi3 * d2dz2(g, u1)
    out2 += p.nu * xi3 * d2dz2(g, u2)

    if p.r > 0.0:
        speed = np.sqrt(u1**2 + u2**2)
        out1 -= p.r * xi3 * speed * u1
        out2 -= p.r * xi3 * speed * u2

    return out1, out2


def cfl_dt(state: ModelState, p: Params, grid: GridSpec, cfl: float) -> float:
    """Stable step from advective and diffusive bounds.

    dt = cfl * min( dx / (max|u| + sqrt(kappa)),
                    dz / (max|w| + tiny),
                    dx^2 / (4 nu max(xi)/min(xi)),
                    dz^2 / (2 nu) )
    """
    for name, f in (("xi", state.xi), ("u1", state.u1), ("u2", state.u2), ("w", state.w)):
        if not np.all(np.isfinite(f.values)):
            raise NumericalError(f"non-finite {name} in cfl_dt at t = {state.t}")
    dx = min(grid.dx1, grid.dx2)
    umax = state.max_speed()
    wmax = float(np.max(np.abs(state.w.values)))
    xi = state.xi.values
    ratio = float(np.max(xi)) / max(float(np.min(xi)), p.xi_floor)
    bound = min(
        dx / (umax + math.sqrt(p.kappa)),
        grid.dz / (wmax + 1e-300),
        dx**2 / (4.0 * p.nu * ratio),
        grid.dz**2 / (2.0 * p.nu),
    )
    return cfl * bound


@dataclass
class StepStats:
    """Bookkeeping from one step: positivity floor hits, w defects, vacuum."""

    floor_activations: int = 0
    w_top_defect: float = 0.0
    vacuum_contact: bool = False


def _assemble(
    grid: GridSpec,
    t: float,
    xi: np.ndarray,
    m1: np.ndarray,
    m2: np.ndarray,
    p: Params,
    stats: StepStats,
) -> ModelState:
    """Floor xi, recover velocities from momentum, re-diagnose w."""
    hits = int(np.count_nonzero(xi < p.xi_floor))
    if hits:
        stats.floor_activations += hits
        log.warning("xi floored at %d cells at t = %g", hits, t)
        xi = np.maximum(xi, p.xi_floor)
    safe = np.maximum(xi, p.xi_floor)[:, :, None]
    u1 = m1 / safe
    u2 = m2 / safe
    w, vacuum = diagnostic_w(grid, xi, u1, u2, p.xi_floor)
    stats.vacuum_contact |= vacuum
    stats.w_top_defect = max(
        stats.w_top_defect, float(np.max(np.abs(w[:, :, -1])))
    )
    for name, arr in (("xi", xi), ("u1", u1), ("u2", u2), ("w", w)):
        if not np.all(np.isfinite(arr)):
            raise NumericalError(f"non-finite {name} at t = {t:.6g}")
    return ModelState.from_values(grid, t, xi, u1, u2, w)


def step(
    state: ModelState,
    p: Params,
    dt: float,
    source: Optional[SourceFn] = None,
) -> Tuple[ModelState, StepStats]:
    """Advance one SSP-RK2 (Heun) step of size dt.

    Each Euler stage floors xi, recovers u = (xi u)/xi, and re-diagnoses
    w; the final state is the usual convex combination of the first stage
    and an Euler step from it. Raises NumericalError when NaN or Inf
    appear, naming the offending field.
    """
    if not (dt > 0.0 and math.isfinite(dt)):
        raise ValueError(f"dt must be positive and finite, got {dt!r}")
    g = state.grid
    stats = StepStats()
    xi0 = state.xi.values
    m1_0 = xi0[:, :, None] * state.u1.values
    m2_0 = xi0[:, :, None] * state.u2.values

    def tendency(s: ModelState, t_stage: float):
        dxi = rhs_xi(g, s.xi, s.u1, s.u2)
        dm1, dm2 = rhs_momentum(g, s, p)
        if source is not None:
            s_xi, (s_m1, s_m2) = source(t_stage)
            dxi = dxi + s_xi
            dm1 = dm1 + s_m1
            dm2 = dm2 + s_m2
        return dxi, dm1, dm2

    dxi, dm1, dm2 = tendency(state, state.t)
    xi1 = xi0 + dt * dxi
    m1_1 = m1_0 + dt * dm1
    m2_1 = m2_0 + dt * dm2
    mid = _assemble(g, state.t + dt, xi1, m1_1, m2_1, p, stats)

    dxi, dm1, dm2 = tendency(mid, mid.t)
    xi_mid = mid.xi.values
    xi2 = 0.5 * (xi0 + xi_mid + dt * dxi)
    m1_1b = xi_mid[:, :, None] * mid.u1.values
    m2_1b = xi_mid[:, :, None] * mid.u2.values
    m1_2 = 0.5 * (m1_0 + m1_1b + dt * dm1)
    m2_2 = 0.5 * (m2_0 + m2_1b + dt * dm2)
    new = _assemble(g, state.t + dt, xi2, m1_2, m2_2, p, stats)
    return new, stats


@dataclass
class Snapshot:
    """State plus diagnostics captured at one output instant."""

    step_index: int
    state: ModelState
    dt: float
    mass: float
    energy: diagnostics.EnergyReport
    entropy: diagnostics.EntropyReport
    norms: diagnostics.NormReport
    floor_activations: int
    w_top_defect: float
    vacuum_contact: bool

    @property
    def t(self) -> float:
        return self.state.t


@dataclass
class RunResult:
    """Snapshot series of one run; balance residuals are filled in."""

    grid: GridSpec
    params: Params
    config: SolverConfig
    snapshots: List[Snapshot] = field(default_factory=list)

    @property
    def final(self) -> ModelState:
        return self.snapshots[-1].state


def _mass(grid: GridSpec, xi: np.ndarray) -> float:
    return grid.h * grid.cell_area * float(np.sum(xi))


def _snapshot(
    grid: GridSpec,
    step_index: int,
    state: ModelState,
    dt: float,
    p: Params,
    floor_total: int,
    stats: Optional[StepStats],
) -> Snapshot:
    if stats is not None:
        w_defect = stats.w_top_defect
        vacuum = stats.vacuum_contact
    else:
        w_defect = float(np.max(np.abs(state.w.values[:, :, -1])))
        vacuum = bool(np.any(state.xi.values < 0))
    return Snapshot(
        step_index=step_index,
        state=state,
        dt=dt,
        mass=_mass(grid, state.xi.values),
        energy=diagnostics.energy(state, p),
        entropy=diagnostics.bd_entropy(state, p),
        norms=diagnostics.estimate_norms(state),
        floor_activations=floor_total,
        w_top_defect=w_defect,
        vacuum_contact=vacuum,
    )


def run(
    initial: ModelState,
    p: Params,
    cfg: SolverConfig,
    source: Optional[SourceFn] = None,
) -> RunResult:
    """Integrate to t_end with adaptive (or fixed) steps.

    Snapshots with full diagnostics are captured at the initial state,
    every `dump_every` steps, and at the final state; the last step is
    shortened to land on t_end exactly. On numerical failure the exception
    carries the snapshots collected so far.
    """
    g = initial.grid
    result = RunResult(grid=g, params=p, config=cfg)
    floor_total = 0
    result.snapshots.append(_snapshot(g, 0, initial, 0.0, p, floor_total, None))

    state = initial
    step_index = 0
    t_eps = 1e-12 * max(1.0, cfg.t_end)
    try:
        while state.t < cfg.t_end - t_eps:
            dt = cfg.dt_fixed if cfg.dt_fixed is not None else cfl_dt(
                state, p, g, cfg.cfl
            )
            dt = min(dt, cfg.t_end - state.t)
            state, stats = step(state, p, dt, source)
            step_index += 1
            floor_total += stats.floor_activations
            final = state.t >= cfg.t_end - t_eps
            if final or step_index % cfg.dump_every == 0:
                result.snapshots.append(
                    _snapshot(g, step_index, state, dt, p, floor_total, stats)
                )
    except NumericalError as err:
        _fill_residuals(result)
        raise NumericalError(
            f"step {step_index + 1}: {err}", partial=result
        ) from err
    _fill_residuals(result)
    return result


def _fill_residuals(result: RunResult) -> None:
    if len(result.snapshots) < 2:
        return
    diagnostics.fill_balance_residuals(
        [s.energy for s in result.snapshots],
        [s.entropy for s in result.snapshots],
    )
