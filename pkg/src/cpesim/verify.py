"""Verification studies built on top of the solver.

Three harnesses:

* stability_study: twin runs from perturbed initial data on a shared time
  grid, measuring how solution distances shrink with the perturbation
  amplitude (the desk-scale realization of the stability half of the
  well-posedness theory).
* transform_check: maps a model trajectory to the physical stratified
  variables and evaluates the residuals that should vanish there.
* mms_convergence: manufactured-solution runs over a grid hierarchy,
  reporting observed orders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .grid import GridSpec, lp_norm
from .mms import ManufacturedSolution
from .solver import Params, RunResult, SolverConfig, cfl_dt, diagnostic_w, run
from .states import (
    ModelState,
    hydrostatic_residual,
    model_to_physical,
    physical_mass_residual,
    physical_to_model,
    y_levels,
)


@dataclass
class StabilityRow:
    """Distances of one perturbed run to the reference run.

    xi_sup_l32        sup over snapshots of the L^(3/2) distance of xi
    velocity_l2_l32   L^2-in-time of the L^(3/2) distance of sqrt(xi) u
    momentum_l1_l1    L^1-in-time of the L^1 distance of xi u
    monotone          row-wise flag: every metric decreased from the
                      previous row (flagged, not enforced)
    """

    amplitude: float
    xi_sup_l32: float
    velocity_l2_l32: float
    momentum_l1_l1: float
    monotone: bool = True


@dataclass
class StabilityTable:
    dt: float
    rows: List[StabilityRow]

    def non_monotone_rows(self) -> List[int]:
        return [i for i, row in enumerate(self.rows) if not row.monotone]


def _velocity_fields(state: ModelState) -> Tuple[np.ndarray, np.ndarray]:
    sq = np.sqrt(state.xi.values)[:, :, None]
    return sq * state.u1.values, sq * state.u2.values


def _momentum_fields(state: ModelState) -> Tuple[np.ndarray, np.ndarray]:
    xi = state.xi.values[:, :, None]
    return xi * state.u1.values, xi * state.u2.values


def stability_study(
    reference: ModelState,
    perturbed: Sequence[ModelState],
    amplitudes: Sequence[float],
    p: Params,
    cfg: SolverConfig,
) -> StabilityTable:
    """Run the reference and each perturbed initial state to t_end.

    All runs share one fixed time step (the tightest initial CFL bound
    among them, with margin) so states can be compared at identical
    times. Amplitudes must be strictly decreasing; rows where a distance
    fails to decrease are flagged rather than rejected.
    """
    if len(perturbed) != len(amplitudes):
        raise ValueError("one amplitude per perturbed state required")
    if len(perturbed) < 2:
        raise ValueError("need at least two perturbed states")
    if any(b >= a for a, b in zip(amplitudes, amplitudes[1:])):
        raise ValueError("amplitudes must be strictly decreasing")
    grid = reference.grid

    if cfg.dt_fixed is not None:
        dt = cfg.dt_fixed
    else:
        dt = 0.8 * min(
            cfl_dt(s, p, grid, cfg.cfl) for s in (reference, *perturbed)
        )
    shared = replace(cfg, dt_fixed=dt)

    ref_result = run(reference, p, shared)
    times = [s.t for s in ref_result.snapshots]
    h = grid.h

    rows: List[StabilityRow] = []
    for amp, state0 in zip(amplitudes, perturbed):
        res = run(state0, p, shared)
        if len(res.snapshots) != len(times):
            raise RuntimeError("perturbed run lost snapshot alignment")
        xi_dist = []
        vel_dist = []
        mom_dist = []
        for snap, ref_snap in zip(res.snapshots, ref_result.snapshots):
            if abs(snap.t - ref_snap.t) > 1e-12 * max(1.0, cfg.t_end):
                raise RuntimeError("perturbed run lost time alignment")
            dxi = snap.state.xi.values - ref_snap.state.xi.values
            xi_dist.append(h ** (2.0 / 3.0) * lp_norm(grid, dxi, 1.5))
            v1, v2 = _velocity_fields(snap.state)
            rv1, rv2 = _velocity_fields(ref_snap.state)
            dv = np.sqrt((v1 - rv1) ** 2 + (v2 - rv2) ** 2)
            vel_dist.append(lp_norm(grid, dv, 1.5))
            m1, m2 = _momentum_fields(snap.state)
            rm1, rm2 = _momentum_fields(ref_snap.state)
            mom_dist.append(lp_norm(grid, np.abs(m1 - rm1) + np.abs(m2 - rm2), 1))
        t_arr = np.asarray(times)
        rows.append(
            StabilityRow(
                amplitude=amp,
                xi_sup_l32=float(np.max(xi_dist)),
                velocity_l2_l32=float(
                    math.sqrt(np.trapezoid(np.asarray(vel_dist) ** 2, t_arr))
                ),
                momentum_l1_l1=float(np.trapezoid(np.asarray(mom_dist), t_arr)),
            )
        )
    for prev, row in zip(rows, rows[1:]):
        row.monotone = (
            row.xi_sup_l32 < prev.xi_sup_l32
            and row.velocity_l2_l32 < prev.velocity_l2_l32
            and row.momentum_l1_l1 < prev.momentum_l1_l1
        )
    return StabilityTable(dt=dt, rows=rows)


def perturbed_density(
    reference: ModelState,
    amplitude: float,
    k1: int = 1,
    k2: int = 1,
    xi_floor: float = 1e-10,
) -> ModelState:
    """Reference state with a smooth plan-density perturbation added.

    w is re-diagnosed from the perturbed density so the initial state
    satisfies the discrete compatibility relation.
    """
    grid = reference.grid
    x1, x2 = grid.meshgrid_2d()
    bump = amplitude * np.sin(2.0 * np.pi * k1 * x1 / grid.lx1) * np.cos(
        2.0 * np.pi * k2 * x2 / grid.lx2
    )
    xi = reference.xi.values + bump
    if np.any(xi <= 0.0):
        raise ValueError("perturbation drives xi nonpositive")
    w, _ = diagnostic_w(grid, xi, reference.u1.values, reference.u2.values, xi_floor)
    return ModelState.from_values(
        grid,
        reference.t,
        xi,
        reference.u1.values,
        reference.u2.values,
        w,
    )


@dataclass
class TransformCheck:
    """Residuals of a trajectory mapped to physical coordinates."""

    stratification_residual: float
    hydrostatic_residual: float
    mass_residual_l2: float
    snapshots: int


def _mass_residual_norm(grid: GridSpec, residual: np.ndarray) -> float:
    _, yf = y_levels(grid)
    dy = (yf[1:] - yf[:-1])[None, None, :]
    return float(np.sqrt(np.sum(residual**2 * grid.cell_area * dy)))


def transform_check(result: RunResult) -> TransformCheck:
    """Map every snapshot to (rho, u, v) and evaluate the residuals.

    Stratification and hydrostatic residuals are maxima over snapshots;
    the physical mass-equation residual is the max over interior
    snapshots of its volume-weighted L2 norm (centered time differences
    across neighboring snapshots).
    """
    grid = result.grid
    phys = [model_to_physical(s.state, grid) for s in result.snapshots]
    strat = 0.0
    hydro = 0.0
    for ps in phys:
        _, residual = physical_to_model(ps)
        strat = max(strat, residual)
        hydro = max(hydro, hydrostatic_residual(ps))
    mass = 0.0
    for prev, mid, nxt in zip(phys, phys[1:], phys[2:]):
        field = physical_mass_residual(prev, mid, nxt)
        mass = max(mass, _mass_residual_norm(grid, field))
    return TransformCheck(
        stratification_residual=strat,
        hydrostatic_residual=hydro,
        mass_residual_l2=mass,
        snapshots=len(phys),
    )


@dataclass
class MmsLevel:
    grid: GridSpec
    err_xi: float
    err_u: float
    steps: int


@dataclass
class MmsReport:
    levels: List[MmsLevel]
    orders_xi: List[float]
    orders_u: List[float]


def refine(grid: GridSpec, factor: int = 2) -> GridSpec:
    return replace(grid, nx1=grid.nx1 * factor, nx2=grid.nx2 * factor, nz=grid.nz * factor)


def mms_convergence(
    base: GridSpec,
    p: Params,
    t_end: float,
    levels: int = 2,
    cfl: float = 0.4,
    solution_kwargs: Optional[dict] = None,
) -> MmsReport:
    """Manufactured-solution errors across a factor-2 grid hierarchy."""
    if levels < 2:
        raise ValueError("need at least two levels to observe an order")
    grids = [base]
    for _ in range(levels - 1):
        grids.append(refine(grids[-1]))
    out: List[MmsLevel] = []
    for g in grids:
        ms = ManufacturedSolution(g, p, **(solution_kwargs or {}))
        cfg = SolverConfig(t_end=t_end, cfl=cfl, dump_every=10**9)
        result = run(ms.state_at(0.0), p, cfg, source=ms.source)
        err_xi, err_u = ms.errors(result.final)
        out.append(
            MmsLevel(
                grid=g,
                err_xi=err_xi,
                err_u=err_u,
                steps=result.snapshots[-1].step_index,
            )
        )
    orders_xi = [
        math.log2(a.err_xi / b.err_xi) for a, b in zip(out, out[1:])
    ]
    orders_u = [math.log2(a.err_u / b.err_u) for a, b in zip(out, out[1:])]
    return MmsReport(levels=out, orders_xi=orders_xi, orders_u=orders_u)
