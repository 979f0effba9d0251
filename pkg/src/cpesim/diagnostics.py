"""Energy and entropy functionals tracked along simulations.

The model dissipates

    E = int  xi |u|^2 / 2  +  kappa (xi ln xi - xi + 1)

at the rate  2 nu int xi |D_x(u)|^2 + nu int xi |d_z u|^2 + r int xi |u|^3,
and the entropy functional built on the effective velocity
psi = u + 2 nu grad_x(ln xi),

    B = int  xi |psi|^2 / 2  +  kappa (xi ln xi - xi + 1),

satisfies an exact balance whose dissipation splits into six tracked
terms. Both balances are monitored as residuals: the time derivative is a
finite difference of the functional across one output step with the
dissipation evaluated at the left snapshot, so the residuals shrink at
first order in dt (and with the spatial truncation of the operators).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .grid import (
    GridSpec,
    cell_measure,
    ddz,
    ddz_faces,
    grad_x,
    lp_norm,
)
from .states import ModelState

# Clip applied under logs and square roots; states keep xi positive but the
# guard makes the functionals total on raw arrays as well.
_XI_TINY = 1e-300


def _entropy_density(xi: np.ndarray) -> np.ndarray:
    x = np.maximum(xi, _XI_TINY)
    return x * np.log(x) - x + 1.0


def strain_tensor(
    grid: GridSpec, u1: np.ndarray, u2: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Symmetric horizontal gradient (D11, D12, D22) per level."""
    d1u1, d2u1 = grad_x(grid, u1)
    d1u2, d2u2 = grad_x(grid, u2)
    return d1u1, 0.5 * (d2u1 + d1u2), d2u2


def vorticity(grid: GridSpec, u1, u2) -> np.ndarray:
    """Antisymmetric part of the horizontal gradient, shape (..., 2, 2).

    Entry [0, 1] is half the scalar curl d_1 u2 - d_2 u1; the diagonal is
    exactly zero and the tensor is exactly antisymmetric.
    """
    from .grid import field_values

    a1 = field_values(u1)
    a2 = field_values(u2)
    _, d2u1 = grad_x(grid, a1)
    d1u2, _ = grad_x(grid, a2)
    a12 = 0.5 * (d1u2 - d2u1)
    out = np.zeros(a12.shape + (2, 2))
    out[..., 0, 1] = a12
    out[..., 1, 0] = -a12
    return out


def _integral(grid: GridSpec, contrib: np.ndarray) -> float:
    return float(np.sum(contrib * cell_measure(grid, contrib.shape)))


@dataclass
class EnergyReport:
    """Energy functional, its dissipation channels, and the balance defect.

    balance_residual is |dE/dt + D_visc + D_fric| with dE/dt the finite
    difference of E to the next snapshot; it is NaN on the last snapshot
    of a series.
    """

    t: float
    E: float
    D_visc: float
    D_fric: float
    balance_residual: float = math.nan


@dataclass
class EntropyReport:
    """Entropy functional B and the six terms of its balance.

    All terms are signed as they appear added to dB/dt, so the first four
    and the last are nonnegative by construction while the friction cross
    term is sign-indefinite and reported raw. balance_residual is
    |dB/dt + sum(terms)| with the same differencing as EnergyReport.
    """

    t: float
    B: float
    dzw_term: float
    vorticity_term: float
    dzu_term: float
    friction_term: float
    friction_cross_term: float
    grad_sqrt_term: float
    balance_residual: float = math.nan

    @property
    def terms(self) -> Tuple[float, ...]:
        return (
            self.dzw_term,
            self.vorticity_term,
            self.dzu_term,
            self.friction_term,
            self.friction_cross_term,
            self.grad_sqrt_term,
        )


@dataclass
class NormReport:
    """The norms controlled by the a priori estimates, one snapshot."""

    t: float
    sqrt_xi_u_l2: float
    cbrt_xi_u_l3: float
    sqrt_xi_dzu_l2: float
    sqrt_xi_strain_l2: float
    entropy_l1: float
    grad_sqrt_xi_l2: float
    sqrt_xi_dzw_l2: float
    sqrt_xi_vorticity_l2: float
    sqrt_xi_w_l2: float

    ORDER = (
        "sqrt_xi_u_l2",
        "cbrt_xi_u_l3",
        "sqrt_xi_dzu_l2",
        "sqrt_xi_strain_l2",
        "entropy_l1",
        "grad_sqrt_xi_l2",
        "sqrt_xi_dzw_l2",
        "sqrt_xi_vorticity_l2",
        "sqrt_xi_w_l2",
    )

    def as_tuple(self) -> Tuple[float, ...]:
        return tuple(getattr(self, name) for name in self.ORDER)


def energy(state: ModelState, p) -> EnergyReport:
    """Evaluate E and its dissipation channels at one instant."""
    g = state.grid
    xi = state.xi.values
    u1 = state.u1.values
    u2 = state.u2.values
    xi3 = xi[:, :, None]

    kinetic = 0.5 * xi3 * (u1**2 + u2**2)
    potential = p.kappa * _entropy_density(xi)
    total = _integral(g, kinetic) + g.h * _integral(g, potential)

    d11, d12, d22 = strain_tensor(g, u1, u2)
    strain_sq = d11**2 + 2.0 * d12**2 + d22**2
    dz_sq = ddz(g, u1) ** 2 + ddz(g, u2) ** 2
    d_visc = _integral(g, xi3 * (2.0 * p.nu * strain_sq + p.nu * dz_sq))

    speed = np.sqrt(u1**2 + u2**2)
    d_fric = p.r * _integral(g, xi3 * speed**3)

    return EnergyReport(t=state.t, E=total, D_visc=d_visc, D_fric=d_fric)


def bd_entropy(state: ModelState, p) -> EntropyReport:
    """Evaluate B and the six terms of its balance at one instant."""
    g = state.grid
    xi = state.xi.values
    u1 = state.u1.values
    u2 = state.u2.values
    xi3 = xi[:, :, None]

    glog1, glog2 = grad_x(g, np.log(np.maximum(xi, p.xi_floor)))
    psi1 = u1 + 2.0 * p.nu * glog1[:, :, None]
    psi2 = u2 + 2.0 * p.nu * glog2[:, :, None]
    total = _integral(g, 0.5 * xi3 * (psi1**2 + psi2**2)) + g.h * _integral(
        g, p.kappa * _entropy_density(xi)
    )

    dzw = ddz_faces(g, state.w.values)
    dzw_term = 2.0 * p.nu * _integral(g, xi3 * dzw**2)

    _, d2u1 = grad_x(g, u1)
    d1u2, _ = grad_x(g, u2)
    a12 = 0.5 * (d1u2 - d2u1)
    vort_term = 2.0 * p.nu * _integral(g, xi3 * 2.0 * a12**2)

    dzu_term = p.nu * _integral(g, xi3 * (ddz(g, u1) ** 2 + ddz(g, u2) ** 2))

    speed = np.sqrt(u1**2 + u2**2)
    fric_term = p.r * _integral(g, xi3 * speed**3)

    gxi1, gxi2 = grad_x(g, xi)
    cross = speed * (u1 * gxi1[:, :, None] + u2 * gxi2[:, :, None])
    fric_cross = 2.0 * p.nu * p.r * _integral(g, cross)

    gs1, gs2 = grad_x(g, np.sqrt(np.maximum(xi, 0.0)))
    grad_sqrt = 8.0 * p.nu * p.kappa * g.h * _integral(g, gs1**2 + gs2**2)

    return EntropyReport(
        t=state.t,
        B=total,
        dzw_term=dzw_term,
        vorticity_term=vort_term,
        dzu_term=dzu_term,
        friction_term=fric_term,
        friction_cross_term=fric_cross,
        grad_sqrt_term=grad_sqrt,
    )


def estimate_norms(state: ModelState) -> NormReport:
    """Evaluate the a priori estimate norms at one instant."""
    g = state.grid
    xi = state.xi.values
    u1 = state.u1.values
    u2 = state.u2.values
    xi3 = xi[:, :, None]
    speed = np.sqrt(u1**2 + u2**2)
    sqrt_xi = np.sqrt(xi)

    dzu = np.sqrt(ddz(g, u1) ** 2 + ddz(g, u2) ** 2)
    d11, d12, d22 = strain_tensor(g, u1, u2)
    strain_mag = np.sqrt(d11**2 + 2.0 * d12**2 + d22**2)
    _, d2u1 = grad_x(g, u1)
    d1u2, _ = grad_x(g, u2)
    vort_mag = np.sqrt(2.0) * np.abs(0.5 * (d1u2 - d2u1))
    gs1, gs2 = grad_x(g, sqrt_xi)
    dzw = ddz_faces(g, state.w.values)

    sqrt_xi3 = sqrt_xi[:, :, None]
    # face fields weight xi by the plan value of their column
    sqrt_xi_faces = np.broadcast_to(sqrt_xi[:, :, None], state.w.values.shape)

    return NormReport(
        t=state.t,
        sqrt_xi_u_l2=lp_norm(g, sqrt_xi3 * speed, 2),
        cbrt_xi_u_l3=lp_norm(g, np.cbrt(xi3) * speed, 3),
        sqrt_xi_dzu_l2=lp_norm(g, sqrt_xi3 * dzu, 2),
        sqrt_xi_strain_l2=lp_norm(g, sqrt_xi3 * strain_mag, 2),
        entropy_l1=g.h * lp_norm(g, _entropy_density(xi), 1),
        grad_sqrt_xi_l2=math.sqrt(g.h) * lp_norm(g, np.sqrt(gs1**2 + gs2**2), 2),
        sqrt_xi_dzw_l2=lp_norm(g, sqrt_xi3 * dzw, 2),
        sqrt_xi_vorticity_l2=lp_norm(g, sqrt_xi3 * vort_mag, 2),
        sqrt_xi_w_l2=lp_norm(g, sqrt_xi_faces * state.w.values, 2),
    )


def fill_balance_residuals(
    energies: Sequence[EnergyReport], entropies: Sequence[EntropyReport]
) -> None:
    """Attach forward-difference balance residuals to snapshot series.

    Each snapshot but the last receives |dF/dt + dissipation(t_n)| where
    dF/dt spans [t_n, t_{n+1}]; the final snapshot keeps NaN.
    """
    if len(energies) != len(entropies):
        raise ValueError("series lengths differ")
    for a, b in zip(energies[:-1], energies[1:]):
        dt = b.t - a.t
        if dt <= 0.0:
            raise ValueError("snapshots must be strictly time ordered")
        a.balance_residual = abs((b.E - a.E) / dt + a.D_visc + a.D_fric)
    for a, b in zip(entropies[:-1], entropies[1:]):
        dt = b.t - a.t
        a.balance_residual = abs((b.B - a.B) / dt + sum(a.terms))
