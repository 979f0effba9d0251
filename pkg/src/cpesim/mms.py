"""Manufactured solutions for convergence verification.

A smooth time-dependent (xi*, u*) is chosen in closed form; the matching
vertical velocity w* is obtained symbolically from the same column
compatibility integral the solver diagnoses, so w* vanishes on both
boundary faces and the manufactured triple satisfies the model equations
up to residual source terms. Those sources are derived with sympy,
independently of the discrete operators, and handed to the solver as
forcing; the discrete solution then converges to the manufactured fields
at the order of the scheme.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import numpy as np
import sympy as sp

from .grid import GridSpec, lp_norm
from .solver import Params
from .states import ModelState


def _lambdify(expr: sp.Expr, args) -> Callable:
    if expr.has(sp.Integral):
        raise ValueError("manufactured expression left an unevaluated integral")
    return sp.lambdify(args, expr, modules="numpy", cse=True)


@dataclass
class ManufacturedSolution:
    """Closed-form reference fields and the source terms they induce."""

    grid: GridSpec
    params: Params
    xi_amplitude: float = 0.2
    u_amplitude: float = 0.3
    z_amplitude: float = 0.5
    omega: float = 1.0

    def __post_init__(self):
        if self.xi_amplitude >= 1.0:
            raise ValueError("xi amplitude must stay below 1 to keep xi positive")
        g = self.grid
        p = self.params
        x1, x2, z, t, s = sp.symbols("x1 x2 z t s", real=True)

        k1 = 2 * sp.pi / g.lx1
        k2 = 2 * sp.pi / g.lx2
        kz = sp.pi / g.h
        clock = sp.cos(self.omega * t)

        xi = 1 + self.xi_amplitude * sp.sin(k1 * x1) * sp.cos(k2 * x2) * clock
        # the z-profile has zero slope at both column ends and unit mean
        zprof = 1 + self.z_amplitude * sp.cos(kz * z)
        u1 = (
            self.u_amplitude
            * clock
            * (sp.sin(k1 * x1) * sp.sin(k2 * x2) + sp.Rational(1, 2) * sp.cos(k2 * x2))
            * zprof
        )
        u2 = (
            self.u_amplitude
            * clock
            * (sp.cos(k1 * x1) * sp.sin(k2 * x2) + sp.Rational(1, 2) * sp.sin(k1 * x1))
            * (2 - zprof)
        )

        ub1 = sp.integrate(u1, (z, 0, g.h)) / g.h
        ub2 = sp.integrate(u2, (z, 0, g.h)) / g.h
        column_defect = sp.diff(xi * (ub1 - u1), x1) + sp.diff(xi * (ub2 - u2), x2)
        w = sp.integrate(column_defect.subs(z, s), (s, 0, z)) / xi

        s_xi = sp.diff(xi, t) + sp.diff(xi * ub1, x1) + sp.diff(xi * ub2, x2)

        d11 = sp.diff(u1, x1)
        d22 = sp.diff(u2, x2)
        d12 = (sp.diff(u1, x2) + sp.diff(u2, x1)) / 2
        speed = sp.sqrt(u1**2 + u2**2)

        def momentum_source(uc, dc1, dc2, grad_dir):
            return (
                sp.diff(xi * uc, t)
                + sp.diff(xi * uc * u1, x1)
                + sp.diff(xi * uc * u2, x2)
                + sp.diff(xi * uc * w, z)
                + p.kappa * sp.diff(xi, grad_dir)
                - 2 * p.nu * (sp.diff(xi * dc1, x1) + sp.diff(xi * dc2, x2))
                - p.nu * xi * sp.diff(uc, z, 2)
                + p.r * xi * speed * uc
            )

        s_m1 = momentum_source(u1, d11, d12, x1)
        s_m2 = momentum_source(u2, d12, d22, x2)

        args = (x1, x2, z, t)
        self._fns: Dict[str, Callable] = {
            "xi": _lambdify(xi, args),
            "u1": _lambdify(u1, args),
            "u2": _lambdify(u2, args),
            "w": _lambdify(w, args),
            "s_xi": _lambdify(s_xi, args),
            "s_m1": _lambdify(s_m1, args),
            "s_m2": _lambdify(s_m2, args),
        }

    def _eval_2d(self, name: str, t: float) -> np.ndarray:
        g = self.grid
        x1 = g.x1_centers()[:, None]
        x2 = g.x2_centers()[None, :]
        out = self._fns[name](x1, x2, 0.0, t)
        return np.broadcast_to(np.asarray(out, dtype=float), (g.nx1, g.nx2)).copy()

    def _eval_3d(self, name: str, t: float, z: np.ndarray) -> np.ndarray:
        g = self.grid
        x1 = g.x1_centers()[:, None, None]
        x2 = g.x2_centers()[None, :, None]
        zz = z[None, None, :]
        out = self._fns[name](x1, x2, zz, t)
        shape = (g.nx1, g.nx2, z.size)
        return np.broadcast_to(np.asarray(out, dtype=float), shape).copy()

    def state_at(self, t: float) -> ModelState:
        """Evaluate the manufactured fields on the grid at time t."""
        g = self.grid
        xi = self._eval_2d("xi", t)
        u1 = self._eval_3d("u1", t, g.z_centers())
        u2 = self._eval_3d("u2", t, g.z_centers())
        w = self._eval_3d("w", t, g.z_faces())
        w[:, :, 0] = 0.0  # analytic zero of the compatibility integral
        return ModelState.from_values(g, t, xi, u1, u2, w)

    def source(self, t: float) -> Tuple[np.ndarray, Tuple[np.ndarray, np.ndarray]]:
        """Forcing terms at stage time t, in solver tendency layout."""
        g = self.grid
        zc = g.z_centers()
        return (
            self._eval_2d("s_xi", t),
            (self._eval_3d("s_m1", t, zc), self._eval_3d("s_m2", t, zc)),
        )

    def errors(self, state: ModelState) -> Tuple[float, float]:
        """Discrete L2 errors of (xi, u) against the manufactured fields."""
        g = self.grid
        ref = self.state_at(state.t)
        err_xi = lp_norm(g, state.xi.values - ref.xi.values, 2)
        diff = np.sqrt(
            (state.u1.values - ref.u1.values) ** 2
            + (state.u2.values - ref.u2.values) ** 2
        )
        return err_xi, lp_norm(g, diff, 2)
