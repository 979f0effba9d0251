"""Manufactured-solution plumbing.

The deep check is the cross-route consistency test: the sympy-derived
sources must cancel the discrete operators applied to the manufactured
fields up to the spatial truncation error, which halves twice per grid
doubling.
"""

import numpy as np
import pytest

from cpesim.grid import GridSpec
from cpesim.mms import ManufacturedSolution
from cpesim.solver import Params, rhs_momentum, rhs_xi


def _mms(n=16, nz=None, nu=0.01, r=0.5):
    g = GridSpec(n, n, nz if nz is not None else n // 2)
    return ManufacturedSolution(g, Params(nu=nu, r=r))


def test_state_is_admissible():
    mms = _mms()
    s = mms.state_at(0.3)
    assert np.all(s.xi.values > 0.0)
    assert np.all(s.w.values[:, :, 0] == 0.0)
    # the compatibility integral vanishes analytically at the top face
    assert np.max(np.abs(s.w.values[:, :, -1])) <= 1e-12
    assert s.t == 0.3


def test_errors_vanish_on_manufactured_fields():
    mms = _mms(n=8, nz=4)
    s = mms.state_at(0.15)
    err_xi, err_u = mms.errors(s)
    assert err_xi == 0.0
    assert err_u == 0.0


def test_source_layout():
    mms = _mms(n=8, nz=4)
    s_xi, (s_m1, s_m2) = mms.source(0.1)
    assert s_xi.shape == (8, 8)
    assert s_m1.shape == (8, 8, 4)
    assert s_m2.shape == (8, 8, 4)
    assert np.all(np.isfinite(s_xi))
    assert np.all(np.isfinite(s_m1))
    assert np.all(np.isfinite(s_m2))


def test_rejects_density_amplitude_reaching_vacuum():
    g = GridSpec(8, 8, 4)
    with pytest.raises(ValueError):
        ManufacturedSolution(g, Params(nu=0.01), xi_amplitude=1.0)


def _consistency_defects(n, t=0.1):
    p = Params(nu=0.01, r=0.5)
    g = GridSpec(n, n, n // 2)
    mms = ManufacturedSolution(g, p)
    s = mms.state_at(t)
    s_xi, (s_m1, _) = mms.source(t)

    delta = 1e-5
    plus, minus = mms.state_at(t + delta), mms.state_at(t - delta)
    dxi_dt = (plus.xi.values - minus.xi.values) / (2.0 * delta)
    defect_xi = np.max(np.abs(dxi_dt - rhs_xi(g, s.xi, s.u1, s.u2) - s_xi))

    dm1_dt = (
        plus.xi.values[:, :, None] * plus.u1.values
        - minus.xi.values[:, :, None] * minus.u1.values
    ) / (2.0 * delta)
    r1, _ = rhs_momentum(g, s, p)
    defect_m1 = np.max(np.abs(dm1_dt - r1 - s_m1))
    return defect_xi, defect_m1


def test_sources_cancel_discrete_operators_to_truncation():
    # residual of (manufactured fields, symbolic sources) under the discrete
    # operators is pure truncation error: it must shrink near second order
    coarse = _consistency_defects(16)
    fine = _consistency_defects(32)
    assert fine[0] < coarse[0] / 3.2
    assert fine[1] < coarse[1] / 3.2


def test_solver_converges_to_manufactured_solution():
    # two-level sanity run; the tight three-level order window is part of
    # the acceptance suite
    from cpesim.verify import mms_convergence

    g = GridSpec(8, 8, 4)
    rep = mms_convergence(g, Params(nu=0.01, r=0.5), t_end=0.02, levels=2, cfl=0.3)
    assert len(rep.levels) == 2
    assert rep.levels[0].err_xi > rep.levels[1].err_xi
    assert 1.5 <= rep.orders_xi[0] <= 2.5
    assert 1.5 <= rep.orders_u[0] <= 2.5
