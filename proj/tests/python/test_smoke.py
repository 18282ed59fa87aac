#!/usr/bin/env python3
"""Smoke test for the python bindings."""

import math
import sys

import _atomdiode as ad


def main():
    units = ad.UnitSystem(2.0)

    # square barrier against the closed-form tunnelling probability
    v = 1.0
    energy = units.m_over_hbar * v * v / 2.0
    height = 2.0 * energy
    width = 1.0
    spec = ad.build_square_barrier(height, 0.0, width)
    res = ad.solve_scattering(spec, v, units, ad.SolverConfig())
    kappa = math.sqrt(2.0 * units.m_over_hbar * (height - energy))
    sh = math.sinh(kappa * width)
    t2 = 1.0 / (1.0 + height * height * sh * sh / (4.0 * energy * (height - energy)))
    got = abs(res.Tl[0, 0]) ** 2
    assert abs(got - t2) < 1e-8, (got, t2)

    # the standard diode transmits forward atoms at 1 cm/s
    pot = ad.build_three_level(ad.ThreeLevelParams(omega_hat=1.0, w_hat=100.0))
    res = ad.solve_scattering(pot, 1.0 * ad.CM_PER_S)
    fwd = ad.diode_quantities(res, ad.Side.left)
    bwd = ad.diode_quantities(res, ad.Side.right)
    assert fwd.t2 > 0.95, fwd.t2
    assert bwd.r2 > 0.95, bwd.r2
    assert ad.failure_functional(res, res) < 0.01

    # tiny closed-system ensemble: norm preserved, no jumps
    grid = ad.Grid(-20.0, 20.0, 256)
    mini = ad.ThreeLevelParams(omega_hat=100.0, w_hat=400.0, x_p=2.0, x_s=-2.0,
                               x_w=8.0, delta_x=2.0)
    spec = ad.build_three_level(mini)
    prop = ad.SplitStepPropagator(spec, grid, units, gamma=0.0, dt=0.0, v_abs_max=1.6)
    params = ad.OpenSystemParams()
    params.gamma = 0.0
    params.v_rec = 0.0
    params.v_abs_max = 1.6
    params.t_max = prop.dt() * round(4.0 / prop.dt())
    wp0 = ad.initial_wavepacket(grid, 3, -8.0, 0.5, 0.3, units)
    assert abs(wp0.norm_sq() - 1.0) < 1e-12
    opts = ad.EnsembleOptions()
    opts.n = 2
    opts.master_seed = 7
    opts.threads = 1
    opts.keep_density = False
    out = ad.run_ensemble(prop, params, wp0, opts)
    assert out.failed == 0
    assert out.mean_jumps == 0.0
    assert abs(sum(out.channel_populations) - 1.0) < 1e-9, out.channel_populations

    print("python smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
