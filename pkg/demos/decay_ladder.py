"""Relaxation of fiber modes under the averaging diffusion.

A pure Hermite mode (k, n) decays at the rate 2 pi |k| a b (2n + 1) / h.  We
evolve each mode with both integrators and fit the rates from the Hermite
coefficient norms.  Then a generic amplitude is evolved for a long time; its
slowest surviving piece is the k = -1 ground mode, which is where the wave
function lives.
"""

import math

import numpy as np

from phasequant import DiffusionSpec, ModelParams, PhaseGrid, PositionGrid, asymptotic_state, evolve, measure_decay
from phasequant.diffusion import random_amplitude
from phasequant.verify import ladder_rates

for integrator in ("spectral-hermite", "finite-difference"):
    print(integrator)
    for (k, n), rate in ladder_rates(integrator).items():
        expected = 2 * math.pi * k * (2 * n + 1)
        print("  (k=%d, n=%d)  fitted %8.4f pi   expected %5.1f pi" % (k, n, rate / math.pi, expected / math.pi))

params = ModelParams()
grid = PositionGrid.centered(6.0, 128)
pg = PhaseGrid.from_position(grid, params)
phi0 = random_amplitude(pg, params, np.random.default_rng(1))
traj = evolve(phi0, DiffusionSpec(params, tau_end=2.0, samples=41))

early = measure_decay(traj, tmax=0.3)
late = measure_decay(traj, tmin=1.0)
print("\ngeneric amplitude, fiber-mode rates in units of pi")
for k in (-2, -1):
    print("  k=%d  early %7.3f   late %7.3f" % (k, early[k].rate / math.pi, late[k].rate / math.pi))

psi, rate = asymptotic_state(phi0, DiffusionSpec(params, tau_end=1.0), out_grid=grid)
print("\nsurviving wave function: norm %.4f, decay rate %.4f pi" % (psi.norm(), rate / math.pi))
