"""Phase-space pictures of the first excited oscillator state.

The Wigner function of this state dips to -2/h at the origin, so it cannot be
read as a probability density.  The density built from the averaged amplitude
is a Gaussian smoothing of the Wigner function and stays nonnegative.
"""

import numpy as np

from phasequant import ModelParams, PhaseGrid, PositionGrid, density_from_wavefunction, smoothing_check, wigner
from phasequant.states import oscillator_state

params = ModelParams(h=1.0, a=1.0, b=1.0)
grid = PositionGrid.centered(8.0, 256)
pg = PhaseGrid.from_position(grid, params)
psi = oscillator_state(grid, 1, h=params.h)

w = wigner(psi, params, pg)
rho = density_from_wavefunction(psi, params, pg)

print("Wigner minimum      %.6f  (expected -2/h = -2)" % w.minimum)
print("density minimum     %.3e" % rho.minimum)
print("density integral    %.12f" % rho.norm)
print("smoothing residual  %.2e" % smoothing_check(psi, params, pg))

# a coarse text rendering of the two pictures along p = 0
j0 = np.argmin(np.abs(pg.p))
print("\n   q      W(q,0)   rho(q,0)")
for i in range(0, pg.q.size, 4):
    if abs(pg.q[i]) <= 1.6:
        print("%6.2f  %8.4f  %8.4f" % (pg.q[i], w.values[i, j0], rho.values[i, j0]))
