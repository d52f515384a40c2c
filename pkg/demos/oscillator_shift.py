"""The oscillator spectrum of the smoothed quantization.

Quantizing p^2/2m + m w^2 q^2/2 through the nonnegative density gives the
conventional ladder plus one constant, h (b^2 + m^2 w^2 a^2) / (8 pi a b m).
The constant depends only on the ratio of the diffusion intensities and is
smallest when that ratio matches the oscillator, a/b = 1/(m w).
"""

import numpy as np

from phasequant import ModelParams, PositionGrid, oscillator_spectrum
from phasequant.spectral import oscillator_shift

grid = PositionGrid.centered(6.0, 512)
m, w = 1.0, 1.0

print(" a/b     lowest level   shift      conventional")
for ratio in (0.25, 0.5, 1.0, 2.0, 4.0):
    params = ModelParams(h=1.0, a=ratio, b=1.0)
    full = oscillator_spectrum(m, w, params, grid, 3).eigenvalues
    bare = oscillator_spectrum(m, w, params, grid, 3, remove_shift=True).eigenvalues
    print("%5.2f  %12.6f  %9.6f  %12.6f" % (ratio, full[0], oscillator_shift(m, w, params), bare[0]))

print("\nthe gap between levels is unchanged:", np.round(np.diff(full) * 2 * np.pi, 8))
