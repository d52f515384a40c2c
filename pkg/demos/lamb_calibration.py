"""Calibrating the diffusion intensities from the hydrogen 2s shift.

The smoothing of the Coulomb potential raises s levels by an amount set by
a/b and the electron density at the nucleus.  Reading the measured 2s shift
backwards gives a/b and the position smoothing width.  The first-order shift
computed by radial quadrature confirms the delta-function estimate.
"""

from phasequant import PhysicalConstants, lamb_shift_inverse, perturbative_shift
from phasequant.spectral import closed_form_shift, erg_to_mhz, lamb_params, mhz_to_erg

consts = PhysicalConstants.reproduction()
est = lamb_shift_inverse(mhz_to_erg(1058.0, consts), consts, n=2)
print("a/b            %.5g s/g" % est.a_over_b)
print("smoothing dq   %.5g cm" % est.delta_q)
print("Bohr radius    %.5g cm  (ratio %.0f)" % (consts.bohr_radius, consts.bohr_radius / est.delta_q))

params = lamb_params(est.a_over_b, consts)
for n, l, label in ((1, 0, "1s"), (2, 0, "2s"), (2, 1, "2p")):
    pert = erg_to_mhz(perturbative_shift(n, params, consts, l=l), consts)
    closed = erg_to_mhz(closed_form_shift(n, est.a_over_b, consts, l=l), consts)
    print("%s  quadrature %10.4f MHz   delta-function estimate %10.4f MHz" % (label, pert, closed))
