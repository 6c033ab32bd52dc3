"""
Frozen witness constants.

Constants of the Bessel envelope and the
dyadic G-function bounds. They were fixed from the analytic majorants
(|J_nu(x)| <= (x/2)^nu / Gamma(nu+1), the Landau and Nicholson bounds)
and are re-checked against dense scans by `scripts/calibrate_witnesses.py
--check`. A failing check means a witness was exceeded; never edit these
to make a sweep pass.
"""

# |J_nu(x)| <= C * envelope(nu, x) in each of the three regimes
BESSEL_ENVELOPE_C = 1.0
# decay rate c of the small-argument envelope C * exp(-c (nu + x))
BESSEL_ENVELOPE_DECAY = 0.2

# sup over nu <= 50, R > 0 of the integral of J_nu(r)^2 over [R, 2R]
BESSEL_SQUARE_MASS_BOUND = 1.0

# G / bound for R <= 1 and R > 1
G_SMALL_R_WITNESS = 1.0
G_LARGE_R_WITNESS = 1.0

# doubled-horizon / doubled-resolution tolerance used by every pass flag
STABILITY_TOLERANCE = 0.05
