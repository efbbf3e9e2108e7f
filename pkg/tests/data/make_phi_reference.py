"""Regenerate phi_reference.csv: Phi(z) on 1000 points of [-8, 8] at 40 digits (mpmath)."""

import mpmath

mpmath.mp.dps = 40

with open("phi_reference.csv", "w") as fh:
    fh.write("z,phi\n")
    for i in range(1000):
        z = mpmath.mpf(-8) + mpmath.mpf(16) * i / 999
        phi = mpmath.ncdf(z)
        fh.write(f"{mpmath.nstr(z, 30)},{mpmath.nstr(phi, 30)}\n")
