#!/usr/bin/env python3
"""Generate the default tissue table from the four-term Cole-Cole dispersion
model with the Gabriel (1996) parameter sets for muscle and dry skin.

Usage: cole_cole_table.py [freq_hz ...] > data/tissues.csv
"""
import cmath
import math
import sys

EPS0 = 8.8541878128e-12

# (eps_inf, sigma_ionic, [(delta_eps, tau_s, alpha) x 4])
PARAMS = {
    "muscle": (4.0, 0.2, [
        (50.0, 7.234e-12, 0.10),
        (7000.0, 353.678e-9, 0.10),
        (1.2e6, 318.310e-6, 0.10),
        (2.5e7, 2.274e-3, 0.00),
    ]),
    "skin": (4.0, 0.0002, [
        (32.0, 7.234e-12, 0.00),
        (1100.0, 32.481e-9, 0.20),
        (0.0, 159.155e-6, 0.20),
        (0.0, 15.915e-3, 0.20),
    ]),
}


def cole_cole(tissue, freq_hz):
    eps_inf, sigma_i, terms = PARAMS[tissue]
    w = 2.0 * math.pi * freq_hz
    eps = complex(eps_inf, 0.0)
    for d, tau, a in terms:
        eps += d / (1.0 + (1j * w * tau) ** (1.0 - a))
    eps += sigma_i / (1j * w * EPS0)
    return eps.real, -eps.imag * w * EPS0


def main(argv):
    freqs = [float(f) for f in argv[1:]] or [10e6, 21e6, 40e6]
    print("# tissue,frequency_hz,sigma_s_per_m,eps_r")
    print("# generated by scripts/cole_cole_table.py: four-term Cole-Cole model,")
    print("# Gabriel 1996 parameters (muscle; skin = dry skin). Air is implicit.")
    for tissue in PARAMS:
        for f in freqs:
            eps_r, sigma = cole_cole(tissue, f)
            print(f"{tissue},{f!r},{sigma!r},{eps_r!r}")


if __name__ == "__main__":
    main(sys.argv)
