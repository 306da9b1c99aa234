#!/usr/bin/env python3
"""Write the synthetic measurement-format fixtures in fixtures/.

The shapes follow the published desk measurements: the capacitive path loss
saturates near -52 dB away from the Tx, galvanic is about 5 dB better inside
a 5 cm ring and progressively worse outside it, reaching about 15 dB worse at
30 cm. Values are seeded noise on an analytic surface, quantized to 0.25 dB
so that every calibration step is exact in binary floating point.

Usage: make_fixtures.py [outdir]
"""
import math
import os
import random
import sys

SEED = 20240521
STEP_CM = 2.5
HALF_CM = 30.0
ATTENUATOR_DB = 20.0
FREQUENCY_HZ = 21e6
NOISE_DB = 0.25


def quantize(v):
    return round(v * 4.0) / 4.0


def capacitive_clean(r_cm):
    return -52.0 + 12.0 * 2.0 ** (-r_cm / 2.5)


def galvanic_advantage(r_cm):
    if r_cm <= 5.0:
        return 5.0
    return -3.0 - 12.0 * (r_cm - 5.0) / 25.0


def lattice():
    n = int(round(2 * HALF_CM / STEP_CM)) + 1
    coords = [-HALF_CM + k * STEP_CM for k in range(n)]
    return [(x, y) for y in coords for x in coords]


def surfaces():
    rng = random.Random(SEED)
    cap, galv = {}, {}
    for x, y in lattice():
        r = math.hypot(x, y)
        clean = capacitive_clean(r)
        cap[(x, y)] = quantize(clean + rng.uniform(-NOISE_DB, NOISE_DB))
        galv[(x, y)] = quantize(clean + galvanic_advantage(r)
                                + rng.uniform(-NOISE_DB, NOISE_DB))
    return cap, galv


def fmt(v):
    s = repr(float(v))
    return s[:-2] if s.endswith(".0") else s


def write_measured(path, mode, pl):
    with open(path, "w", newline="\n") as f:
        f.write(f"#meta mode={mode}\n")
        f.write(f"#meta frequency_hz={fmt(FREQUENCY_HZ)}\n")
        f.write("#meta date=synthetic\n")
        f.write("#meta notes=synthetic fixture; attenuator 20 dB, "
                "tx power not recorded\n")
        f.write("x_cm,y_cm,p_rx_dbm\n")
        for (x, y), v in pl.items():
            f.write(f"{fmt(x)},{fmt(y)},{fmt(v - ATTENUATOR_DB)}\n")


def write_grid(path, cap, galv):
    with open(path, "w", newline="\n") as f:
        f.write("#meta provenance=measured\n")
        f.write(f"#meta frequency_hz={fmt(FREQUENCY_HZ)}\n")
        f.write("#meta tx_power_dbm=0\n")
        f.write("x_m,y_m,mode,path_loss_db\n")
        for mode, pl in (("galvanic", galv), ("capacitive", cap)):
            for (x, y), v in pl.items():
                f.write(f"{fmt(x / 100.0)},{fmt(y / 100.0)},{mode},{fmt(v)}\n")


def main():
    outdir = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(os.path.abspath(__file__)), "..", "fixtures")
    os.makedirs(outdir, exist_ok=True)
    cap, galv = surfaces()
    write_measured(os.path.join(outdir, "measured_capacitive.csv"),
                   "capacitive", cap)
    write_measured(os.path.join(outdir, "measured_galvanic.csv"),
                   "galvanic", galv)
    write_grid(os.path.join(outdir, "reference_map.csv"), cap, galv)


if __name__ == "__main__":
    main()
