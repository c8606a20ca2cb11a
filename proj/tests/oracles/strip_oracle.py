"""Independent reference values for the strip model and its gPC surrogate.

Plain NumPy re-implementation of the strip equations; nothing here shares
code with the C++ library. Run once, values are frozen into the C++ tests.
"""
import math
import sys

import numpy as np

PR, NU, Q0, THG = 0.64, 7500.0, 30845.0, 347.0
KF, KS, KD, KFO = 0.03, 15.2, 3.57e-13, 5.17e-8
TC, TB, PRES, LEN = 304.2, 321.9, 600000.0, 0.015


def march(re, q, phi, n, flux_scale=1.0, with_density=True):
    """Forward Euler on (T_s, T_f, rho); q and phi may be arrays."""
    tf = np.full(np.shape(q), TC, dtype=float)
    ts = np.full(np.shape(q), TB, dtype=float)
    rho = np.full(np.shape(q), PRES / TC, dtype=float)
    h = 1.0 / n
    a = KF / ((1.0 - phi) * KS) * re * PR
    b = flux_scale * q / ((1.0 - phi) * KS)
    c = NU / (PR * re)
    drag = LEN * LEN / (re * KD) + LEN / KFO
    for _ in range(n):
        dts = a * (tf - THG) + b
        dtf = c * (ts - tf)
        if with_density:
            num = c * rho * rho * (ts - tf) + drag
            den = phi ** -2 - rho * rho * tf
            rho = rho + h * (num / den) * rho
        ts = ts + h * dts
        tf = tf + h * dtf
    return tf, ts, rho


def fixtures():
    print("# raw Table 1 values, flux_scale = 1")
    for n in (1000, 10000, 100000, 1000000):
        tf, ts, rho = march(405.0, Q0, 0.111, n)
        print(f"n={n:8d} Tf1={float(tf)!r} rho1={float(rho)!r} p={float(tf * rho)!r}")
    print("# pressure scan, raw values, n=1000")
    for re in range(300, 1001, 100):
        tf, ts, rho = march(float(re), Q0, 0.111, 1000)
        print(f"re={re} p={float(tf * rho)!r}")
    print("# flux_scale = L, n=1000")
    for re in (405.0, 540.0, 700.0):
        tf, ts, rho = march(re, Q0, 0.111, 1000, LEN)
        print(f"re={re} Tf1={float(tf)!r} p={float(tf * rho)!r}")


def monte_carlo(re, sigma_q, sigma_phi, n_samples, seed, flux_scale=LEN, n=1000):
    rng = np.random.default_rng(seed)
    q = Q0 + sigma_q * rng.standard_normal(n_samples)
    phi = 0.111 + sigma_phi * rng.standard_normal(n_samples)
    tf, _, _ = march(re, q, phi, n, flux_scale, with_density=False)
    return tf


def gpc_moments():
    print("# Monte Carlo T_f(1), flux_scale=L, sigma_q=0.1 q0, sigma_phi=0.01, 1e5 samples")
    for re in (405.0, 540.0, 700.0):
        tf = monte_carlo(re, 0.1 * Q0, 0.01, 100000, 20240601)
        print(f"re={re} mean={tf.mean()!r} var={tf.var(ddof=1)!r}")


def chance(beta=348.4):
    print(f"# brute-force P(T_f(1) <= {beta}), 1e6 samples")
    for re in (480.0, 520.0, 540.0, 560.0, 600.0):
        hits = 0
        for chunk in range(10):
            tf = monte_carlo(re, 0.1 * Q0, 0.01, 100000, 777 + chunk)
            hits += int(np.count_nonzero(tf <= beta))
        print(f"re={re} p={hits / 1e6!r}")


if __name__ == "__main__":
    what = sys.argv[1] if len(sys.argv) > 1 else "fixtures"
    {"fixtures": fixtures, "gpc": gpc_moments, "chance": chance}[what]()
