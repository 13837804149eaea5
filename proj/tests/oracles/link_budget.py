#!/usr/bin/env python3
"""Independent link-budget calculator used to freeze expected values in the C++ tests.

Uses only the Python standard library so it shares no code path with the simulator.
"""
import math

ALT = 100.0
PITCH = 500.0


def geom(a, b):
    h = PITCH * math.hypot(a[0] - b[0], a[1] - b[1])
    d = math.sqrt(h * h + ALT * ALT)
    el = 90.0 if h == 0 else math.degrees(math.atan(ALT / h))
    return h, d, el


def plos(el, a=9.61, b=0.16):
    return 1.0 / (1.0 + a * math.exp(-b * (el - a)))


def snr_los_db(d, tx, fc, bw, n0=-174.0):
    fspl = 20 * math.log10(d) + 20 * math.log10(fc) - 147.55
    noise = n0 + 10 * math.log10(bw)
    return tx - fspl - noise, fspl


def cap(bw, snr_db):
    return bw * math.log2(1 + 10 ** (snr_db / 10))


def expected(d, el, tx, fc, bw, nlos):
    s, fspl = snr_los_db(d, tx, fc, bw)
    p = plos(el)
    return p * cap(bw, s) + (1 - p) * cap(bw, s - nlos), s, fspl, p


def phi(x):
    return 0.5 * (1 + math.erf(x / math.sqrt(2)))


def feasible_prob(d, el, tx, fc, bw, nlos, sigma, thr):
    s, _ = snr_los_db(d, tx, fc, bw)
    need = 10 * math.log10(2 ** (thr / bw) - 1)
    p = plos(el)
    return p * (1 - phi((need - s) / sigma)) + (1 - p) * (1 - phi((need - (s - nlos)) / sigma))


if __name__ == "__main__":
    print("adjacent", geom((0, 0), (1, 0)))
    print("corner", geom((0, 0), (4, 4)))
    print("plos90", repr(plos(90.0)), "plos2", repr(plos(2.0)), "plos_a", repr(plos(9.61)))
    d = geom((0, 0), (0, 0))[1]
    print("access_over", [repr(v) for v in expected(d, 90.0, 30, 2e9, 10e6, 20)])
    h, d, el = geom((0, 0), (4, 4))
    print("bh_corner_25", [repr(v) for v in expected(d, el, 33, 28e9, 20e6, 25)])
    s, _ = snr_los_db(d, 33, 28e9, 20e6)
    print("bh_corner_los_only", repr(cap(20e6, s)))
    print("bh_corner_15", [repr(v) for v in expected(d, el, 33, 28e9, 20e6, 15)])
    print("snr5", repr(cap(10e6, 5.0)))
    for nlos in (25, 15):
        h, d, el = geom((0, 0), (4, 4))
        far = feasible_prob(d, el, 33, 28e9, 20e6, nlos, 4.0, 5e6)
        h, d, el = geom((0, 0), (1, 0))
        adj = feasible_prob(d, el, 33, 28e9, 20e6, nlos, 4.0, 5e6)
        h, d, el = geom((0, 0), (1, 1))
        diag = feasible_prob(d, el, 33, 28e9, 20e6, nlos, 4.0, 5e6)
        print("nlos", nlos, "far_feasible", far, "adj_feasible", adj, "diag_feasible", diag)
