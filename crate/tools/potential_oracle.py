"""Independent mpmath evaluation of V(p, t, s; m, n) and its gradient.

Used once to freeze reference digits into crates/qtwist/tests/potential.rs.
Run: python3 tools/potential_oracle.py
"""
from mpmath import mp, mpf, mpc, exp, pi, polylog, log

mp.dps = 40
I = mpc(0, 1)


def V(p, t, s, m=0, n=0):
    x = lambda u: exp(2 * pi * I * u)
    quad = pi * I * ((2 * p + 1) * s**2 - (2 * p + 3 + 2 * n) * s - (2 + 2 * m) * t)
    dil = polylog(2, x(t + s)) + polylog(2, x(t - s)) - 3 * polylog(2, x(t)) + pi**2 / 6
    return quad + dil / (2 * pi * I)


def grad(p, t, s):
    x = lambda u: exp(2 * pi * I * u)
    vt = -2 * pi * I + 3 * log(1 - x(t)) - log(1 - x(t + s)) - log(1 - x(t - s))
    vs = (4 * p + 2) * pi * I * s - (2 * p + 3) * pi * I - log(1 - x(t + s)) + log(1 - x(t - s))
    return vt, vs


if __name__ == "__main__":
    p, t, s = 6, mpf("0.7"), mpf("0.5")
    print("V", V(p, t, s))
    print("grad", grad(p, t, s))
    print("V(1,-2)", V(p, t, s, 1, -2))
    h = mpf(10) ** -15
    print("fd_t", (V(p, t + h, s) - V(p, t - h, s)) / (2 * h))
