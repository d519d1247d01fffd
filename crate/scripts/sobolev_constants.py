"""Independent values for the Sobolev constant S_N (N = 3, 4) and the N = 1
soliton heights, at 30 digits with mpmath.

S_N is computed twice: from the Gamma-function closed form and as the Rayleigh
quotient |grad U|^2 / |U|_{2*}^2 of U(r) = (1 + r^2)^{-(N-2)/2} by quadrature on
[0, inf). Run: python3 scripts/sobolev_constants.py
"""

import mpmath as mp

mp.mp.dps = 30


def closed_form(n):
    return n * (n - 2) * mp.pi * (mp.gamma(mp.mpf(n) / 2) / mp.gamma(n)) ** (mp.mpf(2) / n)


def rayleigh(n):
    area = 2 * mp.pi ** (mp.mpf(n) / 2) / mp.gamma(mp.mpf(n) / 2)
    crit = mp.mpf(2 * n) / (n - 2)
    du = lambda r: (n - 2) * r * (1 + r * r) ** (-mp.mpf(n) / 2)
    u = lambda r: (1 + r * r) ** (-(mp.mpf(n) - 2) / 2)
    kin = area * mp.quad(lambda r: du(r) ** 2 * r ** (n - 1), [0, 1, mp.inf])
    lp = area * mp.quad(lambda r: u(r) ** crit * r ** (n - 1), [0, 1, mp.inf])
    return kin / lp ** (2 / crit)


if __name__ == "__main__":
    for n in (3, 4):
        print(f"S_{n}: closed form {mp.nstr(closed_form(n), 20)}, quotient {mp.nstr(rayleigh(n), 20)}")
    for p in (3, 4):
        # w = (p/2)^{1/(p-2)} sech^{2/(p-2)}((p-2) x / 2)
        print(f"N = 1, p = {p}: w(0) = {mp.nstr((mp.mpf(p) / 2) ** (1 / mp.mpf(p - 2)), 20)}")
