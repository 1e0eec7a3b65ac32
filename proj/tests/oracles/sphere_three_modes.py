# min F_4 on {||u||_4^4 = k} over span{1, cos 2 pi x, sin 2 pi x};
# a = 0.2, h = -1, f = cos(2 pi x) - 1/4. Spherical angles, Nelder-Mead from a
# grid of starts, then findroot at 30 digits. The 64-point rule is exact for
# these trigonometric polynomials.
import mpmath as mp
import numpy as np
from scipy.optimize import minimize

mp.mp.dps = 30
pi = mp.pi
a = mp.mpf("0.2")
c = mp.mpf("0.25")
q = 4


def moments(w):
    c0, c1, s1 = w
    U4 = FU4 = 0
    for j in range(64):
        x = mp.mpf(j) / 64
        u = c0 + c1 * mp.cos(2 * pi * x) + s1 * mp.sin(2 * pi * x)
        U4 += u**4
        FU4 += (mp.cos(2 * pi * x) - c) * u**4
    return U4 / 64, FU4 / 64


def Q(w):
    c0, c1, s1 = w
    e = (c1**2 + s1**2) / 2
    return 16 * pi**4 * e - a * 4 * pi**2 * e - (c0**2 + e)


def F_on_sphere(w, k):
    U4, FU4 = moments(w)
    t = (k / U4) ** (mp.mpf(1) / q)
    return t**2 * Q(w) - t**4 * FU4


X = np.arange(64) / 64
for k in ["1", "50", "10000"]:
    k = mp.mpf(k)
    kf = float(k)

    def fn(ang):
        th, ph = ang
        c0, c1, s1 = np.cos(th), np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph)
        u = c0 + c1 * np.cos(2 * np.pi * X) + s1 * np.sin(2 * np.pi * X)
        U4 = (u**4).mean()
        FU4 = ((np.cos(2 * np.pi * X) - 0.25) * u**4).mean()
        t = (kf / U4) ** 0.25
        e = (c1**2 + s1**2) / 2
        return t**2 * (16 * np.pi**4 * e - 0.8 * np.pi**2 * e - (c0**2 + e)) - t**4 * FU4

    best = None
    for th in np.linspace(0.05, 3.1, 12):
        for ph in np.linspace(0, 6.2, 8):
            r = minimize(fn, [th, ph], method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
            if best is None or r.fun < best.fun:
                best = r
    th, ph = [mp.mpf(x) for x in best.x]
    g = lambda t, p: F_on_sphere([mp.cos(t), mp.sin(t) * mp.cos(p), mp.sin(t) * mp.sin(p)], k)
    s = mp.findroot(lambda t, p: [mp.diff(lambda z: g(z, p), t), mp.diff(lambda z: g(t, z), p)], (th, ph))
    print(mp.nstr(k, 6), mp.nstr(g(s[0], s[1]), 20))
