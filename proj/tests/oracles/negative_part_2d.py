"""Integral over the unit square of max(0.5 - cos(2 pi x1) - cos(2 pi x2), 0).

The x1 integral has a closed form for fixed x2; mpmath integrates the rest
with the kinks supplied as breakpoints.
"""
import mpmath as mp

mp.mp.dps = 30


def inner(x2):
    c = mp.mpf("0.5") - mp.cos(2 * mp.pi * x2)
    if c >= 1:
        return c
    if c <= -1:
        return mp.mpf(0)
    t0 = mp.acos(c)
    return (c * (mp.pi - t0) + mp.sin(t0)) / mp.pi


# c = 1 at cos(2 pi x2) = -0.5, c = -1 never happens.
k = mp.acos(mp.mpf("-0.5")) / (2 * mp.pi)
print(mp.nstr(mp.quad(inner, [0, k, 1 - k, 1]), 20))
