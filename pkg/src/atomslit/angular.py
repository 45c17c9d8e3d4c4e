"""Angular-momentum algebra for m = 0 dipole problems."""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import factorial, sqrt

import numpy as np
from scipy.special import eval_legendre


def _is_half_int(x) -> bool:
    return (2 * Fraction(x).limit_denominator(4)).denominator == 1


@lru_cache(maxsize=4096)
def _three_j(j1, j2, j3, m1, m2, m3) -> float:
    # all arguments are Fractions here; Racah's closed form
    if m1 + m2 + m3 != 0:
        return 0.0
    if not (abs(j1 - j2) <= j3 <= j1 + j2):
        return 0.0
    for j, m in ((j1, m1), (j2, m2), (j3, m3)):
        if abs(m) > j or (j - m).denominator != 1:
            return 0.0
    if (j1 + j2 + j3).denominator != 1:
        return 0.0
    J = int(j1 + j2 + j3)
    if m1 == m2 == m3 == 0 and J % 2:
        return 0.0

    def f(x):
        return factorial(int(x))

    tri = f(j1 + j2 - j3) * f(j1 - j2 + j3) * f(-j1 + j2 + j3) / f(J + 1)
    pre = sqrt(tri * f(j1 + m1) * f(j1 - m1) * f(j2 + m2) * f(j2 - m2) * f(j3 + m3) * f(j3 - m3))
    kmin = int(max(0, j2 - j3 - m1, j1 - j3 + m2))
    kmax = int(min(j1 + j2 - j3, j1 - m1, j2 + m2))
    total = 0.0
    for k in range(kmin, kmax + 1):
        denom = (f(k) * f(j1 + j2 - j3 - k) * f(j1 - m1 - k) * f(j2 + m2 - k)
                 * f(j3 - j2 + m1 + k) * f(j3 - j1 - m2 + k))
        total += (-1) ** k / denom
    sign = (-1) ** int(j1 - j2 - m3)
    return float(sign * pre * total)


def wigner_3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3j symbol. Returns exactly 0.0 whenever a selection rule fails."""
    args = []
    for x in (j1, j2, j3, m1, m2, m3):
        if not _is_half_int(x):
            return 0.0
        args.append(Fraction(x).limit_denominator(2))
    if any(j < 0 for j in args[:3]):
        return 0.0
    return _three_j(*args)


def ylm0(l: int, theta) -> np.ndarray:
    """Y_l0(theta) (real)."""
    theta = np.asarray(theta, dtype=float)
    return np.sqrt((2 * l + 1) / (4 * np.pi)) * eval_legendre(l, np.cos(theta))


def cos_coupling(l: int) -> float:
    """<l+1, 0|cos(theta)|l, 0>."""
    return (l + 1) / sqrt((2 * l + 1) * (2 * l + 3))


def dipole_angular(lf: int, li: int) -> float:
    """<lf 0|cos(theta)|li 0> via the 3j symbol; 0 unless |lf - li| = 1."""
    if abs(lf - li) != 1:
        return 0.0
    lg = max(lf, li)
    return (-1) ** lg * wigner_3j(lf, 1, li, 0, 0, 0) * sqrt(lg)


def two_photon_angular(lf: int) -> float:
    """Angular weight of s -> p -> lf for two z-polarized photons."""
    return dipole_angular(lf, 1) * dipole_angular(1, 0)
