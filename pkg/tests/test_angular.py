import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atomslit.angular import cos_coupling, dipole_angular, two_photon_angular, wigner_3j, ylm0


def test_closed_forms(oracles):
    assert wigner_3j(1, 1, 0, 0, 0, 0) == pytest.approx(-1 / math.sqrt(3), abs=1e-14)
    assert wigner_3j(1, 1, 0, 0, 0, 0) == pytest.approx(oracles["w3j_110_000"], abs=1e-14)
    assert wigner_3j(2, 1, 1, 0, 0, 0) == pytest.approx(math.sqrt(2 / 15), abs=1e-14)
    assert wigner_3j(2, 1, 1, 0, 0, 0) == pytest.approx(oracles["w3j_211_000"], abs=1e-14)
    assert wigner_3j(3, 1, 2, 0, 0, 0) == pytest.approx(oracles["w3j_312_000"], abs=1e-14)
    assert wigner_3j(2, 1, 1, 1, -1, 0) == pytest.approx(oracles["w3j_211_m"], abs=1e-14)


def test_selection_rules_give_exact_zero():
    assert wigner_3j(1, 1, 1, 0, 0, 0) == 0.0  # odd sum, all m = 0
    assert wigner_3j(1, 1, 3, 0, 0, 0) == 0.0  # triangle
    assert wigner_3j(1, 1, 1, 1, 1, 0) == 0.0  # m sum
    assert wigner_3j(1, 1, 1, 2, -2, 0) == 0.0  # |m| > j
    assert wigner_3j(0.3, 1, 1, 0, 0, 0) == 0.0  # not a half-integer


def test_half_integer_arguments():
    assert wigner_3j(0.5, 0.5, 1, 0.5, -0.5, 0) == pytest.approx(1 / math.sqrt(6), abs=1e-14)
    assert wigner_3j(Fraction(1, 2), Fraction(1, 2), 0, Fraction(1, 2), Fraction(-1, 2), 0) == pytest.approx(
        1 / math.sqrt(2), abs=1e-14)


triples = st.tuples(st.integers(0, 5), st.integers(0, 5), st.integers(0, 5)).filter(
    lambda t: abs(t[0] - t[1]) <= t[2] <= t[0] + t[1])


@settings(max_examples=150, deadline=None)
@given(t=triples, data=st.data())
def test_column_permutation_symmetry(t, data):
    j1, j2, j3 = t
    m1 = data.draw(st.integers(-j1, j1))
    m2 = data.draw(st.integers(-j2, j2))
    m3 = -m1 - m2
    if abs(m3) > j3:
        return
    v = wigner_3j(j1, j2, j3, m1, m2, m3)
    sign = (-1) ** (j1 + j2 + j3)
    # cyclic permutations leave it unchanged, odd permutations give the sign
    assert wigner_3j(j2, j3, j1, m2, m3, m1) == pytest.approx(v, abs=1e-12)
    assert wigner_3j(j2, j1, j3, m2, m1, m3) == pytest.approx(sign * v, abs=1e-12)
    assert wigner_3j(j1, j2, j3, -m1, -m2, -m3) == pytest.approx(sign * v, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(t=triples, data=st.data())
def test_orthogonality_sum(t, data):
    j1, j2, j3 = t
    m3 = data.draw(st.integers(-j3, j3))
    total = 0.0
    for m1 in range(-j1, j1 + 1):
        m2 = -m1 - m3
        if abs(m2) <= j2:
            total += (2 * j3 + 1) * wigner_3j(j1, j2, j3, m1, m2, m3) ** 2
    assert total == pytest.approx(1.0, abs=1e-12)


def test_ylm0_normalization():
    th = np.linspace(0, np.pi, 4001)
    for l in range(5):
        y = ylm0(l, th)
        norm = 2 * np.pi * np.trapezoid(y * y * np.sin(th), th)
        assert norm == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("l", range(6))
def test_cos_coupling_matches_3j(l):
    assert dipole_angular(l + 1, l) == pytest.approx(cos_coupling(l), abs=1e-14)
    assert dipole_angular(l, l + 1) == pytest.approx(cos_coupling(l), abs=1e-14)


def test_cos_coupling_by_quadrature():
    th = np.linspace(0, np.pi, 20001)
    for l in range(4):
        v = 2 * np.pi * np.trapezoid(ylm0(l + 1, th) * np.cos(th) * ylm0(l, th) * np.sin(th), th)
        assert v == pytest.approx(cos_coupling(l), abs=1e-7)


def test_two_photon_weights():
    assert two_photon_angular(0) == pytest.approx(1 / 3, abs=1e-14)
    assert two_photon_angular(2) == pytest.approx(2 / math.sqrt(45), abs=1e-14)
    assert dipole_angular(2, 0) == 0.0
