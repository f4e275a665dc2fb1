import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from faberlab.conformal import build_map
from faberlab.curve import CurveSpec, resample
from faberlab.errors import DomainError, ParameterError
from faberlab.faber import default_radii, faber_minus, faber_pair, faber_plus, faber_remainder

A, B = 2.0, 1.0


@pytest.fixture(scope="module")
def phi():
    return build_map(CurveSpec.ellipse(A, B), "phi")


@pytest.fixture(scope="module")
def psi():
    return build_map(CurveSpec.ellipse(A, B), "psi")


def joukowski_plus_oracle(n, p, a=A, b=B, K=1024, r=2.2):
    """Coefficients of z^0..z^n of phi^n (phi')^(1/p) from the closed form."""
    z = r * np.exp(2j * np.pi * np.arange(K) / K)
    root = z * np.sqrt(1 - (a * a - b * b) / z**2)
    ph = (z + root) / (a + b)
    dph = (1 + z / root) / (a + b)
    g = ph**n * dph ** (1 / p)
    c = np.fft.fft(g) / K
    return np.array([c[k] / r**k for k in range(n + 1)])


def sn_minus_oracle(n, p, a=A, b=B, K=128, r=0.5):
    """Principal part of exp(i pi/p) f^-n (f')^(1/p), f the interior disc map."""
    q = ((a - b) / (a + b)) ** 2
    k = (mpmath.jtheta(2, 0, q) / mpmath.jtheta(3, 0, q)) ** 2
    Kk = mpmath.ellipk(k**2)
    c = mpmath.sqrt(a * a - b * b)
    g = np.empty(K, dtype=complex)
    zs = r * np.exp(2j * np.pi * np.arange(K) / K)
    for j, z in enumerate(zs):
        u = 2 * Kk / mpmath.pi * mpmath.asin(z / c)
        sn, cn, dn = (mpmath.ellipfun(f, u, m=k**2) for f in ("sn", "cn", "dn"))
        f = mpmath.sqrt(k) * sn
        df = mpmath.sqrt(k) * cn * dn * 2 * Kk / (mpmath.pi * mpmath.sqrt(c * c - z * z))
        g[j] = complex(f ** (-n) * df ** (1.0 / p))
    g *= np.exp(1j * np.pi / p)
    cf = np.fft.fft(g) / K  # coefficient of z^-m at index K - m
    return np.array([cf[K - m] * r**m for m in range(1, n + 1)])


@pytest.mark.parametrize("n", [0, 1, 2, 5, 9])
@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_plus_matches_joukowski_oracle(phi, n, p):
    P = faber_plus(phi, p, n)
    ref = joukowski_plus_oracle(n, p)
    if n == 0:
        assert P.coeffs[0] == 1.0
        assert P.diagnostics["dropped_factor"] == pytest.approx(ref[0].real, rel=1e-12)
    else:
        assert np.allclose(P.coeffs, ref, atol=1e-11 * np.max(np.abs(ref)))


@pytest.mark.parametrize("n", [1, 2, 4, 7])
@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_minus_matches_sn_oracle(psi, n, p):
    P = faber_minus(psi, p, n)
    ref = sn_minus_oracle(n, p)
    assert np.allclose(P.coeffs, ref, atol=1e-9 * np.max(np.abs(ref)))


@pytest.mark.parametrize("n", range(0, 17))
def test_degree_and_leading_law(phi, psi, n):
    for p in (1.5, 2.0, 3.0):
        P = faber_plus(phi, p, n)
        assert P.coeffs.size == n + 1 and P.agreement < 1e-8
        if n:
            assert abs(P.leading / phi.leading ** (n + 1 / p) - 1) < 1e-6
        if n >= 1:
            Q = faber_minus(psi, p, n)
            assert Q.coeffs.size == n and Q.agreement < 1e-8
            expect = np.exp(1j * np.pi / p) * psi.leading ** (n - 1 / p)
            assert abs(Q.leading / expect - 1) < 1e-6


@given(st.integers(0, 12), st.floats(1.05, 6.0), st.floats(0.3, 3.0))
def test_circle_collapses_to_monomials(n, p, R):
    spec = CurveSpec.circle(R)
    P = faber_plus(build_map(spec, "phi"), p, n)
    rows = P.to_rows(tol=1e-9)
    assert [r[0] for r in rows] == [n]
    if n:
        assert P.leading == pytest.approx(R ** -(n + 1 / p), rel=1e-10)
        Q = faber_minus(build_map(spec, "psi"), p, n)
        assert [r[0] for r in Q.to_rows(tol=1e-9)] == [-n]
        assert Q.leading == pytest.approx(np.exp(1j * np.pi / p) * R ** (n - 1 / p), rel=1e-10)


def test_circle_gen_example_row():
    P = faber_plus(build_map(CurveSpec.circle(), "phi"), 2.0, 5)
    assert P.to_rows(tol=1e-13) == [(5, 1.0, 0.0)]


def test_contour_eval_agrees_with_horner(phi, psi):
    c = resample(CurveSpec.ellipse(A, B), 256)
    for P in (faber_plus(phi, 2.0, 6), faber_minus(psi, 2.0, 6)):
        h = P(c.z)
        assert np.max(np.abs(P.contour_eval(c.z) - h)) < 1e-10 * np.max(np.abs(h))


def test_remainder_decay(phi, psi):
    p, n = 2.0, 3
    z = np.array([40.0, 80.0]) * np.exp(0.3j)
    e = faber_remainder(phi, p, n, z)
    # remainder is O(1/z) at infinity (odd n: the 1/z term survives the symmetry)
    assert abs(e[0] / e[1]) == pytest.approx(2.0, rel=0.05)
    # inside, the remainder stays bounded at 0 while each term blows up like z^-4
    zs = np.array([0.05, 0.02, 0.01]) * np.exp(0.4j)
    e0 = np.abs(faber_remainder(psi, p, 4, zs))
    assert e0.max() < 2 * e0.min()
    with pytest.raises(DomainError):
        faber_remainder(psi, p, 0, 0.5)


def test_pair_and_json(phi, psi):
    plus, minus = faber_pair(phi, psi, 2.0, 3, 2)
    assert [P.n for P in plus] == [0, 1, 2, 3] and [Q.n for Q in minus] == [1, 2]
    js = minus[1].to_json()
    assert js["side"] == "minus" and [r[0] for r in js["coeffs"]] == [-1, -2]
    assert js["two_radius_agreement"] < 1e-8


def test_argument_errors(phi, psi):
    with pytest.raises(ParameterError):
        faber_plus(psi, 2.0, 1)
    with pytest.raises(ParameterError):
        faber_minus(phi, 2.0, 1)
    with pytest.raises(ParameterError):
        faber_plus(phi, 2.0, -1)
    with pytest.raises(ParameterError):
        faber_minus(psi, 2.0, 0)
    with pytest.raises(ParameterError):
        faber_plus(phi, 1.0, 2)
    with pytest.raises(ParameterError):
        faber_plus(phi, 2.0, 2, radius=0.9)


def test_default_radii_shrink():
    r8, r32 = default_radii(8), default_radii(32)
    assert r32[0] < r8[0] and all(r > 1 for r in r32)
    assert r32[0] ** 32 < np.exp(6)
