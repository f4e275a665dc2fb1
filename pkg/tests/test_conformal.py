import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from faberlab.conformal import (
    MAX_ARG_STEP,
    branch_power,
    branch_root,
    build_map,
    continuous_log,
    eval_derivative,
    eval_map,
)
from faberlab.curve import CurveSpec, resample
from faberlab.errors import (
    BranchError,
    DomainError,
    ParameterError,
    PoleError,
    ResolutionError,
    UnsupportedCurveError,
)

A, B = 2.0, 1.0


@pytest.fixture(scope="module")
def phi():
    return build_map(CurveSpec.ellipse(A, B), "phi")


@pytest.fixture(scope="module")
def psi():
    return build_map(CurveSpec.ellipse(A, B), "psi")


def disc_map_oracle(z, a=A, b=B):
    """Interior Riemann map of the ellipse onto the unit disc (Schwarz, via sn)."""
    q = ((a - b) / (a + b)) ** 2
    k = (mpmath.jtheta(2, 0, q) / mpmath.jtheta(3, 0, q)) ** 2
    K = mpmath.ellipk(k**2)
    c = mpmath.sqrt(a * a - b * b)
    u = 2 * K / mpmath.pi * mpmath.asin(z / c)
    val = mpmath.sqrt(k) * mpmath.ellipfun("sn", u, m=k**2)
    deriv0 = mpmath.sqrt(k) * 2 * K / (mpmath.pi * c)
    return complex(val), float(deriv0)


def test_continuous_log_anchors():
    th = np.linspace(0, 4 * np.pi, 200)
    v = 2 * np.exp(1j * (th - 0.5))
    lg = continuous_log(v)
    assert np.allclose(lg.imag, th - 0.5)
    assert np.allclose(lg.real, np.log(2))
    assert continuous_log(v, anchor="upper")[0].imag == pytest.approx(2 * np.pi - 0.5)
    closed = np.exp(1j * (np.pi + 0.2 * np.sin(np.linspace(0, 2 * np.pi, 64, endpoint=False))))
    assert abs(np.mean(continuous_log(closed, anchor="mean").imag)) <= np.pi + 1e-12


def test_continuous_log_guards():
    with pytest.raises(BranchError):
        continuous_log(np.array([1.0, 0.0, 1.0]))
    with pytest.raises(ResolutionError):
        continuous_log(np.exp(1j * np.array([0.0, MAX_ARG_STEP + 0.05])))
    with pytest.raises(ParameterError):
        continuous_log(np.ones(3), anchor="sideways")
    with pytest.raises(ParameterError):
        branch_root(np.ones(3), 0.0)


@given(st.floats(1.1, 8.0))
def test_root_monodromy_on_circle(p):
    th = 2 * np.pi * np.arange(257) / 256
    r = branch_root(np.exp(1j * th), p)
    assert r.monodromy == pytest.approx(np.exp(2j * np.pi / p), abs=1e-12)
    assert np.allclose(branch_power(r.root_samples, p), r.base_samples, atol=1e-12)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_branch_power_multiplicative(a, b):
    t = np.linspace(0, 1, 64)
    v = (2 + np.exp(2j * np.pi * t)) * np.exp(0.3j)
    assert np.allclose(branch_power(v, a) * branch_power(v, b), branch_power(v, a + b), rtol=1e-12)


def test_circle_maps():
    ph = build_map(CurveSpec.circle(2.0), "phi")
    ps = build_map(CurveSpec.circle(2.0), "psi")
    z = np.array([3.0, -4j, 2.5 + 2.5j])
    assert np.allclose(ph(z), z / 2)
    assert ph.leading == pytest.approx(0.5)
    zi = np.array([0.5, 1j, -0.3 + 0.2j])
    assert np.allclose(ps(zi), 2 / zi)
    assert ps.leading == pytest.approx(2.0)


def test_ellipse_exterior_joukowski(phi):
    gamma = 2 / (A + B)
    assert phi.leading == pytest.approx(gamma)
    w = np.array([1.5, 2j, -1.2 + 1.1j, 3 * np.exp(0.7j)])
    z = (A + B) / 2 * w + (A - B) / 2 / w
    assert np.allclose(phi(z), w, atol=1e-13)
    assert phi.roundtrip < 1e-13
    assert phi.coeffs[0] == pytest.approx(gamma)


def test_ellipse_interior_against_sn(psi):
    pts = [0.3, 0.5 + 0.4j, -1.6 + 0.1j, 0.8j, 1.2 - 0.5j, 1.9]
    for z in pts:
        f, _ = disc_map_oracle(z)
        assert abs(psi(z) - 1 / f) < 1e-10 * abs(1 / f)
    # psi = 1/f, so psi(z) ~ 1/(f'(0) z) near 0
    _, d0 = disc_map_oracle(0.0)
    assert psi.leading == pytest.approx(1 / d0, rel=1e-12)
    assert psi.coeffs[0] == pytest.approx(1 / d0, rel=1e-10)
    assert psi.roundtrip < 1e-10


def test_boundary_correspondence(phi, psi):
    c = resample(CurveSpec.ellipse(A, B), 256)
    for mp in (phi, psi):
        w = mp.boundary_values(c.s)
        assert np.allclose(np.abs(w), 1.0)
        assert np.max(np.abs(mp.inverse(w) - c.z)) < 1e-10
        # |d arg w / ds| = |map'| on the curve
        assert np.allclose(np.abs(mp.boundary_rate(c.s)), 1 / np.abs(mp.inverse_derivative(w)), rtol=1e-9)
        th = np.angle(w[::17])
        assert np.allclose(np.exp(1j * mp.boundary_angle(mp.boundary_parameter(th))), np.exp(1j * th), atol=1e-12)
    assert np.all(np.diff(np.unwrap(phi.boundary_angle(c.s))) > 0)
    assert np.all(np.diff(np.unwrap(psi.boundary_angle(c.s))) < 0)


def test_log_scale_continuation(phi, psi):
    w = 1.05 * np.exp(1j * np.linspace(0, 2 * np.pi, 40, endpoint=False))
    for mp in (phi, psi):
        lg = mp.log_scale(w)
        assert np.allclose(np.exp(lg), mp.scale(w), rtol=1e-12)
        assert mp.log_scale(np.array([1e6]))[0].imag == pytest.approx(0.0, abs=1e-9)
    c = resample(CurveSpec.ellipse(A, B), 512)
    bl = psi.boundary_log_scale(c)
    assert np.allclose(np.exp(bl), psi.scale(psi.boundary_values(c.s)), rtol=1e-8)
    near = psi.log_scale(1.0001 * psi.boundary_values(c.s[:5]))
    assert np.allclose(bl[:5].imag, near.imag, atol=1e-3)


def test_derivative_against_finite_difference(phi, psi):
    eps = 1e-6
    for mp, z in ((phi, np.array([2.5, 1.5j, -2 - 1j])), (psi, np.array([0.4, -0.5 + 0.3j]))):
        fd = (eval_map(mp, z + eps) - eval_map(mp, z - eps)) / (2 * eps)
        assert np.allclose(eval_derivative(mp, z), fd, rtol=1e-7)


def test_eval_map_tail(psi):
    w, tail = eval_map(psi, 0.5, with_tail=True)
    assert isinstance(w, complex) and tail < 1e-10


def test_domain_errors(phi, psi):
    with pytest.raises(DomainError):
        phi(0.5)
    with pytest.raises(DomainError):
        psi(3.0)
    with pytest.raises(PoleError):
        psi(0.0)
    with pytest.raises(DomainError):
        phi(psi.inverse(np.array([1.0 + 0j])))
    with pytest.raises(ParameterError):
        build_map(CurveSpec.circle(), "sideways")
    with pytest.raises(ParameterError):
        build_map(CurveSpec.circle(), "phi", M=4)


def test_custom_curves():
    spec = CurveSpec.custom(lambda s: 0.5 * np.exp(2j * s), lambda s: 1j * np.exp(2j * s), np.pi)
    with pytest.raises(UnsupportedCurveError):
        build_map(spec, "phi")
    mp = build_map(spec, "phi", boundary=lambda s: np.exp(2j * s), n_map=256)
    assert mp.leading == pytest.approx(2.0)
    assert np.allclose(mp(np.array([1.0, -2j])), [2.0, -4j])
    shifted = CurveSpec.custom(lambda s: 3 + np.exp(1j * s), lambda s: 1j * np.exp(1j * s), 2 * np.pi)
    with pytest.raises(DomainError):
        build_map(shifted, "psi", boundary=lambda s: np.exp(-1j * s), n_map=256)


@given(st.floats(0.05, 0.95), st.floats(0, 2 * np.pi))
def test_psi_roundtrip_interior(r, t):
    psi = build_map(CurveSpec.ellipse(A, B), "psi")
    z = r * complex(A * np.cos(t), B * np.sin(t))
    assert abs(psi.inverse(psi(z)) - z) < 1e-12
