import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from faberlab.curve import CurveSpec, check_regular, geometric_radii, resample, trig_interpolate
from faberlab.errors import CuspError, OrientationError, ParameterError, SizingError


def ellipse_perimeter(a, b):
    return quad(lambda t: np.hypot(a * np.sin(t), b * np.cos(t)), 0, 2 * np.pi, epsabs=1e-13, epsrel=1e-13, limit=200)[0]


@pytest.mark.parametrize("a,b", [(2.0, 1.0), (1.0, 1.0), (3.0, 0.5), (1.0, 2.5)])
def test_ellipse_length_matches_quadrature(a, b):
    spec = CurveSpec.ellipse(a, b)
    assert spec.length == pytest.approx(ellipse_perimeter(a, b), rel=1e-12)


def test_ellipse_nodes_are_arc_length_uniform():
    c = resample(CurveSpec.ellipse(2.0, 1.0), 256)
    assert np.allclose(np.abs(c.dz), 1.0, atol=1e-12)
    # arc between successive nodes computed independently
    t = c.spec.ellipse_parameter(c.s)
    t = np.append(t, 2 * np.pi)
    arcs = [quad(lambda x: np.hypot(2 * np.sin(x), np.cos(x)), t[k], t[k + 1])[0] for k in range(0, 256, 37)]
    assert np.allclose(arcs, c.h, rtol=1e-9)
    assert np.allclose(c.z, 2 * np.cos(t[:-1]) + 1j * np.sin(t[:-1]), atol=1e-14)


def test_derivative_against_finite_difference():
    spec = CurveSpec.ellipse(2.0, 1.0)
    s = np.linspace(0.1, spec.length - 0.1, 17)
    eps = 1e-6
    fd = (spec.evaluate(s + eps)[0] - spec.evaluate(s - eps)[0]) / (2 * eps)
    assert np.allclose(fd, spec.evaluate(s)[1], atol=1e-8)


def test_circle_example_four_nodes():
    c = resample(CurveSpec.circle(), 4)
    assert np.allclose(c.z, [1, 1j, -1, -1j], atol=1e-15)
    assert c.h == pytest.approx(np.pi / 2)


def test_sizes_must_be_powers_of_two():
    for n in (3, 12, 100, 0):
        with pytest.raises(SizingError):
            resample(CurveSpec.circle(), n)


def test_bad_parameters():
    with pytest.raises(ParameterError):
        CurveSpec.circle(-1)
    with pytest.raises(ParameterError):
        CurveSpec.ellipse(1.0, 0.0)
    with pytest.raises(ParameterError):
        CurveSpec.from_json({"kind": "square"})


def test_custom_reversed_orientation_is_repaired():
    spec = CurveSpec.custom(lambda s: np.exp(-1j * s), lambda s: -1j * np.exp(-1j * s), 2 * np.pi)
    with pytest.warns(UserWarning, match="negatively oriented"):
        c = resample(spec, 64)
    assert np.all(c.winding_number(np.array([0.0, 0.3j])) == 1)


def test_cusp_rejected():
    # speed vanishes at s = 0
    spec = CurveSpec.custom(lambda s: np.exp(1j * s), lambda s: 1j * np.exp(1j * s) * (1 - np.cos(s)), 2 * np.pi)
    with pytest.raises(CuspError):
        resample(spec, 64)


def test_self_intersection_rejected():
    # figure-eight (lemniscate of Gerono)
    spec = CurveSpec.custom(lambda s: np.sin(s + 0.1) + 0.5j * np.sin(2 * s + 0.2),
                            lambda s: np.cos(s + 0.1) + 1j * np.cos(2 * s + 0.2), 2 * np.pi)
    with pytest.raises(OrientationError):
        resample(spec, 128)


def test_table_and_csv_round_trip(tmp_path):
    c = resample(CurveSpec.ellipse(2.0, 1.0), 128)
    path = tmp_path / "curve.csv"
    rows = np.column_stack([c.s, c.z.real, c.z.imag, c.dz.real, c.dz.imag])
    np.savetxt(path, rows, delimiter=",", header="s,re,im,dre,dim")
    spec = CurveSpec.from_csv(path)
    assert spec.length == pytest.approx(c.length)
    c2 = resample(spec, 256)
    assert np.allclose(c2.z[::2], c.z, atol=1e-12)
    # interpolated midpoints lie on the ellipse
    assert np.allclose((c2.z.real / 2) ** 2 + c2.z.imag**2, 1.0, atol=1e-9)
    assert CurveSpec.from_json({"kind": "custom", "csv": str(path)}).length == pytest.approx(c.length)


def test_json_round_trip():
    for spec in (CurveSpec.circle(1.5), CurveSpec.ellipse(2.0, 1.0)):
        assert CurveSpec.from_json(spec.to_json()) == spec


def test_trig_interpolate_reproduces_trig_polynomial():
    s = 2 * np.pi * np.arange(32) / 32
    f = np.exp(3j * s) + 0.5 * np.exp(-5j * s)
    x = np.linspace(0, 2 * np.pi, 11)
    assert np.allclose(trig_interpolate(f, 2 * np.pi, x), np.exp(3j * x) + 0.5 * np.exp(-5j * x), atol=1e-13)


def test_winding_and_distance(ellipse):
    pts = np.array([0.0, 1.9, 2.1, 3j, 0.9j])
    assert list(ellipse.contains(pts)) == [True, True, False, False, True]
    assert ellipse.distance(np.array([0.0]))[0] == pytest.approx(1.0, abs=1e-5)


def test_arc_length_quadrature(ellipse):
    assert ellipse.arc_length() == pytest.approx(ellipse.length, rel=1e-13)


def test_carleson_circle_oracle():
    c = resample(CurveSpec.circle(), 1024)
    rep = check_regular(c)
    # arc inside a disc of radius r centered on the unit circle: 4 arcsin(r/2)
    r = np.linspace(0.05, 2.0, 400)
    oracle = np.max(4 * np.arcsin(r / 2) / r)
    assert oracle == pytest.approx(np.pi)
    assert abs(rep.sup_ratio - oracle) / oracle < 0.02
    assert rep.is_regular


def test_arc_measure_matches_arcsin_law():
    from faberlab.curve import _arc_in_discs

    c = resample(CurveSpec.circle(), 2048)
    radii = np.array([0.01, 0.1, 0.5, 1.0, 1.9])
    got = _arc_in_discs(c, c.z[0], radii)
    assert np.allclose(got, 4 * np.arcsin(radii / 2), rtol=1e-4)


def test_small_radii_ratio_near_two():
    c = resample(CurveSpec.ellipse(2.0, 1.0), 1024)
    rep = check_regular(c, radii=geometric_radii(4 * c.h, 0.1))
    assert rep.sup_ratio == pytest.approx(2.0, rel=5e-3)
    assert rep.is_regular


@given(st.floats(0.2, 5.0))
def test_circle_length_scales(r):
    c = resample(CurveSpec.circle(r), 64)
    assert c.arc_length() == pytest.approx(2 * np.pi * r, rel=1e-12)
    assert np.allclose(np.abs(c.z), r)


@given(st.floats(0.3, 4.0), st.floats(0.3, 4.0), st.floats(0.5, 3.0))
def test_ellipse_length_homogeneous(a, b, lam):
    assert CurveSpec.ellipse(lam * a, lam * b).length == pytest.approx(lam * CurveSpec.ellipse(a, b).length, rel=1e-10)


def test_geometric_radii_anchor():
    g1 = geometric_radii(0.1, 2.0)
    g2 = geometric_radii(0.01, 2.0)
    assert g1[0] == 2.0 and np.allclose(g2[: g1.size], g1)
    with pytest.raises(ParameterError):
        geometric_radii(2.0, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        geometric_radii(1.0, 1.0)
