"""Exterior and interior conformal maps held through their inverse series.

``phi`` maps the exterior of the curve onto ``|w| > 1`` with
``phi(inf) = inf`` and ``phi'(inf) = gamma > 0``.  ``psi`` maps the interior
onto ``|w| > 1`` with a simple pole at 0, ``lim z psi(z) = alpha > 0``.

Both are stored through their inverses on ``|w| >= 1``::

    phi_inv(w) = sum_{m <= 1} c_m w^m        (c_1 = 1/gamma)
    psi_inv(w) = sum_{k >= 1} b_k w^(-k)     (b_1 = alpha)

Forward evaluation solves ``inverse(w) = z`` by Newton's method.  Inverse
series converge up to the boundary for analytic curves, whereas the forward
Laurent series of ``phi`` at infinity can diverge near the curve (for an
ellipse it only converges outside the focal segment's enclosing circle).

Branches
--------
``phi_inv'(w)`` and ``u(w) = -w^2 psi_inv'(w)`` are analytic and zero-free on
``|w| > 1`` and tend to positive constants at infinity; their logarithms are
anchored to be real there.  Powers of ``psi'`` use
``(psi')^(1/p) = exp(i pi / p) psi^(2/p) u(psi)^(-1/p)``; the constant
``exp(i pi/p)`` is the branch convention reported by :attr:`LaurentMap.psi_branch`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .curve import CurveSpec, DiscretizedCurve, resample, trig_interpolate
from .errors import (
    AccuracyError,
    BranchError,
    DomainError,
    ParameterError,
    PoleError,
    ResolutionError,
    UnsupportedCurveError,
)

__all__ = [
    "LaurentMap",
    "BranchedRoot",
    "build_map",
    "eval_map",
    "eval_derivative",
    "branch_root",
    "branch_power",
    "continuous_log",
]

# largest principal argument step accepted between consecutive samples
MAX_ARG_STEP = 0.75 * np.pi


def continuous_log(samples, anchor="principal", weights=None):
    """Logarithm continued along an ordered sample path.

    Parameters
    ----------
    samples : array_like
        Nonzero complex values along the path.
    anchor : {"principal", "upper", "mean"}
        Branch at the first sample: principal argument, argument in
        ``[0, 2 pi)``, or (for closed paths of winding 0) the branch whose
        weighted mean argument lies in ``(-pi, pi]``.
    weights : array_like, optional
        Quadrature weights for the "mean" anchor (uniform by default).
    """
    v = np.asarray(samples, dtype=complex)
    if np.any(v == 0):
        raise BranchError("cannot continue a logarithm through a zero sample")
    steps = np.angle(v[1:] / v[:-1])
    if np.any(np.abs(steps) > MAX_ARG_STEP):
        j = int(np.argmax(np.abs(steps)))
        raise ResolutionError(
            f"argument jumps by {steps[j]:.3f} rad between samples {j} and {j + 1}; refine the path"
        )
    arg0 = np.angle(v[0])
    if anchor == "upper" and arg0 < 0:
        arg0 += 2 * np.pi
    arg = arg0 + np.concatenate([[0.0], np.cumsum(steps)])
    if anchor == "mean":
        wts = np.ones(v.size) if weights is None else np.asarray(weights, dtype=float)
        mean = np.sum(wts * arg) / np.sum(wts)
        arg = arg - 2 * np.pi * np.round(mean / (2 * np.pi))
    elif anchor not in ("principal", "upper"):
        raise ParameterError(f"unknown anchor {anchor!r}")
    return np.log(np.abs(v)) + 1j * arg


def branch_power(samples, exponent, anchor="principal", weights=None):
    """``samples ** exponent`` with the branch continued along the path."""
    return np.exp(exponent * continuous_log(samples, anchor, weights))


@dataclass(frozen=True)
class BranchedRoot:
    """Continuous ``p``-th root of samples along a path."""

    base_samples: np.ndarray
    p: float
    root_samples: np.ndarray
    anchor: str

    @property
    def monodromy(self) -> complex:
        """Ratio of the last to the first root sample, after one more step home."""
        return complex(self.root_samples[-1] / self.root_samples[0])


def branch_root(samples, p, anchor="principal") -> BranchedRoot:
    """Continuous ``p``-th root along an ordered path.

    The root at the first sample is ``|v|^(1/p) exp(i arg v / p)`` with
    ``arg`` the principal argument (anchor "principal", so a positive sample
    has a positive root) or taken in ``[0, 2 pi)`` (anchor "upper").
    """
    if not p > 0:
        raise ParameterError("root order must be positive")
    v = np.asarray(samples, dtype=complex)
    root = branch_power(v, 1.0 / p, anchor)
    return BranchedRoot(v, float(p), root, anchor)


def _kerzman_stein_boundary(curve: DiscretizedCurve) -> np.ndarray:
    """Boundary values of the interior Riemann map ``F(0) = 0, F'(0) > 0``.

    Solves the Kerzman-Stein integral equation for the Szego kernel
    ``S(z, 0)`` with the trapezoid rule; ``F = -i T S / conj(S)`` on the
    curve, with ``T`` the unit tangent.
    """
    z, tang, h = curve.z, curve.dz / np.abs(curve.dz), curve.h
    diff = z[None, :] - z[:, None]
    np.fill_diagonal(diff, 1.0)
    hz = tang[None, :] / diff / (2j * np.pi)
    np.fill_diagonal(hz, 0.0)
    kern = hz - np.conj(hz.T)
    rhs = np.conj(tang / z / (2j * np.pi))
    szego = np.linalg.solve(np.eye(curve.n) - h * kern, rhs)
    return -1j * tang * szego / np.conj(szego)


def _periodic_derivative(values, period):
    n = values.size
    k = np.fft.fftfreq(n, 1.0 / n)
    k[n // 2] = 0.0
    return np.real(np.fft.ifft(1j * (2 * np.pi / period) * k * np.fft.fft(values)))


class LaurentMap:
    """A conformal map ``phi`` or ``psi`` of a curve, with evaluators.

    Construct with :func:`build_map`.

    Attributes
    ----------
    direction : {"phi", "psi"}
    spec : CurveSpec
    inverse_coeffs : ndarray
        ``c_1, c_0, c_-1, ...`` for ``phi`` or ``b_1, b_2, ...`` for ``psi``.
    leading : float
        ``gamma`` for ``phi`` or ``alpha`` for ``psi``.
    roundtrip : float
        ``max |inverse(w_j) - z_j|`` over boundary nodes.
    """

    def __init__(self, direction, spec, inverse_coeffs, angle_grid, angle_periodic, kind="series"):
        self.direction = direction
        self.spec = spec
        self.inverse_coeffs = np.asarray(inverse_coeffs, dtype=complex)
        self.kind = kind
        self._angle_grid_n = angle_grid
        self._angle_periodic = np.asarray(angle_periodic, dtype=float)
        self._angle_rate = _periodic_derivative(self._angle_periodic, spec.length)
        self._ref = resample(spec, 1024 if spec.kind != "custom" else angle_grid)
        lead = self.inverse_coeffs[0].real
        self.leading = 1.0 / lead if direction == "phi" else lead
        self.roundtrip = float("nan")
        self._table = None
        self._coeffs = None

    # -- basic properties -------------------------------------------------
    @property
    def truncation(self) -> int:
        return self.inverse_coeffs.size - (2 if self.direction == "phi" else 0)

    @property
    def winding(self) -> int:
        """Winding of ``w(s)`` around 0 as ``s`` runs over the curve."""
        return 1 if self.direction == "phi" else -1

    @property
    def psi_branch(self) -> str:
        return "(psi')^(1/p) = exp(i*pi/p) * psi^(2/p) * u(psi)^(-1/p), u(w) = -w^2 psi_inv'(w) > 0 at w = inf"

    @property
    def diameter(self) -> float:
        return self._ref.diameter

    # -- inverse series ---------------------------------------------------
    def _powers(self, w):
        w = np.asarray(w, dtype=complex)
        if self.direction == "phi":
            m = 1 - np.arange(self.inverse_coeffs.size)
        else:
            m = -1 - np.arange(self.inverse_coeffs.size)
        return w, m

    def inverse(self, w):
        """Evaluate ``phi_inv`` or ``psi_inv`` at ``|w| >= 1``."""
        w, m = self._powers(w)
        if self.kind == "circle":
            r = self.inverse_coeffs[0].real
            return r * w if self.direction == "phi" else r / w
        if self.kind == "ellipse" and self.direction == "phi":
            c1, cm1 = self.inverse_coeffs[0], self.inverse_coeffs[2]
            return c1 * w + cm1 / w
        return _horner_inverse(self.inverse_coeffs, w, m[0])

    def inverse_derivative(self, w):
        w, m = self._powers(w)
        if self.kind == "circle":
            r = self.inverse_coeffs[0].real
            return r * np.ones_like(w) if self.direction == "phi" else -r / w**2
        if self.kind == "ellipse" and self.direction == "phi":
            c1, cm1 = self.inverse_coeffs[0], self.inverse_coeffs[2]
            return c1 - cm1 / w**2
        return _horner_inverse(self.inverse_coeffs * m, w, m[0] - 1)

    def scale(self, w):
        """``phi_inv'(w)`` or ``u(w) = -w^2 psi_inv'(w)``; positive at infinity."""
        w = np.asarray(w, dtype=complex)
        if self.direction == "phi":
            return self.inverse_derivative(w)
        return -(w**2) * self.inverse_derivative(w)

    def log_scale(self, w):
        """Logarithm of :meth:`scale`, real at infinity, continued along rays."""
        w = np.asarray(w, dtype=complex)
        if self.kind == "circle":
            return np.full(w.shape, np.log(self.inverse_coeffs[0].real), dtype=complex)
        if self.kind == "ellipse" and self.direction == "phi":
            c1, cm1 = self.inverse_coeffs[0].real, self.inverse_coeffs[2].real
            return np.log(c1) + np.log(1 - (cm1 / c1) / w**2)
        flat = w.ravel()
        t = np.geomspace(1.0, 1e3, 96)[::-1]
        path = flat[:, None] * t[None, :]
        vals = self.scale(path)
        out = np.empty(flat.shape, dtype=complex)
        for i in range(flat.size):
            out[i] = continuous_log(vals[i])[-1]
        return out.reshape(w.shape)

    def inverse_tail(self, w, terms: int = 8):
        """Size of the last ``terms`` series terms at ``w``."""
        w, m = self._powers(w)
        if self.kind != "series":
            return np.zeros(np.shape(w))
        c = self.inverse_coeffs[-terms:]
        mm = m[-terms:]
        return np.sum(np.abs(c[:, None]) * np.abs(np.ravel(w))[None, :] ** mm[:, None], axis=0).reshape(np.shape(w))

    # -- boundary correspondence -----------------------------------------
    def boundary_angle(self, s):
        """Continuous argument of ``w(s)`` on the curve."""
        s = np.asarray(s, dtype=float)
        per = trig_interpolate(self._angle_periodic, self.spec.length, s)
        return per + self.winding * 2 * np.pi * s / self.spec.length

    def boundary_rate(self, s):
        """``d arg w / ds``; equals ``|phi'|`` (or ``-|psi'|``) on the curve."""
        s = np.asarray(s, dtype=float)
        per = trig_interpolate(self._angle_rate, self.spec.length, s)
        return per + self.winding * 2 * np.pi / self.spec.length

    def boundary_values(self, s):
        return np.exp(1j * self.boundary_angle(s))

    def boundary_parameter(self, theta):
        """Arc parameter ``s`` at which ``w(s) = exp(i theta)``."""
        theta = np.asarray(theta, dtype=float)
        S = self.spec.length
        th0 = self.boundary_angle(0.0)
        s = np.mod(self.winding * (theta - th0) * S / (2 * np.pi), S)
        for _ in range(60):
            diff = np.angle(np.exp(1j * (self.boundary_angle(s) - theta)))
            step = diff / self.boundary_rate(s)
            s = s - step
            if np.max(np.abs(step), initial=0.0) < 1e-14 * S:
                break
        return np.mod(s, S)

    def boundary_log_scale(self, curve: DiscretizedCurve):
        """``log scale(w(s_j))`` at the curve nodes with the anchored branch.

        Uses ``phi_inv'(w) = z' / (i w theta')`` (and the analogous identity
        for ``u``), exact in terms of the boundary correspondence.
        """
        w = self.boundary_values(curve.s)
        rate = self.boundary_rate(curve.s)
        if self.direction == "phi":
            vals = curve.dz / (1j * w * rate)
        else:
            vals = 1j * w * curve.dz / rate
        logv = continuous_log(vals)
        ref = self.log_scale(w[0])
        k = np.round((ref.imag - logv[0].imag) / (2 * np.pi))
        return logv + 2j * np.pi * k

    # -- forward map ------------------------------------------------------
    def _check_domain(self, z):
        z = np.asarray(z, dtype=complex)
        if self.direction == "psi" and np.any(z == 0):
            raise PoleError("psi has a pole at z = 0")
        d = self._ref.distance(z)
        if np.any(d <= 1e-12 * self.diameter):
            raise DomainError("point lies on the curve")
        inside = self._ref.contains(z)
        if self.direction == "phi" and np.any(inside):
            raise DomainError("phi is defined outside the curve only")
        if self.direction == "psi" and not np.all(inside):
            raise DomainError("psi is defined inside the curve only")

    def _initial_guess(self, z):
        if self._table is None:
            r = 1.0 + np.geomspace(1e-3, 8.0, 48)
            th = 2 * np.pi * np.arange(256) / 256
            w = (r[:, None] * np.exp(1j * th)[None, :]).ravel()
            self._table = (w, self.inverse(w))
        tw, tz = self._table
        z = np.ravel(z)
        idx = np.argmin(np.abs(tz[None, :] - z[:, None]), axis=1)
        w0 = tw[idx]
        if self.direction == "phi":
            far = np.abs(z) > 8 * self.diameter
            w0[far] = z[far] * self.leading
        else:
            near = np.abs(z) < 1e-3 * self.diameter
            w0[near] = self.leading / z[near]
        return w0

    def _newton(self, z, w):
        for _ in range(100):
            step = (self.inverse(w) - z) / self.inverse_derivative(w)
            w = w - step
            if np.max(np.abs(step / w), initial=0.0) < 1e-15:
                break
        return w

    def __call__(self, z):
        return eval_map(self, z)

    def forward(self, z, check=True):
        z = np.asarray(z, dtype=complex)
        if check:
            self._check_domain(z)
        if self.kind == "circle":
            r = self.inverse_coeffs[0].real
            return z / r if self.direction == "phi" else r / z
        if self.kind == "ellipse" and self.direction == "phi":
            a, b = self.spec.params
            c2 = a * a - b * b
            return (z + z * np.sqrt(1 - c2 / z**2)) / (a + b)
        flat = np.ravel(z)
        w = self._newton(flat, self._initial_guess(flat))
        return w.reshape(z.shape)

    # -- forward Laurent coefficients --------------------------------------
    @property
    def coeffs(self) -> np.ndarray:
        """Forward Laurent coefficients.

        ``gamma, gamma_0, gamma_1, ...`` of ``phi`` at infinity or
        ``alpha, alpha_0, alpha_1, ...`` of ``psi`` at 0, from samples on a
        circle where the series converges; up to 32 terms.
        """
        if self._coeffs is None:
            k = 128
            th = 2 * np.pi * np.arange(k) / k
            zr = np.abs(self._ref.z)
            count = min(32, self.truncation + 1)
            if self.direction == "phi":
                r = 1.25 * zr.max()
                z = r * np.exp(1j * th)
                g = self.forward(z, check=False) / z
                c = np.fft.fft(g) / k  # coefficient of z^-j at index k - j
                out = [c[0]] + [c[-j] * r**j for j in range(1, count)]
            else:
                r = 0.5 * zr.min()
                z = r * np.exp(1j * th)
                g = z * self.forward(z, check=False)
                c = np.fft.fft(g) / k
                out = [c[j] / r**j for j in range(count)]
            out = np.array(out)
            out[np.abs(out) < 1e-14 * abs(out[0])] = 0.0
            self._coeffs = out
        return self._coeffs

    def to_json(self) -> dict:
        return {
            "direction": self.direction,
            "curve": self.spec.to_json(),
            "truncation": int(self.truncation),
            "leading": self.leading,
            "inverse_coeffs": [[float(c.real), float(c.imag)] for c in self.inverse_coeffs],
            "roundtrip_residual": self.roundtrip,
            "branch": "phi_inv' > 0 at w = inf" if self.direction == "phi" else self.psi_branch,
        }


def _horner_inverse(coeffs, w, top):
    """Evaluate ``sum_k coeffs[k] * w**(top - k)``."""
    acc = np.zeros(np.shape(w), dtype=complex)
    winv = 1.0 / w
    for c in coeffs[::-1]:
        acc = acc * winv + c
    return acc * w**top


def _fit_inverse(curve, w, rate, direction, M):
    """Fourier coefficients of the inverse map from the boundary correspondence."""
    weight = curve.h * np.abs(rate) / (2 * np.pi)
    if direction == "phi":
        m = 1 - np.arange(M + 2)
    else:
        m = -1 - np.arange(M)
    # coefficient of w^m is the mean of z * w^-m over the circle
    return np.array([np.sum(weight * curve.z * w ** (-mm)) for mm in m])


def _angle_data(curve, w, direction):
    theta = np.unwrap(np.angle(w))
    wind = 1 if direction == "phi" else -1
    per = theta - wind * 2 * np.pi * curve.s / curve.length
    return per


@lru_cache(maxsize=8)
def _ellipse_psi(a: float, b: float, n_map: int, M: int):
    curve = resample(CurveSpec.ellipse(a, b), n_map)
    f = _kerzman_stein_boundary(curve)
    return curve, 1.0 / f


def build_map(spec: CurveSpec, direction: str = "phi", M: int | None = None, boundary=None, n_map: int = 2048):
    """Construct the exterior (``phi``) or interior (``psi``) map of a curve.

    Parameters
    ----------
    spec : CurveSpec
    direction : {"phi", "psi"}
    M : int, optional
        Truncation of the inverse series (default ``n_map // 4``); at least 8.
    boundary : callable, optional
        For custom curves, the boundary correspondence ``w(s)`` (values of the
        map on the curve).  Required for custom curves.
    n_map : int
        Grid used to fit the inverse series from boundary data.

    Raises
    ------
    UnsupportedCurveError
        Custom curve without a boundary correspondence.
    AccuracyError
        The inverse series misses the round-trip tolerance ``1e-8 diam``.
    """
    if direction not in ("phi", "psi"):
        raise ParameterError("direction must be 'phi' or 'psi'")
    if M is None:
        M = n_map // 4
    if M < 8:
        raise ParameterError("truncation M must be at least 8")
    if direction == "psi":
        probe = resample(spec, 1024 if spec.kind != "custom" else n_map)
        if not probe.contains(0.0):
            raise DomainError("0 must lie inside the curve for the interior map")

    grid = resample(spec, n_map)
    if spec.kind == "circle":
        (r,) = spec.params
        theta = grid.s / r if direction == "phi" else -grid.s / r
        wind = 1 if direction == "phi" else -1
        per = theta - wind * 2 * np.pi * grid.s / spec.length
        coeffs = np.zeros(M + 2 if direction == "phi" else M, dtype=complex)
        coeffs[0] = r
        mp = LaurentMap(direction, spec, coeffs, n_map, per, kind="circle")
        mp.roundtrip = 0.0
        return mp
    if spec.kind == "ellipse" and direction == "phi":
        a, b = spec.params
        t = spec.ellipse_parameter(grid.s)
        per = t - 2 * np.pi * grid.s / spec.length
        coeffs = np.zeros(M + 2, dtype=complex)
        coeffs[0], coeffs[2] = (a + b) / 2, (a - b) / 2
        mp = LaurentMap(direction, spec, coeffs, n_map, per, kind="ellipse")
        w = np.exp(1j * t)
        mp.roundtrip = float(np.max(np.abs(mp.inverse(w) - grid.z)))
        return mp
    if spec.kind == "ellipse":
        _, w = _ellipse_psi(*spec.params, n_map, M)
    elif boundary is None:
        raise UnsupportedCurveError(
            "custom curves need the boundary correspondence w(s) of the requested map"
        )
    else:
        w = np.asarray(boundary(grid.s), dtype=complex)
        if w.shape != grid.s.shape or not np.all(np.isfinite(w)):
            raise ParameterError("boundary correspondence must return finite values on the grid")
        w = w / np.abs(w)

    per = _angle_data(grid, w, direction)
    rate = _periodic_derivative(per, spec.length) + (1 if direction == "phi" else -1) * 2 * np.pi / spec.length
    coeffs = _fit_inverse(grid, w, rate, direction, M)
    # the leading coefficient is real and positive by normalization
    lead = coeffs[0]
    if lead.real <= 0 or abs(lead.imag) > 1e-6 * abs(lead):
        raise AccuracyError("boundary correspondence does not fix a positive leading coefficient")
    coeffs[0] = lead.real
    mp = LaurentMap(direction, spec, coeffs, n_map, per)
    res = float(np.max(np.abs(mp.inverse(w) - grid.z)))
    mp.roundtrip = res
    if res > 1e-8 * mp.diameter:
        raise AccuracyError(f"inverse series round-trip residual {res:.3g} exceeds 1e-8 diam", residual=res)
    return mp


def eval_map(mp: LaurentMap, z, with_tail: bool = False):
    """Evaluate the map at points of its domain.

    Returns the value, and with ``with_tail`` also an estimate of the
    truncation error (the size of the trailing inverse-series terms
    transported through the inverse derivative).
    """
    z = np.asarray(z, dtype=complex)
    w = mp.forward(z)
    out = w if z.ndim else complex(w)
    if not with_tail:
        return out
    tail = mp.inverse_tail(w) / np.abs(mp.inverse_derivative(w))
    return out, (tail if z.ndim else float(tail))


def eval_derivative(mp: LaurentMap, z):
    """Derivative of the map, ``1 / inverse'(map(z))``."""
    z = np.asarray(z, dtype=complex)
    w = mp.forward(z)
    d = 1.0 / mp.inverse_derivative(w)
    return d if z.ndim else complex(d)
