"""Generalized p-Faber polynomials by contour extraction.

``F+_{p,n}`` is the polynomial part at infinity of ``phi^n (phi')^(1/p)`` and
``F-_{p,n}`` the principal part at 0 of ``psi^(n - 2/p) (psi')^(1/p)``.
Coefficients are trapezoid-rule contour integrals over the image of a circle
``|w| = R`` under the inverse map, so the contour always encloses (or stays
inside) the curve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .conformal import LaurentMap, continuous_log
from .errors import DomainError, ExtractionError, ParameterError

__all__ = ["FaberPolynomial", "faber_plus", "faber_minus", "faber_remainder", "faber_pair", "faber_values"]

GUARD = 8  # discarded coefficients inspected for the residual


@dataclass(frozen=True, eq=False)
class FaberPolynomial:
    """Coefficients of ``F+_{p,n}`` (powers ``z^0..z^n``) or ``F-_{p,n}`` (``z^-1..z^-n``).

    For the minus side ``coeffs[k - 1]`` multiplies ``z^-k``.
    """

    side: str
    n: int
    p: float
    coeffs: np.ndarray
    radius: float
    residual: float
    agreement: float
    diagnostics: dict = field(default_factory=dict)
    _contour: tuple = field(default=(), repr=False)

    @property
    def degrees(self) -> np.ndarray:
        if self.side == "plus":
            return np.arange(self.coeffs.size)
        return -np.arange(1, self.coeffs.size + 1)

    @property
    def leading(self) -> complex:
        return complex(self.coeffs[-1])

    def __call__(self, z):
        """Evaluate by Horner's rule in ``z`` (plus) or ``1/z`` (minus)."""
        z = np.asarray(z, dtype=complex)
        x = z if self.side == "plus" else 1.0 / z
        acc = np.zeros(z.shape, dtype=complex)
        for c in self.coeffs[::-1]:
            acc = acc * x + c
        return acc if self.side == "plus" else acc * x

    def contour_eval(self, z):
        """Evaluate through the Cauchy integral over the extraction contour.

        Numerically stable for large ``n`` where the monomial form suffers
        cancellation.  Valid for ``z`` inside the contour (plus side) or
        outside it (minus side); in particular on the curve.
        """
        zc, weight = self._contour
        z = np.asarray(z, dtype=complex)
        vals = (weight[None, :] / (zc[None, :] - z.reshape(-1, 1))).sum(axis=1)
        return vals.reshape(z.shape)

    def to_rows(self, tol: float = 0.0):
        scale = np.max(np.abs(self.coeffs)) if self.coeffs.size else 0.0
        snap = lambda x: 0.0 if abs(x) <= tol * scale else float(x)  # noqa: E731
        return [
            (int(d), snap(c.real), snap(c.imag))
            for d, c in zip(self.degrees, self.coeffs)
            if abs(c) > tol * scale
        ]

    def to_json(self) -> dict:
        return {
            "side": self.side,
            "n": self.n,
            "p": self.p,
            "coeffs": [[int(d), float(c.real), float(c.imag)] for d, c in zip(self.degrees, self.coeffs)],
            "radius": self.radius,
            "residual": self.residual,
            "two_radius_agreement": self.agreement,
            "diagnostics": self.diagnostics,
        }


def _nodes(n, radius):
    # the sampled Laurent data decay like radius**-j, so the trapezoid rule
    # aliases at the level radius**-K
    need = max(4 * (n + GUARD + 16), 42.0 / np.log(radius))
    k = 256
    while k < need:
        k *= 2
    return k


def _circle_log(mp: LaurentMap, w):
    """``log scale`` on a full circle, anchored by the mean-value property."""
    return continuous_log(mp.scale(w), anchor="mean")


def _extract_plus(mp, p, n, R, K):
    th = 2 * np.pi * np.arange(K) / K
    w = R * np.exp(1j * th)
    z = mp.inverse(w)
    dz = mp.inverse_derivative(w)
    # integrand G dz = w^n (phi_inv')^(1 - 1/p) dw, dw = i w dtheta
    g_dz = w**n * np.exp((1 - 1 / p) * _circle_log(mp, w)) * 1j * w * (2 * np.pi / K)
    g_dz /= 2j * np.pi
    top = n + GUARD
    coeffs = np.empty(top + 1, dtype=complex)
    zinv = 1.0 / z
    pw = zinv.copy()
    for k in range(top + 1):
        coeffs[k] = np.sum(g_dz * pw)
        pw = pw * zinv
    return coeffs, (z, g_dz), dz


def _extract_minus(mp, p, n, R, K):
    th = 2 * np.pi * np.arange(K) / K
    w = R * np.exp(1j * th)
    z = mp.inverse(w)
    dz = mp.inverse_derivative(w)
    h = np.exp(1j * np.pi / p) * w**n * np.exp(-_circle_log(mp, w) / p)
    # counterclockwise in w is clockwise around 0 in z
    h_dz = -h * dz * 1j * w * (2 * np.pi / K) / (2j * np.pi)
    top = n + GUARD
    coeffs = np.empty(top, dtype=complex)
    pw = np.ones_like(z)
    for k in range(1, top + 1):
        coeffs[k - 1] = np.sum(h_dz * pw)
        pw = pw * z
    # Cauchy representation of the principal part for points outside the contour
    return coeffs, (z, -h_dz), dz


def default_radii(n):
    """Extraction radii kept close to 1 for large ``n``.

    Rounding in the contour sums grows like ``radius**n``; the radii shrink so
    that this factor stays below about ``e^6``.
    """
    m = max(n, 8)
    return 1.0 + 4.0 / m, 1.0 + 6.0 / m


def _build(side, mp, p, n, radius, radius2, nodes):
    if radius is None or radius2 is None:
        r1, r2 = default_radii(n)
        radius = r1 if radius is None else radius
        radius2 = r2 if radius2 is None else radius2
    if not (np.isfinite(p) and p > 1):
        raise ParameterError("p must satisfy 1 < p < inf")
    if radius <= 1 or radius2 <= 1:
        raise ParameterError("extraction radii must exceed 1")
    K = nodes or _nodes(n, min(radius, radius2))
    extract = _extract_plus if side == "plus" else _extract_minus
    c1, contour, _ = extract(mp, p, n, radius, K)
    c2, _, _ = extract(mp, p, n, radius2, K)
    keep = n + 1 if side == "plus" else n
    # compare in the variable scaled by the capacity so that all degrees
    # carry comparable weight
    if side == "plus":
        unit = (1.0 / mp.leading) ** np.arange(c1.size)
    else:
        unit = mp.leading ** -np.arange(1.0, c1.size + 1)
    d1, d2 = c1 * unit, c2 * unit
    scale = np.max(np.abs(d1[:keep]))
    agreement = float(np.max(np.abs(d1[:keep] - d2[:keep])) / scale)
    residual = float(np.max(np.abs(d1[keep:])) / scale)
    if agreement > 1e-8:
        raise ExtractionError(
            f"coefficients from radii {radius} and {radius2} differ by {agreement:.3g} (relative)",
            residual=agreement,
        )
    return c1[:keep], contour, agreement, residual, radius


def faber_plus(mp: LaurentMap, p: float, n: int, radius=None, radius2=None, nodes=None):
    """Polynomial part at infinity of ``phi(z)^n (phi'(z))^(1/p)``.

    The branch of ``(phi')^(1/p)`` is positive at infinity.  For ``n = 0`` the
    result is normalized to the constant 1; the dropped factor
    ``gamma^(1/p)`` is kept in ``diagnostics["dropped_factor"]``.

    Raises
    ------
    ExtractionError
        Coefficients from the two radii disagree by more than ``1e-8``.
    """
    if mp.direction != "phi":
        raise ParameterError("faber_plus needs the exterior map phi")
    if n < 0:
        raise ParameterError("n must be nonnegative")
    coeffs, contour, agreement, residual, radius = _build("plus", mp, p, n, radius, radius2, nodes)
    diag = {"gamma": mp.leading, "expected_leading": mp.leading ** (n + 1 / p)}
    if n == 0:
        diag["dropped_factor"] = complex(coeffs[0]).real
        zc, wt = contour
        contour = (zc, wt / coeffs[0])
        coeffs = np.array([1.0 + 0j])
    return FaberPolynomial("plus", n, float(p), coeffs, radius, residual, agreement, diag, contour)


def faber_minus(mp: LaurentMap, p: float, n: int, radius=None, radius2=None, nodes=None):
    """Principal part at 0 of ``psi(z)^(n - 2/p) (psi'(z))^(1/p)``.

    Sampled on ``z = psi_inv(w)``, ``|w| = radius``, i.e. on a contour around 0
    inside the curve.  The branch follows :attr:`LaurentMap.psi_branch`, so
    the coefficient of ``z^-n`` is ``exp(i pi/p) alpha^(n - 1/p)``.
    """
    if mp.direction != "psi":
        raise ParameterError("faber_minus needs the interior map psi")
    if n < 1:
        raise ParameterError("n must be at least 1")
    coeffs, contour, agreement, residual, radius = _build("minus", mp, p, n, radius, radius2, nodes)
    diag = {
        "alpha": mp.leading,
        "branch_constant": [float(np.cos(np.pi / p)), float(np.sin(np.pi / p))],
        "expected_leading_modulus": mp.leading ** (n - 1 / p),
    }
    return FaberPolynomial("minus", n, float(p), coeffs, radius, residual, agreement, diag, contour)


def faber_pair(mp_phi, mp_psi, p, n_plus, n_minus):
    """Lists ``[F+_{p,0..n_plus}]`` and ``[F-_{p,1..n_minus}]``."""
    plus = [faber_plus(mp_phi, p, k) for k in range(n_plus + 1)]
    minus = [faber_minus(mp_psi, p, k) for k in range(1, n_minus + 1)]
    return plus, minus


def _ray_log(mp, w):
    return mp.log_scale(w)


def faber_remainder(mp: LaurentMap, p: float, n: int, z, poly: FaberPolynomial | None = None):
    """``E(z)``: the full product minus its extracted principal part.

    Plus side (``phi``): ``phi^n (phi')^(1/p) - P(z)`` with ``P`` the
    un-normalized polynomial part.  Minus side (``psi``):
    ``psi^(n - 2/p) (psi')^(1/p) - F-(1/z)``.
    """
    z = np.asarray(z, dtype=complex)
    w = mp.forward(z)
    logs = _ray_log(mp, np.atleast_1d(w)).reshape(np.shape(w))
    if mp.direction == "phi":
        poly = poly or faber_plus(mp, p, n)
        full = w**n * np.exp(-logs / p)
        part = poly(z)
        if n == 0:
            part = part * poly.diagnostics["dropped_factor"]
    else:
        if n < 1:
            raise DomainError("minus-side remainders need n >= 1")
        poly = poly or faber_minus(mp, p, n)
        full = np.exp(1j * np.pi / p) * w**n * np.exp(-logs / p)
        part = poly(z)
    out = full - part
    return out if z.ndim else complex(out)


def _contour_weights(side, mp, p, degrees, R, K):
    """Contour nodes and per-degree Cauchy weights for a batch of degrees."""
    th = 2 * np.pi * np.arange(K) / K
    w = R * np.exp(1j * th)
    z = mp.inverse(w)
    logs = _circle_log(mp, w)
    deg = np.asarray(degrees)[:, None]
    dw = 1j * w * (2 * np.pi / K) / (2j * np.pi)
    if side == "plus":
        wt = w[None, :] ** deg * np.exp((1 - 1 / p) * logs)[None, :] * dw[None, :]
    else:
        dz = mp.inverse_derivative(w)
        h = np.exp(1j * np.pi / p) * w[None, :] ** deg * np.exp(-logs / p)[None, :]
        wt = h * (dz * dw)[None, :]
    return z, wt


def faber_values(mp: LaurentMap, p: float, degrees, z, radius=None, radius2=None, nodes=None):
    """Values of ``F+_{p,n}`` (``phi``) or ``F-_{p,n}`` (``psi``) at points ``z``.

    Evaluated as Cauchy integrals of the full product over one contour for all
    degrees, without forming monomial coefficients, so high degrees stay well
    conditioned.  ``z`` must lie inside the contour for the plus side (outside
    for the minus side); points on the curve qualify.  ``F+_{p,0}`` is
    normalized to 1.

    Returns
    -------
    values : ndarray, shape ``(len(degrees), len(z))``
    agreement : float
        Largest relative difference between the two radii, row by row.

    Raises
    ------
    ExtractionError
        The radii disagree by more than ``1e-8``.
    """
    side = "plus" if mp.direction == "phi" else "minus"
    degrees = np.atleast_1d(np.asarray(degrees, dtype=int))
    if degrees.size == 0:
        return np.zeros((0, np.size(z)), dtype=complex), 0.0
    if degrees.min() < (0 if side == "plus" else 1):
        raise ParameterError("degree out of range for this side")
    if not (np.isfinite(p) and p > 1):
        raise ParameterError("p must satisfy 1 < p < inf")
    top = int(degrees.max())
    r1, r2 = default_radii(top)
    radius = radius or r1
    radius2 = radius2 or r2
    if radius <= 1 or radius2 <= 1:
        raise ParameterError("contour radii must exceed 1")
    z = np.ravel(np.asarray(z, dtype=complex))
    K = nodes or _nodes(top, min(radius, radius2))
    vals = []
    for R in (radius, radius2):
        zc, wt = _contour_weights(side, mp, p, degrees, R, K)
        v = wt @ (1.0 / (zc[:, None] - z[None, :]))
        if side == "plus":
            # degree 0 is the constant gamma^(1/p) before normalization
            v[degrees == 0] /= mp.leading ** (1 / p)
        vals.append(v)
    scale = np.max(np.abs(vals[0]), axis=1)
    agreement = float(np.max(np.max(np.abs(vals[0] - vals[1]), axis=1) / scale))
    if agreement > 1e-8:
        raise ExtractionError(
            f"Faber values from radii {radius} and {radius2} differ by {agreement:.3g} (relative)",
            residual=agreement,
        )
    return vals[0], agreement
