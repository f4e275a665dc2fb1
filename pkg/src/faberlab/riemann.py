"""Riemann boundary value problems ``A F+ + B F- = f`` on a closed curve.

The problem is normalized to ``F+ - D F- = g`` with ``D = -B/A`` and
``g = f/A``.  The canonical solution is

    Z(z) = exp( C[ln|D|](z) + i C[Omega](z) ),

with ``C`` the Cauchy integral and ``Omega`` a piecewise-continuous argument
of ``D``; its traces satisfy ``Z+ = D Z-``.  The solution vanishing at
infinity is ``F = Z C[g / Z+]``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .cauchy import as_samples, cauchy_integral, singular_op
from .curve import DiscretizedCurve
from .errors import (
    AdmissibilityError,
    AdmissibilityWarning,
    CanonicalTraceError,
    ConditionError,
    ParameterError,
)
from .weights import WeightSpec, beta_exponents, condition_alpha, weighted_norm

__all__ = [
    "CoefficientPair",
    "JumpData",
    "CanonicalSolution",
    "RiemannSolution",
    "jump_data",
    "canonical_solution",
    "solve_homogeneous",
    "solve_nonhomogeneous",
    "check_admissible",
]


def _as_callable(v):
    if callable(v):
        return v
    if np.ndim(v):
        samples = np.asarray(v, dtype=complex)

        def sampled(s, z):
            if np.shape(s) != samples.shape:
                raise ParameterError(f"coefficient has {samples.size} samples, grid has {np.size(s)} nodes")
            return samples

        return sampled
    return lambda s, z: np.full(np.shape(s), complex(v))


@dataclass(frozen=True)
class CoefficientPair:
    """Coefficients ``A(s, z)``, ``B(s, z)`` of the boundary condition.

    ``A`` and ``B`` are called with arc parameters and curve points (or are
    constants, or arrays of node values on the grid in use).  ``jump_sites`` lists arc parameters in ``(0, S)`` where the
    argument of ``D = -B/A`` may jump; ``s = 0`` is always treated as a
    potential jump site.  ``omega`` optionally supplies the argument of ``D``
    explicitly (a function of ``s, z``); otherwise it is obtained by
    unwrapping ``arg D`` between consecutive sites, taking each jump as the
    principal value of the argument change.
    """

    A: Callable = 1.0
    B: Callable = -1.0
    jump_sites: tuple = ()
    omega: Optional[Callable] = None

    def __post_init__(self):
        object.__setattr__(self, "A", _as_callable(self.A))
        object.__setattr__(self, "B", _as_callable(self.B))
        object.__setattr__(self, "jump_sites", tuple(sorted(float(t) for t in self.jump_sites)))

    def on(self, curve: DiscretizedCurve):
        a = np.asarray(self.A(curve.s, curve.z), dtype=complex) * np.ones(curve.n)
        b = np.asarray(self.B(curve.s, curve.z), dtype=complex) * np.ones(curve.n)
        return a, b


@dataclass(frozen=True, eq=False)
class JumpData:
    """``D``, its argument ``Omega`` and the jumps of ``Omega`` on a grid.

    ``jumps`` holds ``(s_k, h_k)`` pairs; the first is ``s = 0`` with
    ``h_0 = Omega(+0) - Omega(S - 0)``.
    """

    curve: DiscretizedCurve
    D: np.ndarray
    omega: np.ndarray
    jumps: list
    sigma: np.ndarray

    @property
    def log_abs_D(self) -> np.ndarray:
        return np.log(np.abs(self.D))


def _extrapolate(s, v, at):
    """Quadratic extrapolation of three samples to ``at``."""
    coef = np.polyfit(s - at, v, 2)
    return coef[-1]


def _one_sided(curve, values, site):
    """Right and left limits of node values at ``site`` (grid extrapolation)."""
    s, n, h = curve.s, curve.n, curve.h
    j = int(np.ceil(site / h - 1e-9))  # first node at or right of the site
    right = np.array([j, j + 1, j + 2]) % n
    left = np.array([j - 1, j - 2, j - 3]) % n
    sr = s[right] + curve.length * (np.arange(j, j + 3) >= n)
    sl = s[left] - curve.length * (np.arange(j - 1, j - 4, -1) < 0)
    return _extrapolate(sr, values[right], site), _extrapolate(sl, values[left], site)


def _unwrap_segments(curve, argd, sites):
    """Continuous argument inside each segment; principal jumps at sites."""
    n, h = curve.n, curve.h
    starts = [0] + [int(np.ceil(t / h - 1e-9)) for t in sites]
    ends = starts[1:] + [n]
    omega = np.empty(n)
    prev = None
    for site, a, b in zip([0.0] + list(sites), starts, ends):
        seg = np.unwrap(argd[a:b])
        if prev is not None:
            # continue the branch, then add the principal jump
            left = _extrapolate(curve.s[a - 3 : a], prev[-3:], site)
            right = _extrapolate(curve.s[a : a + 3], seg[:3], site)
            jump = np.angle(np.exp(1j * (right - left)))
            seg = seg + (left + jump - right)
        omega[a:b] = seg
        prev = seg
    return omega


def jump_data(pair: CoefficientPair, curve: DiscretizedCurve, tol: float = 1e-12) -> JumpData:
    """Sample ``D = -B/A`` and its argument, and read off the phase jumps.

    Raises
    ------
    ConditionError
        ``|A|`` or ``|B|`` falls below ``tol`` at some node.
    """
    a, b = pair.on(curve)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ConditionError("coefficients must be finite on the grid")
    if np.min(np.abs(a)) < tol or np.min(np.abs(b)) < tol:
        raise ConditionError("|A| and |B| must stay away from zero on the grid")
    sites = [t for t in pair.jump_sites if 0 < t < curve.length]
    gaps = np.diff([0.0] + sites + [curve.length])
    if np.any(gaps < 4 * curve.h):
        raise ParameterError("jump sites must be separated by at least four grid steps")
    D = -b / a
    if pair.omega is not None:
        omega = np.asarray(pair.omega(curve.s, curve.z), dtype=float) * np.ones(curve.n)
        if np.max(np.abs(np.exp(1j * omega) - D / np.abs(D))) > 1e-8:
            raise ConditionError("supplied phase is not an argument of D = -B/A")
    else:
        omega = _unwrap_segments(curve, np.angle(D), sites)
    jumps = []
    for site in [0.0] + sites:
        right, left = _one_sided(curve, omega, site)
        jumps.append((site, float(right - left)))
    sigma = np.ones(curve.n)
    for site, hk in jumps:
        zk = curve.spec.evaluate(np.array([site]))[0][0]
        d = np.abs(zk - curve.z)
        with np.errstate(divide="ignore"):
            sigma = sigma * np.where(d > 0, d, np.nan) ** (-hk / (2 * np.pi))
    return JumpData(curve, D, omega, jumps, sigma)


@dataclass(frozen=True, eq=False)
class CanonicalSolution:
    """Canonical solution ``Z`` with its boundary traces."""

    jd: JumpData
    trace_plus: np.ndarray
    trace_minus: np.ndarray

    def __call__(self, z):
        curve = self.jd.curve
        expo = cauchy_integral(curve, self.jd.log_abs_D + 1j * self.jd.omega, z)
        return np.exp(expo)


def canonical_solution(jd: JumpData) -> CanonicalSolution:
    """Build ``Z`` and its traces ``Z+- = exp(+-dens/2 + S dens)``, ``dens = ln|D| + i Omega``."""
    if np.any(jd.D == 0):
        raise ConditionError("ln|D| is undefined where D vanishes")
    dens = jd.log_abs_D + 1j * jd.omega
    sd = singular_op(jd.curve, dens)
    return CanonicalSolution(jd, np.exp(0.5 * dens + sd), np.exp(-0.5 * dens + sd))


def check_admissible(jd: JumpData, weight: WeightSpec | None, p: float, strict: bool = False):
    """Exponent window for the merged singular points; warn or raise on failure."""
    w = weight if weight is not None else WeightSpec(p=p)
    report = beta_exponents(w, jd.jumps, p=p, length=jd.curve.length)
    cand = condition_alpha(report, p)
    problems = report.violations(p)
    if cand is None and not problems:
        problems.append({"condition": "alpha", "betas": report.betas})
    if problems:
        msg = f"weight/jump data outside the admissible window: {problems}"
        if strict:
            raise AdmissibilityError(msg, problems)
        warnings.warn(msg, AdmissibilityWarning, stacklevel=3)
    return report, cand, problems


@dataclass(frozen=True, eq=False)
class RiemannSolution:
    """Boundary traces of ``F`` and an off-curve evaluator.

    ``F = Z * (C[mu] + P)`` with ``P`` the polynomial part (coefficients in
    increasing degree); ``mu = 0`` for homogeneous solutions.
    """

    canonical: CanonicalSolution
    F_plus: np.ndarray
    F_minus: np.ndarray
    m: int
    mu: np.ndarray
    polynomial: np.ndarray
    residual: float
    diagnostics: dict = field(default_factory=dict)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        curve = self.canonical.jd.curve
        inner = cauchy_integral(curve, self.mu, z) if np.any(self.mu) else np.zeros(z.shape, complex)
        poly = np.polyval(self.polynomial[::-1], z) if self.polynomial.size else 0.0
        return self.canonical(z) * (inner + poly)


def _residual(a, b, fp, fm, f, curve, weight, p):
    num = weighted_norm(a * fp + b * fm - f, curve, weight, p)
    den = weighted_norm(f, curve, weight, p)
    return num / den if den > 0 else num


def solve_homogeneous(pair, curve, weight=None, p=2.0, m=0, strict=False):
    """Basis ``{Z z^k, k = 0..m}`` of the homogeneous problem; empty for ``m < 0``."""
    jd = jump_data(pair, curve)
    report, cand, problems = check_admissible(jd, weight, p, strict)
    Z = canonical_solution(jd)
    if m < 0:
        return []
    a, b = pair.on(curve)
    out = []
    for k in range(m + 1):
        zk = curve.z**k
        fp, fm = Z.trace_plus * zk, Z.trace_minus * zk
        res = weighted_norm(a * fp + b * fm, curve, weight, p) / weighted_norm(a * fp, curve, weight, p)
        poly = np.zeros(k + 1, dtype=complex)
        poly[k] = 1.0
        diag = {"betas": report.betas, "window_ok": report.window_ok, "violations": problems}
        out.append(RiemannSolution(Z, fp, fm, m, np.zeros(curve.n, complex), poly, float(res), diag))
    return out


def solve_nonhomogeneous(
    pair,
    curve,
    f,
    weight=None,
    p=2.0,
    m=-1,
    vanish_at_infinity=True,
    polynomial=None,
    strict=False,
    trace_tol=1e-12,
):
    """Solve ``A F+ + B F- = f``.

    The particular solution is ``F1 = Z C[g / Z+]`` with ``g = f/A``; its
    traces are ``F1+- = Z+- (+-mu/2 + S mu)``, so the boundary relation holds
    to rounding.  Unless ``vanish_at_infinity`` is set, ``Z P`` is added for
    the supplied polynomial ``P`` (coefficients in increasing degree, at most
    ``m + 1`` of them).

    Raises
    ------
    CanonicalTraceError
        ``|Z+|`` falls below ``trace_tol`` relative to its maximum.
    """
    f = as_samples(curve, f)
    jd = jump_data(pair, curve)
    report, cand, problems = check_admissible(jd, weight, p, strict)
    Z = canonical_solution(jd)
    zp = Z.trace_plus
    if np.min(np.abs(zp)) < trace_tol * np.max(np.abs(zp)):
        raise CanonicalTraceError("canonical trace Z+ vanishes numerically at a node")
    a, b = pair.on(curve)
    mu = f / a / zp
    smu = singular_op(curve, mu)
    fp = zp * (0.5 * mu + smu)
    fm = Z.trace_minus * (-0.5 * mu + smu)
    poly = np.zeros(0, dtype=complex)
    if not vanish_at_infinity and polynomial is not None:
        poly = np.asarray(polynomial, dtype=complex)
        if poly.size > max(m + 1, 0):
            raise ParameterError(f"polynomial degree exceeds the order at infinity m = {m}")
        pz = np.polyval(poly[::-1], curve.z) if poly.size else 0.0
        fp = fp + zp * pz
        fm = fm + Z.trace_minus * pz
    res = _residual(a, b, fp, fm, f, curve, weight, p)
    diag = {
        "betas": report.betas,
        "points": report.points,
        "window_ok": report.window_ok,
        "condition_alpha_p1": cand,
        "violations": problems,
        "jumps": jd.jumps,
    }
    return RiemannSolution(Z, fp, fm, -1 if vanish_at_infinity else m, mu, poly, float(res), diag)
