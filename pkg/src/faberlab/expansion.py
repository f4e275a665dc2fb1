"""Expansions in the Faber systems and in the double system.

Coefficients are read off with the biorthogonal functionals of the two
systems.  For the plus side the ``n``-th coefficient is

    c_n(F) = (1/2 pi i) int_Gamma F (phi')^(1/q) phi^(-n-1) dxi,

the ``n``-th Taylor coefficient of the transplant
``F(phi_inv(w)) (phi_inv'(w))^(1/p)``.  For the minus side

    l_n(F) = (1/2 pi i) exp(-i pi/p) int_Gamma F u(psi)^(1/p - 1) psi^(1 - n) dxi,

the ``n``-th Taylor coefficient of
``g(w) = exp(-i pi/p) u(w)^(1/p) F(psi_inv(w))``.  Both integrals are
evaluated by the trapezoid rule in the curve's arc parameter, which is the
same discrete Fourier analysis carried out on the curve grid.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .cauchy import BoundaryFunction, as_samples, plemelj_values
from .conformal import LaurentMap, build_map
from .curve import CurveSpec, DiscretizedCurve, resample, trig_interpolate
from .errors import (
    AdmissibilityError,
    AdmissibilityWarning,
    NonvanishingAtInfinityError,
    NotATraceError,
    ParameterError,
    TruncationError,
)
from .faber import faber_minus, faber_plus, faber_values
from .riemann import CoefficientPair, solve_nonhomogeneous
from .weights import WeightSpec, muckenhoupt_scan, weighted_norm

__all__ = [
    "SpaceParams",
    "TransplantedWeight",
    "DoubleExpansion",
    "transplant_plus",
    "transplant_minus",
    "expand_smirnov_plus",
    "expand_smirnov_minus",
    "expand_double",
    "expand_phase_system",
    "phase_pair",
    "reconstruct",
    "decay_slope",
]


class TransplantedWeight:
    """The weight ``rho(map_inv(w))`` on the unit circle.

    Provides ``node_values(circle_curve)`` so that :func:`muckenhoupt_scan`
    accepts it.
    """

    def __init__(self, weight: WeightSpec, mp: LaurentMap):
        self.weight, self.mp, self.p = weight, mp, weight.p

    def node_values(self, circle: DiscretizedCurve) -> np.ndarray:
        theta = np.angle(circle.z)
        s = self.mp.boundary_parameter(theta)
        rate = np.abs(self.mp.boundary_rate(s))
        # half a circle step, measured in arc length of the original curve
        half = 0.5 * circle.h / rate
        for t in self.weight.points:
            near = np.abs(s - t) < 0.5 * half
            s[near] = np.where(t + half[near] < self.mp.spec.length, t + half[near], t - half[near])
        return np.asarray(self.weight(s), dtype=float)


class SpaceParams:
    """Curve grid, exponent, weight and the two conformal maps.

    Parameters
    ----------
    spec : CurveSpec
    n : int
        Curve grid size (power of two).
    p : float
    weight : WeightSpec, optional
    phi, psi : LaurentMap, optional
        Prebuilt maps; built on demand otherwise.
    """

    def __init__(self, spec: CurveSpec, n: int = 1024, p: float = 2.0, weight=None, phi=None, psi=None):
        if not (np.isfinite(p) and p > 1):
            raise ParameterError("p must satisfy 1 < p < inf")
        self.spec = spec
        self.curve = resample(spec, n)
        self.p = float(p)
        self.q = self.p / (self.p - 1)
        if weight is None:
            weight = WeightSpec(p=self.p)
        elif weight.p != self.p:
            weight = WeightSpec(weight.points, weight.alphas, self.p)
        self.weight = weight
        self._phi, self._psi = phi, psi
        self._plus, self._minus = [], []
        self._plus_vals = self._minus_vals = None
        self.basis_agreement = {}

    @property
    def phi(self) -> LaurentMap:
        if self._phi is None:
            self._phi = build_map(self.spec, "phi")
        return self._phi

    @property
    def psi(self) -> LaurentMap:
        if self._psi is None:
            self._psi = build_map(self.spec, "psi")
        return self._psi

    # -- boundary data of the maps ----------------------------------------
    @cached_property
    def _plus_data(self):
        c = self.curve
        w = self.phi.boundary_values(c.s)
        logd = self.phi.boundary_log_scale(c)
        # kernel of c_n without the factor w^(-n)
        base = c.h * np.exp(-logd / self.q) * c.dz / w / (2j * np.pi)
        return w, base

    @cached_property
    def _minus_data(self):
        c = self.curve
        w = self.psi.boundary_values(c.s)
        logu = self.psi.boundary_log_scale(c)
        base = c.h * np.exp(-1j * np.pi / self.p) * np.exp((1 / self.p - 1) * logu) * w * c.dz / (2j * np.pi)
        return w, base

    def plus_functionals(self, M: int) -> np.ndarray:
        """Rows ``n = 0..M`` of the plus coefficient functionals on the grid."""
        w, base = self._plus_data
        rows = base[None, :] * w[None, :] ** -np.arange(M + 1)[:, None]
        rows[0] *= self.phi.leading ** (1 / self.p)  # normalization F+_{p,0} = 1
        return rows

    def minus_functionals(self, M: int) -> np.ndarray:
        """Rows ``n = 0..M`` of the minus functionals.

        Row 0 is the zeroth Fourier mode of the pullback; it is not
        biorthogonal to the minus system and is kept only for diagnostics.
        """
        w, base = self._minus_data
        return base[None, :] * w[None, :] ** -np.arange(M + 1)[:, None]

    # -- Faber bases on the grid ------------------------------------------
    def plus_polys(self, M: int):
        while len(self._plus) <= M:
            self._plus.append(faber_plus(self.phi, self.p, len(self._plus)))
        return self._plus[: M + 1]

    def minus_polys(self, M: int):
        while len(self._minus) < M:
            self._minus.append(faber_minus(self.psi, self.p, len(self._minus) + 1))
        return self._minus[:M]

    def plus_basis(self, M: int) -> np.ndarray:
        """Values of ``F+_{p,0..M}`` at the curve nodes, shape ``(M+1, N)``."""
        if self._plus_vals is None or self._plus_vals.shape[0] < M + 1:
            self._plus_vals, self.basis_agreement["plus"] = faber_values(
                self.phi, self.p, np.arange(M + 1), self.curve.z
            )
        return self._plus_vals[: M + 1]

    def minus_basis(self, M: int) -> np.ndarray:
        """Values of ``F-_{p,1..M}`` at the curve nodes, shape ``(M, N)``."""
        if M == 0:
            return np.zeros((0, self.curve.n), dtype=complex)
        if self._minus_vals is None or self._minus_vals.shape[0] < M:
            self._minus_vals, self.basis_agreement["minus"] = faber_values(
                self.psi, self.p, np.arange(1, M + 1), self.curve.z
            )
        return self._minus_vals[:M]

    def norm(self, f) -> float:
        return weighted_norm(f, self.curve, self.weight, self.p)

    # -- A_p diagnostics ---------------------------------------------------
    @cached_property
    def scans(self) -> dict:
        """A_p scans of ``rho`` on the curve and of ``rho+-`` on the unit circle."""
        circle = resample(CurveSpec.circle(1.0), self.curve.n)
        out = {"rho": muckenhoupt_scan(self.weight, self.curve)}
        for name, mp in (("rho_plus", self.phi), ("rho_minus", self.psi)):
            out[name] = muckenhoupt_scan(TransplantedWeight(self.weight, mp), circle, p=self.p)
        return out

    def check_weights(self, strict: bool = False, which=("rho", "rho_plus", "rho_minus")):
        if not self.weight.points:
            return []
        bad = [k for k in which if not self.scans[k].in_class]
        if bad:
            msg = f"A_p scan failed for {bad}"
            if strict:
                raise AdmissibilityError(msg, bad)
            warnings.warn(msg, AdmissibilityWarning, stacklevel=3)
        return bad


def _circle_grid(K):
    return resample(CurveSpec.circle(1.0), K)


def _resample_on_curve(params: SpaceParams, f, s):
    f = as_samples(params.curve, f)
    return trig_interpolate(f, params.curve.length, s)


def transplant_plus(f, params: SpaceParams, K: int | None = None) -> BoundaryFunction:
    """``f(phi_inv(w)) (phi_inv'(w))^(1/p)`` on ``K`` uniform unit-circle nodes.

    ``f`` is given by samples at the curve nodes and is carried to the
    preimages of the circle nodes by trigonometric interpolation.
    """
    K = K or params.curve.n
    circle = _circle_grid(K)
    w = circle.z
    s = params.phi.boundary_parameter(np.angle(w))
    vals = _resample_on_curve(params, f, s)
    return BoundaryFunction(circle, vals * np.exp(params.phi.log_scale(w) / params.p))


def transplant_minus(f, params: SpaceParams, K: int | None = None) -> BoundaryFunction:
    """``f(psi_inv(w)) (psi_inv'(w))^(2/p)`` on ``K`` uniform unit-circle nodes.

    The branch is ``(psi_inv')^(2/p) = exp(-2 pi i/p) u(w)^(2/p) w^(-4/p)``
    with ``arg w`` in ``[0, 2 pi)``.
    """
    K = K or params.curve.n
    circle = _circle_grid(K)
    w = circle.z
    theta = 2 * np.pi * np.arange(K) / K
    s = params.psi.boundary_parameter(theta)
    vals = _resample_on_curve(params, f, s)
    p = params.p
    factor = np.exp(-2j * np.pi / p + (2 / p) * params.psi.log_scale(w) - 4j * theta / p)
    return BoundaryFunction(circle, vals * factor)


def pullback_minus(f, params: SpaceParams, K: int | None = None) -> BoundaryFunction:
    """``g(w) = f(psi_inv(w)) w^(2/p) (psi_inv'(w))^(1/p)`` on the unit circle.

    With the package branch, ``g = exp(-i pi/p) u(w)^(1/p) f(psi_inv(w))``;
    its Taylor coefficients are the minus-system coefficients of ``f``.
    """
    K = K or params.curve.n
    circle = _circle_grid(K)
    w = circle.z
    s = params.psi.boundary_parameter(np.angle(w))
    vals = _resample_on_curve(params, f, s)
    factor = np.exp(-1j * np.pi / params.p + params.psi.log_scale(w) / params.p)
    return BoundaryFunction(circle, vals * factor)


def _default_M(params):
    return params.curve.n // 8


def expand_smirnov_plus(F, params: SpaceParams, M: int | None = None, tol: float = 1e-6, strict=False, check=True):
    """Coefficients ``{F_n+}``, ``n = 0..M``, of a plus-trace in ``{F+_{p,n}}``.

    Raises
    ------
    NotATraceError
        The exterior Plemelj part of ``F`` exceeds ``tol`` relative to ``F``.
    """
    M = _default_M(params) if M is None else M
    F = as_samples(params.curve, F)
    if check:
        params.check_weights(strict, ("rho", "rho_plus"))
        _, fm = plemelj_values(params.curve, F)
        scale = params.norm(F)
        if scale > 0 and params.norm(fm) > tol * scale:
            raise NotATraceError(
                f"data are not a plus-trace: exterior part {params.norm(fm) / scale:.3g} (relative)"
            )
    return params.plus_functionals(M) @ F


def expand_smirnov_minus(F, params: SpaceParams, M: int | None = None, tol: float = 1e-6, strict=False, check=True):
    """Coefficients ``{F_n-}``, ``n = 1..M``, of a minus-trace vanishing at infinity.

    Raises
    ------
    NonvanishingAtInfinityError
        ``F(inf)`` (the constant interior Plemelj part) exceeds ``tol``.
    NotATraceError
        The interior Plemelj part of ``F`` is not a constant.
    """
    M = _default_M(params) if M is None else M
    F = as_samples(params.curve, F)
    rows = params.minus_functionals(M)
    coeffs = rows @ F
    if check:
        params.check_weights(strict, ("rho", "rho_minus"))
        scale = params.norm(F)
        if scale > 0:
            fp, _ = plemelj_values(params.curve, F)
            const = np.mean(fp)
            if params.norm(fp - const) > tol * scale:
                raise NotATraceError(
                    f"data are not a minus-trace: interior part {params.norm(fp - const) / scale:.3g} (relative)"
                )
            # for exterior-analytic data the interior Cauchy integral is F(inf)
            if params.norm(np.full(F.shape, const)) > tol * scale:
                raise NonvanishingAtInfinityError(f"function does not vanish at infinity: F(inf) = {const:.3g}")
    return coeffs[1:]


@dataclass(eq=False)
class DoubleExpansion:
    """Coefficients in the double system with a table of partial-sum residuals."""

    plus_coeffs: np.ndarray
    minus_coeffs: np.ndarray
    params: SpaceParams
    f: np.ndarray
    A: np.ndarray
    B: np.ndarray
    residuals: dict = field(default_factory=dict)
    solver_residual: float = float("nan")
    diagnostics: dict = field(default_factory=dict)

    @property
    def M1(self) -> int:
        return self.plus_coeffs.size - 1

    @property
    def M2(self) -> int:
        return self.minus_coeffs.size

    def partial_sum(self, M1: int, M2: int) -> np.ndarray:
        if not (0 <= M1 <= self.M1 and 0 <= M2 <= self.M2):
            raise TruncationError(f"truncation ({M1}, {M2}) outside stored range ({self.M1}, {self.M2})")
        plus = self.plus_coeffs[: M1 + 1] @ self.params.plus_basis(M1)
        minus = self.minus_coeffs[:M2] @ self.params.minus_basis(M2) if M2 else 0.0
        return self.A * plus + self.B * minus

    def residual_table(self):
        return sorted((m1, m2, r) for (m1, m2), r in self.residuals.items())

    def to_json(self) -> dict:
        return {
            "p": self.params.p,
            "curve": self.params.spec.to_json(),
            "weight": self.params.weight.to_json(),
            "plus_coeffs": [[n, float(c.real), float(c.imag)] for n, c in enumerate(self.plus_coeffs)],
            "minus_coeffs": [[n + 1, float(c.real), float(c.imag)] for n, c in enumerate(self.minus_coeffs)],
            "residuals": [list(r) for r in self.residual_table()],
            "solver_residual": self.solver_residual,
            "diagnostics": self.diagnostics,
        }


def reconstruct(exp: DoubleExpansion, M1: int, M2: int):
    """Partial sum ``A sum F_n+ F+_{p,n} + B sum F_n- F-_{p,n}`` and its distance to ``f``."""
    S = exp.partial_sum(M1, M2)
    return BoundaryFunction(exp.params.curve, S), exp.params.norm(exp.f - S)


def expand_double(f, pair: CoefficientPair, params: SpaceParams, M1=None, M2=None, strict=False, truncations=None):
    """Expand ``f`` in ``{A F+_{p,n}} u {B F-_{p,k}}``.

    Solves ``A F+ + B F- = f`` with ``F(inf) = 0`` and expands the two traces.
    Residuals are recorded for the nested truncations ``(min(m, M1), min(m, M2))``
    (or the pairs given in ``truncations``).
    """
    M1 = _default_M(params) if M1 is None else M1
    M2 = _default_M(params) if M2 is None else M2
    curve = params.curve
    f = as_samples(curve, f)
    params.check_weights(strict)
    sol = solve_nonhomogeneous(pair, curve, f, params.weight, params.p, strict=strict)
    plus = expand_smirnov_plus(sol.F_plus, params, M1, check=False)
    minus = expand_smirnov_minus(sol.F_minus, params, M2, check=False)
    a, b = pair.on(curve)
    exp = DoubleExpansion(plus, minus, params, f, a, b, solver_residual=sol.residual, diagnostics=dict(sol.diagnostics))
    if truncations is None:
        truncations = sorted({(min(m, M1), min(m, M2)) for m in range(max(M1, M2) + 1)})
    pb, mb = params.plus_basis(M1), params.minus_basis(M2)
    cum_p = np.cumsum(plus[:, None] * pb, axis=0)
    cum_m = np.cumsum(minus[:, None] * mb, axis=0) if M2 else np.zeros((0, curve.n))
    for m1, m2 in truncations:
        S = a * cum_p[m1] + (b * cum_m[m2 - 1] if m2 else 0.0)
        exp.residuals[(int(m1), int(m2))] = params.norm(f - S)
    return exp


def phase_pair(curve: DiscretizedCurve, alpha: float) -> CoefficientPair:
    """``A = exp(i alpha arg xi)``, ``B = exp(-i alpha arg xi)`` with ``arg`` continuous from the start point."""

    def arg(s, z):
        return np.unwrap(np.angle(np.asarray(z, dtype=complex)))

    return CoefficientPair(
        A=lambda s, z: np.exp(1j * alpha * arg(s, z)),
        B=lambda s, z: np.exp(-1j * alpha * arg(s, z)),
    )


def expand_phase_system(f, alpha: float, params: SpaceParams, M1=None, M2=None, strict=False, truncations=None):
    """Expansion in ``{exp(i alpha arg xi sign n) F_{p,n}}``; ``n = 0`` joins the plus side."""
    if not params.curve.contains(0.0):
        raise ParameterError("the phase system needs 0 inside the curve")
    pair = phase_pair(params.curve, alpha)
    return expand_double(f, pair, params, M1, M2, strict, truncations)


def decay_slope(ms, residuals, tail: float = 0.5) -> float:
    """Least-squares slope of ``log r_M`` over the last ``tail`` fraction of ``M``."""
    ms = np.asarray(ms, dtype=float)
    r = np.asarray(residuals, dtype=float)
    k = max(2, int(np.ceil(tail * ms.size)))
    x, y = ms[-k:], np.log(np.maximum(r[-k:], 1e-300))
    return float(np.polyfit(x, y, 1)[0])
