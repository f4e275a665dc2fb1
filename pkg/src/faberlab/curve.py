"""Closed Jordan curves in arc-length parametrization.

A :class:`CurveSpec` describes the curve analytically (circle, ellipse, or a
user-supplied arc-length parametrization); :func:`resample` turns it into a
:class:`DiscretizedCurve` with uniformly spaced arc parameters, which is the
substrate for every boundary integral in the package.  The trapezoid rule on
such a grid is spectrally accurate for smooth periodic integrands.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import CuspError, OrientationError, ParameterError, SizingError

__all__ = [
    "CurveSpec",
    "DiscretizedCurve",
    "CarlesonReport",
    "resample",
    "check_regular",
    "geometric_radii",
    "trig_interpolate",
]


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


class _EllipseArc:
    """Arc length of ``a cos t + i b sin t`` and its inverse.

    The speed is analytic and periodic, so its Fourier series is integrated
    term by term; Newton's method inverts ``s(t)`` to machine precision.
    """

    def __init__(self, a: float, b: float, samples: int = 1024):
        t = 2 * np.pi * np.arange(samples) / samples
        speed = np.sqrt((a * np.sin(t)) ** 2 + (b * np.cos(t)) ** 2)
        coef = np.fft.rfft(speed) / samples
        keep = np.abs(coef) > 1e-17 * abs(coef[0])
        keep[0] = True
        last = int(np.nonzero(keep)[0].max())
        self.a, self.b = a, b
        self.mean_speed = coef[0].real
        self.k = np.arange(1, last + 1)
        self.c = coef[1 : last + 1]
        self.length = 2 * np.pi * self.mean_speed

    def speed(self, t):
        return np.sqrt((self.a * np.sin(t)) ** 2 + (self.b * np.cos(t)) ** 2)

    def arc(self, t):
        t = np.asarray(t, dtype=float)
        if self.k.size == 0:
            return self.mean_speed * t
        phase = np.exp(1j * np.multiply.outer(t, self.k)) - 1.0
        # real speed => conjugate-symmetric spectrum, hence the factor 2 Re
        return self.mean_speed * t + 2 * np.real(phase @ (self.c / (1j * self.k)))

    def parameter(self, s):
        s = np.asarray(s, dtype=float)
        t = 2 * np.pi * s / self.length
        for _ in range(50):
            step = (self.arc(t) - s) / self.speed(t)
            t = t - step
            if np.max(np.abs(step), initial=0.0) < 1e-10:
                # quadratic convergence: one more step reaches rounding level
                return t - (self.arc(t) - s) / self.speed(t)
        return t


@lru_cache(maxsize=16)
def _ellipse_arc(a: float, b: float) -> _EllipseArc:
    return _EllipseArc(a, b)


def trig_interpolate(values, period: float, s):
    """Evaluate the trigonometric interpolant of uniform periodic samples.

    ``values[j]`` is the sample at ``j * period / len(values)``; the
    interpolant is evaluated at arbitrary points ``s`` by direct summation of
    the (symmetrically truncated) Fourier series.
    """
    values = np.asarray(values)
    n = values.shape[0]
    coef = np.fft.fft(values, axis=0) / n
    k = np.fft.fftfreq(n, 1.0 / n)
    if n % 2 == 0:
        # split the Nyquist mode evenly so real data stay real
        nyq = n // 2
        coef = np.concatenate([coef, coef[nyq : nyq + 1] / 2], axis=0)
        coef[nyq] /= 2
        k = np.concatenate([k, [float(nyq)]])
        k[nyq] = -nyq
    s = np.asarray(s, dtype=float)
    basis = np.exp(2j * np.pi * np.multiply.outer(s, k) / period)
    out = basis @ coef
    if np.isrealobj(values):
        out = out.real
    return out


@dataclass(frozen=True)
class CurveSpec:
    """Analytic description of a positively oriented closed curve.

    Use the constructors :meth:`circle`, :meth:`ellipse` and :meth:`custom`.
    Custom curves must be parametrized by arc length: ``z(s)`` and
    ``dz(s) = z'(s)`` on ``[0, length]``.  At corner points the derivative
    callable returns the one-sided (right) derivative.
    """

    kind: str
    params: tuple = ()
    z_func: Optional[Callable] = field(default=None, compare=False, repr=False)
    dz_func: Optional[Callable] = field(default=None, compare=False, repr=False)
    length: Optional[float] = None
    name: str = ""

    @classmethod
    def circle(cls, radius: float = 1.0) -> "CurveSpec":
        if not radius > 0:
            raise ParameterError("circle radius must be positive")
        return cls("circle", (float(radius),), length=2 * np.pi * float(radius))

    @classmethod
    def ellipse(cls, a: float, b: float) -> "CurveSpec":
        if not (a > 0 and b > 0):
            raise ParameterError("ellipse semi-axes must be positive")
        a, b = float(a), float(b)
        return cls("ellipse", (a, b), length=_ellipse_arc(a, b).length)

    @classmethod
    def custom(cls, z, dz, length: float, name: str = "custom") -> "CurveSpec":
        if not length > 0:
            raise ParameterError("curve length must be positive")
        return cls("custom", (), z, dz, float(length), name)

    @classmethod
    def from_table(cls, s, z, dz, name: str = "table") -> "CurveSpec":
        """Custom curve from uniformly tabulated arc-length samples.

        ``s`` must be the uniform grid ``0, h, ..., S - h``; the curve is
        continued off the grid by trigonometric interpolation.
        """
        s = np.asarray(s, dtype=float)
        z = np.asarray(z, dtype=complex)
        dz = np.asarray(dz, dtype=complex)
        if s.ndim != 1 or s.size < 4 or z.shape != s.shape or dz.shape != s.shape:
            raise ParameterError("table columns must be 1-d arrays of equal length >= 4")
        h = s[1] - s[0]
        if abs(s[0]) > 1e-12 * h or np.max(np.abs(np.diff(s) - h)) > 1e-9 * h:
            raise ParameterError("tabulated arc parameters must be uniform and start at 0")
        length = h * s.size

        def zf(x):
            return trig_interpolate(z, length, x)

        def dzf(x):
            return trig_interpolate(dz, length, x)

        return cls.custom(zf, dzf, length, name)

    @classmethod
    def from_csv(cls, path) -> "CurveSpec":
        """Read columns ``s, Re z, Im z, Re z', Im z'`` (header optional)."""
        rows = []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    rows.append([float(x) for x in row[:5]])
                except ValueError:
                    continue  # header line
        data = np.array(rows)
        if data.ndim != 2 or data.shape[1] < 5:
            raise ParameterError(f"{path}: expected 5 numeric columns")
        return cls.from_table(
            data[:, 0], data[:, 1] + 1j * data[:, 2], data[:, 3] + 1j * data[:, 4], name=str(path)
        )

    @classmethod
    def from_json(cls, obj) -> "CurveSpec":
        if isinstance(obj, str):
            obj = json.loads(obj)
        kind = obj.get("kind")
        if kind == "circle":
            return cls.circle(obj.get("radius", obj.get("r", 1.0)))
        if kind == "ellipse":
            return cls.ellipse(obj["a"], obj["b"])
        if kind == "custom":
            if "csv" not in obj:
                raise ParameterError("custom curves in JSON must reference a 'csv' table")
            return cls.from_csv(obj["csv"])
        raise ParameterError(f"unknown curve kind {kind!r}")

    def to_json(self) -> dict:
        if self.kind == "circle":
            return {"kind": "circle", "radius": self.params[0]}
        if self.kind == "ellipse":
            return {"kind": "ellipse", "a": self.params[0], "b": self.params[1]}
        return {"kind": "custom", "name": self.name, "length": self.length}

    @property
    def total_length(self) -> float:
        return self.length

    def ellipse_parameter(self, s):
        """Eccentric-anomaly parameter ``t(s)`` of an ellipse."""
        if self.kind != "ellipse":
            raise ParameterError("ellipse_parameter is only defined for ellipses")
        return _ellipse_arc(*self.params).parameter(s)

    def evaluate(self, s):
        """Return ``(z(s), z'(s))`` at arc parameters ``s``."""
        s = np.asarray(s, dtype=float)
        if self.kind == "circle":
            (r,) = self.params
            e = np.exp(1j * s / r)
            return r * e, 1j * e
        if self.kind == "ellipse":
            a, b = self.params
            arc = _ellipse_arc(a, b)
            t = arc.parameter(s)
            zt = -a * np.sin(t) + 1j * b * np.cos(t)
            return a * np.cos(t) + 1j * b * np.sin(t), zt / np.abs(zt)
        z = np.asarray(self.z_func(s), dtype=complex)
        dz = np.asarray(self.dz_func(s), dtype=complex)
        return np.broadcast_to(z, s.shape).copy(), np.broadcast_to(dz, s.shape).copy()

    def reversed(self) -> "CurveSpec":
        """The same curve traversed in the opposite direction."""
        if self.kind != "custom":
            return self
        S, zf, dzf = self.length, self.z_func, self.dz_func
        return CurveSpec.custom(
            lambda s: zf(np.mod(S - np.asarray(s, dtype=float), S)),
            lambda s: -np.asarray(dzf(np.mod(S - np.asarray(s, dtype=float), S))),
            S,
            self.name + " (reversed)",
        )


@dataclass(frozen=True, eq=False)
class DiscretizedCurve:
    """Uniform arc-parameter grid on a curve.

    Attributes
    ----------
    spec : CurveSpec
    s, z, dz : ndarray
        Arc parameters ``s_j = j h``, points ``z(s_j)`` and derivatives.
    """

    spec: CurveSpec
    s: np.ndarray
    z: np.ndarray
    dz: np.ndarray

    @property
    def n(self) -> int:
        return self.s.size

    @property
    def length(self) -> float:
        return self.spec.length

    @property
    def h(self) -> float:
        return self.length / self.n

    @cached_property
    def speed(self) -> np.ndarray:
        return np.abs(self.dz)

    @cached_property
    def diameter(self) -> float:
        z = self.z
        step = max(1, z.size // 512)
        coarse = z[::step]
        return float(np.max(np.abs(coarse[:, None] - z[None, :])))

    def quadrature(self, values) -> complex:
        """Trapezoid rule for ``int_0^S values(s) ds``."""
        return self.h * np.sum(values, axis=-1)

    def arc_length(self) -> float:
        return float(self.quadrature(self.speed))

    def winding_number(self, point) -> np.ndarray:
        """Winding number of the closed polygon through the nodes around ``point``."""
        point = np.asarray(point, dtype=complex)
        d = self.z[None, :] - point.reshape(-1, 1)
        dtheta = np.angle(np.roll(d, -1, axis=1) / d)
        w = np.rint(dtheta.sum(axis=1) / (2 * np.pi)).astype(int)
        return w.reshape(point.shape)

    def contains(self, point) -> np.ndarray:
        """True for points strictly inside the curve (winding number +1)."""
        return self.winding_number(point) == 1

    def distance(self, point) -> np.ndarray:
        """Distance from ``point`` to the nearest node."""
        point = np.asarray(point, dtype=complex)
        d = np.abs(self.z[None, :] - point.reshape(-1, 1)).min(axis=1)
        return d.reshape(point.shape)

    def refine(self) -> "DiscretizedCurve":
        return resample(self.spec, 2 * self.n)

    @cached_property
    def pv_matrix(self) -> np.ndarray:
        """Matrix of the staggered principal-value rule for ``S_Gamma``.

        Row ``j`` integrates over nodes whose index differs from ``j`` by an
        odd number, with weight ``2h``.
        """
        n = self.n
        idx = np.arange(n)
        odd = ((idx[None, :] - idx[:, None]) % 2) == 1
        diff = self.z[None, :] - self.z[:, None]
        diff[~odd] = 1.0
        mat = (2 * self.h / (2j * np.pi)) * self.dz[None, :] / diff
        mat[~odd] = 0.0
        return mat


def _signed_area(z, dz, h) -> float:
    return 0.5 * float(np.imag(np.sum(np.conj(z) * dz)) * h)


def _self_intersects(z) -> bool:
    """Polygon self-intersection test over all pairs of non-adjacent edges."""
    a = z
    b = np.roll(z, -1)
    n = z.size

    def cross(u, v):
        return u.real * v.imag - u.imag * v.real

    for start in range(0, n, 256):
        i = np.arange(start, min(n, start + 256))[:, None]
        j = np.arange(n)[None, :]
        adjacent = (np.abs(i - j) <= 1) | (np.abs(i - j) == n - 1)
        p, r = a[i], b[i] - a[i]
        q, sv = a[j], b[j] - a[j]
        denom = cross(r, sv)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = cross(q - p, sv) / denom
            u = cross(q - p, r) / denom
        hit = (denom != 0) & (t > 0) & (t < 1) & (u > 0) & (u < 1) & ~adjacent
        if np.any(hit):
            return True
    return False


@lru_cache(maxsize=32)
def _catalog_nodes(spec: CurveSpec, n: int):
    s = spec.length * np.arange(n) / n
    z, dz = spec.evaluate(s)
    for a in (s, z, dz):
        a.setflags(write=False)
    return s, z, dz


def resample(spec: CurveSpec, n: int) -> DiscretizedCurve:
    """Discretize ``spec`` with ``n`` uniformly spaced arc parameters.

    Node 0 sits at ``s = 0``.  ``n`` must be a power of two (downstream FFTs
    and the staggered principal-value rule rely on it).  Custom curves with
    negative orientation are reversed (with a warning); custom curves that
    self-intersect on the grid are rejected.
    """
    n = int(n)
    if n < 4 or not _is_power_of_two(n):
        raise SizingError(f"node count must be a power of two >= 4, got {n}")
    if spec.kind == "custom":
        s = spec.length * np.arange(n) / n
        z, dz = spec.evaluate(s)
    else:
        s, z, dz = _catalog_nodes(spec, n)
    speed = np.abs(dz)
    if not np.all(np.isfinite(z)) or not np.all(np.isfinite(dz)):
        raise ParameterError("curve evaluation produced non-finite values")
    scale = np.median(speed)
    bad = np.nonzero(speed <= 1e-8 * scale)[0]
    if bad.size:
        raise CuspError(f"derivative vanishes at arc parameter s = {s[bad[0]]:.6g}")
    if spec.kind == "custom":
        h = spec.length / n
        if _signed_area(z, dz, h) < 0:
            warnings.warn("custom curve is negatively oriented; reversing it", stacklevel=2)
            spec = spec.reversed()
            z, dz = spec.evaluate(s)
        if _self_intersects(z):
            raise OrientationError("curve self-intersects on the sampled grid")
    return DiscretizedCurve(spec, s, z, dz)


@dataclass(frozen=True)
class CarlesonReport:
    sup_ratio: float
    is_regular: bool
    refined_ratio: float
    center_index: int
    radius: float


def geometric_radii(rmin: float, rmax: float, per_octave: int = 4) -> np.ndarray:
    """Geometric radius grid from ``rmax`` down to (at least) ``rmin``.

    The grid is anchored at ``rmax`` so refining ``rmin`` only appends radii.
    """
    if not (0 < rmin <= rmax):
        raise ParameterError("need 0 < rmin <= rmax")
    count = int(math.floor(per_octave * math.log2(rmax / rmin) + 1e-9)) + 1
    return rmax * 2.0 ** (-np.arange(count) / per_octave)


def _arc_in_discs(curve: DiscretizedCurve, center: complex, radii) -> np.ndarray:
    """Arc measure of the curve inside each disc ``|z - center| < r``.

    Every grid segment carries arc length ``h``; the fraction of the chord
    inside the disc (exact line/circle clipping) weights it.
    """
    a = curve.z
    d = np.roll(a, -1) - a
    p = a - center
    qa = (d * d.conj()).real
    qb = 2 * (p * d.conj()).real
    pp = (p * p.conj()).real
    radii = np.asarray(radii, dtype=float)[:, None]
    qc = pp[None, :] - radii**2
    disc = qb[None, :] ** 2 - 4 * qa[None, :] * qc
    root = np.sqrt(np.maximum(disc, 0.0))
    t0 = (-qb[None, :] - root) / (2 * qa[None, :])
    t1 = (-qb[None, :] + root) / (2 * qa[None, :])
    frac = np.clip(np.minimum(t1, 1.0) - np.maximum(t0, 0.0), 0.0, 1.0)
    frac[disc <= 0] = 0.0
    return curve.h * frac.sum(axis=1)


def _sup_ratio(curve, centers, radii):
    best, where = -np.inf, (0, float(radii[0]))
    for c in centers:
        ratio = _arc_in_discs(curve, curve.z[c], radii) / radii
        k = int(np.argmax(ratio))
        if ratio[k] > best:
            best, where = float(ratio[k]), (int(c), float(radii[k]))
    return best, where


def check_regular(curve: DiscretizedCurve, centers=None, radii=None, tolerance: float = 0.05):
    """Estimate ``sup |Gamma ∩ O_r(z)| / r`` over sampled centers and radii.

    The curve is declared regular when the estimate is finite and changes by
    less than ``tolerance`` (relative) when the grid is refined twofold.  This
    is an estimator on the sampled family, not a decision procedure.
    """
    if centers is None:
        step = max(1, curve.n // 64)
        centers = np.arange(0, curve.n, step)
    centers = np.asarray(centers, dtype=int)
    if radii is None:
        radii = geometric_radii(curve.h, curve.diameter)
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0:
        raise ParameterError("radius grid is empty")
    if np.any(radii <= 0):
        raise ParameterError("radii must be positive")
    ratio, (c, r) = _sup_ratio(curve, centers, radii)
    fine = curve.refine()
    fine_ratio, _ = _sup_ratio(fine, 2 * centers, radii)
    stable = np.isfinite(ratio) and abs(fine_ratio - ratio) < tolerance * ratio
    return CarlesonReport(ratio, bool(stable), fine_ratio, c, r)
